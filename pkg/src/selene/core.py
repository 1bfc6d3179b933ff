"""Shared data model: types, values, AST, packets, events and configurations.

Values are plain Python objects: ``int`` for integers and ``bytes`` for
strings.  Everything else is a frozen dataclass.  Mappings held inside
configurations are never mutated after construction; operations build new
ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from .lattice import Lattice

INT_BITS = 64
_MASK = (1 << INT_BITS) - 1
_SIGN = 1 << (INT_BITS - 1)

# Packet size in size units.
DEFAULT_ETA = 1


def wrap_int(n: int) -> int:
    """Wrap to a signed 64-bit integer, keeping every operator total."""
    n &= _MASK
    return n - (1 << INT_BITS) if n & _SIGN else n


# -- types -----------------------------------------------------------------


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class StringType:
    size_level: str

    def __str__(self) -> str:
        return f"string[{self.size_level}]"


ValueType = Union[IntType, StringType]
INT = IntType()


@dataclass(frozen=True)
class LabeledType:
    sigma: ValueType
    level: str

    def __str__(self) -> str:
        return f"{self.sigma} @ {self.level}"


# -- values ------------------------------------------------------------------

Value = Union[int, bytes]

INT_KIND = "int"
STRING_KIND = "string"


def value_kind(v: Value) -> str:
    if isinstance(v, bytes):
        return STRING_KIND
    if isinstance(v, int):
        return INT_KIND
    raise TypeError(f"not a SELENE value: {v!r}")


def size_of_value(v: Value) -> int:
    """Size in size units: integers are fixed at 1, strings take len + 1."""
    if isinstance(v, bytes):
        return len(v) + 1
    return 1


def packet_count(v: Value, eta: int = DEFAULT_ETA) -> int:
    return -(-size_of_value(v) // eta)


def default_value(sigma: ValueType) -> Value:
    return 0 if isinstance(sigma, IntType) else b""


def value_fits(v: Value, sigma: ValueType) -> bool:
    if isinstance(sigma, IntType):
        return value_kind(v) == INT_KIND
    return value_kind(v) == STRING_KIND


def show_value(v: Value) -> str:
    if isinstance(v, bytes):
        return '"' + v.decode("utf-8", "backslashreplace").replace('"', '\\"') + '"'
    return str(v)


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _pos() -> Pos | None:
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class StrLit:
    value: bytes
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: Expr
    pos: Pos | None = _pos()


Expr = Union[IntLit, StrLit, Var, BinOp, UnOp]

BINARY_OPS = ("+", "-", "*", "==", "!=", "<", "<=", ">", ">=", "&&", "||", "min", "max")
UNARY_OPS = ("-", "!")
# Operators that also accept two string operands.
STRING_COMPARISONS = ("==", "!=")


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Seq:
    first: Command
    second: Command
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Skip:
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Sleep:
    expr: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class SizeOf:
    var: str
    expr: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Command
    orelse: Command
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Command
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class In:
    var: str
    channel: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Schedule:
    channel: str
    count: Expr
    delay: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Queue:
    channel: str
    expr: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Await:
    """Internal: reached from ``sleep``; waits until the clock reaches ``until``."""

    until: int
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Stop:
    """Internal: the final command."""

    pos: Pos | None = _pos()


Command = Union[Assign, Seq, Skip, Sleep, SizeOf, If, While, In, Schedule, Queue, Await, Stop]
STOP = Stop()


def seq(*commands: Command) -> Command:
    """Right-nested sequence; ``seq()`` is ``skip``."""
    if not commands:
        return Skip()
    result = commands[-1]
    for c in reversed(commands[:-1]):
        result = Seq(c, result)
    return result


# -- packets -------------------------------------------------------------------


@dataclass(frozen=True)
class Fragment:
    """The ``index``-th of ``total`` packets encoding ``value`` (1-based)."""

    value: Value
    index: int
    total: int


@dataclass(frozen=True)
class Dummy:
    pass


Packet = Union[Fragment, Dummy]
DUMMY = Dummy()
TimedPacket = tuple[int, Packet]


# -- events --------------------------------------------------------------------


@dataclass(frozen=True)
class AssignEvent:
    var: str
    value: Value


@dataclass(frozen=True)
class AssignSizeEvent:
    """Only produced by projection: a string of ``size`` units went to ``var``."""

    var: str
    size: int


@dataclass(frozen=True)
class QueueEvent:
    channel: str
    value: Value


@dataclass(frozen=True)
class ScheduleEvent:
    channel: str
    count: int
    time: int


@dataclass(frozen=True)
class InputEvent:
    channel: str
    var: str
    value: Value


ProgramEvent = Union[AssignEvent, AssignSizeEvent, QueueEvent, ScheduleEvent, InputEvent, None]


@dataclass(frozen=True)
class OutputEvent:
    channel: str
    packet: Packet


@dataclass(frozen=True)
class OutputHiddenEvent:
    """Only produced by projection: a packet with unreadable content."""

    channel: str


RuntimeEvent = Union[OutputEvent, OutputHiddenEvent, None]


@dataclass(frozen=True)
class GlobalEvent:
    ts: int
    alpha: ProgramEvent = None
    beta: RuntimeEvent = None


Trace = list[GlobalEvent]


# -- environments and configurations -------------------------------------------

Memory = Mapping[str, Value]
InputEnv = Mapping[str, tuple[TimedPacket, ...]]
OutputEnv = Mapping[str, tuple[Packet, ...]]
Schedule_ = Mapping[int, str]


@dataclass(frozen=True)
class TypeEnv:
    """Γ plus the channel table, over one lattice."""

    lattice: Lattice
    gamma: Mapping[str, LabeledType]
    channels: Mapping[str, str]

    def var_type(self, name: str) -> LabeledType:
        return self.gamma[name]

    def channel_level(self, name: str) -> str:
        return self.channels[name]


@dataclass(frozen=True)
class ProgramConfig:
    command: Command
    memory: Memory
    inputs: InputEnv


@dataclass(frozen=True)
class GlobalConfig:
    program: ProgramConfig
    outputs: OutputEnv
    schedule: Schedule_
    ts: int = 0


def memory_well_formed(memory: Memory, env: TypeEnv) -> bool:
    if set(memory) != set(env.gamma):
        return False
    return all(value_fits(memory[x], t.sigma) for x, t in env.gamma.items())


def initial_memory(env: TypeEnv, values: Mapping[str, Value] | None = None) -> dict[str, Value]:
    memory = {x: default_value(t.sigma) for x, t in env.gamma.items()}
    if values:
        memory.update(values)
    return memory


def initial_global(command: Command, memory: Memory, inputs: InputEnv, env: TypeEnv) -> GlobalConfig:
    """⟨⟨c, m, I⟩, O_init, π_init, 0⟩, with every declared channel present in I and O."""
    full_inputs = {ch: tuple(inputs.get(ch, ())) for ch in env.channels}
    for ch, packets in inputs.items():
        full_inputs.setdefault(ch, tuple(packets))
    outputs = {ch: () for ch in env.channels}
    return GlobalConfig(ProgramConfig(command, dict(memory), full_inputs), outputs, {}, 0)
