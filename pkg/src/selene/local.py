"""Expression evaluation and the timestamp-parameterised program step relation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import (
    DEFAULT_ETA,
    STOP,
    Assign,
    AssignEvent,
    Await,
    BinOp,
    Command,
    Dummy,
    Expr,
    Fragment,
    If,
    In,
    InputEvent,
    IntLit,
    Memory,
    ProgramConfig,
    ProgramEvent,
    Queue,
    QueueEvent,
    Schedule,
    ScheduleEvent,
    Seq,
    SizeOf,
    Skip,
    Sleep,
    Stop,
    StrLit,
    TimedPacket,
    UnOp,
    Value,
    Var,
    While,
    packet_count,
    value_kind,
    wrap_int,
)

_INT_OPS = {
    "+": lambda a, b: wrap_int(a + b),
    "-": lambda a, b: wrap_int(a - b),
    "*": lambda a, b: wrap_int(a * b),
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "&&": lambda a, b: int(a != 0 and b != 0),
    "||": lambda a, b: int(a != 0 or b != 0),
    "min": min,
    "max": max,
}
_UNARY_OPS = {
    "-": lambda a: wrap_int(-a),
    "!": lambda a: int(a == 0),
}


def eval_expr(e: Expr, m: Memory) -> Value:
    match e:
        case IntLit(value=n):
            return n
        case StrLit(value=s):
            return s
        case Var(name=x):
            return m[x]
        case BinOp(op=op, left=a, right=b):
            return _INT_OPS[op](eval_expr(a, m), eval_expr(b, m))
        case UnOp(op=op, operand=a):
            return _UNARY_OPS[op](eval_expr(a, m))
    raise TypeError(f"not an expression: {e!r}")


def _complete(acc: Sequence[Fragment]) -> bool:
    """acc is exactly ⟨v⟩¹_N ⋯ ⟨v⟩ᴺ_N for a single value v."""
    if not acc:
        return False
    first = acc[0]
    if len(acc) != first.total:
        return False
    return all(
        f.value == first.value and type(f.value) is type(first.value)
        and f.total == first.total and f.index == j
        for j, f in enumerate(acc, start=1)
    )


def choose(
    packets: Sequence[TimedPacket],
    kind: str,
    t: float,
    acc: Sequence[Fragment] = (),
) -> tuple[Value, tuple[TimedPacket, ...]] | None:
    """Decode one value of ``kind`` from packets that arrived by time ``t``.

    Fragments of the other kind are kept, dummies are dropped.  Returns the
    value with the remaining packets, or None when no value can complete,
    which blocks the reading program.
    """
    acc = list(acc)
    kept: list[TimedPacket] = []
    for i, (arrival, packet) in enumerate(packets):
        if _complete(acc):
            return acc[0].value, tuple(kept) + tuple(packets[i:])
        if arrival > t:
            return None
        match packet:
            case Dummy():
                pass
            case Fragment(value=v) if value_kind(v) == kind:
                acc.append(packet)
            case Fragment():
                kept.append((arrival, packet))
    if _complete(acc):
        return acc[0].value, tuple(kept)
    return None


# -- step results --------------------------------------------------------------

BLOCKED_INPUT = "blocked-on-input"
BLOCKED_AWAIT = "blocked-on-await"
STUCK_NEGATIVE = "stuck-negative-duration"


@dataclass(frozen=True)
class Stepped:
    config: ProgramConfig
    event: ProgramEvent
    rule: str


@dataclass(frozen=True)
class Blocked:
    reason: str
    command: Command


@dataclass(frozen=True)
class AlreadyStopped:
    pass


LocalStepResult = Stepped | Blocked | AlreadyStopped


def _stepped(rule, c, m, inputs, event=None) -> Stepped:
    return Stepped(ProgramConfig(c, m, inputs), event, rule)


def step_program(P: ProgramConfig, ts: int, eta: int = DEFAULT_ETA) -> LocalStepResult:
    """One local step at time ``ts``.  At most one rule ever applies."""
    c, m, inputs = P.command, P.memory, P.inputs
    match c:
        case Stop():
            return AlreadyStopped()

        case Assign(var=x, expr=e):
            v = eval_expr(e, m)
            return _stepped("Assign", STOP, {**m, x: v}, inputs, AssignEvent(x, v))

        case SizeOf(var=x, expr=e):
            n = packet_count(eval_expr(e, m), eta)
            return _stepped("SizeOf", STOP, {**m, x: n}, inputs, AssignEvent(x, n))

        case Skip():
            return _stepped("Skip", STOP, m, inputs)

        case Seq(first=c1, second=c2):
            result = step_program(ProgramConfig(c1, m, inputs), ts, eta)
            if not isinstance(result, Stepped):
                return result
            nxt = result.config
            if isinstance(nxt.command, Stop):
                return _stepped("Seq-2", c2, nxt.memory, nxt.inputs, result.event)
            return _stepped("Seq-1", Seq(nxt.command, c2, c.pos), nxt.memory, nxt.inputs, result.event)

        case Sleep(expr=e):
            w = eval_expr(e, m)
            if w < 0:
                return Blocked(STUCK_NEGATIVE, c)
            return _stepped("Sleep", Await(ts + w, c.pos), m, inputs)

        case Await(until=r):
            if ts >= r:
                return _stepped("Await", STOP, m, inputs)
            return Blocked(BLOCKED_AWAIT, c)

        case If(cond=e, then=c1, orelse=c2):
            if eval_expr(e, m) != 0:
                return _stepped("If-T", c1, m, inputs)
            return _stepped("If-E", c2, m, inputs)

        case While(cond=e, body=body):
            unfolded = If(e, Seq(body, c, body.pos), Skip(c.pos), c.pos)
            return _stepped("While", unfolded, m, inputs)

        case In(var=x, channel=ch):
            kind = value_kind(m[x])
            found = choose(inputs.get(ch, ()), kind, ts, ())
            if found is None:
                return Blocked(BLOCKED_INPUT, c)
            v, rest = found
            return _stepped("In", STOP, {**m, x: v}, {**inputs, ch: rest}, InputEvent(ch, x, v))

        case Schedule(channel=ch, count=n_expr, delay=w_expr):
            n = eval_expr(n_expr, m)
            w = eval_expr(w_expr, m)
            if w < 0:
                return Blocked(STUCK_NEGATIVE, c)
            return _stepped("Schedule", STOP, m, inputs, ScheduleEvent(ch, n, ts + w))

        case Queue(channel=ch, expr=e):
            v = eval_expr(e, m)
            return _stepped("Queue", STOP, m, inputs, QueueEvent(ch, v))

    raise TypeError(f"not a command: {c!r}")


def head_command(c: Command) -> Command:
    """The command that the next step acts on (leftmost in a sequence)."""
    while isinstance(c, Seq):
        c = c.first
    return c


def blocked_forever(P: ProgramConfig, reason: str) -> bool:
    """True only when no present or future input can unblock ``P``."""
    if reason == STUCK_NEGATIVE:
        return True
    if reason != BLOCKED_INPUT:
        return False
    c = head_command(P.command)
    assert isinstance(c, In)
    kind = value_kind(P.memory[c.var])
    return choose(P.inputs.get(c.channel, ()), kind, math.inf, ()) is None
