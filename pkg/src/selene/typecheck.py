"""Security type system: well-formedness, subtyping, type raising, and the
flow-sensitive, pc-propagating judgement ``Γ, pc ⊢ c : pc'``.

Typing is syntax-directed.  Every rule computes its output pc; nothing is
guessed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    INT,
    Assign,
    Await,
    BinOp,
    Command,
    Expr,
    If,
    In,
    IntLit,
    IntType,
    LabeledType,
    Pos,
    Queue,
    STRING_COMPARISONS,
    Schedule,
    Seq,
    SizeOf,
    Skip,
    Sleep,
    Stop,
    StringType,
    StrLit,
    TypeEnv,
    UnOp,
    ValueType,
    Var,
    While,
)
from .errors import SeleneError
from .lattice import Lattice


def wf_type(t: LabeledType, lattice: Lattice) -> bool:
    """Knowing a value implies knowing its size: string size level ⊑ value level."""
    if isinstance(t.sigma, IntType):
        return True
    return lattice.leq(t.sigma.size_level, t.level)


def subtype(a: ValueType, b: ValueType, lattice: Lattice) -> bool:
    if isinstance(a, IntType) or isinstance(b, IntType):
        return isinstance(a, IntType) and isinstance(b, IntType)
    return lattice.leq(a.size_level, b.size_level)


def raise_type(sigma: ValueType, level: str, lattice: Lattice) -> ValueType:
    if isinstance(sigma, IntType):
        return sigma
    return StringType(lattice.join(level, sigma.size_level))


@dataclass(frozen=True)
class TypeErrorRecord:
    rule: str
    message: str
    pos: Pos | None = None
    levels: tuple[tuple[str, str], ...] = ()

    def __str__(self) -> str:
        where = f"{self.pos}: " if self.pos else ""
        return f"{where}[{self.rule}] {self.message}"

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "message": self.message,
            "line": self.pos.line if self.pos else None,
            "col": self.pos.col if self.pos else None,
            "levels": dict(self.levels),
        }


class SeleneTypeError(SeleneError):
    def __init__(self, errors: list[TypeErrorRecord]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


class _Abort(Exception):
    pass


class _Checker:
    def __init__(self, env: TypeEnv):
        self.env = env
        self.lat = env.lattice
        self.errors: list[TypeErrorRecord] = []

    def fail(self, rule: str, message: str, pos: Pos | None, **levels: str) -> None:
        self.errors.append(TypeErrorRecord(rule, message, pos, tuple(levels.items())))

    # expressions

    def expr(self, e: Expr) -> LabeledType:
        lat = self.lat
        match e:
            case IntLit():
                return LabeledType(INT, lat.bottom)
            case StrLit():
                return LabeledType(StringType(lat.bottom), lat.bottom)
            case Var(name=x):
                if x not in self.env.gamma:
                    self.fail("T-Var", f"unbound variable {x!r}", e.pos)
                    raise _Abort
                return self.env.gamma[x]
            case BinOp(op=op, left=a, right=b):
                ta = self.expr(a)
                tb = self.expr(b)
                both_int = isinstance(ta.sigma, IntType) and isinstance(tb.sigma, IntType)
                both_str = isinstance(ta.sigma, StringType) and isinstance(tb.sigma, StringType)
                if not (both_int or (both_str and op in STRING_COMPARISONS)):
                    self.fail("T-Op", f"operator {op!r} needs int operands, got {ta.sigma} and {tb.sigma}", e.pos)
                    raise _Abort
                return LabeledType(INT, lat.join(ta.level, tb.level))
            case UnOp(op=op, operand=a):
                ta = self.expr(a)
                if not isinstance(ta.sigma, IntType):
                    self.fail("T-Op", f"operator {op!r} needs an int operand, got {ta.sigma}", e.pos)
                    raise _Abort
                return ta
        raise TypeError(f"not an expression: {e!r}")

    def int_expr(self, e: Expr, rule: str, what: str) -> str:
        t = self.expr(e)
        if not isinstance(t.sigma, IntType):
            self.fail(rule, f"{what} must be an int, got {t.sigma}", getattr(e, "pos", None))
            raise _Abort
        return t.level

    def var(self, x: str, rule: str, pos: Pos | None) -> LabeledType:
        if x not in self.env.gamma:
            self.fail(rule, f"unbound variable {x!r}", pos)
            raise _Abort
        return self.env.gamma[x]

    def channel(self, ch: str, rule: str, pos: Pos | None) -> str:
        if ch not in self.env.channels:
            self.fail(rule, f"unknown channel {ch!r}", pos)
            raise _Abort
        return self.env.channels[ch]

    # commands

    def cmd(self, c: Command, pc: str) -> str:
        lat = self.lat
        leq, join = lat.leq, lat.join
        match c:
            case Seq(first=c1, second=c2):
                try:
                    pc1 = self.cmd(c1, pc)
                except _Abort:
                    pc1 = pc
                    failed = True
                else:
                    failed = False
                pc2 = self.cmd(c2, pc1)
                if failed:
                    raise _Abort
                return pc2

            case Skip():
                return pc

            case Await():
                return pc

            case Assign(var=x, expr=e):
                te = self.expr(e)
                tx = self.var(x, "T-Assign", c.pos)
                ok = True
                if not subtype(raise_type(te.sigma, pc, lat), tx.sigma, lat):
                    if isinstance(te.sigma, StringType) and isinstance(tx.sigma, StringType):
                        self.fail("T-Assign", f"string size leak: size level of value raised by pc "
                                  f"is {raise_type(te.sigma, pc, lat)}, target {x!r} has {tx.sigma}",
                                  c.pos, pc=pc, target=tx.sigma.size_level)
                    else:
                        self.fail("T-Assign", f"cannot assign {te.sigma} to {x!r} of type {tx.sigma}", c.pos)
                    ok = False
                if not leq(join(te.level, pc), tx.level):
                    self.fail("T-Assign", f"assignment to lower level: {join(te.level, pc)} "
                              f"(value {te.level} ⊔ pc {pc}) does not flow to {x!r} at {tx.level}",
                              c.pos, value=te.level, pc=pc, target=tx.level)
                    ok = False
                if not ok:
                    raise _Abort
                return pc

            case Sleep(expr=e):
                return join(pc, self.int_expr(e, "T-Sleep", "sleep duration"))

            case SizeOf(var=x, expr=e):
                tx = self.var(x, "T-SizeOf", c.pos)
                te = self.expr(e)
                ok = True
                if not isinstance(tx.sigma, IntType):
                    self.fail("T-SizeOf", f"sizeof result must be stored in an int variable, {x!r} is {tx.sigma}", c.pos)
                    ok = False
                if not leq(pc, tx.level):
                    self.fail("T-SizeOf", f"assignment to lower level: pc {pc} does not flow to {x!r} at {tx.level}",
                              c.pos, pc=pc, target=tx.level)
                    ok = False
                if isinstance(te.sigma, StringType) and not leq(te.sigma.size_level, tx.level):
                    self.fail("T-SizeOf", f"string size leak in sizeof: size level {te.sigma.size_level} "
                              f"does not flow to {x!r} at {tx.level}",
                              c.pos, size=te.sigma.size_level, target=tx.level)
                    ok = False
                if not ok:
                    raise _Abort
                return pc

            case If(cond=e, then=c1, orelse=c2):
                level = self.int_expr(e, "T-If", "condition")
                inner = join(pc, level)
                outs = []
                failed = False
                for branch in (c1, c2):
                    try:
                        outs.append(self.cmd(branch, inner))
                    except _Abort:
                        failed = True
                if failed:
                    raise _Abort
                return join(outs[0], outs[1])

            case While(cond=e, body=body):
                level = self.int_expr(e, "T-While", "condition")
                # Iterate the body to a fixpoint: later iterations run under the
                # pc left by earlier ones.
                current = join(pc, level)
                out = self.cmd(body, current)
                while out != current:
                    current = join(out, level)
                    out = self.cmd(body, current)
                return out

            case In(var=x, channel=ch):
                tx = self.var(x, "T-In", c.pos)
                level = self.channel(ch, "T-In", c.pos)
                ok = True
                if not leq(pc, level):
                    self.fail("T-In", f"input under tainted pc: pc {pc} does not flow to channel {ch!r} at {level}",
                              c.pos, pc=pc, channel=level)
                    ok = False
                if not subtype(raise_type(tx.sigma, level, lat), tx.sigma, lat):
                    self.fail("T-In", f"string size leak: received size is at {level} but {x!r} has {tx.sigma}",
                              c.pos, channel=level, size=tx.sigma.size_level)
                    ok = False
                if not leq(level, tx.level):
                    self.fail("T-In", f"input to lower level: channel {ch!r} at {level} does not flow to "
                              f"{x!r} at {tx.level}", c.pos, channel=level, target=tx.level)
                    ok = False
                if not ok:
                    raise _Abort
                return level

            case Schedule(channel=ch, count=n, delay=w):
                self.channel(ch, "T-Schedule", c.pos)
                ok = True
                if pc != lat.bottom:
                    self.fail("T-Schedule", f"schedule under tainted pc: pc is {pc}, must be {lat.bottom}",
                              c.pos, pc=pc)
                    ok = False
                for what, e in (("packet count", n), ("delay", w)):
                    level = self.int_expr(e, "T-Schedule", what)
                    if level != lat.bottom:
                        self.fail("T-Schedule", f"{what} must be public, it is at {level}", c.pos, **{what: level})
                        ok = False
                if not ok:
                    raise _Abort
                return pc

            case Queue(channel=ch, expr=e):
                level = self.channel(ch, "T-Queue", c.pos)
                te = self.expr(e)
                if not leq(join(te.level, pc), level):
                    self.fail("T-Queue", f"queued value at {te.level} ⊔ pc {pc} does not flow to channel "
                              f"{ch!r} at {level}", c.pos, value=te.level, pc=pc, channel=level)
                    raise _Abort
                return pc

            case Stop():
                self.fail("T-Stop", "stop is a final configuration, not a typeable command", c.pos)
                raise _Abort
        raise TypeError(f"not a command: {c!r}")


def type_expr(env: TypeEnv, e: Expr) -> LabeledType:
    checker = _Checker(env)
    try:
        return checker.expr(e)
    except _Abort:
        raise SeleneTypeError(checker.errors) from None


def type_cmd(env: TypeEnv, pc: str, c: Command) -> str:
    """Return pc' with ``Γ, pc ⊢ c : pc'``, or raise SeleneTypeError listing every failure."""
    env.lattice.check(pc)
    checker = _Checker(env)
    try:
        return checker.cmd(c, pc)
    except _Abort:
        raise SeleneTypeError(checker.errors) from None


def typeable(env: TypeEnv, pc: str, c: Command) -> str | None:
    try:
        return type_cmd(env, pc, c)
    except SeleneTypeError:
        return None


@dataclass
class CheckReport:
    accepted: bool
    pc_out: str | None
    errors: list[TypeErrorRecord] = field(default_factory=list)

    def to_text(self) -> str:
        if self.accepted:
            return f"accepted: pc' = {self.pc_out}"
        return "rejected:\n" + "\n".join(f"  {e}" for e in self.errors)

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "pc_out": self.pc_out,
            "errors": [e.to_json() for e in self.errors],
        }


def check_program(program, env: TypeEnv | None = None) -> CheckReport:
    """Type the body from pc = ⊥, gathering errors across sequence points."""
    if env is None:
        from .parser import build_gamma

        env = build_gamma(program)
    try:
        pc_out = type_cmd(env, env.lattice.bottom, program.body)
    except SeleneTypeError as exc:
        return CheckReport(False, None, exc.errors)
    return CheckReport(True, pc_out)


def residual_witness(env: TypeEnv, pc_in: str, pc_out: str, c: Command) -> str | None:
    """A level pc'' in [pc_in, pc_out] typing the residual ``c`` within pc_out.

    Used by the preservation check.  ``stop`` is always well-formed and
    returns ``pc_in``.
    """
    if isinstance(c, Stop):
        return pc_in
    for pc2 in env.lattice.between(pc_in, pc_out):
        out = typeable(env, pc2, c)
        if out is not None and env.lattice.leq(out, pc_out):
            return pc2
    return None


def kind_errors(env: TypeEnv, c: Command) -> list[TypeErrorRecord]:
    """Errors that remain once every level is identified with every other.

    What is left is plain int/string misuse, which the interpreter cannot run
    even when the security check is skipped on purpose.
    """
    flat = Lattice(["*"])
    gamma = {
        x: LabeledType(INT if isinstance(t.sigma, IntType) else StringType("*"), "*")
        for x, t in env.gamma.items()
    }
    flat_env = TypeEnv(flat, gamma, {ch: "*" for ch in env.channels})
    try:
        type_cmd(flat_env, "*", c)
    except SeleneTypeError as exc:
        return exc.errors
    return []
