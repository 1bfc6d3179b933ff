import random

from hypothesis import given, settings, strategies as st

from selene.core import (
    DUMMY,
    STOP,
    Assign,
    AssignEvent,
    Await,
    BinOp,
    Fragment,
    If,
    In,
    InputEvent,
    IntLit,
    ProgramConfig,
    Queue,
    QueueEvent,
    Schedule,
    ScheduleEvent,
    Seq,
    SizeOf,
    Skip,
    Sleep,
    StrLit,
    UnOp,
    Var,
    While,
)
from selene.local import (
    BLOCKED_AWAIT,
    BLOCKED_INPUT,
    STUCK_NEGATIVE,
    AlreadyStopped,
    Blocked,
    Stepped,
    blocked_forever,
    choose,
    eval_expr,
    step_program,
)
from selene.runtime import split


def cfg(c, m=None, inputs=None):
    return ProgramConfig(c, m or {}, inputs or {})


# -- expressions ---------------------------------------------------------------


def test_eval_basics():
    assert eval_expr(BinOp("+", IntLit(1), IntLit(2)), {}) == 3
    assert eval_expr(Var("x"), {"x": 5}) == 5
    assert eval_expr(BinOp("&&", BinOp("<", IntLit(3), IntLit(5)), IntLit(1)), {}) == 1
    assert eval_expr(BinOp("max", IntLit(1), IntLit(13)), {}) == 13
    assert eval_expr(UnOp("-", IntLit(4)), {}) == -4
    assert eval_expr(BinOp("==", StrLit(b"a"), Var("s")), {"s": b"a"}) == 1


@given(st.sampled_from(["&&", "||"]), st.integers(-2, 2), st.integers(-2, 2))
def test_boolean_truth_table(op, a, b):
    truth = {"&&": lambda p, q: p and q, "||": lambda p, q: p or q}[op]
    assert eval_expr(BinOp(op, IntLit(a), IntLit(b)), {}) == int(truth(a != 0, b != 0))


def test_arithmetic_wraps():
    big = (1 << 63) - 1
    assert eval_expr(BinOp("+", IntLit(big), IntLit(1)), {}) == -(1 << 63)


# -- choose --------------------------------------------------------------------


def test_choose_complete_accumulator():
    assert choose((), "int", 0, (Fragment(7, 1, 1),)) == (7, ())


def test_choose_drops_dummy():
    assert choose(((2, DUMMY), (3, Fragment(5, 1, 1))), "int", 3) == (5, ())


def test_choose_future_packet_blocks():
    assert choose(((9, Fragment(5, 1, 1)),), "int", 3) is None


def test_choose_keeps_other_kind():
    packets = ((1, Fragment(b"", 1, 1)), (2, Fragment(4, 1, 1)), (3, Fragment(6, 1, 1)))
    assert choose(packets, "int", 5) == (4, ((1, Fragment(b"", 1, 1)), (3, Fragment(6, 1, 1))))


def test_choose_multi_fragment_string():
    packets = tuple((t, f) for t, f in zip([1, 1, 2], split(b"hi")))
    assert choose(packets, "string", 1) is None
    assert choose(packets, "string", 2) == (b"hi", ())


def test_choose_interleaved_same_kind_blocks_forever():
    a, b = split(b"a"), split(b"b")
    packets = tuple((0, f) for f in (a[0], b[0], a[1], b[1]))
    assert choose(packets, "string", 10**9) is None


def test_choose_empty_blocks():
    assert choose((), "int", 100) is None


def _choose_oracle(packets, kind, t):
    """Direct transcription of the four cases as a recursive function."""

    def go(ps, acc):
        if acc and len(acc) == acc[0].total and all(
            f.value == acc[0].value and type(f.value) is type(acc[0].value) and f.index == j + 1 and f.total == acc[0].total
            for j, f in enumerate(acc)
        ):
            return acc[0].value, tuple(ps)
        if not ps or ps[0][0] > t:
            return None
        (arrival, p), rest = ps[0], ps[1:]
        if p == DUMMY:
            return go(rest, acc)
        if (isinstance(p.value, bytes)) == (kind == "string"):
            return go(rest, acc + [p])
        found = go(rest, acc)
        return None if found is None else (found[0], ((arrival, p),) + found[1])

    return go(tuple(packets), [])


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["int", "string"]), st.integers(0, 12))
def test_choose_matches_recursive_oracle(seed, kind, t):
    from gen import random_packets

    packets = random_packets(random.Random(seed), 4)
    assert choose(packets, kind, t) == _choose_oracle(packets, kind, t)


# -- steps -----------------------------------------------------------------------


def test_assign_step():
    r = step_program(cfg(Assign("x", BinOp("+", IntLit(1), IntLit(1))), {"x": 0}), 0)
    assert r == Stepped(cfg(STOP, {"x": 2}), AssignEvent("x", 2), "Assign")


def test_sizeof_step():
    r = step_program(cfg(SizeOf("x", StrLit(b"Hello")), {"x": 0}), 0)
    assert r.event == AssignEvent("x", 6) and r.config.memory["x"] == 6


def test_sleep_and_await():
    r = step_program(cfg(Sleep(IntLit(2))), 3)
    assert r.config.command == Await(5) and r.event is None
    assert step_program(cfg(Await(5)), 3) == Blocked(BLOCKED_AWAIT, Await(5))
    assert step_program(cfg(Await(5)), 5).config.command == STOP


def test_negative_durations_are_stuck():
    assert step_program(cfg(Sleep(IntLit(-1))), 0).reason == STUCK_NEGATIVE
    assert step_program(cfg(Schedule("A", IntLit(1), IntLit(-1))), 0).reason == STUCK_NEGATIVE


def test_seq_rules():
    r = step_program(cfg(Seq(Skip(), Skip())), 0)
    assert r.rule == "Seq-2" and r.config.command == Skip()
    r = step_program(cfg(Seq(Sleep(IntLit(1)), Skip())), 4)
    assert r.rule == "Seq-1" and r.config.command == Seq(Await(5), Skip())


def test_if_and_while():
    assert step_program(cfg(If(IntLit(2), Skip(), STOP)), 0).config.command == Skip()
    assert step_program(cfg(If(IntLit(0), Skip(), Sleep(IntLit(0)))), 0).config.command == Sleep(IntLit(0))
    loop = While(Var("x"), Skip())
    r = step_program(cfg(loop, {"x": 1}), 0)
    assert r.config.command == If(Var("x"), Seq(Skip(), loop), Skip())


def test_input_step_uses_current_value_kind():
    inputs = {"A": ((0, Fragment(b"", 1, 1)), (1, Fragment(9, 1, 1)))}
    r = step_program(cfg(In("x", "A"), {"x": 0}, inputs), 1)
    assert r.event == InputEvent("A", "x", 9)
    assert r.config.inputs["A"] == ((0, Fragment(b"", 1, 1)),)
    r = step_program(cfg(In("s", "A"), {"s": b"old"}, inputs), 1)
    assert r.event == InputEvent("A", "s", b"")


def test_input_blocks():
    c = cfg(In("x", "A"), {"x": 0}, {"A": ()})
    assert step_program(c, 0) == Blocked(BLOCKED_INPUT, In("x", "A"))
    assert blocked_forever(c, BLOCKED_INPUT)
    later = cfg(In("x", "A"), {"x": 0}, {"A": ((50, Fragment(1, 1, 1)),)})
    assert isinstance(step_program(later, 10), Blocked)
    assert not blocked_forever(later, BLOCKED_INPUT)


def test_schedule_and_queue_events():
    r = step_program(cfg(Schedule("A", IntLit(3), IntLit(7))), 3)
    assert r.event == ScheduleEvent("A", 3, 10)
    r = step_program(cfg(Queue("A", StrLit(b"hi"))), 0)
    assert r.event == QueueEvent("A", b"hi")


def test_stop_is_final():
    assert step_program(cfg(STOP), 0) == AlreadyStopped()


def _shift(obj, d):
    match obj:
        case Await(until=r):
            return Await(r + d)
        case Seq(first=a, second=b):
            return Seq(_shift(a, d), b)
        case ScheduleEvent(channel=ch, count=n, time=t):
            return ScheduleEvent(ch, n, t + d)
    return obj


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 50))
def test_pure_steps_are_time_indifferent(seed, d):
    from gen import random_cmd, random_env, random_memory

    rng = random.Random(seed)
    env = random_env(rng)
    c = random_cmd(rng, env, env.lattice.bottom)
    P = ProgramConfig(c, random_memory(rng, env), {ch: () for ch in env.channels})
    a = step_program(P, 0)
    b = step_program(P, d)
    if isinstance(a, Stepped):
        assert isinstance(b, Stepped)
        assert _shift(a.config.command, d) == b.config.command
        assert a.config.memory == b.config.memory and _shift(a.event, d) == b.event
    else:
        assert type(a) is type(b)
