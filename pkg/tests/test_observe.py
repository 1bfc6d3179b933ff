import pytest

from selene.core import (
    DUMMY,
    INT,
    AssignEvent,
    AssignSizeEvent,
    Fragment,
    GlobalEvent,
    InputEvent,
    LabeledType,
    OutputEvent,
    OutputHiddenEvent,
    ProgramConfig,
    QueueEvent,
    ScheduleEvent,
    Skip,
    StringType,
    TypeEnv,
)
from selene.lattice import Lattice
from selene.observe import (
    EquivalenceUsageError,
    config_equiv,
    erase_program_events,
    filter_trace,
    filter_trace_internal,
    input_equiv,
    input_equiv_internal,
    mem_equiv,
    output_equiv,
    project_program_event,
    project_runtime_event,
)

ENV = TypeEnv(
    Lattice.two_point(),
    {
        "l": LabeledType(INT, "L"),
        "h": LabeledType(INT, "H"),
        "h_s": LabeledType(StringType("L"), "H"),
        "h_t": LabeledType(StringType("H"), "H"),
    },
    {"Public": "L", "Alice": "H", "Bob": "H"},
)
P5 = Fragment(5, 1, 1)


def test_runtime_projection():
    ev = OutputEvent("Public", P5)
    assert project_runtime_event(ev, ENV, "L") == ev
    assert project_runtime_event(OutputEvent("Alice", P5), ENV, "L") == OutputHiddenEvent("Alice")
    assert project_runtime_event(None, ENV, "L") is None
    assert project_runtime_event(OutputEvent("Alice", P5), ENV, "H") == OutputEvent("Alice", P5)


@pytest.mark.parametrize("adv", ["L", "H"])
def test_schedule_always_visible(adv):
    ev = ScheduleEvent("Alice", 3, 10)
    assert project_program_event(ev, ENV, adv) == ev


def test_program_projection():
    assert project_program_event(AssignEvent("h_s", b"Hello"), ENV, "L") == AssignSizeEvent("h_s", 6)
    assert project_program_event(AssignEvent("h_t", b"Hello"), ENV, "L") is None
    assert project_program_event(AssignEvent("h", 1), ENV, "L") is None
    assert project_program_event(AssignEvent("l", 1), ENV, "L") == AssignEvent("l", 1)
    assert project_program_event(AssignEvent("h_s", b"x"), ENV, "H") == AssignEvent("h_s", b"x")
    assert project_program_event(QueueEvent("Alice", 1), ENV, "L") is None
    assert project_program_event(QueueEvent("Public", 1), ENV, "L") == QueueEvent("Public", 1)
    assert project_program_event(InputEvent("Alice", "h", 1), ENV, "L") is None
    assert project_program_event(InputEvent("Public", "l", 1), ENV, "L") == InputEvent("Public", "l", 1)
    assert project_program_event(None, ENV, "L") is None


def test_filtering():
    assert filter_trace([GlobalEvent(0, AssignEvent("l", 1)), GlobalEvent(1, AssignEvent("h", 2))], ENV, "L") == []
    tau = [GlobalEvent(3, QueueEvent("Alice", 5), OutputEvent("Alice", P5))]
    assert filter_trace(tau, ENV, "L") == [GlobalEvent(3, None, OutputHiddenEvent("Alice"))]
    assert filter_trace(filter_trace(tau, ENV, "L"), ENV, "L") == filter_trace(tau, ENV, "L")


def test_internal_filtering():
    tau = [GlobalEvent(2, AssignEvent("l", 1)), GlobalEvent(3, AssignEvent("h", 1)), GlobalEvent(4, None, OutputEvent("Bob", DUMMY))]
    out = filter_trace_internal(tau, ENV, "L")
    assert out == [GlobalEvent(2, AssignEvent("l", 1)), GlobalEvent(4, None, OutputHiddenEvent("Bob"))]
    assert erase_program_events(out) == filter_trace(tau, ENV, "L")
    assert filter_trace_internal([], ENV, "L") == []


def mem(**kw):
    base = {"l": 0, "h": 0, "h_s": b"", "h_t": b""}
    base.update({k: (v.encode() if isinstance(v, str) else v) for k, v in kw.items()})
    return base


def test_memory_equivalence():
    assert mem_equiv(mem(), mem(), ENV, "L")
    assert mem_equiv(mem(h=1), mem(h=2), ENV, "L")
    assert not mem_equiv(mem(l=1), mem(l=2), ENV, "L")
    assert not mem_equiv(mem(h_s="Hello"), mem(h_s=""), ENV, "L")
    assert mem_equiv(mem(h_s="abc"), mem(h_s="xyz"), ENV, "L")
    assert mem_equiv(mem(h_t="Hello"), mem(h_t=""), ENV, "L")
    assert not mem_equiv(mem(h=1), mem(h=2), ENV, "H")


def test_memory_equivalence_usage_error():
    with pytest.raises(EquivalenceUsageError):
        mem_equiv(mem(), {"l": 0}, ENV, "L")


def test_input_equivalence():
    I1 = {"Alice": ((1, P5),), "Public": ((0, P5),)}
    same_times = {"Alice": ((1, Fragment(9, 1, 1)),), "Public": ((0, P5),)}
    other_times = {"Alice": ((2, P5),), "Public": ((0, P5),)}
    public_diff = {"Alice": ((1, P5),), "Public": ((0, DUMMY),)}
    assert input_equiv(I1, I1, ENV, "L") and input_equiv_internal(I1, I1, ENV, "L")
    assert input_equiv(I1, same_times, ENV, "L") and input_equiv_internal(I1, same_times, ENV, "L")
    assert not input_equiv(I1, other_times, ENV, "L") and input_equiv_internal(I1, other_times, ENV, "L")
    assert not input_equiv(I1, public_diff, ENV, "L") and not input_equiv_internal(I1, public_diff, ENV, "L")


def test_output_and_config_equivalence():
    O = {"Public": (), "Alice": ()}
    assert output_equiv(O, O, ENV, "L")
    assert output_equiv(O, {"Public": (), "Alice": (P5,)}, ENV, "L")
    assert not output_equiv(O, {"Public": (P5,), "Alice": ()}, ENV, "L")
    P = ProgramConfig(Skip(), mem(), {})
    assert config_equiv(P, P, ENV, "L")
    from selene.core import STOP

    assert not config_equiv(P, ProgramConfig(STOP, mem(), {}), ENV, "L")
