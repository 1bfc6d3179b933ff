from hypothesis import given, strategies as st

from selene.core import (
    INT,
    LabeledType,
    StringType,
    TypeEnv,
    initial_global,
    initial_memory,
    memory_well_formed,
    packet_count,
    seq,
    Skip,
    Seq,
    size_of_value,
    wrap_int,
)
from selene.lattice import Lattice


def test_sizes():
    assert size_of_value(b"Hello") == 6
    assert packet_count(b"Hello") == 6
    assert size_of_value(b"") == 1
    assert packet_count(b"") == 1
    assert size_of_value(42) == 1
    assert packet_count(42) == 1


def test_packet_count_with_larger_eta():
    assert packet_count(b"Hello", eta=4) == 2
    assert packet_count(b"abc", eta=4) == 1


@given(st.binary(max_size=40), st.binary(max_size=40))
def test_string_size_strictly_monotone(a, b):
    if len(a) < len(b):
        assert size_of_value(a) < size_of_value(b)


@given(st.integers())
def test_wrap_int_range(n):
    w = wrap_int(n)
    assert -(1 << 63) <= w < (1 << 63)
    assert (w - n) % (1 << 64) == 0


def test_seq_builder():
    assert seq() == Skip()
    assert seq(Skip(), Skip(), Skip()) == Seq(Skip(), Seq(Skip(), Skip()))


def test_memory_and_initial_config():
    env = TypeEnv(Lattice.two_point(), {"x": LabeledType(INT, "L"), "s": LabeledType(StringType("L"), "H")}, {"A": "H"})
    m = initial_memory(env, {"x": 3})
    assert m == {"x": 3, "s": b""}
    assert memory_well_formed(m, env)
    assert not memory_well_formed({"x": b"", "s": b""}, env)
    assert not memory_well_formed({"x": 1}, env)
    G = initial_global(Skip(), m, {}, env)
    assert G.ts == 0 and G.schedule == {} and G.outputs == {"A": ()} and G.program.inputs == {"A": ()}
