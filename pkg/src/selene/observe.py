"""What an adversary at a given level sees: projections, filtering and equivalences."""

from __future__ import annotations

from typing import Iterable

from .core import (
    AssignEvent,
    AssignSizeEvent,
    GlobalEvent,
    InputEnv,
    InputEvent,
    Memory,
    OutputEnv,
    OutputEvent,
    OutputHiddenEvent,
    ProgramConfig,
    ProgramEvent,
    QueueEvent,
    RuntimeEvent,
    ScheduleEvent,
    StringType,
    Trace,
    TypeEnv,
    size_of_value,
)
from .errors import SeleneError


class EquivalenceUsageError(SeleneError):
    """Raised when two objects cannot be compared, e.g. memories over different variables."""


def _visible(env: TypeEnv, level: str, adv: str) -> bool:
    return env.lattice.leq(level, adv)


def _check_adv(env: TypeEnv, adv: str) -> None:
    if adv not in env.lattice:
        raise EquivalenceUsageError(f"unknown adversary level {adv!r}")


# -- projections ---------------------------------------------------------------


def project_runtime_event(beta: RuntimeEvent, env: TypeEnv, adv: str) -> RuntimeEvent:
    match beta:
        case OutputEvent(channel=ch) if not _visible(env, env.channel_level(ch), adv):
            return OutputHiddenEvent(ch)
    return beta


def project_program_event(alpha: ProgramEvent, env: TypeEnv, adv: str) -> ProgramEvent:
    match alpha:
        case ScheduleEvent():
            return alpha
        case AssignEvent(var=x, value=v):
            t = env.var_type(x)
            if _visible(env, t.level, adv):
                return alpha
            if isinstance(t.sigma, StringType) and _visible(env, t.sigma.size_level, adv):
                return AssignSizeEvent(x, size_of_value(v))
            return None
        case QueueEvent(channel=ch) | InputEvent(channel=ch):
            return alpha if _visible(env, env.channel_level(ch), adv) else None
        case AssignSizeEvent(var=x):
            t = env.var_type(x)
            ok = isinstance(t.sigma, StringType) and _visible(env, t.sigma.size_level, adv)
            return alpha if ok or _visible(env, t.level, adv) else None
    return alpha


def filter_trace(tau: Iterable[GlobalEvent], env: TypeEnv, adv: str) -> Trace:
    """Network events only: program parts become ε, silent steps vanish."""
    out: Trace = []
    for ev in tau:
        beta = project_runtime_event(ev.beta, env, adv)
        if beta is not None:
            out.append(GlobalEvent(ev.ts, None, beta))
    return out


def filter_trace_internal(tau: Iterable[GlobalEvent], env: TypeEnv, adv: str) -> Trace:
    out: Trace = []
    for ev in tau:
        alpha = project_program_event(ev.alpha, env, adv)
        beta = project_runtime_event(ev.beta, env, adv)
        if alpha is not None or beta is not None:
            out.append(GlobalEvent(ev.ts, alpha, beta))
    return out


def erase_program_events(tau: Iterable[GlobalEvent]) -> Trace:
    """Drop every program part, then drop entries left with nothing."""
    return [GlobalEvent(ev.ts, None, ev.beta) for ev in tau if ev.beta is not None]


# -- equivalences --------------------------------------------------------------


def mem_equiv(m1: Memory, m2: Memory, env: TypeEnv, adv: str) -> bool:
    _check_adv(env, adv)
    if set(m1) != set(env.gamma) or set(m2) != set(env.gamma):
        raise EquivalenceUsageError("memories are not over the same variables as the type environment")
    for x, t in env.gamma.items():
        if _visible(env, t.level, adv) and m1[x] != m2[x]:
            return False
        if isinstance(t.sigma, StringType) and _visible(env, t.sigma.size_level, adv):
            if size_of_value(m1[x]) != size_of_value(m2[x]):
                return False
    return True


def net_equiv(p1, p2) -> bool:
    """Same number of packets, arriving at the same timestamps."""
    return len(p1) == len(p2) and all(a[0] == b[0] for a, b in zip(p1, p2))


def _channels(a, b) -> set[str]:
    return set(a) | set(b)


def input_equiv_internal(I1: InputEnv, I2: InputEnv, env: TypeEnv, adv: str) -> bool:
    _check_adv(env, adv)
    for ch in _channels(I1, I2):
        if _visible(env, env.channel_level(ch), adv) and tuple(I1.get(ch, ())) != tuple(I2.get(ch, ())):
            return False
    return True


def input_equiv(I1: InputEnv, I2: InputEnv, env: TypeEnv, adv: str) -> bool:
    if not input_equiv_internal(I1, I2, env, adv):
        return False
    for ch in _channels(I1, I2):
        if not _visible(env, env.channel_level(ch), adv):
            if not net_equiv(I1.get(ch, ()), I2.get(ch, ())):
                return False
    return True


def output_equiv(O1: OutputEnv, O2: OutputEnv, env: TypeEnv, adv: str) -> bool:
    _check_adv(env, adv)
    for ch in _channels(O1, O2):
        if _visible(env, env.channel_level(ch), adv) and tuple(O1.get(ch, ())) != tuple(O2.get(ch, ())):
            return False
    return True


def config_clause(P1: ProgramConfig, P2: ProgramConfig, env: TypeEnv, adv: str, internal: bool = False) -> str | None:
    """The name of the first failing clause of configuration equivalence, or None."""
    if P1.command != P2.command:
        return "command"
    if not mem_equiv(P1.memory, P2.memory, env, adv):
        return "memory"
    inputs_ok = input_equiv_internal if internal else input_equiv
    if not inputs_ok(P1.inputs, P2.inputs, env, adv):
        return "input"
    return None


def config_equiv(P1: ProgramConfig, P2: ProgramConfig, env: TypeEnv, adv: str, internal: bool = False) -> bool:
    return config_clause(P1, P2, env, adv, internal) is None


def memory_clause(m1: Memory, m2: Memory, env: TypeEnv, adv: str) -> str | None:
    """Which memory condition fails: 'visible value of x' or 'visible size of x'."""
    for x, t in env.gamma.items():
        if _visible(env, t.level, adv) and m1[x] != m2[x]:
            return f"visible value of {x}"
        if isinstance(t.sigma, StringType) and _visible(env, t.sigma.size_level, adv):
            if size_of_value(m1[x]) != size_of_value(m2[x]):
                return f"visible size of {x}"
    return None
