"""Output queues, the packet schedule, and the clocked global semantics."""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass

from .core import (
    DEFAULT_ETA,
    DUMMY,
    Fragment,
    GlobalConfig,
    GlobalEvent,
    OutputEnv,
    OutputEvent,
    ProgramEvent,
    QueueEvent,
    Schedule_,
    ScheduleEvent,
    Stop,
    Trace,
    TypeEnv,
    Value,
    memory_well_formed,
    packet_count,
)
from .local import STUCK_NEGATIVE, AlreadyStopped, Blocked, Stepped, blocked_forever, step_program

DEFAULT_MAX_STEPS = 10_000

TERMINATED = "terminated"
BLOCKED_QUIESCENT = "blocked-quiescent"
BUDGET_EXHAUSTED = "budget-exhausted"
STUCK_DIAGNOSTIC = "stuck-diagnostic"


def default_max_steps() -> int:
    raw = os.environ.get("SELENE_MAX_STEPS")
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_STEPS
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"SELENE_MAX_STEPS must be a natural number, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"SELENE_MAX_STEPS must be a natural number, got {raw!r}")
    return value


def split(v: Value, eta: int = DEFAULT_ETA) -> tuple[Fragment, ...]:
    n = packet_count(v, eta)
    return tuple(Fragment(v, j, n) for j in range(1, n + 1))


def rsv(pi: Schedule_, channel: str, n: int, t: int) -> dict[int, str]:
    """Reserve the ``n`` earliest free slots at or after ``t`` for ``channel``."""
    result = dict(pi)
    while n > 0:
        if t not in result:
            result[t] = channel
            n -= 1
        t += 1
    return result


def upd(O: OutputEnv, pi: Schedule_, alpha: ProgramEvent, eta: int = DEFAULT_ETA) -> tuple[OutputEnv, Schedule_]:
    match alpha:
        case QueueEvent(channel=ch, value=v):
            return {**O, ch: tuple(O.get(ch, ())) + split(v, eta)}, pi
        case ScheduleEvent(channel=ch, count=n, time=t):
            return O, rsv(pi, ch, n, t)
    return O, pi


def send(O: OutputEnv, channel: str) -> tuple[OutputEvent, OutputEnv]:
    queue = O.get(channel, ())
    if queue:
        return OutputEvent(channel, queue[0]), {**O, channel: tuple(queue[1:])}
    return OutputEvent(channel, DUMMY), O


def _runtime(O: OutputEnv, pi: Schedule_, ts: int):
    if ts in pi:
        return send(O, pi[ts])
    return None, O


def _has_future_slot(pi: Schedule_, ts: int) -> bool:
    return any(t >= ts for t in pi)


def _step(G: GlobalConfig, eta: int):
    """One global step; also returns the local step result for classification."""
    P, ts = G.program, G.ts
    local = step_program(P, ts, eta)
    if isinstance(local, Stepped):
        O1, pi1 = upd(G.outputs, G.schedule, local.event, eta)
        beta, O2 = _runtime(O1, pi1, ts)
        nxt = GlobalConfig(local.config, O2, pi1, ts + 1)
        return nxt, GlobalEvent(ts, local.event, beta), local
    if isinstance(local, AlreadyStopped) and not _has_future_slot(G.schedule, ts):
        return None, None, local
    # G-Block and G-Stop: only the runtime moves.
    beta, O1 = _runtime(G.outputs, G.schedule, ts)
    return GlobalConfig(P, O1, G.schedule, ts + 1), GlobalEvent(ts, None, beta), local


def step_global(G: GlobalConfig, eta: int = DEFAULT_ETA) -> tuple[GlobalConfig, GlobalEvent] | None:
    """G-Step, G-Block or G-Stop; None once stopped with no future slot."""
    nxt, event, _ = _step(G, eta)
    if nxt is None:
        return None
    return nxt, event


@dataclass
class RunOutcome:
    final: GlobalConfig
    trace: Trace
    status: str
    diagnostic: str | None = None

    @property
    def steps(self) -> int:
        return len(self.trace)


def run(
    G0: GlobalConfig,
    max_steps: int | None = None,
    eta: int = DEFAULT_ETA,
    env: TypeEnv | None = None,
) -> RunOutcome:
    """Iterate the global step until quiescence or the step budget runs out.

    Passing ``env`` turns on a memory well-formedness check after every step.
    """
    if max_steps is None:
        max_steps = default_max_steps()
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    G = G0
    trace: Trace = []
    while True:
        if len(trace) >= max_steps:
            return RunOutcome(G, trace, BUDGET_EXHAUSTED)
        nxt, event, local = _step(G, eta)
        if nxt is None:
            return RunOutcome(G, trace, TERMINATED)
        if isinstance(local, Blocked) and not _has_future_slot(G.schedule, G.ts):
            if blocked_forever(G.program, local.reason):
                if local.reason == STUCK_NEGATIVE:
                    return RunOutcome(G, trace, STUCK_DIAGNOSTIC, f"negative duration in {type(local.command).__name__.lower()}")
                return RunOutcome(G, trace, BLOCKED_QUIESCENT, f"no input can complete in({local.command.channel})")
        assert event.ts == G.ts and nxt.ts == G.ts + 1
        if env is not None and not memory_well_formed(nxt.program.memory, env):
            raise AssertionError(f"memory became ill-formed at ts={G.ts}")
        trace.append(event)
        G = nxt


@dataclass
class ChannelSummary:
    channel: str
    packets: int = 0
    dummies: int = 0
    first_ts: int | None = None
    last_ts: int | None = None


def summarize(outcome: RunOutcome) -> list[ChannelSummary]:
    rows: dict[str, ChannelSummary] = {ch: ChannelSummary(ch) for ch in outcome.final.outputs}
    for ev in outcome.trace:
        if isinstance(ev.beta, OutputEvent):
            row = rows.setdefault(ev.beta.channel, ChannelSummary(ev.beta.channel))
            if ev.beta.packet == DUMMY:
                row.dummies += 1
            else:
                row.packets += 1
            if row.first_ts is None:
                row.first_ts = ev.ts
            row.last_ts = ev.ts
    return list(rows.values())


def output_counts(trace: Trace) -> Counter:
    """Output events per channel, dummies included."""
    return Counter(ev.beta.channel for ev in trace if isinstance(ev.beta, OutputEvent))


def is_stopped(G: GlobalConfig) -> bool:
    return isinstance(G.program.command, Stop)
