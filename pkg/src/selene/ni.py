"""Bounded noninterference checking over a finite carrier of equivalent configurations.

The carrier is the Cartesian product of user-declared values for secret
variables and alternative payload lists for hidden channels.  Every variant
is run to the step bound and the filtered traces are compared.  All runs
share the global clock, so knowledge never shrinks along a run exactly when
every pair of filtered traces agrees.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    GlobalConfig,
    ProgramConfig,
    Trace,
    TypeEnv,
    TimedPacket,
    Value,
    initial_global,
    initial_memory,
    show_value,
    value_fits,
)
from .errors import VariationError
from .observe import (
    filter_trace,
    filter_trace_internal,
    input_equiv,
    input_equiv_internal,
    mem_equiv,
    memory_clause,
    net_equiv,
)
from .parser import Program
from .runtime import BUDGET_EXHAUSTED, RunOutcome, run

EXTERNAL = "external"
INTERNAL = "internal"
MODES = (EXTERNAL, INTERNAL)


@dataclass
class NIExperiment:
    program: Program
    env: TypeEnv
    adv: str
    memory: dict[str, Value]
    inputs: dict[str, tuple[TimedPacket, ...]]
    vary_vars: dict[str, list[Value]] = field(default_factory=dict)
    vary_channels: dict[str, list[tuple[TimedPacket, ...]]] = field(default_factory=dict)
    bound: int = 1000
    mode: str = EXTERNAL
    eta: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise VariationError(f"unknown mode {self.mode!r}", "mode")
        if self.adv not in self.env.lattice:
            raise VariationError(f"unknown adversary level {self.adv!r}", "adversary")
        if self.bound < 1:
            raise VariationError("bound must be at least 1", "bound")
        self.memory = initial_memory(self.env, self.memory)

    def base_config(self) -> ProgramConfig:
        return initial_global(self.program.body, self.memory, self.inputs, self.env).program


@dataclass(frozen=True)
class Variant:
    """One carrier element; ``label`` lists the varied coordinates and their values."""

    index: int
    label: tuple[tuple[str, str], ...]
    config: ProgramConfig

    def describe(self) -> str:
        if not self.label:
            return "base"
        return ", ".join(f"{k}={v}" for k, v in self.label)


def _ordered_choices(base, alternatives: Sequence) -> list:
    choices = list(alternatives)
    if base not in choices:
        choices.insert(0, base)
    return choices


def _show_packets(packets: Sequence[TimedPacket]) -> str:
    from .formats import packet_summary

    return packet_summary(packets)


def enumerate_equiv_configs(exp: NIExperiment) -> list[Variant]:
    """The base configuration and every variation of it, each checked equivalent to the base."""
    env = exp.env
    base = exp.base_config()
    var_axes: list[tuple[str, list[Value]]] = []
    for x in sorted(exp.vary_vars):
        if x not in env.gamma:
            raise VariationError(f"varied variable {x!r} is not declared", "declaration")
        values = exp.vary_vars[x]
        if not values:
            raise VariationError(f"variation of {x!r} is empty", "declaration")
        for v in values:
            if not value_fits(v, env.var_type(x).sigma):
                raise VariationError(f"value {show_value(v)} does not fit the type of {x}", "type")
        var_axes.append((x, _ordered_choices(base.memory[x], values)))
    chan_axes: list[tuple[str, list[tuple[TimedPacket, ...]]]] = []
    for ch in sorted(exp.vary_channels):
        if ch not in env.channels:
            raise VariationError(f"varied channel {ch!r} is not declared", "declaration")
        alts = [tuple(a) for a in exp.vary_channels[ch]]
        if not alts:
            raise VariationError(f"variation of channel {ch!r} is empty", "declaration")
        chan_axes.append((ch, _ordered_choices(tuple(base.inputs.get(ch, ())), alts)))

    variants: list[Variant] = []
    var_choices = [vals for _, vals in var_axes]
    chan_choices = [alts for _, alts in chan_axes]
    for n, (vals, alts) in enumerate(itertools.product(itertools.product(*var_choices), itertools.product(*chan_choices))):
        memory = dict(base.memory)
        label: list[tuple[str, str]] = []
        for (x, _), v in zip(var_axes, vals):
            memory[x] = v
            label.append((x, show_value(v)))
        inputs = dict(base.inputs)
        for (ch, _), packets in zip(chan_axes, alts):
            inputs[ch] = packets
            label.append((ch, _show_packets(packets)))
        config = ProgramConfig(base.command, memory, inputs)
        _validate(base, config, env, exp.adv, tuple(label))
        variants.append(Variant(n, tuple(label), config))
    return variants


def _validate(base: ProgramConfig, config: ProgramConfig, env: TypeEnv, adv: str, label) -> None:
    where = ", ".join(f"{k}={v}" for k, v in label) or "base"
    if not mem_equiv(base.memory, config.memory, env, adv):
        clause = memory_clause(base.memory, config.memory, env, adv)
        raise VariationError(f"variant {where} is not memory-equivalent to the base: {clause}", f"memory: {clause}")
    if not input_equiv_internal(base.inputs, config.inputs, env, adv):
        ch = next(c for c in config.inputs if tuple(config.inputs[c]) != tuple(base.inputs.get(c, ()))
                  and env.lattice.leq(env.channel_level(c), adv))
        raise VariationError(f"variant {where} changes visible channel {ch}", f"input: visible channel {ch}")
    if not input_equiv(base.inputs, config.inputs, env, adv):
        ch = next(c for c in config.inputs if not net_equiv(config.inputs[c], base.inputs.get(c, ())))
        raise VariationError(
            f"variant {where} changes packet count or arrival times on hidden channel {ch}",
            f"input: arrival times on {ch}",
        )


# -- running -------------------------------------------------------------------


@dataclass
class VariantRun:
    variant: Variant
    outcome: RunOutcome
    external: Trace
    internal: Trace

    def filtered(self, mode: str) -> Trace:
        return self.internal if mode == INTERNAL else self.external


def run_variant(exp: NIExperiment, variant: Variant) -> VariantRun:
    G0 = GlobalConfig(variant.config, {ch: () for ch in exp.env.channels}, {}, 0)
    outcome = run(G0, max_steps=exp.bound, eta=exp.eta)
    for i, ev in enumerate(outcome.trace):
        # Lockstep: step i of every run happens at timestamp i.
        assert ev.ts == i, f"run {variant.describe()} lost clock alignment at step {i}"
    return VariantRun(
        variant,
        outcome,
        filter_trace(outcome.trace, exp.env, exp.adv),
        filter_trace_internal(outcome.trace, exp.env, exp.adv),
    )


def run_all(exp: NIExperiment) -> list[VariantRun]:
    return [run_variant(exp, v) for v in enumerate_equiv_configs(exp)]


def _is_prefix(short: Trace, long: Trace) -> bool:
    return len(short) <= len(long) and long[: len(short)] == short


def knowledge(exp: NIExperiment, tau: Trace, runs: list[VariantRun] | None = None) -> list[Variant]:
    """Carrier elements with a run whose observation starts with the observation of ``tau``."""
    if runs is None:
        runs = run_all(exp)
    if exp.mode == INTERNAL:
        seen = filter_trace_internal(tau, exp.env, exp.adv)
    else:
        seen = filter_trace(tau, exp.env, exp.adv)
    return [r.variant for r in runs if _is_prefix(seen, r.filtered(exp.mode))]


# -- verdicts ------------------------------------------------------------------


@dataclass
class Counterexample:
    first: Variant
    second: Variant
    divergence_ts: int
    index: int
    first_trace: Trace
    second_trace: Trace


@dataclass
class NIVerdict:
    mode: str
    adv: str
    variants: int
    counterexample: Counterexample | None = None
    bounded: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.counterexample is None


def divergence(a: Trace, b: Trace) -> tuple[int, int] | None:
    """(index, timestamp) of the first difference between two filtered traces."""
    for k in range(max(len(a), len(b))):
        ea = a[k] if k < len(a) else None
        eb = b[k] if k < len(b) else None
        if ea != eb:
            stamps = [e.ts for e in (ea, eb) if e is not None]
            return k, min(stamps)
    return None


def _verdict(exp: NIExperiment, runs: list[VariantRun], mode: str) -> NIVerdict:
    verdict = NIVerdict(mode, exp.adv, len(runs))
    best: tuple[int, int, int, int] | None = None
    for i, j in itertools.combinations(range(len(runs)), 2):
        d = divergence(runs[i].filtered(mode), runs[j].filtered(mode))
        if d is not None and (best is None or d[1] < best[0]):
            best = (d[1], i, j, d[0])
    if best is not None:
        ts, i, j, k = best
        verdict.counterexample = Counterexample(
            runs[i].variant, runs[j].variant, ts, k, runs[i].filtered(mode), runs[j].filtered(mode)
        )
    exhausted = [r.variant.describe() for r in runs if r.outcome.status == BUDGET_EXHAUSTED]
    verdict.bounded = bool(exhausted)
    verdict.notes.append(f"carrier of {len(runs)} configuration(s), runs truncated at {exp.bound} steps")
    if exhausted:
        verdict.notes.append(
            f"{len(exhausted)} run(s) hit the step bound before quiescing; the verdict covers the explored prefix only"
        )
    return verdict


def check_ni(exp: NIExperiment, runs: list[VariantRun] | None = None) -> NIVerdict:
    if runs is None:
        runs = run_all(exp)
    return _verdict(exp, runs, EXTERNAL)


def check_ni_internal(exp: NIExperiment, runs: list[VariantRun] | None = None) -> NIVerdict:
    """Internal check, cross-checked against the external one on the same runs."""
    if runs is None:
        runs = run_all(exp)
    internal = _verdict(exp, runs, INTERNAL)
    external = _verdict(exp, runs, EXTERNAL)
    if internal.passed and not external.passed:
        raise AssertionError("internal verdict passed while the external verdict failed")
    internal.notes.append("external verdict on the same carrier: " + ("pass" if external.passed else "counterexample"))
    return internal


def verify(exp: NIExperiment) -> NIVerdict:
    """Check in the experiment's own mode."""
    runs = run_all(exp)
    if exp.mode == INTERNAL:
        return check_ni_internal(exp, runs)
    return check_ni(exp, runs)


def replay_counterexample(exp: NIExperiment, cx: Counterexample, mode: str) -> bool:
    """Rerun both sides of a counterexample and confirm it."""
    a = run_variant(exp, cx.first).filtered(mode)
    b = run_variant(exp, cx.second).filtered(mode)
    d = divergence(a, b)
    return d is not None and d[1] == cx.divergence_ts and a == cx.first_trace and b == cx.second_trace

