"""End-to-end acceptance criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import os
import subprocess
import sys
import time
from collections import Counter

import pytest

from selene.core import GlobalConfig, initial_global
from selene.formats import read_experiment, write_trace
from selene.ni import check_ni, check_ni_internal, run_all
from selene.parser import load_program
from selene.runtime import output_counts, run
from selene.typecheck import check_program

from conftest import EXPERIMENTS, PROGRAMS
from lemmas import (
    check_choose_split,
    check_equivalence_laws,
    check_high_confinement,
    check_internal_refines_external,
    check_preservation,
)


@pytest.fixture
def report(capsys):
    lines = []

    def emit(number, ok, detail, elapsed):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s) {detail}"
        lines.append(line)
        with capsys.disabled():
            print("\n" + line)

    return emit


def test_criterion_1_typechecker_corpus(report):
    start = time.perf_counter()
    verdicts = {n: check_program(*load_program(PROGRAMS / f"{n}.sel")) for n in ("program5", "program6", "program7", "program3b")}
    rejected = verdicts["program3b"]
    first = rejected.errors[0] if rejected.errors else None
    elapsed = time.perf_counter() - start
    ok = (all(verdicts[n].accepted for n in ("program5", "program6", "program7"))
          and not rejected.accepted and first.rule == "T-Schedule" and first.pos.line == 10 and elapsed < 1)
    report(1, ok, f"5/6/7 accepted, 3b rejected at line {first.pos.line if first else '?'} by {first.rule if first else '?'}", elapsed)
    assert ok


def test_criterion_2_packet_counts(report):
    start = time.perf_counter()
    program, env = load_program(PROGRAMS / "program3b.sel")
    counts = {}
    for h in (0, 1):
        outcome = run(initial_global(program.body, {**{x: 0 for x in env.gamma}, "h": h}, {}, env))
        counts[h] = output_counts(outcome.trace).get("Alice", 0)
    elapsed = time.perf_counter() - start
    ok = counts == {0: 1, 1: 6} and elapsed < 1
    report(2, ok, f"Alice packets: h=0 -> {counts[0]}, h=1 -> {counts[1]}", elapsed)
    assert ok


def test_criterion_3_ni_refutation(report):
    start = time.perf_counter()
    exp = read_experiment(EXPERIMENTS / "program3b.json")
    runs = run_all(exp)
    verdict = check_ni(exp, runs)
    h1 = next(r for r in runs if r.variant.config.memory["h"] == 1)
    second_packet = [ev.ts for ev in h1.outcome.trace if ev.beta is not None][1]
    elapsed = time.perf_counter() - start
    cx = verdict.counterexample
    ok = cx is not None and cx.divergence_ts == second_packet and elapsed < 1
    report(3, ok, f"divergence at ts={cx.divergence_ts if cx else None}, second packet at ts={second_packet}", elapsed)
    assert ok


def test_criterion_4_soundness_corroboration(report):
    start = time.perf_counter()
    details = []
    ok = True
    for name in ("program5", "program6", "program7"):
        exp = read_experiment(EXPERIMENTS / f"{name}.json")
        secrets = 1
        for x, values in exp.vary_vars.items():
            secrets *= len(set(values) | {exp.memory[x]})
        payloads = sum(len(alts) for alts in exp.vary_channels.values())
        exp.bound = 1000
        runs = run_all(exp)
        ext = check_ni(exp, runs)
        internal = check_ni_internal(exp, runs)
        good = secrets >= 4 and payloads >= 2 and ext.passed and internal.passed
        ok &= good
        details.append(f"{name}: {len(runs)} variants ({secrets} memories x {payloads} payload lists) {'ok' if good else 'FAILED'}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    report(4, ok, "; ".join(details), elapsed)
    assert ok


def test_criterion_5_insecure_patterns(report):
    start = time.perf_counter()
    found = {}
    for name in ("program1", "program2", "program4"):
        verdict = check_ni(read_experiment(EXPERIMENTS / f"{name}.json"))
        found[name] = verdict.counterexample.divergence_ts if verdict.counterexample else None
    elapsed = time.perf_counter() - start
    ok = all(ts is not None for ts in found.values()) and elapsed < 5
    report(5, ok, ", ".join(f"{n} diverges at ts={ts}" for n, ts in found.items()), elapsed)
    assert ok


LEMMAS = {
    "a": check_preservation,
    "b": check_high_confinement,
    "c": check_internal_refines_external,
    "d": check_choose_split,
}


def test_criterion_6_lemma_suites(report):
    start = time.perf_counter()
    failures = Counter()
    first = {}
    for key, check in LEMMAS.items():
        for seed in range(1000):
            try:
                check(seed)
            except AssertionError as exc:
                failures[key] += 1
                first.setdefault(key, f"seed {seed}: {exc}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    detail = ", ".join(f"({k}) {failures[k]}/1000 failed" for k in LEMMAS)
    if first:
        detail += " | " + "; ".join(f"({k}) {v}" for k, v in first.items())
    report(6, ok, detail, elapsed)
    assert ok


_DUMP_TRACES = """
import sys
from pathlib import Path
from selene.formats import read_experiment, write_trace
from selene.core import GlobalConfig
from selene.runtime import run
out = Path(sys.argv[1])
for path in sorted(Path(sys.argv[2]).glob("*.json")):
    exp = read_experiment(path)
    G0 = GlobalConfig(exp.base_config(), {ch: () for ch in exp.env.channels}, {}, 0)
    write_trace(out / (path.stem + ".trace.json"), run(G0).trace)
"""


def test_criterion_7_determinism(report, tmp_path):
    start = time.perf_counter()
    unstable = []
    names = sorted(p.stem for p in EXPERIMENTS.glob("*.json"))
    for name in names:
        exp = read_experiment(EXPERIMENTS / f"{name}.json")
        blobs = set()
        for k in range(10):
            G0 = GlobalConfig(exp.base_config(), {ch: () for ch in exp.env.channels}, {}, 0)
            path = tmp_path / f"{name}.{k}.json"
            write_trace(path, run(G0).trace)
            blobs.add(path.read_bytes())
        if len(blobs) != 1:
            unstable.append(name)
    # the same files again from fresh interpreters with different hash seeds
    for seed in ("1", "2"):
        out = tmp_path / f"proc{seed}"
        out.mkdir()
        subprocess.run([sys.executable, "-c", _DUMP_TRACES, str(out), str(EXPERIMENTS)], check=True,
                       env={**os.environ, "PYTHONHASHSEED": seed})
        for name in names:
            if (out / f"{name}.trace.json").read_bytes() != (tmp_path / f"{name}.0.json").read_bytes():
                unstable.append(f"{name} (process {seed})")
    elapsed = time.perf_counter() - start
    ok = not unstable
    report(7, ok, f"{len(names)} programs x 10 runs + 2 fresh processes, unstable: {unstable or 'none'}", elapsed)
    assert ok


def test_criterion_8_equivalence_laws(report):
    start = time.perf_counter()
    failures = []
    related = Counter()
    for seed in range(500):
        try:
            related.update(check_equivalence_laws(seed))
        except AssertionError as exc:
            failures.append(f"seed {seed}: {exc}")
    elapsed = time.perf_counter() - start
    # every relation must also have been exercised on related, non-identical pairs
    ok = not failures and all(related[n] > 0 for n in ("memory", "input", "input-internal", "output", "config"))
    report(8, ok, f"500 environments, {len(failures)} failures, related pairs: {dict(sorted(related.items()))}", elapsed)
    assert ok, failures[:3]
