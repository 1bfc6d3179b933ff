"""JSON file formats: memories, input environments, traces, experiments and verdicts.

Strings are byte strings inside the interpreter.  In JSON they are text
decoded as UTF-8 with ``surrogateescape``, so arbitrary bytes survive a
round trip, and files are written with ASCII escapes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Sequence

from .core import (
    DUMMY,
    AssignEvent,
    AssignSizeEvent,
    Dummy,
    Fragment,
    GlobalEvent,
    InputEvent,
    OutputEvent,
    OutputHiddenEvent,
    Packet,
    QueueEvent,
    ScheduleEvent,
    StringType,
    TimedPacket,
    Trace,
    TypeEnv,
    Value,
    show_value,
    value_fits,
)
from .errors import FormatError


def read_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=True, sort_keys=True)


# -- values and packets ----------------------------------------------------------


def value_to_json(v: Value) -> int | str:
    if isinstance(v, bytes):
        return v.decode("utf-8", "surrogateescape")
    return v


def value_from_json(obj: Any, where: str = "value") -> Value:
    if isinstance(obj, bool) or not isinstance(obj, (int, str)):
        raise FormatError(f"{where}: expected an integer or a string, got {obj!r}")
    if isinstance(obj, str):
        try:
            return obj.encode("utf-8", "surrogateescape")
        except UnicodeEncodeError:
            raise FormatError(f"{where}: string is not encodable") from None
    if not -(1 << 63) <= obj < (1 << 63):
        raise FormatError(f"{where}: integer {obj} does not fit in 64 bits")
    return obj


def _nat(obj: Any, where: str, positive: bool = False) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int) or obj < (1 if positive else 0):
        kind = "positive integer" if positive else "natural number"
        raise FormatError(f"{where}: expected a {kind}, got {obj!r}")
    return obj


def _record(obj: Any, where: str, keys: set[str]) -> dict:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object, got {obj!r}")
    extra = set(obj) - keys
    if extra:
        raise FormatError(f"{where}: unexpected key(s) {sorted(extra)}")
    return obj


def _mapping(obj: Any, where: str) -> dict:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object, got {obj!r}")
    return obj


def _str(obj: Any, where: str) -> str:
    if not isinstance(obj, str):
        raise FormatError(f"{where}: expected a name, got {obj!r}")
    return obj


def packet_to_json(p: Packet) -> dict:
    match p:
        case Fragment(value=v, index=j, total=n):
            return {"frag": {"v": value_to_json(v), "j": j, "N": n}}
        case Dummy():
            return {"dummy": True}
    raise TypeError(f"not a packet: {p!r}")


def packet_from_json(obj: Any, where: str = "packet") -> Packet:
    if isinstance(obj, dict) and "dummy" in obj:
        _record(obj, where, {"dummy", "t"})
        if obj["dummy"] is not True:
            raise FormatError(f"{where}: 'dummy' must be true")
        return DUMMY
    if isinstance(obj, dict) and "frag" in obj:
        _record(obj, where, {"frag", "t"})
        frag = _record(obj["frag"], f"{where}.frag", {"v", "j", "N"})
        missing = {"v", "j", "N"} - set(frag)
        if missing:
            raise FormatError(f"{where}.frag: missing key(s) {sorted(missing)}")
        j = _nat(frag["j"], f"{where}.frag.j", positive=True)
        n = _nat(frag["N"], f"{where}.frag.N", positive=True)
        if j > n:
            raise FormatError(f"{where}.frag: index {j} exceeds count {n}")
        return Fragment(value_from_json(frag["v"], f"{where}.frag.v"), j, n)
    raise FormatError(f"{where}: expected a fragment or a dummy packet, got {obj!r}")


def timed_to_json(tp: TimedPacket) -> dict:
    return {"t": tp[0], **packet_to_json(tp[1])}


def timed_from_json(obj: Any, where: str) -> TimedPacket:
    if not isinstance(obj, dict) or "t" not in obj:
        raise FormatError(f"{where}: expected a timed packet with key 't'")
    return _nat(obj["t"], f"{where}.t"), packet_from_json(obj, where)


def packets_from_json(obj: Any, where: str) -> tuple[TimedPacket, ...]:
    if not isinstance(obj, list):
        raise FormatError(f"{where}: expected a list of timed packets")
    packets = tuple(timed_from_json(p, f"{where}[{i}]") for i, p in enumerate(obj))
    for i in range(1, len(packets)):
        if packets[i][0] < packets[i - 1][0]:
            raise FormatError(f"{where}: timestamps must be non-decreasing (entry {i})")
    return packets


def packet_summary(packets: Sequence[TimedPacket]) -> str:
    """Compact text form of a timed packet list, for variant labels."""
    parts = []
    for t, p in packets:
        match p:
            case Fragment(value=v, index=j, total=n):
                parts.append(f"{t}:{show_value(v)}#{j}/{n}")
            case _:
                parts.append(f"{t}:dummy")
    return "[" + " ".join(parts) + "]"


# -- memories and input environments --------------------------------------------


def memory_from_json(obj: Any, env: TypeEnv, where: str = "memory") -> dict[str, Value]:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object mapping variables to values")
    memory: dict[str, Value] = {}
    for x, raw in obj.items():
        if x not in env.gamma:
            raise FormatError(f"{where}: undeclared variable {x!r}")
        v = value_from_json(raw, f"{where}.{x}")
        if not value_fits(v, env.var_type(x).sigma):
            raise FormatError(f"{where}.{x}: value {show_value(v)} does not fit type {env.var_type(x).sigma}")
        memory[x] = v
    return memory


def memory_to_json(memory: Mapping[str, Value]) -> dict:
    return {x: value_to_json(v) for x, v in sorted(memory.items())}


def inputs_from_json(obj: Any, env: TypeEnv | None = None, where: str = "inputs") -> dict[str, tuple[TimedPacket, ...]]:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object mapping channels to packet lists")
    inputs = {}
    for ch, packets in obj.items():
        if env is not None and ch not in env.channels:
            raise FormatError(f"{where}: undeclared channel {ch!r}")
        inputs[ch] = packets_from_json(packets, f"{where}.{ch}")
    return inputs


def inputs_to_json(inputs: Mapping[str, Sequence[TimedPacket]]) -> dict:
    return {ch: [timed_to_json(tp) for tp in packets] for ch, packets in sorted(inputs.items())}


def parse_assignment(text: str, env: TypeEnv) -> tuple[str, Value]:
    """``VAR=VALUE``: an integer for int variables; raw text or a JSON string literal otherwise."""
    if "=" not in text:
        raise FormatError(f"--set expects VAR=VALUE, got {text!r}")
    x, raw = text.split("=", 1)
    x = x.strip()
    if x not in env.gamma:
        raise FormatError(f"--set: undeclared variable {x!r}")
    if isinstance(env.var_type(x).sigma, StringType):
        value: Any = raw
        if raw.startswith('"'):
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                raise FormatError(f"--set {x}: malformed string literal {raw!r}") from None
    else:
        try:
            value = int(raw, 0)
        except ValueError:
            raise FormatError(f"--set {x}: expected an integer, got {raw!r}") from None
    return x, memory_from_json({x: value}, env, "--set")[x]


# -- events and traces -------------------------------------------------------------


def alpha_to_json(alpha) -> dict | None:
    match alpha:
        case None:
            return None
        case AssignEvent(var=x, value=v):
            return {"assign": {"var": x, "value": value_to_json(v)}}
        case AssignSizeEvent(var=x, size=s):
            return {"assign_size": {"var": x, "size": s}}
        case QueueEvent(channel=ch, value=v):
            return {"queue": {"channel": ch, "value": value_to_json(v)}}
        case ScheduleEvent(channel=ch, count=n, time=t):
            return {"schedule": {"channel": ch, "count": n, "time": t}}
        case InputEvent(channel=ch, var=x, value=v):
            return {"input": {"channel": ch, "var": x, "value": value_to_json(v)}}
    raise TypeError(f"not a program event: {alpha!r}")


def _tagged(obj: Any, where: str) -> tuple[str, dict]:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise FormatError(f"{where}: expected a single-key tagged record, got {obj!r}")
    (tag, body), = obj.items()
    if not isinstance(body, dict):
        raise FormatError(f"{where}.{tag}: expected an object")
    return tag, body


def _fields(body: dict, where: str, names: tuple[str, ...]) -> list:
    _record(body, where, set(names))
    missing = [n for n in names if n not in body]
    if missing:
        raise FormatError(f"{where}: missing key(s) {missing}")
    return [body[n] for n in names]


def alpha_from_json(obj: Any, where: str):
    if obj is None:
        return None
    tag, body = _tagged(obj, where)
    w = f"{where}.{tag}"
    match tag:
        case "assign":
            x, v = _fields(body, w, ("var", "value"))
            return AssignEvent(_str(x, w), value_from_json(v, w))
        case "assign_size":
            x, s = _fields(body, w, ("var", "size"))
            return AssignSizeEvent(_str(x, w), _nat(s, w))
        case "queue":
            ch, v = _fields(body, w, ("channel", "value"))
            return QueueEvent(_str(ch, w), value_from_json(v, w))
        case "schedule":
            ch, n, t = _fields(body, w, ("channel", "count", "time"))
            if isinstance(n, bool) or not isinstance(n, int):
                raise FormatError(f"{w}: count must be an integer")
            return ScheduleEvent(_str(ch, w), n, _nat(t, w))
        case "input":
            ch, x, v = _fields(body, w, ("channel", "var", "value"))
            return InputEvent(_str(ch, w), _str(x, w), value_from_json(v, w))
    raise FormatError(f"{where}: unknown program event tag {tag!r}")


def beta_to_json(beta) -> dict | None:
    match beta:
        case None:
            return None
        case OutputEvent(channel=ch, packet=p):
            return {"output": {"channel": ch, "packet": packet_to_json(p)}}
        case OutputHiddenEvent(channel=ch):
            return {"output": {"channel": ch, "packet": {"redacted": True}}}
    raise TypeError(f"not a runtime event: {beta!r}")


def beta_from_json(obj: Any, where: str):
    if obj is None:
        return None
    tag, body = _tagged(obj, where)
    if tag != "output":
        raise FormatError(f"{where}: unknown runtime event tag {tag!r}")
    ch, p = _fields(body, f"{where}.output", ("channel", "packet"))
    ch = _str(ch, where)
    if p == {"redacted": True}:
        return OutputHiddenEvent(ch)
    return OutputEvent(ch, packet_from_json(p, f"{where}.output.packet"))


def event_to_json(ev: GlobalEvent) -> dict:
    return {"ts": ev.ts, "alpha": alpha_to_json(ev.alpha), "beta": beta_to_json(ev.beta)}


def event_from_json(obj: Any, where: str) -> GlobalEvent:
    ts, alpha, beta = _fields(_record(obj, where, {"ts", "alpha", "beta"}), where, ("ts", "alpha", "beta"))
    return GlobalEvent(_nat(ts, f"{where}.ts"), alpha_from_json(alpha, f"{where}.alpha"), beta_from_json(beta, f"{where}.beta"))


def trace_to_text(trace: Sequence[GlobalEvent]) -> str:
    """One event per line; the output depends only on the trace."""
    if not trace:
        return "[]\n"
    return "[\n" + ",\n".join("  " + dumps(event_to_json(ev)) for ev in trace) + "\n]\n"


def trace_from_obj(obj: Any) -> Trace:
    if not isinstance(obj, list):
        raise FormatError("trace: expected a list of events")
    trace = [event_from_json(e, f"trace[{i}]") for i, e in enumerate(obj)]
    for i in range(1, len(trace)):
        if trace[i].ts <= trace[i - 1].ts:
            raise FormatError(f"trace[{i}]: timestamps must be strictly increasing")
    return trace


def trace_from_text(text: str) -> Trace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"trace: invalid JSON: {exc}") from None
    return trace_from_obj(obj)


def write_trace(path: str | Path, trace: Sequence[GlobalEvent]) -> None:
    Path(path).write_text(trace_to_text(trace), encoding="utf-8")


def read_trace(path: str | Path) -> Trace:
    return trace_from_obj(read_json(path))


# -- experiments and verdicts ------------------------------------------------------

_EXPERIMENT_KEYS = {"program", "adversary", "bound", "memory", "inputs", "vary", "mode", "eta", "description"}


def experiment_from_json(obj: Any, base_dir: str | Path = "."):
    """Build an experiment; ``program`` is resolved relative to ``base_dir``."""
    from .errors import VariationError
    from .ni import MODES, NIExperiment
    from .parser import load_program
    from .typecheck import kind_errors

    obj = _record(obj, "experiment", _EXPERIMENT_KEYS)
    for key in ("program", "adversary", "bound"):
        if key not in obj:
            raise FormatError(f"experiment: missing key {key!r}")
    program_path = Path(base_dir) / _str(obj["program"], "experiment.program")
    program, env = load_program(program_path)
    problems = kind_errors(env, program.body)
    if problems:
        raise FormatError(f"{program_path}: program cannot run: {problems[0]}")
    adv = _str(obj["adversary"], "experiment.adversary")
    if adv not in env.lattice:
        raise FormatError(f"experiment.adversary: unknown level {adv!r}")
    mode = obj.get("mode", "external")
    if mode not in MODES:
        raise FormatError(f"experiment.mode: expected one of {list(MODES)}, got {mode!r}")
    memory = memory_from_json(obj.get("memory", {}), env, "experiment.memory")
    inputs = inputs_from_json(obj.get("inputs", {}), env, "experiment.inputs")
    vary = _record(obj.get("vary", {}), "experiment.vary", {"vars", "channels"})
    vary_vars: dict[str, list[Value]] = {}
    raw_vars = _mapping(vary.get("vars", {}), "experiment.vary.vars")
    for x, values in raw_vars.items():
        if x not in env.gamma:
            raise VariationError(f"varied variable {x!r} is not declared", "declaration")
        if not isinstance(values, list):
            raise FormatError(f"experiment.vary.vars.{x}: expected a list of values")
        vary_vars[x] = [memory_from_json({x: v}, env, "experiment.vary.vars")[x] for v in values]
    vary_channels = {}
    raw_channels = _mapping(vary.get("channels", {}), "experiment.vary.channels")
    for ch, alts in raw_channels.items():
        if ch not in env.channels:
            raise VariationError(f"varied channel {ch!r} is not declared", "declaration")
        if not isinstance(alts, list):
            raise FormatError(f"experiment.vary.channels.{ch}: expected a list of packet lists")
        vary_channels[ch] = [packets_from_json(a, f"experiment.vary.channels.{ch}[{i}]") for i, a in enumerate(alts)]
    return NIExperiment(
        program=program,
        env=env,
        adv=adv,
        memory=memory,
        inputs=inputs,
        vary_vars=vary_vars,
        vary_channels=vary_channels,
        bound=_nat(obj["bound"], "experiment.bound", positive=True),
        mode=mode,
        eta=_nat(obj.get("eta", 1), "experiment.eta", positive=True),
    )


def read_experiment(path: str | Path):
    return experiment_from_json(read_json(path), Path(path).parent)


def verdict_to_json(verdict) -> dict:
    out: dict[str, Any] = {
        "verdict": "pass" if verdict.passed else "counterexample",
        "mode": verdict.mode,
        "adversary": verdict.adv,
        "variants": verdict.variants,
        "bounded": verdict.bounded,
        "notes": list(verdict.notes),
    }
    cx = verdict.counterexample
    if cx is not None:
        out["counterexample"] = {
            "divergence_ts": cx.divergence_ts,
            "index": cx.index,
            "first": {"variant": dict(cx.first.label), "trace": [event_to_json(e) for e in cx.first_trace]},
            "second": {"variant": dict(cx.second.label), "trace": [event_to_json(e) for e in cx.second_trace]},
        }
    return out
