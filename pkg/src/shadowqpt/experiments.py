"""Experiment plans, presets and the pipelines behind the command line.

A plan is a nested mapping with the sections of :data:`BASE_PLAN`. Presets
override a few fields; plan files (TOML) and ``key=value`` overrides are
merged on top. Every run is a pure function of the plan, seed included.
"""

from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import math
import shutil
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .acquire import (
    Budget,
    MeasurementRecord,
    PairingPlan,
    RecordFormatError,
    acquire_budget,
    default_budget,
    open_records,
    spread_reps,
    write_records,
)
from .channels import (
    ChannelSpec,
    Gate,
    apply_channel,
    gates_unitary,
    ghz_gates,
    ghz_process,
    identity_channel,
    propagator,
    reduced_choi,
    tfim_hamiltonian,
)
from .hamlearn import CSV_COLUMNS as HAMLEARN_COLUMNS
from .hamlearn import HamLearnTask, bound_hamlearn, realization_seed, result_rows, run_hamlearn, tfim_realization
from .matrixio import write_choi
from .postprocess import STEPS, apply_steps, mle_reconstruct, overlap_pipeline
from .qmat import ChoiMatrix, frobenius_distance, purity, trace_distance
from .shadows import (
    BOUND_SCHEMES,
    OVERLAP_SCHEMES,
    EstimatorConfig,
    bound_overlap,
    bound_reduced,
    estimate_choi,
    reduce_data,
    shadow_data,
)


class PlanError(ValueError):
    """Invalid experiment plan."""


PRESETS = ("full_process", "reduced_process", "overlap", "hamlearn", "bounds", "scheme_compare")

BASE_PLAN: dict[str, Any] = {
    "preset": "full_process",
    "seed": 0,
    "p": 0.0,
    "channel": {"kind": "ghz", "n": 2, "file": "", "J": [], "h": [], "t": 0.1},
    "acquisition": {
        "scheme": "ancilla",
        "mode": "pauli",
        "k": 2,
        "fixed_fraction": "default",
        "settings": 0,
        "reps": 0,
        "total": 51200,
        "workers": 1,
    },
    "estimator": {"aggregation": "mean", "K": 23, "level": "shadow"},
    "postprocessing": ["raw", "cp", "cp+tp", "purify"],
    "reduced": {"sizes": [1, 2]},
    "overlap": {"rho": ["zero", "plus_i", "rx_phi"], "sigma": ["ry", "rx"], "angles": 51, "modes": ["purified"]},
    "hamlearn": {"n": 5, "t": [0.1], "N": [100000], "realizations": 10, "scheme": "two_sided"},
    "bounds": {"n": [2, 3, 4], "k": [1, 2], "eps": [0.1], "delta": [0.01], "M": [1, 10, 100], "t": [0.1]},
    "compare": {"schemes": ["ancilla", "two_sided"], "N": 20000},
}

PRESET_OVERRIDES: dict[str, dict[str, Any]] = {
    "full_process": {},
    "reduced_process": {"channel": {"n": 3}, "postprocessing": ["raw", "cp"]},
    "overlap": {"channel": {"n": 2}},
    "hamlearn": {},
    "bounds": {},
    "scheme_compare": {"postprocessing": ["raw", "cp", "purify"]},
}

CHANNEL_KINDS = ("ghz", "identity", "tfim", "file", "none")
OVERLAP_RHO = ("zero", "plus_i", "rx_phi")
OVERLAP_SIGMA = ("ry", "rx")
RX_PHI = (0.1717, 0.1234, 0.9876, 0.888)

METRIC_COLUMNS = ("scheme", "n", "N", "postproc", "trace_distance", "frobenius_distance", "purity")
REDUCED_COLUMNS = ("scheme", "n", "N", "subsystem", "postproc", "trace_distance", "frobenius_distance", "purity")
OVERLAP_COLUMNS = ("n", "rho", "sigma", "theta", "mode", "predicted", "exact", "abs_err")
BOUND_COLUMNS = ("calculator", "scheme", "n", "k", "M", "t", "eps", "delta", "value")


# ----------------------------------------------------------------------------
# plan assembly


def _merge(base: dict, upd: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in upd.items():
        where = f"{path}{key}"
        if key not in base:
            raise PlanError(f"unknown plan field {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise PlanError(f"plan field {where!r} must be a table")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def parse_override(text: str) -> dict:
    """``a.b=value`` to a nested dict; the value is parsed as TOML, else taken as a string."""
    if "=" not in text:
        raise PlanError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        val = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        val = raw.strip()
    out: dict = {}
    cur = out
    parts = key.split(".")
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
    cur[parts[-1]] = val
    return out


def build_plan(preset: str | None = None, plan_file=None, overrides: Sequence[str] = (), seed: int | None = None) -> dict:
    """Preset defaults, then the plan file, then overrides, then ``seed``."""
    file_data: dict = {}
    if plan_file is not None:
        try:
            file_data = tomllib.loads(Path(plan_file).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise PlanError(f"cannot read plan file {plan_file}: {exc}") from None
    name = preset or file_data.get("preset") or BASE_PLAN["preset"]
    if name not in PRESETS:
        raise PlanError(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})")
    plan = _merge(BASE_PLAN, PRESET_OVERRIDES[name])
    plan = _merge(plan, file_data)
    for o in overrides:
        plan = _merge(plan, parse_override(o))
    plan["preset"] = name
    if seed is not None:
        plan["seed"] = seed
    validate_plan(plan)
    return plan


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise PlanError(msg)


def validate_plan(plan: dict) -> None:
    _check(plan["preset"] in PRESETS, f"unknown preset {plan['preset']!r}")
    _check(isinstance(plan["seed"], int) and 0 <= plan["seed"] < 2**64, "seed must be an unsigned 64-bit integer")
    _check(isinstance(plan["p"], (int, float)) and 0 <= plan["p"] <= 1, "p must lie in [0, 1]")
    ch = plan["channel"]
    _check(ch["kind"] in CHANNEL_KINDS, f"unknown channel kind {ch['kind']!r}")
    _check(isinstance(ch["n"], int) and ch["n"] >= 1, "channel.n must be a positive integer")
    if ch["kind"] == "ghz":
        _check(ch["n"] >= 2, "the GHZ channel needs n >= 2")
    if ch["kind"] == "file":
        _check(bool(ch["file"]), "channel.file is required for kind 'file'")
    if ch["kind"] == "tfim":
        _check(len(ch["J"]) == ch["n"] - 1 and len(ch["h"]) == ch["n"], "tfim channel needs n-1 couplings J and n fields h")
    acq = plan["acquisition"]
    _check(acq["scheme"] in ("ancilla", "two_sided"), f"unknown scheme {acq['scheme']!r}")
    _check(acq["mode"] in ("pauli", "non_fixed", "fixed"), f"unknown pairing mode {acq['mode']!r}")
    _check(acq["scheme"] == "ancilla" or acq["mode"] == "pauli", "the two-sided scheme uses rotation settings only")
    ff = acq["fixed_fraction"]
    _check(ff == "default" or (isinstance(ff, (int, float)) and 0 <= ff <= 1), "fixed_fraction must be 'default' or lie in [0, 1]")
    for key in ("settings", "reps", "k", "total", "workers"):
        _check(isinstance(acq[key], int) and acq[key] >= 0, f"acquisition.{key} must be a non-negative integer")
    _check(acq["total"] >= 1 and acq["workers"] >= 1, "acquisition.total and acquisition.workers must be positive")
    est = plan["estimator"]
    try:
        EstimatorConfig(est["aggregation"], int(est["K"]), est["level"])
    except (ValueError, TypeError) as exc:
        raise PlanError(f"estimator: {exc}") from None
    for stage in plan["postprocessing"]:
        _check(stage in ("raw", "mle") or all(s in STEPS for s in stage.split("+")), f"unknown post-processing stage {stage!r}")
    if plan["preset"] == "overlap":
        ov = plan["overlap"]
        _check(all(r in OVERLAP_RHO for r in ov["rho"]), f"overlap.rho must be drawn from {OVERLAP_RHO}")
        _check(all(s in OVERLAP_SIGMA for s in ov["sigma"]), f"overlap.sigma must be drawn from {OVERLAP_SIGMA}")
        _check(isinstance(ov["angles"], int) and ov["angles"] >= 2, "overlap.angles must be an integer >= 2")
        _check(all(m in ("full", "purified", "raw") for m in ov["modes"]), "overlap.modes must be full, purified or raw")
        _check("rx_phi" not in ov["rho"] or ch["n"] <= len(RX_PHI), f"rx_phi inputs are defined for n <= {len(RX_PHI)}")
    if plan["preset"] == "hamlearn":
        hl = plan["hamlearn"]
        _check(isinstance(hl["n"], int) and hl["n"] >= 2, "hamlearn.n must be an integer >= 2")
        _check(all(t != 0 for t in hl["t"]), "hamlearn.t values must be nonzero")
        _check(all(isinstance(x, int) and x >= 1 for x in hl["N"]), "hamlearn.N values must be positive integers")
        _check(hl["scheme"] in ("ancilla", "two_sided"), f"unknown scheme {hl['scheme']!r}")
    if plan["preset"] == "scheme_compare":
        _check(all(s in ("ancilla", "two_sided") for s in plan["compare"]["schemes"]), "compare.schemes must be ancilla or two_sided")


# ----------------------------------------------------------------------------
# plan components


def plan_channel(plan: dict) -> ChannelSpec | None:
    ch = plan["channel"]
    n = ch["n"]
    if ch["kind"] == "none":
        return None
    if ch["kind"] == "ghz":
        spec = ghz_process(n)
    elif ch["kind"] == "identity":
        spec = identity_channel(n)
    elif ch["kind"] == "tfim":
        spec = propagator(tfim_hamiltonian(n, ch["J"], ch["h"]), ch["t"])
    else:
        spec = ChannelSpec.from_json(json.loads(Path(ch["file"]).read_text()))
        if spec.n != n:
            raise PlanError(f"channel file acts on {spec.n} qubits, plan says n={n}")
    return spec.depolarized(plan["p"]) if plan["p"] > 0 else spec


def plan_pairing(plan: dict) -> PairingPlan:
    acq = plan["acquisition"]
    ff = None if acq["fixed_fraction"] == "default" else float(acq["fixed_fraction"])
    return PairingPlan(acq["mode"], acq["k"], None, ff)


def plan_budget(plan: dict, scheme: str | None = None) -> Budget:
    acq = plan["acquisition"]
    scheme = scheme or acq["scheme"]
    n = plan["channel"]["n"]
    if acq["settings"] == 0 and acq["reps"] == 0:
        return default_budget(scheme, n, plan_pairing(plan), acq["total"])
    m = acq["settings"] or max(1, acq["total"] // max(acq["reps"], 1))
    reps = [acq["reps"]] * m if acq["reps"] else spread_reps(acq["total"], m)
    return Budget(None, m, tuple(reps))


def plan_estimator(plan: dict) -> EstimatorConfig:
    est = plan["estimator"]
    return EstimatorConfig(est["aggregation"], int(est["K"]), est["level"])


def plan_records(plan: dict, scheme: str | None = None, budget: Budget | None = None) -> list[MeasurementRecord]:
    spec = plan_channel(plan)
    if spec is None:
        raise PlanError("acquisition needs a channel (kind 'none' only supports ingested records)")
    scheme = scheme or plan["acquisition"]["scheme"]
    pairing = plan_pairing(plan) if scheme == "ancilla" else PairingPlan()
    budget = budget or plan_budget(plan, scheme)
    try:
        pairing.validate(spec.n)
    except ValueError as exc:
        raise PlanError(str(exc)) from None
    return acquire_budget(spec, scheme, pairing, budget, plan["seed"], plan["acquisition"]["workers"])


# ----------------------------------------------------------------------------
# overlap preset states


def _ket0(n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[0] = 1.0
    return v


def overlap_input_state(n: int, family: str) -> np.ndarray:
    """Pure input density matrix: ``|0>^n``, ``|+i>^n`` or the fixed-angle ``R_x`` product."""
    if family == "zero":
        v = _ket0(n)
    elif family == "plus_i":
        one = np.array([1.0, 1j]) / math.sqrt(2)
        v = one
        for _ in range(n - 1):
            v = np.kron(v, one)
    elif family == "rx_phi":
        if n > len(RX_PHI):
            raise ValueError(f"rx_phi is defined for n <= {len(RX_PHI)}")
        v = gates_unitary([Gate("RX", (j,), (RX_PHI[j],)) for j in range(n)], n) @ _ket0(n)
    else:
        raise ValueError(f"unknown input family {family!r}")
    return np.outer(v, v.conj())


def overlap_target_state(n: int, family: str, theta: float) -> np.ndarray:
    """GHZ circuit applied after ``R_y(theta)`` or ``R_x(theta)`` on every qubit of ``|0>^n``."""
    if family not in OVERLAP_SIGMA:
        raise ValueError(f"unknown target family {family!r}")
    name = "RY" if family == "ry" else "RX"
    gates = [Gate(name, (j,), (theta,)) for j in range(n)] + ghz_gates(n)
    v = gates_unitary(gates, n) @ _ket0(n)
    return np.outer(v, v.conj())


def overlap_angles(count: int = 51) -> np.ndarray:
    return np.linspace(0.0, 2 * math.pi, count)


def overlap_table(l_raw: ChoiMatrix, exact: ChoiMatrix, rho_families, sigma_families, angles, modes) -> list[tuple]:
    """Rows of :data:`OVERLAP_COLUMNS` for every family pair and angle."""
    n = l_raw.n
    rows = []
    for rf in rho_families:
        rho = overlap_input_state(n, rf)
        out_exact = apply_channel(exact, rho)
        for sf in sigma_families:
            for th in angles:
                sigma = overlap_target_state(n, sf, float(th))
                truth = float(np.real(np.trace(out_exact @ sigma)))
                for mode in modes:
                    pred = overlap_pipeline(l_raw, rho, sigma, mode)
                    rows.append((n, rf, sf, float(th), mode, pred, truth, abs(pred - truth)))
    return rows


# ----------------------------------------------------------------------------
# output staging


@contextmanager
def staged_output(out):
    """Write into a scratch directory; move files into ``out`` only on success."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".stage-", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    out.mkdir(parents=True, exist_ok=True)
    for f in sorted(tmp.iterdir()):
        shutil.move(str(f), str(out / f.name))
    shutil.rmtree(tmp, ignore_errors=True)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    Path(path).write_text(buf.getvalue())


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _stage_file(stage: str) -> str:
    return f"choi_{stage.replace('+', '_')}.json"


# ----------------------------------------------------------------------------
# pipelines


@dataclass
class StageResult:
    stage: str
    choi: ChoiMatrix
    reports: list


def run_stages(l_raw: ChoiMatrix, stages: Sequence[str], records=None) -> list[StageResult]:
    out = []
    for stage in stages:
        if stage == "raw":
            out.append(StageResult(stage, l_raw, []))
        elif stage == "mle":
            if records is None:
                raise PlanError("the mle stage needs measurement records")
            l, rep = mle_reconstruct(records, return_report=True)
            rep.log_likelihood = None
            out.append(StageResult(stage, l, [rep.to_json()]))
        else:
            l, reps = apply_steps(l_raw, stage.split("+"))
            out.append(StageResult(stage, l, [r.to_json() for r in reps]))
    return out


def metric_row(scheme: str, n: int, N: int, stage: str, est: ChoiMatrix, exact: ChoiMatrix | None) -> tuple:
    if exact is None:
        return (scheme, n, N, stage, "", "", purity(est))
    return (scheme, n, N, stage, trace_distance(est, exact), frobenius_distance(est, exact), purity(est))


def _plan_json(plan: dict) -> dict:
    return {k: v for k, v in plan.items() if not k.startswith("_")}


def run_full_process(plan: dict, out: Path) -> dict:
    spec = plan_channel(plan)
    scheme = plan["acquisition"]["scheme"]
    records = plan_records(plan)
    write_records(records, out / "records.jsonl")
    l_raw = estimate_choi(records, plan_estimator(plan))
    exact = spec.choi()
    N = sum(r.reps for r in records)
    rows, stages = [], {}
    for res in run_stages(l_raw, plan["postprocessing"], records):
        write_choi(out / _stage_file(res.stage), res.choi, scheme, stage=res.stage)
        row = metric_row(scheme, spec.n, N, res.stage, res.choi, exact)
        rows.append(row)
        stages[res.stage] = {"metrics": dict(zip(METRIC_COLUMNS[4:], row[4:])), "steps": res.reports}
    write_csv(out / "metrics.csv", METRIC_COLUMNS, rows)
    return {"records": len(records), "shadows": N, "stages": stages}


def _subsystems(n: int, sizes: Sequence[int]) -> list[tuple[int, ...]]:
    return [s for k in sizes if 1 <= k <= n for s in itertools.combinations(range(n), k)]


def run_reduced_process(plan: dict, out: Path) -> dict:
    spec = plan_channel(plan)
    scheme = plan["acquisition"]["scheme"]
    records = plan_records(plan)
    write_records(records, out / "records.jsonl")
    data = shadow_data(records)
    cfg = plan_estimator(plan)
    exact = spec.choi()
    N = data.n_snapshots
    rows = []
    summary = {}
    for sub in _subsystems(spec.n, plan["reduced"]["sizes"]):
        l_raw = estimate_choi(reduce_data(data, sub), cfg)
        ex = reduced_choi(exact, sub)
        label = "-".join(map(str, sub))
        for res in run_stages(l_raw, [s for s in plan["postprocessing"] if s != "mle"]):
            row = metric_row(scheme, len(sub), N, res.stage, res.choi, ex)
            rows.append((row[0], row[1], row[2], label) + row[3:])
            summary[f"{label}:{res.stage}"] = row[4]
    write_csv(out / "metrics.csv", REDUCED_COLUMNS, rows)
    write_choi(out / "choi_raw.json", estimate_choi(data, cfg), scheme, stage="raw")
    return {"records": len(records), "shadows": N, "trace_distance": summary}


def run_overlap(plan: dict, out: Path, l_raw: ChoiMatrix | None = None) -> dict:
    spec = plan_channel(plan)
    scheme = plan["acquisition"]["scheme"]
    info: dict = {}
    if l_raw is None:
        records = plan_records(plan)
        write_records(records, out / "records.jsonl")
        l_raw = estimate_choi(records, plan_estimator(plan))
        info["shadows"] = sum(r.reps for r in records)
    write_choi(out / "choi_raw.json", l_raw, scheme, stage="raw")
    ov = plan["overlap"]
    rows = overlap_table(l_raw, spec.choi(), ov["rho"], ov["sigma"], overlap_angles(ov["angles"]), ov["modes"])
    write_csv(out / "metrics.csv", OVERLAP_COLUMNS, rows)
    for mode in ov["modes"]:
        info[f"max_abs_err_{mode}"] = max(r[7] for r in rows if r[4] == mode)
    return info


def run_hamlearn_preset(plan: dict, out: Path) -> dict:
    hl = plan["hamlearn"]
    n, seed = hl["n"], plan["seed"]
    rows = []
    means: dict = {}
    seeds: dict = {}
    grid = list(itertools.product(enumerate(hl["t"]), enumerate(hl["N"])))
    for r in range(hl["realizations"]):
        ht = tfim_realization(n, seed, r)
        for (ti, t), (ni, N) in grid:
            s = realization_seed(seed, r, ti * len(hl["N"]) + ni)
            res = run_hamlearn(HamLearnTask(ht, float(t), int(N), hl["scheme"]), s, plan["acquisition"]["workers"])
            rows.extend(result_rows(res, n, float(t), int(N), s))
            means.setdefault(f"t={t},N={N}", []).append(res.mean_error)
            seeds.setdefault(str(r), []).append(s)
    write_csv(out / "metrics.csv", HAMLEARN_COLUMNS, rows)
    # the seed column identifies the realization through this map
    return {"mean_abs_err": {k: float(np.mean(v)) for k, v in means.items()}, "realization_seeds": seeds}


def bounds_rows(b: dict) -> list[tuple]:
    rows = []
    for n, k, eps, delta in itertools.product(b["n"], b["k"], b["eps"], b["delta"]):
        if k > n:
            continue
        for scheme in BOUND_SCHEMES:
            rows.append(("reduced", scheme, n, k, "", "", eps, delta, bound_reduced(n, k, eps, delta, scheme)))
        for t in b["t"]:
            rows.append(("hamlearn", "pauli6", n, k, "", t, eps, delta, bound_hamlearn(n, k, t, eps, delta)))
    for M, eps, delta in itertools.product(b["M"], b["eps"], b["delta"]):
        for scheme in OVERLAP_SCHEMES:
            for k in b["k"]:
                if scheme == "global_clifford" and k != b["k"][0]:
                    continue
                kk = k if scheme == "local_clifford" else ""
                rows.append(("overlap", scheme, "", kk, M, "", eps, delta, bound_overlap(M, eps, delta, scheme, k=k)))
    return rows


def run_bounds(plan: dict, out: Path) -> dict:
    try:
        rows = bounds_rows(plan["bounds"])
    except ValueError as exc:
        raise PlanError(f"bounds: {exc}") from None
    write_csv(out / "metrics.csv", BOUND_COLUMNS, rows)
    return {"rows": len(rows)}


def run_scheme_compare(plan: dict, out: Path) -> dict:
    spec = plan_channel(plan)
    N = int(plan["compare"]["N"])
    exact = spec.choi()
    rows, ests = [], {}
    for scheme in plan["compare"]["schemes"]:
        sub = copy.deepcopy(plan)
        sub["acquisition"].update(scheme=scheme, mode="pauli")
        records = plan_records(sub, scheme, Budget(None, N, (1,) * N))
        write_records(records, out / f"records_{scheme}.jsonl")
        l_raw = estimate_choi(records, plan_estimator(plan))
        ests[scheme] = l_raw
        for res in run_stages(l_raw, [s for s in plan["postprocessing"] if s != "mle"]):
            rows.append(metric_row(scheme, spec.n, N, res.stage, res.choi, exact))
    write_csv(out / "metrics.csv", METRIC_COLUMNS, rows)
    info: dict = {"shadows_per_scheme": N}
    names = list(ests)
    if len(names) == 2:
        info["trace_distance_between_schemes"] = trace_distance(ests[names[0]], ests[names[1]])
    return info


RUNNERS = {
    "full_process": run_full_process,
    "reduced_process": run_reduced_process,
    "overlap": run_overlap,
    "hamlearn": run_hamlearn_preset,
    "bounds": run_bounds,
    "scheme_compare": run_scheme_compare,
}


def run_plan(plan: dict, out) -> dict:
    """Run the plan's preset into ``out``; returns the report written to ``report.json``."""
    validate_plan(plan)
    with staged_output(out) as tmp:
        summary = RUNNERS[plan["preset"]](plan, tmp)
        report = {"plan": _plan_json(plan), "summary": summary, "outputs": sorted(p.name for p in tmp.iterdir()) + ["report.json"]}
        write_json(tmp / "report.json", report)
    return report


# ----------------------------------------------------------------------------
# record validation


def validate_records(path) -> dict:
    """Per-line schema check plus setting/outcome consistency and summary counts."""
    errors = []
    counts = {"records": 0, "outcomes": 0, "schemes": {}, "n": set(), "sources": {}}
    try:
        fh = open_records(path, "r")
    except OSError as exc:
        return {"path": str(path), "errors": [{"line": 0, "message": str(exc)}], "ok": False}
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = MeasurementRecord.from_json(json.loads(line))
            except json.JSONDecodeError as exc:
                errors.append({"line": lineno, "message": f"invalid JSON ({exc.msg})"})
                continue
            except RecordFormatError as exc:
                errors.append({"line": lineno, "message": str(exc)})
                continue
            counts["records"] += 1
            counts["outcomes"] += rec.reps
            counts["schemes"][rec.scheme] = counts["schemes"].get(rec.scheme, 0) + 1
            counts["sources"][rec.source] = counts["sources"].get(rec.source, 0) + 1
            counts["n"].add(rec.n)
    if len(counts["n"]) > 1 or len(counts["schemes"]) > 1:
        errors.append({"line": 0, "message": "records mix qubit counts or schemes"})
    counts["n"] = sorted(counts["n"])
    return {"path": str(path), **counts, "errors": errors, "ok": not errors}
