"""Command line entry point: ``shadowqpt <subcommand> [options]``.

Exit status is 0 on success, 2 for an invalid plan or arguments and 1 for
records that fail validation or other runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .acquire import RecordFormatError, read_records, write_records
from .experiments import (
    METRIC_COLUMNS,
    PRESETS,
    PlanError,
    build_plan,
    metric_row,
    plan_channel,
    plan_estimator,
    plan_records,
    run_overlap,
    run_plan,
    run_stages,
    staged_output,
    validate_records,
    write_csv,
    write_json,
    _plan_json,
    _stage_file,
)
from .matrixio import read_choi, write_choi
from .shadows import estimate_choi

EXIT_OK, EXIT_FAIL, EXIT_PLAN = 0, 1, 2


def _add_plan_args(p: argparse.ArgumentParser, default_preset: str | None = None) -> None:
    p.add_argument("--plan", type=Path, help="TOML plan file")
    p.add_argument("--preset", choices=PRESETS, default=default_preset, help="preset providing the defaults")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="override a plan field, e.g. channel.n=3")


def _plan(args, preset: str | None = None) -> dict:
    return build_plan(preset or args.preset, args.plan, args.override, args.seed)


def cmd_run(args) -> int:
    report = run_plan(_plan(args), args.out)
    print(json.dumps(report["summary"], indent=2, sort_keys=True))
    return EXIT_OK


def cmd_preset(name: str):
    def run(args) -> int:
        report = run_plan(_plan(args, name), args.out)
        print(json.dumps(report["summary"], indent=2, sort_keys=True))
        return EXIT_OK

    return run


def cmd_acquire(args) -> int:
    plan = _plan(args)
    with staged_output(args.out) as tmp:
        records = plan_records(plan)
        write_records(records, tmp / "records.jsonl")
        write_json(tmp / "report.json", {"plan": _plan_json(plan), "summary": {"records": len(records), "shadows": sum(r.reps for r in records)}})
    print(f"wrote {len(records)} records to {args.out / 'records.jsonl'}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    plan = _plan(args)
    path = args.records or args.out / "records.jsonl"
    records = read_records(path)
    l_raw = estimate_choi(records, plan_estimator(plan))
    with staged_output(args.out) as tmp:
        write_choi(tmp / "choi_raw.json", l_raw, records[0].scheme, stage="raw")
    print(f"wrote {args.out / 'choi_raw.json'} from {len(records)} records")
    return EXIT_OK


def cmd_postprocess(args) -> int:
    plan = _plan(args)
    path = args.choi or args.out / "choi_raw.json"
    l_raw, header = read_choi(path)
    stages = args.stages.split(",") if args.stages else plan["postprocessing"]
    records = read_records(args.records) if args.records else None
    spec = plan_channel(plan)
    exact = spec.choi() if spec is not None and spec.n == l_raw.n else None
    scheme = header.get("scheme") or ""
    rows = []
    with staged_output(args.out) as tmp:
        for res in run_stages(l_raw, stages, records):
            write_choi(tmp / _stage_file(res.stage), res.choi, scheme or None, stage=res.stage)
            n_shadows = sum(r.reps for r in records) if records else ""
            rows.append(metric_row(scheme, l_raw.n, n_shadows, res.stage, res.choi, exact))
        write_csv(tmp / "metrics.csv", METRIC_COLUMNS, rows)
    for r in rows:
        print(",".join(str(x) for x in r))
    return EXIT_OK


def cmd_overlap(args) -> int:
    plan = _plan(args, "overlap")
    l_raw = read_choi(args.choi)[0] if args.choi else None
    with staged_output(args.out) as tmp:
        info = run_overlap(plan, tmp, l_raw)
        write_json(tmp / "report.json", {"plan": _plan_json(plan), "summary": info})
    print(json.dumps(info, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    rep = validate_records(args.path)
    print(json.dumps(rep, indent=2, sort_keys=True))
    return EXIT_OK if rep["ok"] else EXIT_FAIL


def cmd_report(args) -> int:
    d = Path(args.dir)
    rp = d / "report.json"
    if not rp.exists():
        print(f"no report.json in {d}", file=sys.stderr)
        return EXIT_FAIL
    report = json.loads(rp.read_text())
    print(f"preset: {report['plan']['preset']}  seed: {report['plan']['seed']}")
    print(json.dumps(report["summary"], indent=2, sort_keys=True))
    mp = d / "metrics.csv"
    if mp.exists():
        with open(mp, newline="") as f:
            rows = list(csv.reader(f))
        print(f"metrics.csv: {len(rows) - 1} rows, columns {', '.join(rows[0])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shadowqpt", description="Classical-shadow process tomography experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a preset or plan file end to end")
    _add_plan_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("acquire", help="simulate measurement records")
    _add_plan_args(p)
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("reconstruct", help="raw Choi estimate from records")
    _add_plan_args(p)
    p.add_argument("--records", type=Path, help="records file (default OUT/records.jsonl)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("postprocess", help="apply post-processing stages to a Choi dump")
    _add_plan_args(p)
    p.add_argument("--choi", type=Path, help="raw Choi dump (default OUT/choi_raw.json)")
    p.add_argument("--stages", help="comma separated stages, e.g. raw,cp,cp+tp,purify,mle")
    p.add_argument("--records", type=Path, help="records file, needed for the mle stage")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("overlap", help="overlap predictions over the preset state families")
    _add_plan_args(p, "overlap")
    p.add_argument("--choi", type=Path, help="use this raw Choi dump instead of simulating")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("hamlearn", help="Hamiltonian learning preset")
    _add_plan_args(p, "hamlearn")
    p.set_defaults(func=cmd_preset("hamlearn"))

    p = sub.add_parser("bounds", help="sample-complexity table")
    _add_plan_args(p, "bounds")
    p.set_defaults(func=cmd_preset("bounds"))

    p = sub.add_parser("validate", help="check a records file")
    p.add_argument("path", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="summarize an output directory")
    p.add_argument("dir", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlanError as exc:
        print(f"invalid plan: {exc}", file=sys.stderr)
        return EXIT_PLAN
    except RecordFormatError as exc:
        print(f"invalid records: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
