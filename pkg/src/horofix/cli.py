"""Command line front end: ``horofix run``, ``horofix replicate``, ``horofix list``.

Each task also has its own subcommand (``horofix translation FILE``) that
runs a scenario file with its ``task`` field replaced.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for
malformed input (bad JSON, schema violations, unknown ids).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .catalog import CATALOG, replicate
from .exceptions import ScenarioError
from .scenario import SCHEMA, TASKS, run_scenario

REPORT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if hasattr(obj, "to_dict"):
        return _clean(obj.to_dict())
    return obj


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else _clean(v) for v in r])
    return buf.getvalue()


def write_report(run, out: Path, name: str, task: str, config: dict) -> Path:
    """Write ``<name>.json`` plus one ``<name>.<trace>.csv`` per trace."""
    out.mkdir(parents=True, exist_ok=True)
    trace_files = {}
    for tname, (header, rows) in sorted(run.traces.items()):
        fname = f"{name}.{tname}.csv"
        _atomic_write(out / fname, _csv_text(header, rows))
        trace_files[tname] = fname
    report = {
        "report_version": REPORT_VERSION,
        "name": name,
        "task": task,
        "config": config,
        "passed": run.passed,
        "checks": run.checks,
        "metrics": run.metrics,
        "details": run.details,
        "traces": trace_files,
    }
    path = out / f"{name}.json"
    _atomic_write(path, json.dumps(_clean(report), sort_keys=True, indent=2) + "\n")
    return path


def _job_file(path: str, out: str, seed, n, tol, task=None):
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
        if task is not None and isinstance(doc, dict):
            doc["task"] = task
        run = run_scenario(doc, seed, n, tol)
    except (OSError, json.JSONDecodeError, ScenarioError) as exc:
        return EXIT_INPUT, f"ERROR {p.name}: {exc}"
    name = doc.get("name", p.stem)
    task = doc["task"] if doc["task"] != "replicate" else f"replicate:{doc['id']}"
    config = {"seed": run.seed, "n": run.n, "tol": run.tol}
    dest = write_report(run, Path(out), name, task, config)
    return _summarize(run, name, dest)


def _job_replicate(id: str, out: str, seed, n, tol):
    run = replicate(id, 0 if seed is None else seed, n, tol)
    config = {"seed": run.seed, "n": run.n, "tol": run.tol}
    dest = write_report(run, Path(out), id, f"replicate:{id}", config)
    return _summarize(run, id, dest)


def _summarize(run, name, dest):
    if run.passed:
        return EXIT_OK, f"PASS {name} -> {dest}"
    failed = ", ".join(c["name"] for c in run.checks if not c["passed"])
    return EXIT_FAIL, f"FAIL {name} ({failed}) -> {dest}"


def _execute(jobs, parallel: bool) -> int:
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_call, jobs))
    else:
        results = [_call(j) for j in jobs]
    for _, line in results:
        print(line)
    codes = {c for c, _ in results}
    return EXIT_INPUT if EXIT_INPUT in codes else (EXIT_FAIL if EXIT_FAIL in codes else EXIT_OK)


def _call(job):
    fn, args = job
    return fn(*args)


def _common(p):
    p.add_argument("--out", default="reports", help="output directory (default: reports)")
    p.add_argument("--tol", type=float, help="override the scenario tolerance")
    p.add_argument("--n", type=int, help="override the scenario budget")
    p.add_argument("--seed", type=int, help="override the scenario seed (u64)")
    p.add_argument("--parallel", action="store_true", help="run independent scenarios concurrently")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="horofix", description="Metric functionals and fixed points on sequence spaces.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run scenario files")
    r.add_argument("files", nargs="+")
    _common(r)
    rp = sub.add_parser("replicate", help="run built-in catalog scenarios")
    rp.add_argument("ids", nargs="+", help="catalog ids or 'all'")
    _common(rp)
    for task in TASKS[:-1]:
        t = sub.add_parser(task, help=f"run scenario files as task '{task}'")
        t.add_argument("files", nargs="+")
        _common(t)
    sub.add_parser("list", help="list catalog ids")
    sub.add_parser("schema", help="print the scenario JSON schema")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.command == "list":
        print("\n".join(CATALOG))
        return EXIT_OK
    if args.command == "schema":
        print(json.dumps(SCHEMA, indent=2, sort_keys=True))
        return EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("ERROR --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    extra = (args.out, args.seed, args.n, args.tol)
    if args.command == "run":
        jobs = [(_job_file, (f,) + extra) for f in args.files]
    elif args.command in TASKS[:-1]:
        jobs = [(_job_file, (f,) + extra + (args.command,)) for f in args.files]
    else:
        ids = list(CATALOG) if args.ids == ["all"] else args.ids
        unknown = [i for i in ids if i not in CATALOG]
        if unknown:
            print(f"ERROR unknown catalog id(s): {', '.join(unknown)}", file=sys.stderr)
            return EXIT_INPUT
        jobs = [(_job_replicate, (i,) + extra) for i in ids]
    return _execute(jobs, args.parallel)


if __name__ == "__main__":
    sys.exit(main())
