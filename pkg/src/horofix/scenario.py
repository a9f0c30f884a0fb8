"""JSON scenarios: schema, validation and task dispatch."""
from __future__ import annotations

import math

import jsonschema
import numpy as np

from .catalog import CATALOG, OPS, Run, replicate
from .engine import common_fixed_point, nested_average, translation_number, ump_fixed_point
from .exceptions import NotFound, ScenarioError, Unresolved, UnboundedOrbit
from .functionals import functional_from_dict
from .invariance import subinvariance
from .limits import empirical_limit, match_hypothesis, orbit_tail, zfp_scan
from .maps import family_from_dict
from .probes import ProbeSet, default_probes
from .seqspace import SeqVector, space_from_dict

__all__ = ["SCHEMA", "TASKS", "validate", "run_scenario"]

TASKS = ("evaluate", "orbit-limit", "subinvariance", "translation", "average", "fixed-point", "ump", "replicate")

_seq = {
    "oneOf": [
        {"type": "array", "items": {"type": "number"}},
        {
            "type": "object",
            "properties": {"coeffs": {"type": "array", "items": {"type": "number"}}, "tail": {"type": ["number", "null"]}},
            "additionalProperties": False,
        },
        {"type": "object", "required": ["left", "right"]},
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["task", "seed"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "task": {"enum": list(TASKS)},
        "id": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "space": {"type": "object", "required": ["kind"]},
        "maps": {
            "type": "object",
            "required": ["members"],
            "properties": {
                "members": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "object", "required": ["label", "map"]},
                },
                "waive_commutation": {"type": "boolean"},
            },
        },
        "functionals": {"type": "array", "items": {"type": "object", "required": ["variant"]}},
        "probes": {
            "type": "object",
            "properties": {
                "points": {"type": "array", "items": _seq},
                "default": {
                    "type": "object",
                    "properties": {
                        "dim": {"type": "integer", "minimum": 1},
                        "count": {"type": "integer", "minimum": 0},
                        "integer": {"type": "boolean"},
                        "orbit_len": {"type": "integer", "minimum": 0},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "start": _seq,
        "tolerances": {
            "type": "object",
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
        "budgets": {
            "type": "object",
            "properties": {"n": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "assertions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["metric", "op", "value"],
                "properties": {
                    "metric": {"type": "string"},
                    "op": {"enum": list(OPS)},
                    "value": {"type": ["number", "string", "boolean"]},
                },
                "additionalProperties": False,
            },
        },
    },
    "allOf": [{"if": {"properties": {"task": {"const": "replicate"}}}, "then": {"required": ["id"]}}],
}

_NEEDS = {
    "evaluate": ("space", "functionals"),
    "orbit-limit": ("space", "maps"),
    "subinvariance": ("maps", "functionals"),
    "translation": ("space", "maps"),
    "average": ("space", "maps"),
    "fixed-point": ("space", "maps"),
    "ump": ("space", "maps"),
    "replicate": (),
}


def validate(doc) -> None:
    """Raise :class:`ScenarioError` unless ``doc`` is a well-formed scenario."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{path}: {exc.message}") from None
    missing = [k for k in _NEEDS[doc["task"]] if k not in doc]
    if missing:
        raise ScenarioError(f"task {doc['task']!r} needs {', '.join(missing)}")
    if doc["task"] == "replicate" and doc["id"] not in CATALOG:
        raise ScenarioError(f"unknown catalog id {doc['id']!r}")


def _parse(doc, overrides):
    """Build domain objects; malformed descriptors become :class:`ScenarioError`."""
    try:
        space = space_from_dict(doc["space"]) if "space" in doc else None
        family = family_from_dict(doc["maps"]) if "maps" in doc else None
        funcs = [functional_from_dict(f) for f in doc.get("functionals", [])]
        start = SeqVector.from_dict(doc["start"]) if "start" in doc else SeqVector()
        spec = doc.get("probes", {})
        if "points" in spec:
            probes = ProbeSet.of([SeqVector.from_dict(p) for p in spec["points"]])
        else:
            T = family.maps[0] if family is not None else None
            probes = default_probes(overrides["seed"], T, **spec.get("default", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from None
    return space, family, funcs, start, probes


def _task_evaluate(run, space, family, funcs, start, probes):
    rows = []
    for i, h in enumerate(funcs):
        vals = [h(x) for x in probes]
        run.metrics[f"h{i}.max_abs"] = float(np.max(np.abs(vals)))
        rows += [(j, i, v) for j, v in enumerate(vals)]
    run.details["probes"] = [p.to_dict() for p in probes]
    run.trace("values", ["probe_id", "functional", "value"], rows)


def _task_orbit_limit(run, space, family, funcs, start, probes):
    n = run.budget(1000)
    T = family.maps[0]
    k = min(20, n + 1)
    pts = orbit_tail(T, start, n, k)
    e = empirical_limit(pts, probes, space, tol=run.tolerance(1e-6), indices=range(n - k + 1, n + 1), source=family.labels[0])
    run.details["limit"] = e.to_dict()
    run.metrics["accepted"] = e.accepted
    run.metrics["max_residual"] = float(e.residuals.max())
    run.metrics["max_abs_value"] = float(np.max(np.abs(e.values)))
    run.metrics["zero_on_probes"] = zfp_scan(e).zero_on_probes
    for i, h in enumerate(funcs):
        m = match_hypothesis(e, h, run.tolerance(1e-6))
        run.metrics[f"h{i}.max_discrepancy"] = m.max_discrepancy
        run.metrics[f"h{i}.match"] = m.passed
    run.trace("orbit_limit", ["probe_id", "n", "h_n"], e.csv_rows())


def _task_subinvariance(run, space, family, funcs, start, probes):
    rows = []
    for i, h in enumerate(funcs):
        for label, T in family.members:
            rep = subinvariance(h, T, probes, run.tolerance(1e-12))
            key = f"{label}.h{i}"
            run.metrics[f"{key}.verdict"] = rep.verdict.value
            run.metrics[f"{key}.max_defect"] = rep.max_defect
            run.metrics[f"{key}.gap"] = rep.gap
            run.details[key] = {"witness": rep.witness.to_dict(), "min_defect": rep.min_defect}
            rows += [(label, i, j, d) for j, d in enumerate(rep.defects)]
    run.trace("defects", ["map", "functional", "probe_id", "defect"], rows)


def _task_translation(run, space, family, funcs, start, probes):
    n = run.budget(1000)
    rows = []
    for label, T in family.members:
        est = translation_number(T, start, space, max(n, 8), seed=run.seed)
        run.metrics[f"{label}.estimate"] = est.estimate
        run.metrics[f"{label}.subadditivity_violation"] = est.subadditivity_violation
        rows += [(label, k + 1, est.displacement[k], est.magnitude[k], est.envelope[k]) for k in range(len(est.envelope))]
    run.trace("translation", ["map", "n", "displacement", "magnitude", "envelope"], rows)


def _task_average(run, space, family, funcs, start, probes):
    n = run.budget(256)
    sched = sorted({2**k for k in range(int(math.log2(n)) + 1)} | {n})
    tr = nested_average(family, start, sched, space)
    run.metrics["bound_violation"] = tr.bound_violation()
    run.metrics["final_max_defect"] = tr.max_defects()[-1]
    run.details["average"] = tr.iterates[-1].to_dict()
    rows = list(tr.rows())
    run.trace("averaging", list(rows[0]), (r.values() for r in rows))


def _task_fixed_point(run, space, family, funcs, start, probes):
    tol = run.tolerance(1e-10)
    n_max = run.budget(2**17)
    try:
        z, info = common_fixed_point(family, start, space, tol, n_max, full_output=True)
        run.metrics["resolved"] = True
        run.details["fixed_point"] = z.to_dict()
        residuals, tr = info["residuals"], info["trace"]
        run.metrics["sweeps"] = info["sweeps"]
    except Unresolved as exc:
        run.metrics["resolved"] = False
        residuals, tr = exc.residuals, exc.trace
        run.details["error"] = str(exc)
    except UnboundedOrbit as exc:
        run.metrics["resolved"] = False
        residuals, tr = {}, None
        run.details["error"] = str(exc)
    run.metrics["max_residual"] = max(residuals.values()) if residuals else math.inf
    if tr is not None and tr.schedule:
        rows = list(tr.rows())
        run.trace("averaging", list(rows[0]), (r.values() for r in rows))


def _task_ump(run, space, family, funcs, start, probes):
    try:
        a = ump_fixed_point(family.maps[0], start, space, n=run.budget(200), tol=run.tolerance(1e-6))
        run.metrics["found"] = True
        run.details["fixed_point"] = a.to_dict()
    except NotFound as exc:
        run.metrics["found"] = False
        run.metrics["residual"] = exc.diagnostic.get("residual", math.inf)
        run.details["diagnostic"] = exc.diagnostic


_DISPATCH = {
    "evaluate": _task_evaluate,
    "orbit-limit": _task_orbit_limit,
    "subinvariance": _task_subinvariance,
    "translation": _task_translation,
    "average": _task_average,
    "fixed-point": _task_fixed_point,
    "ump": _task_ump,
}


def run_scenario(doc, seed=None, n=None, tol=None) -> Run:
    """Validate and execute ``doc``; command-line overrides win over the file."""
    validate(doc)
    seed = doc["seed"] if seed is None else seed
    n = doc.get("budgets", {}).get("n") if n is None else n
    tol = doc.get("tolerances", {}).get("tol") if tol is None else tol
    if doc["task"] == "replicate":
        run = replicate(doc["id"], seed, n, tol)
    else:
        run = Run(doc.get("name", doc["task"]), seed, n, tol)
        parts = _parse(doc, {"seed": seed})
        try:
            _DISPATCH[doc["task"]](run, *parts)
        except (ValueError, TypeError, ArithmeticError, KeyError) as exc:
            raise ScenarioError(f"scenario cannot be executed: {exc}") from exc
    for a in doc.get("assertions", []):
        if a["metric"] not in run.metrics:
            run.checks.append({"name": a["metric"], "value": None, "op": a["op"], "threshold": a["value"], "passed": False})
            continue
        run.check(a["metric"], run.metrics[a["metric"]], a["op"], a["value"])
    return run
