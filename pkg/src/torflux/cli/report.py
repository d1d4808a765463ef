"""Report assembly and canonical serialization.

JSON schema (top-level keys, in this order):

``tasks``       list of per-task results, ordered by task index
``suite``       invariant-suite result or null
``provenance``  tolerances, resolutions and convention flags used
``version``     package version string

Floats are written as decimal strings with 15 significant digits
(``"3.00000000000000e-01"``); integers, booleans and strings are kept as is.
Separators are compact, so emitting a parsed report again is byte-identical.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .. import __version__


def empty_report(provenance: dict | None = None) -> dict:
    return {"tasks": [], "suite": None, "provenance": provenance or {}, "version": __version__}


def number(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        x = 0.0  # drop the sign of negative zero
    return format(x, ".14e")


def canonical(obj):
    """Recursively convert to JSON-ready values with floats as strings."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return number(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "coeffs"):
        return canonical(obj.coeffs)
    raise TypeError(f"cannot put {type(obj).__name__} in a report")


def agreement(name: str, a, b, tol: float) -> dict:
    """Deviation record: max-abs difference (mod nothing) judged against ``tol``."""
    dev = float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), initial=0.0))
    return {"between": name, "deviation": dev, "tolerance": float(tol), "pass": bool(dev <= tol)}


def circle_agreement(name: str, a: float, b: float, tol: float) -> dict:
    d = abs(((a - b + 0.5) % 1.0) - 0.5)
    return {"between": name, "deviation": float(d), "tolerance": float(tol), "pass": bool(d <= tol)}


def to_json(report: dict) -> bytes:
    return json.dumps(canonical(report), separators=(",", ":"), ensure_ascii=True).encode("ascii")


def _walk_deviations(obj, path=""):
    if isinstance(obj, dict):
        if "deviation" in obj and "tolerance" in obj:
            yield path, obj
        for k, v in obj.items():
            if k in ("deviation", "tolerance"):
                continue
            yield from _walk_deviations(v, f"{path}.{k}" if path else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _walk_deviations(v, f"{path}[{i}]")


def deviations(report: dict) -> list:
    """All ``(path, record)`` agreement records in document order."""
    return list(_walk_deviations(canonical(report)))


def _scalar(v):
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    return str(v)


def to_text(report: dict) -> bytes:
    rep = canonical(report)
    lines = [f"torflux report (version {rep['version']})"]
    for task in rep["tasks"]:
        head = f"task {task.get('index')}: {task.get('type')}"
        if task.get("isotopy"):
            head += f" [{task['isotopy'].get('kind')}]"
        lines.append(head)
        if "error" in task:
            lines.append(f"  error: {task['error']}")
        for name, val in task.get("values", {}).items():
            lines.append(f"  {name}: {_scalar(val)}")
    suite = rep.get("suite")
    if suite is not None:
        lines.append(f"suite: {'PASS' if suite.get('pass') else 'FAIL'} "
                     f"({suite.get('passed')}/{suite.get('total')} checks)")
        for chk in suite.get("checks", []):
            if "error" in chk:
                lines.append(f"  {chk['name']}: error {chk['error']}")
    lines.append("deviations:")
    for path, rec in _walk_deviations(rep):
        mark = "ok  " if rec.get("pass") else "FAIL"
        lines.append(f"  {mark} {path} {rec.get('between', '')}: deviation {rec['deviation']} "
                     f"(tolerance {rec['tolerance']})")
    lines.append("provenance:")
    for k, v in rep.get("provenance", {}).items():
        lines.append(f"  {k}: {_scalar(v) if not isinstance(v, dict) else json.dumps(v, sort_keys=False)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def emit_report(report: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        return to_json(report)
    if fmt == "text":
        return to_text(report)
    raise ValueError(f"unknown format {fmt!r}")
