"""Scenario files: a small line-oriented format with ``[section]`` headers.

Example::

    [space]
    dim = 2
    grid = 256

    [structure]
    symplectic = [[0, 1], [-1, 0]]

    [task.1]
    type = "flux"
    isotopy = "translation"
    c = [0.3, -0.2]

Values are Python literals (numbers, quoted strings, lists); ``true`` and
``false`` are accepted. Comments start with ``#``. Every error carries the
line and column it was found at.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

import numpy as np

from ..errors import TorfluxError
from ..trigcalc import DEFAULT_BANDWIDTH_CAP, OneForm, PoissonTensor, TrigPoly, parse_expression
from ..trigcalc.grammar import ExpressionError

SECTION_ORDER = ("space", "structure", "numerics")
TASK_TYPES = ("flux", "pair", "holonomy", "verify")
ISOTOPY_KINDS = ("translation", "shear", "hamiltonian", "closed_form", "identity")

SPACE_DEFAULTS = {"bandwidth_cap": DEFAULT_BANDWIDTH_CAP, "grid": 256}
NUMERICS_DEFAULTS = {"steps": 200, "quadrature": "simpson", "tolerance": 1e-6, "holonomy_nodes": 64}

_HEADER = re.compile(r"^\[\s*([A-Za-z_][\w]*(?:\.\d+)?)\s*\]\s*$")
_KEYVAL = re.compile(r"^([A-Za-z_]\w*)\s*=\s*(.*)$")


class ScenarioError(TorfluxError, ValueError):
    """Parse or validation failure, annotated with a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col
        self.message = message


@dataclass
class Scenario:
    space: dict = field(default_factory=dict)
    structure: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)
    # (section, key) -> (line, col) for error reporting after parsing
    positions: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return int(self.space["dim"])

    def setting(self, section, key):
        defaults = SPACE_DEFAULTS if section == "space" else NUMERICS_DEFAULTS
        return getattr(self, section).get(key, defaults.get(key))

    def is_symplectic(self) -> bool:
        return "symplectic" in self.structure

    def omega(self) -> np.ndarray:
        return np.array(self.structure["symplectic"], dtype=np.float64)

    def poisson(self) -> PoissonTensor:
        if self.is_symplectic():
            W = self.omega()
            P = np.linalg.inv(W)
            return PoissonTensor.constant(0.5 * (P - P.T))
        rows = self.structure.get("poisson")
        if rows is None:
            return PoissonTensor.zero(self.dim)
        n = self.dim
        return PoissonTensor([[poly_value(v, n) for v in row] for row in rows])


def poly_value(v, dim) -> TrigPoly:
    if isinstance(v, str):
        return parse_expression(v, dim)
    return TrigPoly.constant(dim, float(v))


def form_value(v, dim) -> OneForm:
    return OneForm([poly_value(c, dim) for c in v])


def _literal(text, lineno, col):
    src = re.sub(r"\btrue\b", "True", re.sub(r"\bfalse\b", "False", text))
    try:
        return ast.literal_eval(src)
    except (ValueError, SyntaxError) as exc:
        off = getattr(exc, "offset", None) or 1
        raise ScenarioError(f"cannot read value {text!r}", lineno, col + off - 1) from None


def _strip_comment(line):
    out, quote = [], None
    for ch in line:
        if quote:
            out.append(ch)
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            out.append(ch)
        elif ch == "#":
            break
        else:
            out.append(ch)
    return "".join(out).rstrip()


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    section = None
    tasks = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        m = _HEADER.match(body)
        if m:
            name = m.group(1)
            if name.startswith("task."):
                idx = int(name.split(".", 1)[1])
                if idx in tasks:
                    raise ScenarioError(f"duplicate section [{name}]", lineno, indent + 1)
                tasks[idx] = {"index": idx}
                section = ("task", idx)
            elif name in SECTION_ORDER:
                if getattr(sc, name):
                    raise ScenarioError(f"duplicate section [{name}]", lineno, indent + 1)
                section = (name, None)
            else:
                raise ScenarioError(f"unknown section [{name}]", lineno, indent + 2)
            continue
        if body.startswith("["):
            raise ScenarioError("malformed section header", lineno, indent + 1)
        m = _KEYVAL.match(body)
        if not m:
            raise ScenarioError("expected 'key = value'", lineno, indent + 1)
        if section is None:
            raise ScenarioError("key outside of any section", lineno, indent + 1)
        key = m.group(1)
        vcol = indent + m.start(2) + 1
        value = _literal(m.group(2), lineno, vcol)
        target = tasks[section[1]] if section[0] == "task" else getattr(sc, section[0])
        if key in target and key != "index":
            raise ScenarioError(f"duplicate key {key!r}", lineno, indent + 1)
        if key == "index":
            raise ScenarioError("'index' is reserved", lineno, indent + 1)
        target[key] = value
        sc.positions[(section[0] if section[0] != "task" else f"task.{section[1]}", key)] = (lineno, vcol)
    sc.tasks = [tasks[i] for i in sorted(tasks)]
    validate(sc)
    return sc


def _where(sc, section, key):
    return sc.positions.get((section, key), (0, 0))


def _fail(sc, section, key, message):
    line, col = _where(sc, section, key)
    raise ScenarioError(message, line, col)


def _matrix(sc, section, key, value, dim):
    if (not isinstance(value, (list, tuple)) or len(value) != dim
            or any(not isinstance(r, (list, tuple)) or len(r) != dim for r in value)):
        _fail(sc, section, key, f"{key} must be a {dim}x{dim} list of rows")


def validate(sc: Scenario) -> None:
    if "dim" not in sc.space:
        raise ScenarioError("[space] needs 'dim'")
    dim = sc.space["dim"]
    if not isinstance(dim, int) or dim < 1:
        _fail(sc, "space", "dim", "dim must be a positive integer")
    for key in ("bandwidth_cap", "grid"):
        if key in sc.space and (not isinstance(sc.space[key], int) or sc.space[key] < 1):
            _fail(sc, "space", key, f"{key} must be a positive integer")
    for key in ("steps", "holonomy_nodes"):
        if key in sc.numerics and (not isinstance(sc.numerics[key], int) or sc.numerics[key] < 2):
            _fail(sc, "numerics", key, f"{key} must be an integer >= 2")
    if "tolerance" in sc.numerics and not isinstance(sc.numerics["tolerance"], (int, float)):
        _fail(sc, "numerics", "tolerance", "tolerance must be a number")
    if sc.numerics.get("quadrature", "simpson") != "simpson":
        _fail(sc, "numerics", "quadrature", "only 'simpson' quadrature is supported")
    st = sc.structure
    if "symplectic" in st and "poisson" in st:
        _fail(sc, "structure", "poisson", "give either 'symplectic' or 'poisson', not both")
    if "symplectic" in st:
        if dim % 2:
            _fail(sc, "structure", "symplectic", "even dimension required")
        _matrix(sc, "structure", "symplectic", st["symplectic"], dim)
        try:
            W = np.array(st["symplectic"], dtype=np.float64)
        except (TypeError, ValueError):
            _fail(sc, "structure", "symplectic", "symplectic matrix entries must be numbers")
        if np.max(np.abs(W + W.T)) > 0:
            _fail(sc, "structure", "symplectic", "symplectic matrix must be antisymmetric")
        if abs(np.linalg.det(W)) < 1e-12:
            _fail(sc, "structure", "symplectic", "symplectic matrix must be invertible")
    if "poisson" in st:
        _matrix(sc, "structure", "poisson", st["poisson"], dim)
        try:
            sc.poisson()
        except (ExpressionError, ValueError) as exc:
            _fail(sc, "structure", "poisson", str(exc))
    for task in sc.tasks:
        _validate_task(sc, task)


def _validate_task(sc, task):
    sec = f"task.{task['index']}"
    dim = sc.dim
    kind = task.get("type")
    if kind not in TASK_TYPES:
        _fail(sc, sec, "type", f"unknown task type {kind!r}; expected one of {', '.join(TASK_TYPES)}")
    if kind in ("flux", "holonomy"):
        if not sc.is_symplectic():
            _fail(sc, sec, "type", f"{kind} task needs a symplectic structure (even dimension required)")
        iso = task.get("isotopy")
        if iso not in ISOTOPY_KINDS:
            _fail(sc, sec, "isotopy", f"unknown isotopy kind {iso!r}; expected one of {', '.join(ISOTOPY_KINDS)}")
        try:
            if iso == "translation":
                c = task.get("c")
                if not isinstance(c, (list, tuple)) or len(c) != dim:
                    _fail(sc, sec, "c", f"translation needs c with {dim} entries")
            elif iso == "shear":
                axis = task.get("axis")
                if not isinstance(axis, int) or not 1 <= axis <= dim:
                    _fail(sc, sec, "axis", f"shear axis must be an integer in 1..{dim}")
                g = poly_value(task.get("g", 0.0), dim)
                if g.diff(axis - 1).l1_norm() != 0.0:
                    _fail(sc, sec, "g", "shear profile must not depend on the sheared coordinate")
            elif iso == "hamiltonian":
                poly_value(task.get("f", 0.0), dim)
            elif iso == "closed_form":
                th = task.get("theta")
                if not isinstance(th, (list, tuple)) or len(th) != dim:
                    _fail(sc, sec, "theta", f"closed_form needs theta with {dim} components")
                form_value(th, dim)
        except ExpressionError as exc:
            key = {"shear": "g", "hamiltonian": "f", "closed_form": "theta"}.get(iso, "isotopy")
            _fail(sc, sec, key, str(exc))
        if kind == "holonomy":
            loop = task.get("loop")
            if not isinstance(loop, (list, tuple)) or len(loop) != dim or any(not isinstance(v, int) for v in loop):
                _fail(sc, sec, "loop", f"loop must be an integer winding vector with {dim} entries")
    if kind == "pair":
        pairing = task.get("pairing", "mu")
        if pairing not in ("mu", "sigma"):
            _fail(sc, sec, "pairing", "pairing must be 'mu' or 'sigma'")
        if pairing == "sigma" and not sc.is_symplectic():
            _fail(sc, sec, "pairing", "sigma pairing needs a symplectic structure (even dimension required)")
        for key in ("a", "b"):
            v = task.get(key)
            if v is not None and (not isinstance(v, (list, tuple)) or len(v) != dim):
                _fail(sc, sec, key, f"{key} must list {dim} class coordinates or form components")
    for key in ("tolerance",):
        if key in task and not isinstance(task[key], (int, float)):
            _fail(sc, sec, key, "tolerance must be a number")


# ------------------------------------------------------------ serialization

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def serialize_scenario(sc: Scenario) -> str:
    out = []
    for name in SECTION_ORDER:
        sec = getattr(sc, name)
        if not sec:
            continue
        out.append(f"[{name}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in sec.items())
        out.append("")
    for task in sc.tasks:
        out.append(f"[task.{task['index']}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in task.items() if k != "index")
        out.append("")
    return "\n".join(out)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
