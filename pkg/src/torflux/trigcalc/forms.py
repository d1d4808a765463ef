"""Differential forms, vector fields and Poisson tensors with TrigPoly components.

Conventions (fixed once, everything downstream follows):

* ``TwoForm`` component ``w[i][j]`` is the coefficient of ``dx_i ^ dx_j`` for
  ``i < j``; the full matrix is antisymmetric.
* ``(X _| w)_j = sum_i X^i w_ij`` and ``X _| t = sum_i X^i t_i``.
* ``pi(a, b) = sum_ij pi^ij a_i b_j``.
* ``sharp`` is defined by ``<pi#(a), b> = pi(a, b)``, so
  ``(pi# a)^j = sum_i pi^ij a_i`` and ``pi#(df) = X_f`` with ``X_f g = {f, g}``.
"""
from __future__ import annotations

import contextlib
import itertools
from functools import cached_property
from typing import Sequence

import numpy as np

from .. import kernels
from ..errors import DimensionError
from .trigpoly import TWO_PI, TrigPoly, sparse_terms

# Test hook: -1 flips the sign of sharp without touching the pairing.
_SHARP_SIGN = 1.0


@contextlib.contextmanager
def flipped_sharp():
    """Temporarily negate ``sharp`` (mutation hook for the invariant suite)."""
    global _SHARP_SIGN
    old = _SHARP_SIGN
    _SHARP_SIGN = -old
    try:
        yield
    finally:
        _SHARP_SIGN = old


def _common_dim(polys):
    dims = {p.dim for p in polys}
    if len(dims) != 1:
        raise DimensionError(f"components have mixed dimensions {sorted(dims)}")
    return dims.pop()


def _as_poly(v, dim):
    if isinstance(v, TrigPoly):
        return v
    return TrigPoly.constant(dim, float(v))


class _Components:
    """Shared plumbing for OneForm and VectorField."""

    __slots__ = ("comps",)

    def __init__(self, comps: Sequence[TrigPoly]):
        comps = tuple(comps)
        if not comps:
            raise DimensionError("need at least one component")
        if all(isinstance(c, TrigPoly) for c in comps):
            dim = _common_dim(comps)
        else:
            dim = len(comps)
            comps = tuple(_as_poly(c, dim) for c in comps)
            dim = _common_dim(comps)
        if dim != len(comps):
            raise DimensionError(f"{len(comps)} components on a {dim}-torus")
        self.comps = comps

    @classmethod
    def constant(cls, values):
        values = [float(v) for v in values]
        n = len(values)
        return cls([TrigPoly.constant(n, v) for v in values])

    @classmethod
    def zero(cls, dim):
        return cls([TrigPoly.zero(dim)] * dim)

    @property
    def dim(self) -> int:
        return len(self.comps)

    @property
    def bandwidth(self) -> int:
        return max(c.bandwidth for c in self.comps)

    def __getitem__(self, i) -> TrigPoly:
        return self.comps[i]

    def __iter__(self):
        return iter(self.comps)

    def _same(self, other):
        if type(other) is not type(self):
            raise TypeError(f"expected {type(self).__name__}, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._same(other)
        return type(self)([a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        self._same(other)
        return type(self)([a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return type(self)([-a for a in self.comps])

    def scale(self, s):
        return type(self)([a.scale(s) for a in self.comps])

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def mul_function(self, f: TrigPoly):
        return type(self)([f * a for a in self.comps])

    def means(self) -> np.ndarray:
        return np.array([c.mean() for c in self.comps])

    def l1_norm(self) -> float:
        return max(c.l1_norm() for c in self.comps)

    def sup_norm(self) -> float:
        return max(c.sup_norm() for c in self.comps)

    def allclose(self, other, atol=1e-12) -> bool:
        self._same(other)
        return (self - other).l1_norm() <= atol

    def __call__(self, points) -> np.ndarray:
        """Component values at ``points``, shape ``(p, n)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        kv, cf = sparse_terms(self.comps)
        return kernels.trig_eval(pts, kv, cf).T

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, bandwidth={self.bandwidth})"


class OneForm(_Components):
    """``sum_j comps[j] dx_j``."""

    __slots__ = ()

    @classmethod
    def basis(cls, dim, j):
        return cls.constant([1.0 if i == j else 0.0 for i in range(dim)])


class VectorField(_Components):
    """``sum_j comps[j] d/dx_j``."""

    __slots__ = ()

    @classmethod
    def basis(cls, dim, j):
        return cls.constant([1.0 if i == j else 0.0 for i in range(dim)])


class _Matrix:
    """Antisymmetric n x n matrix of TrigPoly; only i < j is stored."""

    __slots__ = ("dim", "_upper", "__dict__")

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionError("component matrix must be square")
        polys = {}
        for i in range(n):
            for j in range(n):
                v = rows[i][j]
                polys[i, j] = _as_poly(v, n) if not isinstance(v, TrigPoly) else v
        _common_dim(polys.values())
        if polys[0, 0].dim != n:
            raise DimensionError(f"{n}x{n} matrix on a {polys[0, 0].dim}-torus")
        for i in range(n):
            if polys[i, i].l1_norm() != 0.0:
                raise ValueError(f"diagonal entry ({i},{i}) is not zero")
            for j in range(i + 1, n):
                if not (polys[i, j] + polys[j, i]).l1_norm() <= 1e-14 * max(1.0, polys[i, j].l1_norm()):
                    raise ValueError(f"entries ({i},{j}) and ({j},{i}) are not antisymmetric")
        self.dim = n
        self._upper = {(i, j): polys[i, j] for i in range(n) for j in range(i + 1, n)}

    @classmethod
    def from_upper(cls, dim, upper):
        """Build from a ``{(i, j): poly}`` map with ``i < j``; missing entries are zero."""
        z = TrigPoly.zero(dim)
        rows = [[z] * dim for _ in range(dim)]
        for (i, j), v in upper.items():
            if not i < j:
                raise ValueError("upper entries need i < j")
            v = _as_poly(v, dim)
            rows[i][j] = v
            rows[j][i] = -v
        return cls(rows)

    @classmethod
    def constant(cls, matrix):
        m = np.asarray(matrix, dtype=np.float64)
        n = m.shape[0]
        return cls([[TrigPoly.constant(n, m[i, j]) for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, dim):
        return cls.constant(np.zeros((dim, dim)))

    def entry(self, i, j) -> TrigPoly:
        if i == j:
            return TrigPoly.zero(self.dim)
        if i < j:
            return self._upper[i, j]
        return -self._upper[j, i]

    def __getitem__(self, ij):
        return self.entry(*ij)

    @property
    def bandwidth(self) -> int:
        return max((p.bandwidth for p in self._upper.values()), default=0)

    def upper_items(self):
        return self._upper.items()

    @cached_property
    def const_matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        for (i, j), p in self._upper.items():
            m[i, j] = p.mean()
            m[j, i] = -m[i, j]
        return m

    @cached_property
    def is_constant(self) -> bool:
        return all(p.is_constant() for p in self._upper.values())

    def is_zero(self) -> bool:
        return all(p.l1_norm() == 0.0 for p in self._upper.values())

    def l1_norm(self) -> float:
        return max((p.l1_norm() for p in self._upper.values()), default=0.0)

    def __add__(self, other):
        return type(self).from_upper(self.dim, {k: v + other._upper[k] for k, v in self._upper.items()})

    def __sub__(self, other):
        return type(self).from_upper(self.dim, {k: v - other._upper[k] for k, v in self._upper.items()})

    def scale(self, s):
        return type(self).from_upper(self.dim, {k: v.scale(s) for k, v in self._upper.items()})

    def __call__(self, points) -> np.ndarray:
        """Matrix values at ``points``, shape ``(p, n, n)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        keys = list(self._upper)
        out = np.zeros((pts.shape[0], self.dim, self.dim))
        if not keys:
            return out
        kv, cf = sparse_terms([self._upper[k] for k in keys])
        vals = kernels.trig_eval(pts, kv, cf)
        for r, (i, j) in enumerate(keys):
            out[:, i, j] = vals[r]
            out[:, j, i] = -vals[r]
        return out

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, bandwidth={self.bandwidth})"


class TwoForm(_Matrix):
    """``sum_{i<j} w_ij dx_i ^ dx_j``."""

    __slots__ = ()


class PoissonTensor(_Matrix):
    """Bivector ``sum_{i<j} pi^ij d_i ^ d_j``; the Jacobi residual is cached."""

    __slots__ = ()

    def jacobi(self, b_test: int | None = None) -> float:
        cache = self.__dict__.setdefault("_jacobi_cache", {})
        key = self.bandwidth + 1 if b_test is None else int(b_test)
        if key not in cache:
            cache[key] = jacobi_residual(self, key)
        return cache[key]

    def is_poisson(self, tol: float = 1e-12, b_test: int | None = None) -> bool:
        return self.jacobi(b_test) <= tol


# ------------------------------------------------------------------- calculus

def exterior_derivative(eta):
    """``d`` on functions (gives a OneForm) and one-forms (gives a TwoForm)."""
    if isinstance(eta, TrigPoly):
        return OneForm([eta.diff(j) for j in range(eta.dim)])
    if isinstance(eta, OneForm):
        n = eta.dim
        return TwoForm.from_upper(n, {(i, j): eta[j].diff(i) - eta[i].diff(j)
                                      for i in range(n) for j in range(i + 1, n)})
    raise TypeError(f"exterior_derivative supports degree 0 and 1, got {type(eta).__name__}")


def exterior_derivative_2(w: TwoForm) -> dict:
    """``dw`` as ``{(i, j, l): coeff}`` for ``i < j < l``; used to check ``d o d = 0``."""
    n = w.dim
    out = {}
    for i, j, l in itertools.combinations(range(n), 3):
        out[i, j, l] = w.entry(j, l).diff(i) - w.entry(i, l).diff(j) + w.entry(i, j).diff(l)
    return out


def _dot(a, b):
    total = TrigPoly.zero(a[0].dim)
    for x, y in zip(a, b):
        total = total + x * y
    return total


def interior_product(X: VectorField, eta):
    if not isinstance(X, VectorField):
        raise TypeError("first argument must be a VectorField")
    if isinstance(eta, OneForm):
        if eta.dim != X.dim:
            raise DimensionError(f"dimension mismatch: {X.dim} vs {eta.dim}")
        return _dot(X.comps, eta.comps)
    if isinstance(eta, TwoForm):
        if eta.dim != X.dim:
            raise DimensionError(f"dimension mismatch: {X.dim} vs {eta.dim}")
        n = X.dim
        return OneForm([_dot(X.comps, [eta.entry(i, j) for i in range(n)]) for j in range(n)])
    raise TypeError(f"cannot contract a vector field into {type(eta).__name__}")


def directional(X: VectorField, f: TrigPoly) -> TrigPoly:
    """``X(f) = sum_i X^i d_i f``."""
    if X.dim != f.dim:
        raise DimensionError(f"dimension mismatch: {X.dim} vs {f.dim}")
    return _dot(X.comps, [f.diff(i) for i in range(f.dim)])


def lie_derivative(X: VectorField, eta):
    """Cartan's formula ``L_X = d(X _| .) + X _| d(.)``."""
    if isinstance(eta, TrigPoly):
        return directional(X, eta)
    if isinstance(eta, OneForm):
        return exterior_derivative(interior_product(X, eta)) + interior_product(X, exterior_derivative(eta))
    raise TypeError(f"lie_derivative supports functions and one-forms, got {type(eta).__name__}")


def commutator(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]^j = X(Y^j) - Y(X^j)``."""
    X._same(Y)
    return VectorField([directional(X, Y[j]) - directional(Y, X[j]) for j in range(X.dim)])


def _check_pi(pi, dim):
    if not isinstance(pi, PoissonTensor):
        raise TypeError("expected a PoissonTensor")
    if pi.dim != dim:
        raise DimensionError(f"dimension mismatch: tensor {pi.dim} vs argument {dim}")


def poisson_pairing(pi: PoissonTensor, a: OneForm, b: OneForm) -> TrigPoly:
    """``pi(a, b) = sum_ij pi^ij a_i b_j``, computed straight from the matrix."""
    _check_pi(pi, a.dim)
    _check_pi(pi, b.dim)
    total = TrigPoly.zero(pi.dim)
    for (i, j), p in pi.upper_items():
        total = total + p * (a[i] * b[j] - a[j] * b[i])
    return total


def sharp(pi: PoissonTensor, theta: OneForm) -> VectorField:
    """``(pi# theta)^j = sum_i pi^ij theta_i``."""
    _check_pi(pi, theta.dim)
    n = pi.dim
    comps = [_dot([pi.entry(i, j) for i in range(n)], theta.comps) for j in range(n)]
    v = VectorField(comps)
    return v if _SHARP_SIGN == 1.0 else v.scale(_SHARP_SIGN)


def poisson_bracket(pi: PoissonTensor, f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """``{f, g} = pi(df, dg)``."""
    return poisson_pairing(pi, exterior_derivative(f), exterior_derivative(g))


def hamiltonian_field(pi: PoissonTensor, f: TrigPoly) -> VectorField:
    """``X_f = pi#(df)``, so that ``X_f(g) = {f, g}``."""
    return sharp(pi, exterior_derivative(f))


# -------------------------------------------------------------------- Jacobi

def jacobiator_tensor(pi: PoissonTensor) -> dict:
    """Components ``L^{ijl}`` (i<j<l) of the trivector with
    ``{{f,g},h} + cyclic = sum L^{ijl} f_i g_j h_l`` (fully alternating sum).

    ``L^{ijk} = sum_a pi^{ak} d_a pi^{ij} + pi^{ai} d_a pi^{jk} + pi^{aj} d_a pi^{ki}``.
    """
    n = pi.dim
    d = {(i, j, a): pi.entry(i, j).diff(a) for i in range(n) for j in range(n) if i != j for a in range(n)}

    def dp(i, j, a):
        return d[i, j, a] if i != j else TrigPoly.zero(n)

    out = {}
    for i, j, k in itertools.combinations(range(n), 3):
        total = TrigPoly.zero(n)
        for a in range(n):
            total = total + pi.entry(a, k) * dp(i, j, a) + pi.entry(a, i) * dp(j, k, a) + pi.entry(a, j) * dp(k, i, a)
        out[i, j, k] = total
    return out


def jacobi_residual(pi: PoissonTensor, b_test: int | None = None) -> float:
    """Largest grid sup-norm of the Jacobiator over real basis triples.

    The basis is ``cos/sin(2 pi k.x)`` for ``0 < k`` (half lattice),
    ``|k|_inf <= b_test``. For such a triple the Jacobiator equals
    ``(2 pi)^3 det(k1, k2, k3 | ijl) L^{ijl}(x)`` times a product of three
    sines/cosines, so the maximum over the sin/cos choices is taken by
    weighting with ``max(|sin|, |cos|)`` of each phase.
    """
    if b_test is None:
        b_test = pi.bandwidth + 1
    n = pi.dim
    if n < 3 or pi.is_constant:
        return 0.0
    lam = jacobiator_tensor(pi)
    keys = [k for k, v in lam.items() if v.l1_norm() > 0.0]
    if not keys:
        return 0.0
    b_lam = max(lam[k].bandwidth for k in keys)
    ks = [k for k in itertools.product(range(-b_test, b_test + 1), repeat=n) if k > (0,) * n]
    kmat = np.array(ks, dtype=np.int64)
    m = 2 * (b_lam + 3 * b_test) + 2
    axes = np.meshgrid(*([np.arange(m) / m] * n), indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=-1)
    kv, cf = sparse_terms([lam[k] for k in keys])
    lam_grid = kernels.trig_eval(pts, kv, cf)
    phase = TWO_PI * (kmat.astype(np.float64) @ pts.T)
    weight = np.maximum(np.abs(np.sin(phase)), np.abs(np.cos(phase)))
    # unordered triples suffice: |det| and the weight product are symmetric
    tri = np.array(list(itertools.combinations_with_replacement(range(len(ks)), 3)), dtype=np.int64)
    if tri.size == 0:
        return 0.0
    k1, k2, k3 = kmat[tri[:, 0]], kmat[tri[:, 1]], kmat[tri[:, 2]]
    dets = np.empty((tri.shape[0], len(keys)))
    for r, (i, j, l) in enumerate(keys):
        sub = np.stack([k1[:, [i, j, l]], k2[:, [i, j, l]], k3[:, [i, j, l]]], axis=1).astype(np.float64)
        dets[:, r] = np.round(np.linalg.det(sub))
    live = np.any(dets != 0, axis=1)
    dets = dets[live] * TWO_PI ** 3
    tri = tri[live]
    return kernels.jacobi_sup(lam_grid, dets, tri, weight)


def jacobi_bruteforce(pi: PoissonTensor, f: TrigPoly, g: TrigPoly, h: TrigPoly) -> TrigPoly:
    """Cyclic sum of nested brackets, computed literally."""
    pb = poisson_bracket
    return pb(pi, pb(pi, f, g), h) + pb(pi, pb(pi, g, h), f) + pb(pi, pb(pi, h, f), g)


# --------------------------------------------------- constant exterior algebra

def const_wedge(*forms) -> dict:
    """Wedge of constant forms given as ``{sorted index tuple: coeff}`` maps."""
    result = {(): 1.0}
    for form in forms:
        nxt = {}
        for idx_a, ca in result.items():
            for idx_b, cb in form.items():
                if set(idx_a) & set(idx_b):
                    continue
                merged = idx_a + idx_b
                perm = sorted(range(len(merged)), key=merged.__getitem__)
                sign = _perm_sign(perm)
                key = tuple(sorted(merged))
                nxt[key] = nxt.get(key, 0.0) + sign * ca * cb
        result = {k: v for k, v in nxt.items() if v != 0.0}
    return result


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def const_one_form(values) -> dict:
    return {(i,): float(v) for i, v in enumerate(values) if v != 0.0}


def const_two_form(matrix) -> dict:
    m = np.asarray(matrix, dtype=np.float64)
    n = m.shape[0]
    return {(i, j): float(m[i, j]) for i in range(n) for j in range(i + 1, n) if m[i, j] != 0.0}


def top_coefficient(form: dict, dim: int) -> float:
    """Coefficient of ``dx_1 ^ ... ^ dx_n``."""
    return float(form.get(tuple(range(dim)), 0.0))


def canonical_symplectic(dim: int) -> np.ndarray:
    """``J = [[0, I], [-I, 0]]``; on T^2 this is ``dx ^ dy``."""
    if dim % 2:
        raise DimensionError("even dimension required")
    m = dim // 2
    J = np.zeros((dim, dim))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J
