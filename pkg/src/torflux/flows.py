"""Lifts of torus maps and isotopies of them.

A :class:`MapLift` is ``psi(x) = x + u(x)`` on the universal cover with a
periodic displacement ``u``, so ``psi(x + l) = psi(x) + l`` for lattice ``l``.
Compositions and inverses are not trigonometric polynomials in general; they
are sampled on a grid and re-interpolated, and the out-of-band energy of the
interpolant is kept in ``residual``.

An :class:`Isotopy` is a family ``psi_t``, ``t`` in [0, 1], that exposes the
lift at each time and the Eulerian velocity ``V_t`` with
``d/dt psi_t = V_t o psi_t``.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import AliasingError, DimensionError, EndpointMismatchError, NotClosedError
from .trigcalc import OneForm, TrigPoly, VectorField, exterior_derivative, sharp
from .trigcalc.trigpoly import grid_points, sparse_terms, to_coeffs, to_grid

#: Target out-of-band energy when re-interpolating sampled maps.
INTERP_TOL = 1e-13
#: Residual above which a re-interpolated map is refused.
ALIAS_BOUND = 1e-8
#: Largest total lattice size used for sampling a map.
MAX_POINTS = 1 << 20


def default_grid(dim: int) -> int:
    """Per-axis lattice for sampling maps: 256 on T^1 and T^2, smaller above."""
    if dim <= 2:
        return 256
    return max(16, int(MAX_POINTS ** (1.0 / dim)) // 2 * 2)


def _grid_for(bandwidth: int, dim: int) -> int:
    n = max(16, 4 * max(bandwidth, 1) + 2)
    n += n % 2
    return max(min(n, default_grid(dim)), 2 * bandwidth + 2)


class MapLift:
    """``psi(x) = x + u(x)`` with ``u`` an n-tuple of TrigPoly."""

    __slots__ = ("u", "residual")

    def __init__(self, u: Sequence[TrigPoly], residual: float = 0.0):
        u = tuple(u)
        if not u or any(not isinstance(c, TrigPoly) for c in u):
            raise TypeError("displacement must be a non-empty tuple of TrigPoly")
        if any(c.dim != len(u) for c in u):
            raise DimensionError(f"{len(u)} displacement components do not match their torus dimension")
        self.u = u
        self.residual = float(residual)

    @classmethod
    def identity(cls, dim):
        return cls([TrigPoly.zero(dim)] * dim)

    @classmethod
    def translation(cls, c):
        c = np.asarray(c, dtype=np.float64).reshape(-1)
        return cls([TrigPoly.constant(len(c), v) for v in c])

    @classmethod
    def from_samples(cls, disp, tol: float = INTERP_TOL, bound: float = ALIAS_BOUND,
                     cap: int | None = None) -> "MapLift":
        """Interpolate displacement samples of shape ``(n, M, ..., M)``."""
        disp = np.asarray(disp, dtype=np.float64)
        comps, worst = [], 0.0
        for d in disp:
            p, res = to_coeffs(d, tol=tol, cap=cap)
            comps.append(p)
            worst = max(worst, res)
        if worst > bound:
            raise AliasingError(f"interpolation residual {worst:.3e} exceeds bound {bound:.1e}; "
                                f"raise the grid resolution")
        return cls(comps, worst)

    @classmethod
    def from_function(cls, fn: Callable, dim: int, grid: int | None = None, **kw) -> "MapLift":
        """Sample a periodic displacement ``fn(points) -> (p, n)`` on a lattice."""
        grid = default_grid(dim) if grid is None else grid
        pts = grid_points(grid, dim)
        vals = np.asarray(fn(pts), dtype=np.float64)
        return cls.from_samples(vals.T.reshape((dim,) + (grid,) * dim), **kw)

    @property
    def dim(self) -> int:
        return len(self.u)

    @property
    def bandwidth(self) -> int:
        return max(c.bandwidth for c in self.u)

    def field(self) -> VectorField:
        return VectorField(self.u)

    def displacement(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        kv, cf = sparse_terms(self.u)
        return kernels.trig_eval(pts, kv, cf).T

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return pts + self.displacement(pts)

    def jacobian(self, points) -> np.ndarray:
        """``D psi = I + D u`` at each point, shape ``(p, n, n)`` with ``[a, i, j] = d_j psi^i``."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n = self.dim
        derivs = [self.u[i].diff(j) for i in range(n) for j in range(n)]
        kv, cf = sparse_terms(derivs)
        vals = kernels.trig_eval(pts, kv, cf).T.reshape(-1, n, n)
        return vals + np.eye(n)

    def lattice_displacement(self, grid: int) -> np.ndarray:
        """``u`` on the lattice ``j / grid`` by inverse FFT, shape ``(grid ** n, n)``."""
        return np.stack([to_grid(c, grid).ravel() for c in self.u], axis=-1)

    def lattice_jacobian(self, grid: int) -> np.ndarray:
        """``D psi`` on the lattice ``j / grid``, shape ``(grid ** n, n, n)``."""
        n = self.dim
        D = np.empty((grid ** n, n, n))
        for i in range(n):
            for j in range(n):
                D[:, i, j] = to_grid(self.u[i].diff(j), grid).ravel()
        return D + np.eye(n)

    def mean_displacement(self) -> np.ndarray:
        return np.array([c.mean() for c in self.u])

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.u)

    def _sample(self, fn, grid, tol, bound):
        pts = grid_points(grid, self.dim)
        vals = fn(pts, grid)
        return MapLift.from_samples(vals.T.reshape((self.dim,) + (grid,) * self.dim), tol=tol, bound=bound)

    def _adaptive(self, fn, bandwidth, grid, tol, bound, carried):
        n = self.dim
        g = _grid_for(bandwidth, n) if grid is None else grid
        while True:
            out = self._sample(fn, g, tol, math.inf)
            if out.residual <= tol or grid is not None or 2 * g > default_grid(n):
                break
            g *= 2
        if out.residual > bound:
            raise AliasingError(f"map resampled on a {g}-point grid has residual {out.residual:.3e} "
                                f"above bound {bound:.1e}")
        return MapLift(out.u, out.residual + carried)

    def compose(self, inner: "MapLift", grid: int | None = None, tol: float = INTERP_TOL,
                bound: float = ALIAS_BOUND) -> "MapLift":
        """``self o inner``, displacement ``u_in(x) + u_self(x + u_in(x))``."""
        if inner.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {inner.dim}")
        carried = self.residual + inner.residual
        if self.is_constant():
            c = self.mean_displacement()
            return MapLift([a + float(b) for a, b in zip(inner.u, c)], carried)
        if inner.is_constant():
            c = inner.mean_displacement()
            shifted = [_shift(p, c) for p in self.u]
            return MapLift([s + float(b) for s, b in zip(shifted, c)], carried)

        def fn(pts, g):
            d = inner.lattice_displacement(g)
            return d + self.displacement(pts + d)

        return self._adaptive(fn, self.bandwidth + inner.bandwidth, grid, tol, bound, carried)

    def inverse(self, grid: int | None = None, tol: float = INTERP_TOL, bound: float = ALIAS_BOUND,
                iters: int = 60) -> "MapLift":
        """Solve ``y + u(y) = x`` by Newton iteration at lattice points and interpolate ``y - x``."""
        if self.is_constant():
            return MapLift.translation(-self.mean_displacement())

        def fn(pts, g):
            y = pts - self.lattice_displacement(g)
            for _ in range(iters):
                r = y + self.displacement(y) - pts
                if np.max(np.abs(r)) < 1e-15:
                    break
                J = self.jacobian(y)
                y = y - np.linalg.solve(J, r[..., None])[..., 0]
            return y - pts

        return self._adaptive(fn, 2 * self.bandwidth, grid, tol, bound, self.residual)

    def distance(self, other: "MapLift", grid: int | None = None) -> float:
        """Sup over a lattice of ``|u - u'|`` (componentwise max)."""
        b = max(self.bandwidth, other.bandwidth)
        g = _grid_for(b, self.dim) if grid is None else grid
        return float(np.max(np.abs(self.lattice_displacement(g) - other.lattice_displacement(g))))

    def __repr__(self):
        return f"MapLift(dim={self.dim}, bandwidth={self.bandwidth}, residual={self.residual:.1e})"


def _shift(p: TrigPoly, c) -> TrigPoly:
    """``x -> p(x + c)``: multiply each coefficient by ``exp(2 pi i k.c)``."""
    b = p.bandwidth
    if b == 0:
        return p
    ks = np.meshgrid(*([np.arange(-b, b + 1)] * p.dim), indexing="ij")
    phase = sum(k * float(ci) for k, ci in zip(ks, c))
    return TrigPoly(p.coeffs * np.exp(2j * np.pi * phase), p.discarded)


def symplecto_residual(omega_matrix, psi: MapLift, grid: int | None = None) -> float:
    """Sup over a lattice of the max entry of ``D psi^T W D psi - W``."""
    W = np.asarray(omega_matrix, dtype=np.float64)
    if W.shape != (psi.dim, psi.dim):
        raise DimensionError(f"matrix of shape {W.shape} for a {psi.dim}-torus map")
    if psi.dim % 2:
        raise DimensionError("even dimension required")
    if psi.is_constant():
        return 0.0
    g = _grid_for(psi.bandwidth, psi.dim) if grid is None else grid
    D = psi.lattice_jacobian(g)
    R = np.einsum("pia,ij,pjb->pab", D, W, D) - W
    return float(np.max(np.abs(R)))


def jacobian_det_mean(psi: MapLift, grid: int | None = None) -> float:
    """Mean of ``det D psi - 1`` over a lattice (volume preservation check)."""
    g = _grid_for(psi.bandwidth, psi.dim) if grid is None else grid
    return float(np.mean(np.linalg.det(psi.lattice_jacobian(g)) - 1.0))


# -------------------------------------------------------------------- advect

def advect_map(X, t0: float, t1: float, steps: int, grid: int | None = None,
               tol: float = INTERP_TOL, bound: float = ALIAS_BOUND) -> MapLift:
    """Classical RK4 flow map of ``X`` from ``t0`` to ``t1`` on a lattice of initial points.

    ``X`` is either a :class:`VectorField` (autonomous) or a callable
    ``t -> VectorField``. The displacement samples are interpolated with an
    adaptive bandwidth; the interpolation residual is recorded.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dim = X.dim if isinstance(X, VectorField) else X(t0).dim
    grid = default_grid(dim) if grid is None else grid
    if isinstance(X, VectorField) and all(c.is_constant() for c in X):
        return MapLift.translation((t1 - t0) * X.means())
    pts = grid_points(grid, dim)
    dt = (t1 - t0) / steps
    if isinstance(X, VectorField):
        kv, cf = sparse_terms(X.comps)
        end = kernels.rk4_autonomous(pts, kv, cf, dt, steps)
    else:
        end = _rk4_timedep(X, pts, t0, dt, steps)
    disp = (end - pts).T.reshape((dim,) + (grid,) * dim)
    return MapLift.from_samples(disp, tol=tol, bound=bound)


def _rk4_timedep(X, pts, t0, dt, steps):
    x = pts.copy()
    for s in range(steps):
        t = t0 + s * dt
        k1 = X(t)(x)
        k2 = X(t + 0.5 * dt)(x + 0.5 * dt * k1)
        k3 = X(t + 0.5 * dt)(x + 0.5 * dt * k2)
        k4 = X(t + dt)(x + dt * k3)
        x = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return x


# ------------------------------------------------------------------ isotopies

class Isotopy:
    """Base class. Subclasses provide ``lift(t)`` and ``velocity(t)``."""

    kind = "isotopy"

    def __init__(self, dim: int):
        self.dim = dim

    def lift(self, t: float) -> MapLift:
        raise NotImplementedError

    def velocity(self, t: float) -> VectorField:
        raise NotImplementedError

    def pieces(self) -> list[tuple[float, float]]:
        """Subintervals on which ``velocity`` is smooth in ``t``."""
        return [(0.0, 1.0)]

    def endpoint(self) -> MapLift:
        return self.lift(1.0)

    def start(self) -> MapLift:
        return self.lift(0.0)

    def describe(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


def _check_t(t):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t} outside [0, 1]")


class ConstantIsotopy(Isotopy):
    """``psi_t = id`` for all t."""

    kind = "identity"

    def lift(self, t):
        _check_t(t)
        return MapLift.identity(self.dim)

    def velocity(self, t):
        _check_t(t)
        return VectorField.zero(self.dim)


class TranslationIsotopy(Isotopy):
    """``psi_t(x) = x + t c``."""

    kind = "translation"

    def __init__(self, c):
        c = np.asarray(c, dtype=np.float64).reshape(-1)
        super().__init__(len(c))
        self.c = c

    def lift(self, t):
        _check_t(t)
        return MapLift.translation(t * self.c)

    def velocity(self, t):
        _check_t(t)
        return VectorField.constant(self.c)

    def describe(self):
        return {"kind": self.kind, "c": self.c.tolist()}


class ShearIsotopy(Isotopy):
    """``psi_t(x) = x + t g(x) e_axis`` with ``g`` independent of ``x_axis``."""

    kind = "shear"

    def __init__(self, axis: int, g: TrigPoly):
        super().__init__(g.dim)
        if not 0 <= axis < g.dim:
            raise DimensionError(f"axis {axis} out of range for dim {g.dim}")
        if g.diff(axis).l1_norm() != 0.0:
            raise ValueError("shear profile must not depend on the sheared coordinate")
        self.axis = axis
        self.g = g

    def _field(self):
        z = TrigPoly.zero(self.dim)
        return [self.g if i == self.axis else z for i in range(self.dim)]

    def lift(self, t):
        _check_t(t)
        return MapLift([c.scale(t) for c in self._field()])

    def velocity(self, t):
        _check_t(t)
        return VectorField(self._field())

    def describe(self):
        return {"kind": self.kind, "axis": self.axis, "bandwidth": self.g.bandwidth}


class FlowIsotopy(Isotopy):
    """Flow of an autonomous vector field, lifts computed by RK4 and cached."""

    kind = "flow"

    def __init__(self, field: VectorField, steps: int = 200, grid: int | None = None, label: str = "flow"):
        super().__init__(field.dim)
        self.field = field
        self.steps = int(steps)
        self.grid = grid
        self.kind = label
        self._cache: dict[float, MapLift] = {}

    def lift(self, t):
        _check_t(t)
        t = float(t)
        if t == 0.0:
            return MapLift.identity(self.dim)
        if t not in self._cache:
            n = max(1, int(round(self.steps * t)))
            self._cache[t] = advect_map(self.field, 0.0, t, n, grid=self.grid)
        return self._cache[t]

    def velocity(self, t):
        _check_t(t)
        return self.field

    def describe(self):
        return {"kind": self.kind, "steps": self.steps, "bandwidth": self.field.bandwidth}


class RightTranslated(Isotopy):
    """``t -> psi_t o base``; same Eulerian velocity, starts at ``base``."""

    kind = "right_translated"

    def __init__(self, iso: Isotopy, base: MapLift):
        super().__init__(iso.dim)
        self.iso = iso
        self.base = base

    def lift(self, t):
        return self.iso.lift(t).compose(self.base)

    def velocity(self, t):
        return self.iso.velocity(t)

    def pieces(self):
        return self.iso.pieces()

    def describe(self):
        return {"kind": self.kind, "of": self.iso.describe()}


class Reversed(Isotopy):
    """``t -> psi_{1-t} o psi_1^{-1} o base``; with ``base=None`` this is ``psi_{1-t}``.

    Either way the path starts at ``base`` (or at the endpoint of ``iso``) and
    its velocity is ``-V_{1-t}``.
    """

    kind = "reversed"

    def __init__(self, iso: Isotopy, base: MapLift | None = None):
        super().__init__(iso.dim)
        self.iso = iso
        self.base = base
        self._shift = None

    def lift(self, t):
        _check_t(t)
        back = self.iso.lift(1.0 - t)
        if self.base is None:
            return back
        if self._shift is None:
            self._shift = self.iso.endpoint().inverse().compose(self.base)
        return back.compose(self._shift)

    def velocity(self, t):
        _check_t(t)
        return -self.iso.velocity(1.0 - t)

    def pieces(self):
        return sorted((1.0 - b, 1.0 - a) for a, b in self.iso.pieces())

    def describe(self):
        return {"kind": self.kind, "of": self.iso.describe()}


class StarConcat(Isotopy):
    """First path on [0, 1/2] at double speed, then the second on [1/2, 1]."""

    kind = "star"

    def __init__(self, first: Isotopy, second: Isotopy, tol: float = 1e-10):
        if first.dim != second.dim:
            raise DimensionError(f"dimension mismatch: {first.dim} vs {second.dim}")
        super().__init__(first.dim)
        gap = first.endpoint().distance(second.start())
        if gap > tol:
            raise EndpointMismatchError(f"second path starts {gap:.3e} away from the end of the first")
        self.first = first
        self.second = second
        self.gap = gap

    def lift(self, t):
        _check_t(t)
        if t <= 0.5:
            return self.first.lift(min(1.0, 2.0 * t))
        return self.second.lift(min(1.0, 2.0 * t - 1.0))

    def velocity(self, t):
        _check_t(t)
        if t < 0.5:
            return self.first.velocity(2.0 * t).scale(2.0)
        return self.second.velocity(min(1.0, 2.0 * t - 1.0)).scale(2.0)

    def velocity_on(self, t, piece):
        """Velocity using the one-sided limit that belongs to ``piece``."""
        a, b = piece
        if b <= 0.5:
            return self.first.velocity(min(1.0, 2.0 * t)).scale(2.0)
        return self.second.velocity(max(0.0, 2.0 * t - 1.0)).scale(2.0)

    def pieces(self):
        return ([(0.5 * a, 0.5 * b) for a, b in self.first.pieces()]
                + [(0.5 + 0.5 * a, 0.5 + 0.5 * b) for a, b in self.second.pieces()])

    def describe(self):
        return {"kind": self.kind, "first": self.first.describe(), "second": self.second.describe()}


def star_concat(iso1: Isotopy, iso2: Isotopy, tol: float = 1e-10) -> StarConcat:
    """``iso1 * iso2`` where ``iso2`` already starts at the endpoint of ``iso1``."""
    return StarConcat(iso1, iso2, tol)


def then(iso1: Isotopy, iso2: Isotopy) -> StarConcat:
    """``iso1`` followed by ``iso2`` right-translated to start at ``iso1``'s endpoint."""
    end = iso1.endpoint()
    return StarConcat(iso1, RightTranslated(iso2, end))


def velocity_on(iso: Isotopy, t: float, piece) -> VectorField:
    if hasattr(iso, "velocity_on"):
        return iso.velocity_on(t, piece)
    if isinstance(iso, (RightTranslated, Reversed)):
        inner = iso.iso
        if isinstance(iso, Reversed):
            return -velocity_on(inner, 1.0 - t, (1.0 - piece[1], 1.0 - piece[0]))
        return velocity_on(inner, t, piece)
    return iso.velocity(t)


def velocity_fd(iso: Isotopy, t: float, h: float = 1e-4, grid: int | None = None) -> VectorField:
    """Eulerian velocity from lifts alone: central difference in t, pulled back by ``psi_t^{-1}``."""
    lo, hi = max(0.0, t - h), min(1.0, t + h)
    a, b = iso.lift(lo), iso.lift(hi)
    du = [(q - p).scale(1.0 / (hi - lo)) for p, q in zip(a.u, b.u)]
    rate = MapLift(du)
    inv = iso.lift(t).inverse(grid=grid)
    g = _grid_for(max(rate.bandwidth, inv.bandwidth) * 2, iso.dim) if grid is None else grid
    pts = grid_points(g, iso.dim)
    vals = rate.displacement(inv(pts))
    comps = [to_coeffs(vals[:, i].reshape((g,) * iso.dim), tol=1e-12)[0] for i in range(iso.dim)]
    return VectorField(comps)


# ------------------------------------------------------------- constructors

def hamiltonian_isotopy(pi, f: TrigPoly, steps: int = 200, grid: int | None = None) -> Isotopy:
    """Flow of ``X_f = pi#(df)``."""
    X = sharp(pi, exterior_derivative(f))
    if all(c.l1_norm() == 0.0 for c in X):
        return ConstantIsotopy(f.dim)
    return FlowIsotopy(X, steps=steps, grid=grid, label="hamiltonian")


def exp_bisection_path(theta: OneForm, model, steps: int = 200, grid: int | None = None) -> Isotopy:
    """``exp(t theta)``: lift isotopy of the flow of ``pi#(theta)`` on a symplectic torus model."""
    if getattr(model, "kind", None) != "symplectic_torus":
        raise ValueError("exp path needs a symplectic torus model")
    res = exterior_derivative(theta).l1_norm()
    if res > 1e-12 * max(1.0, theta.l1_norm()):
        raise NotClosedError("exp path needs a closed one-form", res)
    X = sharp(model.pi, theta)
    if all(c.l1_norm() == 0.0 for c in X):
        return ConstantIsotopy(theta.dim)
    if all(c.is_constant() for c in X):
        iso = TranslationIsotopy(X.means())
        iso.kind = "closed_form"
        return iso
    return FlowIsotopy(X, steps=steps, grid=grid, label="closed_form")
