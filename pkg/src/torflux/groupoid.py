"""Symplectic groupoid models over flat tori and the flux machinery on them.

Two models are provided:

``symplectic_torus``
    Base ``T^2m`` with a constant symplectic matrix ``W`` and ``pi = W^-1``.
    Arrows are ``(x, p)`` with source ``x - p/2`` and target ``x + p/2``;
    ``w_G = alpha* w - beta* w = d((W p) . dx)``. A lagrangian bisection is
    stored through its lift ``psi = id + u`` as ``L(x) = (x + u/2, -u)``, so
    that the target is the identity and ``Ad_L = psi``.

``zero_poisson``
    ``pi = 0`` and ``G = T*T^n``; bisections are closed one-forms and
    multiplication is addition.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateFormError,
    DimensionError,
    LagrangianGateError,
    NotClosedError,
    QuadratureError,
)
from .flows import (
    ConstantIsotopy,
    Isotopy,
    MapLift,
    symplecto_residual,
    velocity_on,
)
from .koszul import CohomologyClass, mu_matrix
from .trigcalc import OneForm, PoissonTensor, TrigPoly, TwoForm, exterior_derivative, interior_product
from .trigcalc.trigpoly import grid_points

#: Symplectomorphism gate for bisections built from sampled lifts.
LAGRANGIAN_TOL = 1e-7
#: ``||d theta_t||`` bound asserted at every quadrature node.
THETA_CLOSED_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GroupoidModel:
    kind: str
    dim: int
    omega: np.ndarray | None = None
    _pi: PoissonTensor = field(default=None, repr=False)

    @classmethod
    def zero_poisson(cls, dim: int) -> "GroupoidModel":
        return cls("zero_poisson", dim, None, PoissonTensor.zero(dim))

    @classmethod
    def symplectic_torus(cls, omega=None, dim: int = 2) -> "GroupoidModel":
        from .trigcalc import canonical_symplectic

        W = canonical_symplectic(dim) if omega is None else np.array(omega, dtype=np.float64)
        n = W.shape[0]
        if W.ndim != 2 or W.shape != (n, n):
            raise DimensionError("symplectic matrix must be square")
        if n % 2:
            raise DimensionError("even dimension required")
        if np.max(np.abs(W + W.T)) > 0.0:
            raise DegenerateFormError("symplectic matrix must be antisymmetric")
        if abs(np.linalg.det(W)) < 1e-12:
            raise DegenerateFormError("symplectic matrix is degenerate")
        W.setflags(write=False)
        P = np.linalg.inv(W)
        P = 0.5 * (P - P.T)
        return cls("symplectic_torus", n, W, PoissonTensor.constant(P))

    @property
    def pi(self) -> PoissonTensor:
        return self._pi

    @property
    def omega_form(self) -> TwoForm:
        if self.omega is None:
            raise ValueError("zero Poisson model carries no base symplectic form")
        return TwoForm.constant(self.omega)

    def alpha(self, x, p):
        if self.kind == "zero_poisson":
            return np.asarray(x, dtype=np.float64)
        return np.asarray(x) - 0.5 * np.asarray(p)

    def beta(self, x, p):
        if self.kind == "zero_poisson":
            return np.asarray(x, dtype=np.float64)
        return np.asarray(x) + 0.5 * np.asarray(p)

    def require_symplectic(self):
        if self.kind != "symplectic_torus":
            raise ValueError("operation needs a symplectic torus model")

    def cocycle_basis(self) -> "GroupoidCocycleBasis":
        self.require_symplectic()
        return GroupoidCocycleBasis(self)


@dataclass(frozen=True, eq=False)
class Bisection:
    model: GroupoidModel
    lift: MapLift | None = None
    form: OneForm | None = None
    gate_residual: float = 0.0

    def arrows(self, points):
        """``(X, p)`` coordinates of ``L(x)`` for base points ``x`` (target side)."""
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.model.kind == "zero_poisson":
            return x, self.form(x)
        u = self.lift.displacement(x)
        return x + 0.5 * u, -u

    @property
    def u(self):
        return self.lift.u


@dataclass(frozen=True)
class GroupoidCocycleBasis:
    """The cocycles ``J_i(x, p) = p_i``."""

    model: GroupoidModel

    def __len__(self):
        return self.model.dim

    def evaluate(self, X, p) -> np.ndarray:
        return np.asarray(p, dtype=np.float64)

    def additivity_residual(self, L: Bisection, K: Bisection, points) -> float:
        """``J(L(Ad_K x) K(x)) - J(L(Ad_K x)) - J(K(x))`` on the composed bisection."""
        LK = compose_bisections(self.model, L, K)
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        _, p_lk = LK.arrows(x)
        _, p_k = K.arrows(x)
        _, p_l = L.arrows(K.lift(x))
        return float(np.max(np.abs(p_lk - p_l - p_k)))


# --------------------------------------------------------------- bisections

def bisection_from_lift(model: GroupoidModel, u, tol: float = LAGRANGIAN_TOL) -> Bisection:
    """Bisection with ``Ad = psi = id + u``; refused if ``psi`` is not symplectic.

    ``u`` may be a MapLift, a sequence of TrigPoly, or a constant vector.
    For the zero Poisson model ``u`` is a closed OneForm instead.
    """
    if model.kind == "zero_poisson":
        if not isinstance(u, OneForm):
            raise TypeError("zero Poisson bisections are closed one-forms")
        res = exterior_derivative(u).l1_norm() if u.dim > 1 else 0.0
        if res > 1e-12 * max(1.0, u.l1_norm()):
            raise NotClosedError("bisection form is not closed", res)
        return Bisection(model, form=u, gate_residual=res)
    if isinstance(u, MapLift):
        psi = u
    elif len(u) and isinstance(u[0], TrigPoly):
        psi = MapLift(u)
    else:
        psi = MapLift.translation(u)
    if psi.dim != model.dim:
        raise DimensionError(f"lift of dim {psi.dim} on a {model.dim}-torus model")
    res = symplecto_residual(model.omega, psi)
    if res > tol:
        raise LagrangianGateError(res, tol)
    return Bisection(model, lift=psi, gate_residual=res)


def identity_bisection(model: GroupoidModel) -> Bisection:
    if model.kind == "zero_poisson":
        return Bisection(model, form=OneForm.zero(model.dim))
    return Bisection(model, lift=MapLift.identity(model.dim))


def ad(model: GroupoidModel, L: Bisection) -> MapLift:
    """``x -> alpha(L(x))``; trivial for the zero Poisson model."""
    if model.kind == "zero_poisson":
        return MapLift.identity(model.dim)
    return L.lift


def compose_bisections(model: GroupoidModel, L: Bisection, K: Bisection, **kw) -> Bisection:
    """``LK``: lift ``psi_L o psi_K``, or the sum of forms for the zero Poisson model."""
    if model.kind == "zero_poisson":
        return Bisection(model, form=L.form + K.form)
    psi = L.lift.compose(K.lift, **kw)
    return Bisection(model, lift=psi, gate_residual=max(L.gate_residual, K.gate_residual) + psi.residual)


def endpoint_bisection(model: GroupoidModel, iso: Isotopy, tol: float = LAGRANGIAN_TOL) -> Bisection:
    if model.kind == "zero_poisson":
        return bisection_from_lift(model, iso.form_at(1.0))
    return bisection_from_lift(model, iso.endpoint(), tol=tol)


# ---------------------------------------------------------------- flux

class FormPath(Isotopy):
    """Zero Poisson isotopy ``eta_t = t * eta`` of closed one-forms (or a custom profile)."""

    kind = "form_path"

    def __init__(self, eta: OneForm, profile: Callable[[float], float] | None = None,
                 rate: Callable[[float], float] | None = None):
        super().__init__(eta.dim)
        self.eta = eta
        self.profile = profile or (lambda t: t)
        self.rate = rate or (lambda t: 1.0)

    def form_at(self, t):
        return self.eta.scale(self.profile(t))

    def form_rate(self, t):
        return self.eta.scale(self.rate(t))


def theta_t(model: GroupoidModel, iso: Isotopy, t: float, check: bool = True, piece=None) -> OneForm:
    """``theta_t = V_t _| w`` with ``V_t`` the Eulerian velocity of the lift family."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t} outside [0, 1]")
    if model.kind == "zero_poisson":
        theta = iso.form_rate(t)
    else:
        V = velocity_on(iso, t, piece) if piece is not None else iso.velocity(t)
        theta = interior_product(V, model.omega_form)
    if check and theta.dim > 1:
        res = exterior_derivative(theta).l1_norm()
        if res > THETA_CLOSED_TOL:
            raise NotClosedError(f"theta_t at t = {t} is not closed", res)
    return theta


def _class_at(model, iso, t, piece, check):
    return theta_t(model, iso, t, check=check, piece=piece).means()


def _simpson(model, iso, a, b, m, piece, check):
    if b <= a:
        return np.zeros(model.dim)
    m = max(2, m + (m % 2))
    ts = np.linspace(a, b, m + 1)
    vals = np.array([_class_at(model, iso, float(t), piece, check) for t in ts])
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return (b - a) / (3.0 * m) * (w @ vals)


def _pieces(iso):
    return iso.pieces() if hasattr(iso, "pieces") else [(0.0, 1.0)]


def flux_details(model: GroupoidModel, iso: Isotopy, steps: int = 200, upper: float = 1.0,
                 tol: float = 1e-8, check: bool = True) -> dict:
    """Composite Simpson of ``[theta_t]`` over ``[0, upper]`` with a step-halving estimate."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    pieces = [(a, min(b, upper)) for a, b in _pieces(iso) if a < upper]
    per = max(2, steps // max(1, len(pieces)))
    per += per % 2
    full = np.zeros(model.dim)
    half = np.zeros(model.dim)
    for piece in pieces:
        a, b = piece
        full += _simpson(model, iso, a, b, per, piece, check)
        half += _simpson(model, iso, a, b, max(2, per // 2), piece, check)
    diff = float(np.max(np.abs(full - half), initial=0.0))
    if diff > tol:
        raise QuadratureError(f"flux quadrature changed by {diff:.3e} under step halving (tol {tol:.1e})")
    return {"class": CohomologyClass(full), "halving_change": diff, "steps": per * len(pieces)}


def flux(model: GroupoidModel, iso: Isotopy, steps: int = 200, tol: float = 1e-8,
         check: bool = True) -> CohomologyClass:
    """``F({L_t}) = integral over [0, 1] of [theta_t] dt``."""
    return flux_details(model, iso, steps=steps, tol=tol, check=check)["class"]


def prefix_flux(model: GroupoidModel, iso: Isotopy, T: float, steps: int = 200,
                tol: float = 1e-8) -> CohomologyClass:
    """Flux of the truncated path ``{L_t}``, ``0 <= t <= T``."""
    if T <= 0.0:
        return CohomologyClass.zero(model.dim)
    return flux_details(model, iso, steps=steps, upper=T, tol=tol)["class"]


def epsilon(model: GroupoidModel, L: Bisection) -> np.ndarray:
    """``<eps(L), [J_i]> = integral of p_i(L(x)) dx = -mean(u_i)``."""
    model.require_symplectic()
    return -L.lift.mean_displacement()


def epsilon_pairing(model: GroupoidModel, L: Bisection, cocycle: Callable, grid: int = 64) -> float:
    """``integral of J(L(x)) dx`` for a general function ``J(X, p)``, by lattice mean."""
    model.require_symplectic()
    pts = grid_points(grid, model.dim)
    X, p = L.arrows(pts)
    return float(np.mean(cocycle(X, p)))


def lambda_map(model: GroupoidModel, L: Bisection) -> np.ndarray:
    """``<lambda(L), [dx_i]>`` through the chart ``[dx_i] -> [J_i]``: equal to ``eps(L)``."""
    return epsilon(model, L)


def flux_via_lambda(model: GroupoidModel, L: Bisection) -> CohomologyClass:
    """Endpoint flux ``mu^-1 lambda(L)``."""
    M = mu_matrix(model.pi)
    if abs(np.linalg.det(M)) < 1e-14:
        raise DegenerateFormError("pairing matrix is singular")
    return CohomologyClass(np.linalg.solve(M, lambda_map(model, L)))


def closed_form_flux(model: GroupoidModel, L: Bisection) -> CohomologyClass:
    """``a = W . integral of (x - psi_1(x)) dx``."""
    model.require_symplectic()
    return CohomologyClass(model.omega @ (-L.lift.mean_displacement()))


# ------------------------------------------------------------------ holonomy

def circle(v: float) -> float:
    """Representative of ``v`` mod 1 in [0, 1)."""
    r = float(v) % 1.0
    return 0.0 if r == 1.0 else r


def circle_distance(a: float, b: float) -> float:
    return abs(((a - b + 0.5) % 1.0) - 0.5)


def rho(c: CohomologyClass, w) -> float:
    """``rho([theta])(gamma) = integral over gamma of theta`` mod 1, for the straight loop of winding ``w``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (c.dim,):
        raise DimensionError(f"winding vector of length {w.size} for a class of dim {c.dim}")
    return circle(float(c.coeffs @ w))


def _loop_integral(model, L, w, base, q, transport):
    s = (np.arange(q) / q)[:, None]
    y0 = base[None, :] + s * w[None, :]
    if transport is None:
        y, dy = y0, np.broadcast_to(w, y0.shape)
    else:
        y = transport(y0)
        dy = np.einsum("pij,j->pi", transport.jacobian(y0), w)
    u = L.lift.displacement(y)
    Du = L.lift.jacobian(y) - np.eye(model.dim)
    du = np.einsum("pij,pj->pi", Du, dy)
    p = -u
    dX = dy + 0.5 * du
    integrand = np.einsum("pi,pi->p", p @ model.omega.T, dX)
    return float(np.mean(integrand))


def holonomy_details(model: GroupoidModel, L: Bisection, w, base=None, quad: int = 64,
                     tol: float = 1e-11, max_quad: int = 1 << 16, transport: MapLift | None = None) -> dict:
    """Line integral of ``(W p) . dX`` along ``s -> L(gamma(s))`` with periodic trapezoid doubling."""
    model.require_symplectic()
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (model.dim,):
        raise DimensionError(f"winding vector of length {w.size} on a {model.dim}-torus")
    base = np.zeros(model.dim) if base is None else np.asarray(base, dtype=np.float64)
    q = quad
    prev = _loop_integral(model, L, w, base, q, transport)
    while True:
        cur = _loop_integral(model, L, w, base, 2 * q, transport)
        change = abs(cur - prev)
        if change <= tol:
            break
        q *= 2
        if 2 * q > max_quad:
            raise QuadratureError(f"holonomy quadrature did not settle: change {change:.3e} at {2 * q} nodes")
        prev = cur
    return {"value": circle(cur), "raw": cur, "nodes": 2 * q, "change": change}


def holonomy_phi(model: GroupoidModel, L: Bisection, w, base=None, transport: MapLift | None = None,
                 **kw) -> float:
    """``Phi_L(gamma)`` in [0, 1): holonomy of the connection ``(W p) . dx`` along ``L(gamma)``."""
    return holonomy_details(model, L, w, base=base, transport=transport, **kw)["value"]


def generator_loops(dim: int) -> list[np.ndarray]:
    return [np.eye(dim)[i] for i in range(dim)]


def exactness_verdict(model: GroupoidModel, iso: Isotopy, samples: int = 11, steps: int = 200,
                      tol: float = 1e-8, phi_tol: float = 1e-6) -> dict:
    """Prefix fluxes on a T-grid, verdict, and holonomy of the endpoint on generator loops."""
    Ts = np.linspace(0.0, 1.0, samples)
    prefix = [prefix_flux(model, iso, float(T), steps=steps) for T in Ts]
    worst = max(c.norm() for c in prefix)
    report = {
        "T": Ts.tolist(),
        "prefix_flux": [c.coeffs.tolist() for c in prefix],
        "max_prefix_flux": worst,
        "tolerance": tol,
        "verdict": "hamiltonian path" if worst < tol else "non-exact",
    }
    if model.kind == "symplectic_torus":
        L = endpoint_bisection(model, iso)
        phis = [holonomy_phi(model, L, w) for w in generator_loops(model.dim)]
        report["phi_endpoint"] = phis
        report["phi_max_distance_from_zero"] = max(circle_distance(v, 0.0) for v in phis)
        report["phi_tolerance"] = phi_tol
    return report


# --------------------------------------------------------------- isotropy

def is_isotropy(L: Bisection, tol: float = 1e-12) -> bool:
    """``Ad_L = id`` on the torus: ``u`` is a constant lattice vector."""
    if not L.lift.is_constant():
        osc = max((c - c.mean()).l1_norm() for c in L.lift.u)
        if osc > tol:
            return False
    m = L.lift.mean_displacement()
    return bool(np.max(np.abs(m - np.round(m))) <= tol)


def isotropy_cocycle_oscillation(L: Bisection) -> float:
    """Oscillatory part of ``x -> J_i(L(x))``; constant in ``x`` for isotropy bisections."""
    return max((c - c.mean()).l1_norm() for c in L.lift.u)


def lattice_translation_isotopy(dim: int, i: int):
    """``h_t(x) = x + t e_i``: a loop of torus maps, not a loop of bisections."""
    from .flows import TranslationIsotopy

    e = np.zeros(dim)
    e[i] = 1.0
    iso = TranslationIsotopy(e)
    iso.kind = "lattice_loop"
    return iso


__all__ = [
    "Bisection", "FormPath", "GroupoidCocycleBasis", "GroupoidModel", "ad", "bisection_from_lift",
    "circle", "circle_distance", "closed_form_flux", "compose_bisections", "endpoint_bisection",
    "epsilon", "epsilon_pairing", "exactness_verdict", "flux", "flux_details", "flux_via_lambda",
    "generator_loops", "holonomy_details", "holonomy_phi", "identity_bisection", "is_isotropy",
    "isotropy_cocycle_oscillation", "lambda_map", "lattice_translation_isotopy", "prefix_flux",
    "rho", "theta_t", "ConstantIsotopy",
]
