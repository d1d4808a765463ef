"""Lie algebra layer: Koszul bracket on one-forms, H^1 classes, invariant pairings.

H^1(T^n, R) is identified with R^n through the zero Fourier modes of a closed
form, i.e. coordinates in the basis [dx_1], ..., [dx_n].
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFormError, DimensionError, NotClosedError, NotPoissonError
from .trigcalc import (
    OneForm,
    PoissonTensor,
    TrigPoly,
    commutator,
    const_one_form,
    const_two_form,
    const_wedge,
    exterior_derivative,
    lie_derivative,
    poisson_bracket,
    poisson_pairing,
    sharp,
    directional,
    top_coefficient,
)

#: Jacobi residual above which a tensor is refused by bracket-level operations.
POISSON_GATE_TOL = 1e-10
#: ``||d theta||`` (coefficient l1 norm) above which a form counts as not closed.
CLOSED_TOL = 1e-12


@dataclass(frozen=True)
class CohomologyClass:
    """Element of H^1(T^n, R) in the basis [dx_i]."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise ValueError("class coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def _other(self, other):
        if not isinstance(other, CohomologyClass):
            raise TypeError(f"expected CohomologyClass, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return other.coeffs

    def __add__(self, other):
        return CohomologyClass(self.coeffs + self._other(other))

    def __sub__(self, other):
        return CohomologyClass(self.coeffs - self._other(other))

    def __neg__(self):
        return CohomologyClass(-self.coeffs)

    def scale(self, s):
        return CohomologyClass(float(s) * self.coeffs)

    def distance(self, other) -> float:
        return float(np.max(np.abs(self.coeffs - self._other(other)), initial=0.0))

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def representative(self) -> OneForm:
        return OneForm.constant(self.coeffs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def __eq__(self, other):
        return isinstance(other, CohomologyClass) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"CohomologyClass({np.array2string(self.coeffs, precision=6)})"


@dataclass(frozen=True)
class ExtElement:
    """Section ``(zeta, f)`` of ``T*P + (P x R)``."""

    zeta: OneForm
    f: TrigPoly

    def __post_init__(self):
        if self.zeta.dim != self.f.dim:
            raise DimensionError(f"dimension mismatch: form {self.zeta.dim} vs function {self.f.dim}")

    @classmethod
    def from_function(cls, f: TrigPoly):
        """The pair ``(-df, f)``."""
        return cls(-exterior_derivative(f), f)

    @classmethod
    def constant(cls, dim, c):
        return cls(OneForm.zero(dim), TrigPoly.constant(dim, c))

    def __add__(self, other):
        return ExtElement(self.zeta + other.zeta, self.f + other.f)

    def __sub__(self, other):
        return ExtElement(self.zeta - other.zeta, self.f - other.f)

    def scale(self, s):
        return ExtElement(self.zeta.scale(s), self.f.scale(s))

    def l1_norm(self) -> float:
        return max(self.zeta.l1_norm(), self.f.l1_norm())


# --------------------------------------------------------------------- gates

def require_poisson(pi: PoissonTensor, tol: float = POISSON_GATE_TOL) -> float:
    if not isinstance(pi, PoissonTensor):
        raise TypeError("expected a PoissonTensor")
    res = pi.jacobi()
    if res > tol:
        raise NotPoissonError(res, tol)
    return res


def closedness(theta: OneForm) -> float:
    return exterior_derivative(theta).l1_norm() if theta.dim > 1 else 0.0


def require_closed(theta: OneForm, tol: float = CLOSED_TOL):
    res = closedness(theta)
    scale = max(1.0, theta.l1_norm())
    if res > tol * scale:
        raise NotClosedError(f"one-form is not closed (||d theta|| = {res:.3e})", res)
    return res


# --------------------------------------------------------------- operations

def koszul_bracket(pi: PoissonTensor, omega: OneForm, theta: OneForm, gate: bool = True) -> OneForm:
    """``[w, t] = L_{pi#w} t - L_{pi#t} w - d pi(w, t)``."""
    if omega.dim != pi.dim or theta.dim != pi.dim:
        raise DimensionError(f"dimension mismatch: tensor {pi.dim}, forms {omega.dim}, {theta.dim}")
    if gate:
        require_poisson(pi)
    Xw = sharp(pi, omega)
    Xt = sharp(pi, theta)
    return (lie_derivative(Xw, theta) - lie_derivative(Xt, omega)
            - exterior_derivative(poisson_pairing(pi, omega, theta)))


def cohomology_class(theta: OneForm, tol: float = CLOSED_TOL) -> CohomologyClass:
    require_closed(theta, tol)
    return CohomologyClass(theta.means())


def mu_matrix(pi: PoissonTensor) -> np.ndarray:
    """``M_ij = <[dx_i], [dx_j]> = integral of pi^ij``."""
    return pi.const_matrix.copy()


def _as_form(c, dim):
    if isinstance(c, CohomologyClass):
        if c.dim != dim:
            raise DimensionError(f"dimension mismatch: class {c.dim} vs {dim}")
        return OneForm.constant(c.coeffs)
    if isinstance(c, OneForm):
        if c.dim != dim:
            raise DimensionError(f"dimension mismatch: form {c.dim} vs {dim}")
        require_closed(c)
        return c
    raise TypeError(f"expected CohomologyClass or OneForm, got {type(c).__name__}")


def pairing_mu(pi: PoissonTensor, c1, c2) -> float:
    """``<[t1], [t2]> = integral of pi(t1, t2)`` with Lebesgue measure."""
    if isinstance(c1, CohomologyClass) and isinstance(c2, CohomologyClass):
        _as_form(c1, pi.dim)
        _as_form(c2, pi.dim)
        return float(c1.coeffs @ mu_matrix(pi) @ c2.coeffs)
    a = _as_form(c1, pi.dim)
    b = _as_form(c2, pi.dim)
    return poisson_pairing(pi, a, b).integrate()


def _check_symplectic(omega_matrix):
    W = np.asarray(omega_matrix, dtype=np.float64)
    n = W.shape[0]
    if W.ndim != 2 or W.shape != (n, n):
        raise DimensionError("symplectic matrix must be square")
    if n % 2:
        raise DimensionError("even dimension required")
    if np.max(np.abs(W + W.T)) > 0:
        raise ValueError("symplectic matrix must be antisymmetric")
    if abs(np.linalg.det(W)) < 1e-12:
        raise DegenerateFormError("symplectic matrix is degenerate")
    return W


def sigma_matrix(omega_matrix) -> np.ndarray:
    """``S_ij`` = top coefficient of ``dx_i ^ dx_j ^ w^(m-1)``."""
    W = _check_symplectic(omega_matrix)
    n = W.shape[0]
    m = n // 2
    w = const_two_form(W)
    power = const_wedge(*([w] * (m - 1)))
    S = np.zeros((n, n))
    for i, j in itertools.permutations(range(n), 2):
        ei = const_one_form([1.0 if a == i else 0.0 for a in range(n)])
        ej = const_one_form([1.0 if a == j else 0.0 for a in range(n)])
        S[i, j] = top_coefficient(const_wedge(ei, ej, power), n)
    return S


def pairing_sigma(omega_matrix, c1, c2) -> float:
    """``integral of t1 ^ t2 ^ w^(m-1)``, orientation dx_1 ^ ... ^ dx_2m > 0."""
    S = sigma_matrix(omega_matrix)
    n = S.shape[0]
    if isinstance(c1, CohomologyClass) and isinstance(c2, CohomologyClass):
        _as_form(c1, n)
        _as_form(c2, n)
        return float(c1.coeffs @ S @ c2.coeffs)
    a = _as_form(c1, n)
    b = _as_form(c2, n)
    total = 0.0
    for i, j in itertools.permutations(range(n), 2):
        if S[i, j]:
            total += S[i, j] * (a[i] * b[j]).integrate()
    return total


def sigma_mu_ratio(omega_matrix) -> tuple[float, float]:
    """Constant ``r`` with ``sigma = r * mu`` and the spread of entrywise ratios."""
    W = _check_symplectic(omega_matrix)
    S = sigma_matrix(W)
    M = np.linalg.inv(W)
    mask = np.abs(M) > 1e-14
    if np.any(np.abs(S[~mask]) > 1e-14):
        return float("nan"), float("inf")
    ratios = S[mask] / M[mask]
    return float(np.mean(ratios)), float(np.max(ratios) - np.min(ratios))


def central_ext_bracket(pi: PoissonTensor, a: ExtElement, b: ExtElement, gate: bool = True) -> ExtElement:
    """``[(z, f), (e, g)] = ([z, e], (pi# z) g - (pi# e) f + pi(z, e))``."""
    if a.f.dim != pi.dim or b.f.dim != pi.dim:
        raise DimensionError("dimension mismatch between tensor and elements")
    if gate:
        require_poisson(pi)
    form = koszul_bracket(pi, a.zeta, b.zeta, gate=False)
    func = (directional(sharp(pi, a.zeta), b.f) - directional(sharp(pi, b.zeta), a.f)
            + poisson_pairing(pi, a.zeta, b.zeta))
    return ExtElement(form, func)


# --------------------------------------------------------------- properties

def random_closed_form(dim, bandwidth, rng, scale=1.0) -> OneForm:
    """``c + df`` with random constant ``c`` and random band-limited ``f``."""
    c = OneForm.constant(scale * rng.standard_normal(dim))
    f = TrigPoly.random(dim, bandwidth, rng, scale=scale / (2 * np.pi), zero_mean=True)
    return c + exterior_derivative(f)


def koszul_jacobi_residual(pi, a, b, c) -> float:
    br = lambda x, y: koszul_bracket(pi, x, y, gate=False)
    return (br(br(a, b), c) + br(br(b, c), a) + br(br(c, a), b)).sup_norm()


def anchor_residual(pi, a, b) -> float:
    lhs = sharp(pi, koszul_bracket(pi, a, b, gate=False))
    rhs = commutator(sharp(pi, a), sharp(pi, b))
    return (lhs - rhs).sup_norm()


def homomorphism_residual(pi, f, g) -> float:
    """``d{f, g} - [df, dg]``."""
    lhs = exterior_derivative(poisson_bracket(pi, f, g))
    rhs = koszul_bracket(pi, exterior_derivative(f), exterior_derivative(g), gate=False)
    return (lhs - rhs).l1_norm()


def central_jacobi_residual(pi, a, b, c) -> float:
    br = lambda x, y: central_ext_bracket(pi, x, y, gate=False)
    s = br(br(a, b), c) + br(br(b, c), a) + br(br(c, a), b)
    return max(s.zeta.sup_norm(), s.f.sup_norm())


def induced_function_bracket_sign(pi, f, g) -> tuple[int, float]:
    """Sign ``s`` with ``[(-df,f),(-dg,g)] = (-dh, h)``, ``-h = s {-f, -g}``.

    Returns ``(s, residual)`` where the residual measures both closure in the
    set ``{(-dh, h)}`` and the match against ``s {f, g}``.
    """
    out = central_ext_bracket(pi, ExtElement.from_function(f), ExtElement.from_function(g), gate=False)
    h = out.f
    closure = (out.zeta + exterior_derivative(h)).l1_norm()
    pb = poisson_bracket(pi, f, g)
    image = -h  # identification (-dh, h) -> -h
    plus = (image - pb).l1_norm()
    minus = (image + pb).l1_norm()
    sign = 1 if plus <= minus else -1
    return sign, max(closure, min(plus, minus))


def exact_sequence_report(pi: PoissonTensor, rng=None, samples: int = 5, bandwidth: int = 2) -> dict:
    """Residuals of each step of ``0 -> R -> C(P) -> Z^1 -> H^1 -> 0`` on random samples."""
    require_poisson(pi)
    rng = np.random.default_rng(0) if rng is None else rng
    n = pi.dim
    ker_d = 0.0
    f_of_d = 0.0
    injective_gap = np.inf
    bracket_exact = 0.0
    for _ in range(samples):
        c = TrigPoly.constant(n, rng.standard_normal())
        ker_d = max(ker_d, exterior_derivative(c).l1_norm())
        f = TrigPoly.random(n, bandwidth, rng, zero_mean=True)
        df = exterior_derivative(f)
        f_of_d = max(f_of_d, cohomology_class(df).norm())
        injective_gap = min(injective_gap, df.l1_norm() / max(f.l1_norm(), 1e-300))
        t1 = random_closed_form(n, bandwidth, rng)
        t2 = random_closed_form(n, bandwidth, rng)
        bracket_exact = max(bracket_exact, cohomology_class(koszul_bracket(pi, t1, t2, gate=False)).norm())
    surj = 0.0
    for i in range(n):
        cls = cohomology_class(OneForm.basis(n, i)).coeffs
        surj = max(surj, float(np.max(np.abs(cls - np.eye(n)[i]))))
    return {
        "ker_d_constants": ker_d,
        "nonconstant_not_in_ker_d": float(injective_gap),
        "class_of_exact": f_of_d,
        "surjectivity": surj,
        "bracket_of_closed_is_exact": bracket_exact,
    }
