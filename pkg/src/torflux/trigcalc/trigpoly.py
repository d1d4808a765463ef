"""Band-limited real functions on the flat torus T^n = R^n / Z^n.

A :class:`TrigPoly` stores its Fourier coefficients densely: ``coeffs`` has
shape ``(2B + 1,) * n`` and entry ``coeffs[k + B]`` multiplies
``exp(2 pi i k . x)``. The reality condition ``c(-k) = conj(c(k))`` is
enforced on construction, so values are real everywhere.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterable, Mapping

import numpy as np
from scipy import signal

from .. import kernels
from ..errors import AliasingError, BandwidthError, DimensionError

TWO_PI = 2.0 * math.pi

#: Products whose bandwidth would exceed this need explicit truncation consent.
DEFAULT_BANDWIDTH_CAP = 64


def _hermitize(c):
    flipped = np.conj(c[(slice(None, None, -1),) * c.ndim])
    return 0.5 * (c + flipped)


def _pad_to(c, bandwidth):
    b0 = (c.shape[0] - 1) // 2
    if b0 == bandwidth:
        return c
    if b0 > bandwidth:
        s = b0 - bandwidth
        return c[(slice(s, c.shape[0] - s),) * c.ndim]
    w = bandwidth - b0
    return np.pad(c, [(w, w)] * c.ndim)


class TrigPoly:
    """Exact trigonometric polynomial with real values.

    Instances are immutable; every operation returns a new polynomial.
    ``discarded`` carries the coefficient norm dropped by an explicitly
    requested truncation (zero otherwise).
    """

    __slots__ = ("_c", "discarded")

    def __init__(self, coeffs, discarded: float = 0.0):
        c = np.array(coeffs, dtype=np.complex128)
        if c.ndim == 0:
            raise DimensionError("coefficient array must have at least one axis")
        size = c.shape[0]
        if size % 2 != 1 or any(s != size for s in c.shape):
            raise DimensionError(f"coefficient array must be a (2B+1)^n cube, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c = _hermitize(c)
        c.setflags(write=False)
        self._c = c
        self.discarded = float(discarded)

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "TrigPoly":
        return cls(np.zeros((1,) * dim))

    @classmethod
    def constant(cls, dim: int, value: float) -> "TrigPoly":
        return cls(np.full((1,) * dim, float(value), dtype=np.complex128))

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[tuple, complex]) -> "TrigPoly":
        """Build from a map ``k -> coefficient``; the conjugate partner is implied.

        If both ``k`` and ``-k`` are given they must already be conjugate.
        """
        terms = {tuple(int(v) for v in k): complex(z) for k, z in terms.items()}
        for k in terms:
            if len(k) != dim:
                raise DimensionError(f"frequency {k} does not have {dim} entries")
        b = max((max(abs(v) for v in k) for k in terms), default=0)
        c = np.zeros((2 * b + 1,) * dim, dtype=np.complex128)
        for k, z in terms.items():
            neg = tuple(-v for v in k)
            if neg in terms and k != neg:
                if abs(terms[neg] - np.conj(z)) > 1e-15 * max(1.0, abs(z)):
                    raise ValueError(f"coefficients at {k} and {neg} are not conjugate")
                c[tuple(v + b for v in k)] = z
            elif k == neg:
                c[tuple(v + b for v in k)] = z.real
            else:
                c[tuple(v + b for v in k)] += z
                c[tuple(-v + b for v in k)] += np.conj(z)
        return cls(c)

    @classmethod
    def cos_mode(cls, k: Iterable[int], amplitude: float = 1.0) -> "TrigPoly":
        """``amplitude * cos(2 pi k . x)``."""
        k = tuple(int(v) for v in k)
        if not any(k):
            return cls.constant(len(k), amplitude)
        return cls.from_terms(len(k), {k: 0.5 * amplitude})

    @classmethod
    def sin_mode(cls, k: Iterable[int], amplitude: float = 1.0) -> "TrigPoly":
        """``amplitude * sin(2 pi k . x)``."""
        k = tuple(int(v) for v in k)
        if not any(k):
            return cls.zero(len(k))
        return cls.from_terms(len(k), {k: -0.5j * amplitude})

    @classmethod
    def random(cls, dim: int, bandwidth: int, rng: np.random.Generator, scale: float = 1.0,
               zero_mean: bool = False) -> "TrigPoly":
        shape = (2 * bandwidth + 1,) * dim
        c = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        if bandwidth:
            c /= math.sqrt(c.size)
        if zero_mean:
            c[(bandwidth,) * dim] = 0.0
        return cls(c)

    # -- basic properties ---------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def dim(self) -> int:
        return self._c.ndim

    @property
    def bandwidth(self) -> int:
        return (self._c.shape[0] - 1) // 2

    def coeff(self, k) -> complex:
        k = tuple(int(v) for v in k)
        if len(k) != self.dim:
            raise DimensionError(f"frequency {k} does not match dim {self.dim}")
        b = self.bandwidth
        if max(abs(v) for v in k) > b:
            return 0j
        return complex(self._c[tuple(v + b for v in k)])

    def terms(self) -> dict:
        """Nonzero coefficients as a ``{k: c}`` map (both halves included)."""
        b = self.bandwidth
        idx = np.argwhere(self._c != 0)
        return {tuple(int(v) - b for v in row): complex(self._c[tuple(row)]) for row in idx}

    def mean(self) -> float:
        return float(self._c[(self.bandwidth,) * self.dim].real)

    def is_constant(self) -> bool:
        return self.trim().bandwidth == 0

    def trim(self) -> "TrigPoly":
        """Drop outer frequency shells whose coefficients are exactly zero."""
        c = self._c
        b = self.bandwidth
        while b > 0:
            inner = c[(slice(1, -1),) * c.ndim]
            mask = np.ones(c.shape, dtype=bool)
            mask[(slice(1, -1),) * c.ndim] = False
            if np.any(c[mask] != 0):
                break
            c = inner
            b -= 1
        if c is self._c:
            return self
        out = TrigPoly.__new__(TrigPoly)
        out._c = c
        out.discarded = self.discarded
        return out

    def with_bandwidth(self, bandwidth: int) -> "TrigPoly":
        """Zero-pad, or truncate with the dropped norm recorded in ``discarded``."""
        if bandwidth >= self.bandwidth:
            return TrigPoly(_pad_to(self._c, bandwidth), self.discarded)
        kept = _pad_to(self._c, bandwidth)
        tail = math.sqrt(max(0.0, float(np.sum(np.abs(self._c) ** 2) - np.sum(np.abs(kept) ** 2))))
        return TrigPoly(kept, self.discarded + tail)

    def l1_norm(self) -> float:
        """Sum of coefficient moduli; an upper bound for the sup norm."""
        return float(np.sum(np.abs(self._c)))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self._c) ** 2)))

    def sup_norm(self, oversample: int = 4) -> float:
        """Max of |f| on a uniform grid with ``oversample`` points per wavelength."""
        n = max(8, oversample * (self.bandwidth + 1))
        return float(np.max(np.abs(to_grid(self, n))))

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "TrigPoly"):
        if not isinstance(other, TrigPoly):
            raise TypeError(f"expected TrigPoly, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(self.dim, other)
        self._check(other)
        b = max(self.bandwidth, other.bandwidth)
        return TrigPoly(_pad_to(self._c, b) + _pad_to(other._c, b),
                        self.discarded + other.discarded)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly(-self._c, self.discarded)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = TrigPoly.constant(self.dim, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: float) -> "TrigPoly":
        return TrigPoly(float(s) * self._c, abs(float(s)) * self.discarded)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scale(float(other))
        return self.mul(other)

    __rmul__ = __mul__

    def mul(self, other: "TrigPoly", cap: int | None = None, truncate: bool = False) -> "TrigPoly":
        """Exact product (coefficient convolution).

        The result has bandwidth ``B_a + B_b``. If that exceeds ``cap`` the call
        fails unless ``truncate`` is set, in which case the dropped norm is
        added to ``discarded`` of the result.
        """
        self._check(other)
        cap = DEFAULT_BANDWIDTH_CAP if cap is None else cap
        a, b = self.trim(), other.trim()
        if a.bandwidth == 0:
            prod = a._c.flat[0] * b._c
        elif b.bandwidth == 0:
            prod = b._c.flat[0] * a._c
        else:
            prod = signal.convolve(a._c, b._c, method="direct" if a._c.size * b._c.size < 40_000 else "fft")
        out = TrigPoly(prod, a.discarded + b.discarded)
        if out.bandwidth > cap:
            if not truncate:
                raise BandwidthError(
                    f"product bandwidth {out.bandwidth} exceeds cap {cap}; pass truncate=True to allow it")
            out = out.with_bandwidth(cap)
        return out

    def diff(self, axis: int) -> "TrigPoly":
        """Partial derivative along coordinate ``axis`` (0-based)."""
        if not 0 <= axis < self.dim:
            raise DimensionError(f"axis {axis} out of range for dim {self.dim}")
        b = self.bandwidth
        shape = [1] * self.dim
        shape[axis] = 2 * b + 1
        k = np.arange(-b, b + 1, dtype=np.float64).reshape(shape)
        return TrigPoly(self._c * (1j * TWO_PI * k), self.discarded)

    def integrate(self) -> float:
        """Exact integral over the unit torus (the zero mode)."""
        return self.mean()

    # -- evaluation ---------------------------------------------------------

    def sparse_terms(self):
        """``(kvecs, coeffs)`` over the nonzero half-space, ready for the kernels.

        The conjugate half is folded in by doubling, so evaluating the real part
        reproduces the full sum.
        """
        return sparse_terms([self])

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DimensionError(f"points have {pts.shape[1]} coordinates, expected {self.dim}")
        kv, cf = self.sparse_terms()
        vals = kernels.trig_eval(pts, kv, cf)[0]
        return vals[0] if single else vals

    def allclose(self, other: "TrigPoly", atol: float = 1e-12) -> bool:
        self._check(other)
        return (self - other).l1_norm() <= atol

    def __repr__(self):
        nz = len(self.terms())
        return f"TrigPoly(dim={self.dim}, bandwidth={self.bandwidth}, nonzero={nz})"


def sparse_terms(polys):
    """Shared half-space frequency table for several polynomials of one dimension."""
    polys = list(polys)
    dim = polys[0].dim
    b = max(p.bandwidth for p in polys)
    stack = np.stack([_pad_to(p.coeffs, b) for p in polys])
    size = 2 * b + 1
    flat = stack.reshape(len(polys), -1)
    # lexicographically nonnegative half of the frequency lattice
    grid = np.stack(np.meshgrid(*([np.arange(-b, b + 1)] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    centre = (size ** dim - 1) // 2
    half = np.arange(size ** dim) >= centre
    keep = half & np.any(flat != 0, axis=0)
    kv = grid[keep]
    cf = flat[:, keep] * 2.0
    if keep[centre]:
        pos = int(np.count_nonzero(keep[:centre]))
        cf[:, pos] *= 0.5
    return kv.astype(np.int64), cf


# ------------------------------------------------------------ grid transforms

def to_grid(f: TrigPoly, n: int) -> np.ndarray:
    """Sample ``f`` on the uniform lattice ``j / n``, shape ``(n,) * dim``."""
    b = f.bandwidth
    if n < 2 * b + 1:
        raise AliasingError(f"grid of {n} points cannot carry bandwidth {b} (need >= {2 * b + 1})")
    a = np.zeros((n,) * f.dim, dtype=np.complex128)
    idx = np.arange(-b, b + 1) % n
    a[np.ix_(*([idx] * f.dim))] = f.coeffs
    return np.real(np.fft.ifftn(a)) * (n ** f.dim)


def _shell_index(n, dim):
    k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
    mesh = np.meshgrid(*([np.abs(k)] * dim), indexing="ij")
    shell = mesh[0]
    for m in mesh[1:]:
        shell = np.maximum(shell, m)
    # the Nyquist row is ambiguous in sign; count it as outside every bandwidth
    nyq = n // 2 if n % 2 == 0 else None
    if nyq is not None:
        kk = np.meshgrid(*([k] * dim), indexing="ij")
        for m in kk:
            shell = np.where(m == -nyq, n, shell)
    return shell


def to_coeffs(samples, bandwidth: int | None = None, tol: float = 1e-13,
              cap: int | None = None) -> tuple[TrigPoly, float]:
    """Band-limited interpolant of lattice samples and the energy left outside it.

    With ``bandwidth=None`` the smallest bandwidth whose out-of-band energy is
    at most ``tol`` is chosen (bounded by the grid and by ``cap``).
    Returns ``(poly, residual)`` where ``residual`` is the L2 norm of the
    discarded Fourier coefficients.
    """
    s = np.asarray(samples, dtype=np.float64)
    n = s.shape[0]
    dim = s.ndim
    if any(m != n for m in s.shape):
        raise DimensionError(f"samples must be an n^d cube, got {s.shape}")
    hmax = (n - 2) // 2
    cap = DEFAULT_BANDWIDTH_CAP if cap is None else cap
    if bandwidth is not None and bandwidth > hmax:
        raise AliasingError(f"{n} samples per axis cannot resolve bandwidth {bandwidth} (need >= {2 * bandwidth + 2})")
    c = np.fft.fftn(s) / (n ** dim)
    shell = _shell_index(n, dim)
    energy = np.abs(c) ** 2
    if bandwidth is None:
        limit = min(hmax, cap)
        per_shell = np.bincount(shell.ravel(), weights=energy.ravel(), minlength=n + 1)
        above = np.cumsum(per_shell[::-1])[::-1]  # above[b] = energy in shells >= b
        bandwidth = limit
        for bb in range(0, limit + 1):
            if math.sqrt(max(above[bb + 1], 0.0)) <= tol:
                bandwidth = bb
                break
    residual = math.sqrt(float(np.sum(energy[shell > bandwidth])))
    idx = np.arange(-bandwidth, bandwidth + 1) % n
    coeffs = c[np.ix_(*([idx] * dim))]
    return TrigPoly(coeffs), residual


def grid_points(n: int, dim: int) -> np.ndarray:
    """Lattice points ``j / n`` in C order, shape ``(n ** dim, dim)``."""
    axes = np.meshgrid(*([np.arange(n) / n] * dim), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=-1)


# ------------------------------------------------------------ public helpers

def tp_arith(a: TrigPoly, b: TrigPoly | None, op: str, s: float | None = None, *,
             cap: int | None = None, truncate: bool = False) -> TrigPoly:
    """``op`` is ``"add"``, ``"mul"`` or ``"scale"`` (which uses ``s`` and ignores ``b``)."""
    if op == "add":
        return a + b
    if op == "mul":
        return a.mul(b, cap=cap, truncate=truncate)
    if op == "scale":
        return a.scale(s)
    raise ValueError(f"unknown op {op!r}")


def tp_diff(f: TrigPoly, j: int) -> TrigPoly:
    """Partial derivative along coordinate ``j``, counted from 1."""
    if not 1 <= j <= f.dim:
        raise DimensionError(f"axis {j} out of range 1..{f.dim}")
    return f.diff(j - 1)


def tp_integrate(f: TrigPoly) -> float:
    return f.integrate()


def tp_eval(f: TrigPoly, points) -> np.ndarray:
    return f(points)


def grid_transform(data, direction: str, grid: int, bandwidth: int | None = None, tol: float = 1e-13):
    """``to_grid`` returns samples; ``to_coeffs`` returns ``(poly, residual)``."""
    if direction == "to_grid":
        return to_grid(data, grid)
    if direction == "to_coeffs":
        s = np.asarray(data)
        if s.shape[0] != grid:
            raise DimensionError(f"samples have {s.shape[0]} points per axis, expected {grid}")
        return to_coeffs(s, bandwidth=bandwidth, tol=tol)
    raise ValueError(f"unknown direction {direction!r}")


def basis_functions(dim: int, bandwidth: int):
    """Real basis ``cos/sin(2 pi k . x)`` over the half lattice ``0 < k``, ``|k|_inf <= B``."""
    out = []
    for k in itertools.product(range(-bandwidth, bandwidth + 1), repeat=dim):
        if k > tuple([0] * dim):
            out.append(("cos", k, TrigPoly.cos_mode(k)))
            out.append(("sin", k, TrigPoly.sin_mode(k)))
    return out
