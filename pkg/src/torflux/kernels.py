"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names (``trig_eval``, ``rk4_autonomous``, ``jacobi_sup``) are bound
to the numba versions unless the ``TORFLUX_DISABLE_NUMBA`` flag is set.
``IMPLEMENTATIONS`` exposes both variants for cross-checks and benchmarks.

All kernels take the sparse-term representation of a real trigonometric
polynomial: integer frequency rows ``kvecs`` of shape (t, n) and complex
coefficients ``coeffs`` of shape (m, t) for m components that share the same
frequency set.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

TWO_PI = 2.0 * math.pi
_CHUNK = 4096


# ---------------------------------------------------------------- trig_eval

def _kmax(kvecs):
    m = 0
    for b in range(kvecs.shape[0]):
        for j in range(kvecs.shape[1]):
            v = abs(kvecs[b, j])
            if v > m:
                m = v
    return m


def _power_table(x, kb, table):
    # table[j, k + kb] = exp(2 pi i k x_j), built by repeated multiplication
    n = x.shape[0]
    for j in range(n):
        z = complex(math.cos(TWO_PI * x[j]), math.sin(TWO_PI * x[j]))
        table[j, kb] = 1.0
        w = 1.0 + 0.0j
        for k in range(1, kb + 1):
            w = w * z
            table[j, kb + k] = w
            table[j, kb - k] = w.conjugate()


def _eval_terms(table, kb, kvecs, coeffs, out):
    t, n = kvecs.shape
    m = coeffs.shape[0]
    for c in range(m):
        out[c] = 0.0
    for b in range(t):
        e = table[0, kvecs[b, 0] + kb]
        for j in range(1, n):
            e = e * table[j, kvecs[b, j] + kb]
        for c in range(m):
            z = coeffs[c, b]
            out[c] += z.real * e.real - z.imag * e.imag


_kmax_jit = njit(_kmax)
_power_table_jit = njit(_power_table)
_eval_terms_jit = njit(_eval_terms)


def _trig_eval_loops(points, kvecs, coeffs):
    p, n = points.shape
    m = coeffs.shape[0]
    kb = _kmax_jit(kvecs)
    table = np.empty((n, 2 * kb + 1), dtype=np.complex128)
    val = np.empty(m)
    out = np.zeros((m, p))
    for a in range(p):
        _power_table_jit(points[a], kb, table)
        _eval_terms_jit(table, kb, kvecs, coeffs, val)
        for c in range(m):
            out[c, a] = val[c]
    return out


def _trig_eval_np(points, kvecs, coeffs):
    p = points.shape[0]
    out = np.empty((coeffs.shape[0], p))
    kf = kvecs.astype(np.float64).T
    cr = coeffs.real.T
    ci = coeffs.imag.T
    for s in range(0, p, _CHUNK):
        ph = TWO_PI * (points[s:s + _CHUNK] @ kf)
        out[:, s:s + _CHUNK] = (np.cos(ph) @ cr - np.sin(ph) @ ci).T
    return out


_trig_eval_jit = njit(_trig_eval_loops)


# ------------------------------------------------------------ rk4_autonomous

def _rk4_loops(points, kvecs, coeffs, dt, steps):
    p, n = points.shape
    kb = _kmax_jit(kvecs)
    table = np.empty((n, 2 * kb + 1), dtype=np.complex128)
    out = points.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    x = np.empty(n)
    y = np.empty(n)
    for a in range(p):
        for j in range(n):
            x[j] = out[a, j]
        for _ in range(steps):
            _power_table_jit(x, kb, table)
            _eval_terms_jit(table, kb, kvecs, coeffs, k1)
            for j in range(n):
                y[j] = x[j] + 0.5 * dt * k1[j]
            _power_table_jit(y, kb, table)
            _eval_terms_jit(table, kb, kvecs, coeffs, k2)
            for j in range(n):
                y[j] = x[j] + 0.5 * dt * k2[j]
            _power_table_jit(y, kb, table)
            _eval_terms_jit(table, kb, kvecs, coeffs, k3)
            for j in range(n):
                y[j] = x[j] + dt * k3[j]
            _power_table_jit(y, kb, table)
            _eval_terms_jit(table, kb, kvecs, coeffs, k4)
            for j in range(n):
                x[j] += dt * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
        for j in range(n):
            out[a, j] = x[j]
    return out


_rk4_jit = njit(_rk4_loops)


def _rk4_np(points, kvecs, coeffs, dt, steps):
    x = np.array(points, dtype=np.float64, copy=True)

    def f(y):
        return _trig_eval_np(y, kvecs, coeffs).T

    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return x


# ---------------------------------------------------------------- jacobi_sup

def _jacobi_sup_loops(lam, dets, triples, weight):
    # lam: (r, G) alternating trivector components on the grid
    # dets: (q, r) 3x3 minors of each frequency triple
    # triples: (q, 3) indices into weight; weight: (nk, G) = max(|sin|, |cos|)
    q, r = dets.shape
    g = lam.shape[1]
    best = 0.0
    for a in range(q):
        i0 = triples[a, 0]
        i1 = triples[a, 1]
        i2 = triples[a, 2]
        for x in range(g):
            s = 0.0
            for b in range(r):
                s += dets[a, b] * lam[b, x]
            v = abs(s) * weight[i0, x] * weight[i1, x] * weight[i2, x]
            if v > best:
                best = v
    return best


def _jacobi_sup_np(lam, dets, triples, weight):
    best = 0.0
    block = max(1, 2_000_000 // max(lam.shape[1], 1))
    for s in range(0, dets.shape[0], block):
        d = dets[s:s + block]
        tr = triples[s:s + block]
        vals = np.abs(d @ lam) * weight[tr[:, 0]] * weight[tr[:, 1]] * weight[tr[:, 2]]
        if vals.size:
            best = max(best, float(vals.max()))
    return best


_jacobi_sup_jit = njit(_jacobi_sup_loops)


IMPLEMENTATIONS = {
    "numba": {
        "trig_eval": _trig_eval_jit,
        "rk4_autonomous": _rk4_jit,
        "jacobi_sup": _jacobi_sup_jit,
    },
    "numpy": {
        "trig_eval": _trig_eval_np,
        "rk4_autonomous": _rk4_np,
        "jacobi_sup": _jacobi_sup_np,
    },
}

_active = IMPLEMENTATIONS["numba" if USE_NUMBA else "numpy"]


def _prep(points, kvecs, coeffs):
    points = np.ascontiguousarray(points, dtype=np.float64)
    kvecs = np.ascontiguousarray(kvecs, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    if coeffs.ndim == 1:
        coeffs = coeffs[None, :]
    return points, kvecs, coeffs


def trig_eval(points, kvecs, coeffs):
    """Evaluate ``Re sum_b coeffs[c, b] exp(2 pi i kvecs[b] . x)`` at each point.

    Returns an array of shape (m, p).
    """
    points, kvecs, coeffs = _prep(points, kvecs, coeffs)
    if kvecs.shape[0] == 0:
        return np.zeros((coeffs.shape[0], points.shape[0]))
    return _active["trig_eval"](points, kvecs, coeffs)


def rk4_autonomous(points, kvecs, coeffs, dt, steps):
    """Advance every point through ``steps`` classical RK4 steps of an autonomous field.

    ``coeffs`` has one row per coordinate of the field. Returns new positions on
    the universal cover (no reduction mod 1).
    """
    points, kvecs, coeffs = _prep(points, kvecs, coeffs)
    if kvecs.shape[0] == 0:
        return points.copy()
    return _active["rk4_autonomous"](points, kvecs, coeffs, float(dt), int(steps))


def jacobi_sup(lam, dets, triples, weight):
    """Largest ``|sum_b dets[a, b] lam[b, x]| * prod weight`` over triples and grid points."""
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    dets = np.ascontiguousarray(dets, dtype=np.float64)
    triples = np.ascontiguousarray(triples, dtype=np.int64)
    weight = np.ascontiguousarray(weight, dtype=np.float64)
    if dets.shape[0] == 0 or lam.shape[1] == 0:
        return 0.0
    return float(_active["jacobi_sup"](lam, dets, triples, weight))
