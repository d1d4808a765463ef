import os
import subprocess
import sys

import numpy as np
import pytest

from torflux import _accel, kernels
from torflux.trigcalc import PoissonTensor, TrigPoly, canonical_symplectic, hamiltonian_field, jacobi_residual
from torflux.trigcalc.trigpoly import sparse_terms

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _field(rng, bandwidth=3):
    pi = PoissonTensor.constant(np.linalg.inv(canonical_symplectic(2)))
    return sparse_terms(hamiltonian_field(pi, TrigPoly.random(2, bandwidth, rng, scale=0.05)).comps)


def test_trig_eval_backends_agree(rng):
    kv, cf = _field(rng)
    pts = rng.random((200, 2))
    a = kernels.IMPLEMENTATIONS["numba"]["trig_eval"](pts, kv, cf)
    b = kernels.IMPLEMENTATIONS["numpy"]["trig_eval"](pts, kv, cf)
    assert np.max(np.abs(a - b)) < 1e-13


def test_trig_eval_matches_poly(rng):
    f = TrigPoly.random(3, 2, rng)
    pts = rng.random((50, 3))
    kv, cf = sparse_terms([f])
    assert np.allclose(kernels.trig_eval(pts, kv, cf)[0], f(pts), atol=1e-13)


def test_rk4_backends_agree(rng):
    kv, cf = _field(rng)
    pts = rng.random((100, 2))
    a = kernels.IMPLEMENTATIONS["numba"]["rk4_autonomous"](pts, kv, cf, 0.01, 100)
    b = kernels.IMPLEMENTATIONS["numpy"]["rk4_autonomous"](pts, kv, cf, 0.01, 100)
    assert np.max(np.abs(a - b)) < 1e-10


def test_jacobi_sup_backends_agree(rng):
    lam = rng.standard_normal((4, 30))
    dets = rng.standard_normal((7, 4))
    triples = rng.integers(0, 5, size=(7, 3))
    weight = rng.random((5, 30))
    a = kernels.IMPLEMENTATIONS["numba"]["jacobi_sup"](lam, dets, triples, weight)
    b = kernels.IMPLEMENTATIONS["numpy"]["jacobi_sup"](lam, dets, triples, weight)
    assert a == pytest.approx(b, rel=1e-13)


def test_empty_inputs():
    pts = np.zeros((3, 2))
    kv = np.zeros((0, 2), dtype=np.int64)
    cf = np.zeros((2, 0), dtype=complex)
    assert np.array_equal(kernels.rk4_autonomous(pts, kv, cf, 0.1, 3), pts)
    assert kernels.trig_eval(pts, kv, cf).shape == (2, 3)


SNIPPET = """
import numpy as np
from torflux import backend_name
from torflux.cli.suite import non_poisson_fixture
from torflux.trigcalc import jacobi_residual
from torflux.flows import advect_map
from torflux.trigcalc import PoissonTensor, TrigPoly, canonical_symplectic, hamiltonian_field
pi = PoissonTensor.constant(np.linalg.inv(canonical_symplectic(2)))
f = TrigPoly.random(2, 1, np.random.default_rng(5), scale=0.02, zero_mean=True)
psi = advect_map(hamiltonian_field(pi, f), 0.0, 1.0, 40, grid=64)
print(backend_name(), repr(jacobi_residual(non_poisson_fixture())), repr(float(psi.u[0].coeffs.real.sum())))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop(_accel.DISABLE_ENV, None)
    if disable:
        env[_accel.DISABLE_ENV] = "1"
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_env_flag_switches_backend_with_same_results():
    fast = _run(False)
    slow = _run(True)
    assert fast[0] == "numba" and slow[0] == "numpy"
    assert float(fast[1]) == pytest.approx(float(slow[1]), rel=1e-12)
    assert float(fast[2]) == pytest.approx(float(slow[2]), abs=1e-12)


def test_in_process_residual_matches_backend():
    from torflux.cli.suite import non_poisson_fixture

    assert jacobi_residual(non_poisson_fixture()) > 0.1
