import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torflux.cli.suite import non_poisson_fixture
from torflux.errors import DegenerateFormError, DimensionError, NotClosedError, NotPoissonError
from torflux.koszul import (
    CohomologyClass,
    ExtElement,
    anchor_residual,
    central_ext_bracket,
    central_jacobi_residual,
    cohomology_class,
    exact_sequence_report,
    homomorphism_residual,
    induced_function_bracket_sign,
    koszul_bracket,
    koszul_jacobi_residual,
    mu_matrix,
    pairing_mu,
    pairing_sigma,
    random_closed_form,
    sigma_matrix,
    sigma_mu_ratio,
)
from torflux.trigcalc import (
    OneForm,
    PoissonTensor,
    TrigPoly,
    canonical_symplectic,
    exterior_derivative,
    flipped_sharp,
    parse_expression,
    poisson_bracket,
)
from torflux.trigcalc.trigpoly import grid_points


def std_pi(n=2):
    return PoissonTensor.constant(np.linalg.inv(canonical_symplectic(n)))


def test_zero_tensor_bracket(rng):
    a = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    b = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    assert koszul_bracket(PoissonTensor.zero(2), a, b).l1_norm() == 0.0


@pytest.mark.parametrize("n", [2, 4])
def test_d_is_homomorphism(rng, n):
    pi = std_pi(n)
    f, g = TrigPoly.random(n, 2, rng), TrigPoly.random(n, 2, rng)
    scale = exterior_derivative(poisson_bracket(pi, f, g)).l1_norm()
    assert homomorphism_residual(pi, f, g) < 1e-14 * scale


def _spectral_grad(samples):
    n = samples.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    c = np.fft.fft2(samples)
    return [np.real(np.fft.ifft2(2j * np.pi * k[:, None] * c)),
            np.real(np.fft.ifft2(2j * np.pi * k[None, :] * c))]


def test_bracket_grid_oracle():
    # term-by-term assembly of L_{X_w} t - L_{X_t} w - d pi(w, t) on a 64^2 grid
    P = np.linalg.inv(canonical_symplectic(2))
    n = 64
    x = np.arange(n)[:, None] / n + np.zeros((1, n))
    w = [np.zeros((n, n)), np.cos(2 * np.pi * x)]
    t = [np.ones((n, n)), np.zeros((n, n))]

    def sharp_(a):
        return [sum(P[i, j] * a[i] for i in range(2)) for j in range(2)]

    def lie(X, a):
        ga = [_spectral_grad(c) for c in a]
        gX = [_spectral_grad(c) for c in X]
        return [sum(X[i] * ga[j][i] + a[i] * gX[i][j] for i in range(2)) for j in range(2)]

    pair = sum(P[i, j] * w[i] * t[j] for i in range(2) for j in range(2))
    gp = _spectral_grad(pair)
    lw, lt = lie(sharp_(w), t), lie(sharp_(t), w)
    oracle = [lw[j] - lt[j] - gp[j] for j in range(2)]

    omega = OneForm([TrigPoly.zero(2), parse_expression("cos(2*pi*(1,0).x)", 2)])
    out = koszul_bracket(std_pi(), omega, OneForm.basis(2, 0))(grid_points(n, 2))
    err = max(np.max(np.abs(out[:, j] - oracle[j].ravel())) for j in range(2))
    assert err < 1e-10


def test_bracket_gate_and_dims():
    th = OneForm.basis(3, 0)
    with pytest.raises(NotPoissonError):
        koszul_bracket(non_poisson_fixture(), th, th)
    with pytest.raises(DimensionError):
        koszul_bracket(std_pi(), th, th)


def test_cohomology_class_examples(rng):
    f = TrigPoly.random(2, 3, rng)
    assert cohomology_class(exterior_derivative(f)).norm() == 0.0
    assert np.allclose(cohomology_class(OneForm.constant([3.0, -1.0])).coeffs, [3.0, -1.0])
    th = OneForm([TrigPoly.constant(2, 1.0) + parse_expression("cos(2*pi*(1,0).x)", 2), TrigPoly.zero(2)])
    assert cohomology_class(th).coeffs[0] == pytest.approx(1.0)


def test_cohomology_class_rejects_non_closed():
    th = OneForm([parse_expression("cos(2*pi*(1,1).x)", 2), TrigPoly.zero(2)])
    with pytest.raises(NotClosedError) as exc:
        cohomology_class(th)
    assert exc.value.residual > 1.0


def test_mu_matrix_is_constant_part(rng):
    P = np.linalg.inv(canonical_symplectic(2))
    M = mu_matrix(std_pi())
    assert np.max(np.abs(M - P)) < 1e-12
    assert np.array_equal(M, -M.T)


def test_mu_exact_and_skew(rng):
    pi = std_pi()
    for _ in range(5):
        f = TrigPoly.random(2, 3, rng)
        th = random_closed_form(2, 2, rng)
        assert abs(pairing_mu(pi, exterior_derivative(f), th)) < 1e-12
        c = CohomologyClass(rng.standard_normal(2))
        assert abs(pairing_mu(pi, c, c)) < 1e-15


def test_sigma_t2():
    W = canonical_symplectic(2)
    assert abs(pairing_sigma(W, CohomologyClass([1, 0]), CohomologyClass([0, 1]))) == pytest.approx(1.0)
    c = CohomologyClass([0.3, 0.7])
    assert abs(pairing_sigma(W, c, c)) < 1e-15


def test_sigma_proportional_to_mu_t4():
    ratio, spread = sigma_mu_ratio(canonical_symplectic(4))
    assert spread < 1e-10
    S = sigma_matrix(canonical_symplectic(4))
    assert np.allclose(S, ratio * mu_matrix(std_pi(4)), atol=1e-12)


def test_sigma_rejects_odd_and_degenerate():
    with pytest.raises(DimensionError):
        sigma_matrix(np.zeros((3, 3)))
    with pytest.raises(DegenerateFormError):
        sigma_matrix(np.zeros((2, 2)))


@pytest.mark.parametrize("n", [2, 4])
def test_koszul_jacobi(rng, n):
    pi = std_pi(n)
    worst = max(koszul_jacobi_residual(pi, *(random_closed_form(n, 1, rng) for _ in range(3)))
                for _ in range(5))
    assert worst < 1e-9


def test_koszul_jacobi_non_constant_poisson(rng):
    # x3-dependent pi^12 on T^3 is Poisson, so Jacobi holds on arbitrary one-forms
    pi = PoissonTensor.from_upper(3, {(0, 1): parse_expression("1 + 0.5*cos(2*pi*(0,0,1).x)", 3)})
    forms = [OneForm([TrigPoly.random(3, 1, rng) for _ in range(3)]) for _ in range(3)]
    assert koszul_jacobi_residual(pi, *forms) < 1e-9


def test_anchor_morphism_and_mutation(rng):
    pi = std_pi()
    a, b = random_closed_form(2, 2, rng), random_closed_form(2, 2, rng)
    assert anchor_residual(pi, a, b) < 1e-10
    with flipped_sharp():
        assert anchor_residual(pi, a, b) > 1e-10
    assert anchor_residual(pi, a, b) < 1e-10


def test_bracket_of_closed_is_exact(rng):
    pi = std_pi()
    for _ in range(5):
        br = koszul_bracket(pi, random_closed_form(2, 2, rng), random_closed_form(2, 2, rng))
        assert cohomology_class(br, tol=1e-10).norm() < 1e-10


def test_central_extension_center(rng):
    pi = std_pi()
    one = ExtElement.constant(2, 1.0)
    b = ExtElement(random_closed_form(2, 2, rng), TrigPoly.random(2, 2, rng))
    out = central_ext_bracket(pi, one, b)
    assert out.l1_norm() < 1e-13


def test_central_extension_identification(rng):
    f, g = TrigPoly.random(2, 2, rng), TrigPoly.random(2, 2, rng)
    sign, res = induced_function_bracket_sign(std_pi(), f, g)
    assert sign == 1 and res < 1e-11
    zero = central_ext_bracket(PoissonTensor.zero(2), ExtElement.from_function(f), ExtElement.from_function(g))
    assert zero.l1_norm() == 0.0


def test_central_extension_antisymmetric_and_jacobi(rng):
    pi = std_pi()
    els = [ExtElement(OneForm([TrigPoly.random(2, 1, rng) for _ in range(2)]), TrigPoly.random(2, 1, rng))
           for _ in range(3)]
    ab = central_ext_bracket(pi, els[0], els[1])
    ba = central_ext_bracket(pi, els[1], els[0])
    assert (ab + ba).l1_norm() < 1e-12
    assert central_jacobi_residual(pi, *els) < 1e-9


def test_exact_sequence_report():
    rep = exact_sequence_report(std_pi())
    assert rep["nonconstant_not_in_ker_d"] > 1.0
    assert all(v < 1e-10 for k, v in rep.items() if k != "nonconstant_not_in_ker_d")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bracket_antisymmetry_property(seed):
    rng = np.random.default_rng(seed)
    pi = std_pi()
    a = OneForm([TrigPoly.random(2, 1, rng) for _ in range(2)])
    b = OneForm([TrigPoly.random(2, 1, rng) for _ in range(2)])
    assert (koszul_bracket(pi, a, b) + koszul_bracket(pi, b, a)).l1_norm() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mu_bilinear_representative_independent(seed):
    rng = np.random.default_rng(seed)
    pi = std_pi()
    a, b = random_closed_form(2, 2, rng), random_closed_form(2, 2, rng)
    f = TrigPoly.random(2, 2, rng)
    assert pairing_mu(pi, a + exterior_derivative(f), b) == pytest.approx(pairing_mu(pi, a, b), abs=1e-12)
    assert pairing_mu(pi, a, b) == pytest.approx(-pairing_mu(pi, b, a), abs=1e-12)
    assert poisson_bracket(pi, f, f).l1_norm() < 1e-12
