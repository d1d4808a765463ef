import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torflux.errors import AliasingError, BandwidthError, DimensionError, NotPoissonError
from torflux.koszul import require_poisson
from torflux.cli.suite import non_poisson_fixture
from torflux.trigcalc import (
    ExpressionError,
    OneForm,
    PoissonTensor,
    TrigPoly,
    TwoForm,
    VectorField,
    basis_functions,
    canonical_symplectic,
    directional,
    exterior_derivative,
    exterior_derivative_2,
    grid_transform,
    interior_product,
    jacobi_bruteforce,
    jacobi_residual,
    lie_derivative,
    parse_expression,
    parse_terms,
    poisson_bracket,
    poisson_pairing,
    sharp,
    to_coeffs,
    to_grid,
    tp_arith,
    tp_diff,
    tp_eval,
    tp_integrate,
)

TWO_PI = 2 * math.pi
STD_PI = PoissonTensor.constant(np.linalg.inv(canonical_symplectic(2)))


def poly(text, dim=2):
    return parse_expression(text, dim)


# ---------------------------------------------------------------- arithmetic

def test_product_to_sum():
    c = TrigPoly.cos_mode([1])
    assert tp_arith(c, c, "mul").allclose(poly("0.5 + 0.5*cos(2*pi*(2).x)", 1), atol=1e-15)


def test_additive_inverse(rng):
    f = TrigPoly.random(2, 3, rng)
    z = tp_arith(f, tp_arith(f, None, "scale", -1.0), "add")
    assert z.l1_norm() == 0.0


def test_mul_matches_pointwise_product(rng):
    a, b = TrigPoly.random(2, 3, rng), TrigPoly.random(2, 3, rng)
    pts = rng.random((64, 2))
    assert np.max(np.abs(tp_eval(a.mul(b), pts) - a(pts) * b(pts))) < 1e-13


def test_reality_is_preserved(rng):
    f = TrigPoly.random(3, 2, rng).mul(TrigPoly.random(3, 1, rng))
    assert np.max(np.abs(np.imag(np.fft.ifftn(np.fft.ifftshift(f.coeffs))))) < 1e-15
    assert f(rng.random((5, 3))).dtype == np.float64


def test_bandwidth_cap(rng):
    a = TrigPoly.random(1, 40, rng)
    with pytest.raises(BandwidthError):
        a.mul(a)
    t = a.mul(a, truncate=True)
    assert t.bandwidth == 64 and t.discarded > 0


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        TrigPoly.zero(2) + TrigPoly.zero(3)


# ----------------------------------------------------------- calculus basics

def test_diff_sin():
    assert tp_diff(TrigPoly.sin_mode([1]), 1).allclose(TrigPoly.cos_mode([1], TWO_PI), atol=1e-14)


def test_diff_constant():
    assert tp_diff(TrigPoly.constant(3, 2.5), 2).l1_norm() == 0.0


def test_diff_axis_range():
    with pytest.raises(DimensionError):
        tp_diff(TrigPoly.zero(2), 3)


def test_diff_central_difference(rng):
    # truncation error grows like (2 pi B)^3 h^2, so keep the bandwidth at 1
    f = TrigPoly.random(2, 1, rng)
    pts = rng.random((16, 2))
    h = 1e-5
    e = np.array([h, 0.0])
    fd = (f(pts + e) - f(pts - e)) / (2 * h)
    exact = tp_diff(f, 1)(pts)
    assert np.max(np.abs(fd - exact) / np.maximum(np.abs(exact), 1.0)) < 1e-8


def test_integrate():
    assert tp_integrate(TrigPoly.cos_mode([1])) == 0.0
    assert tp_integrate(poly("1.5 + cos(2*pi*(1).x)", 1)) == pytest.approx(1.5, abs=1e-15)


def test_integrate_monte_carlo(rng):
    f = TrigPoly.random(2, 2, rng)
    vals = f(rng.random((10_000, 2)))
    sigma = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - f.integrate()) < 3 * sigma


def test_grid_roundtrip(rng):
    f = TrigPoly.random(2, 4, rng)
    g, res = grid_transform(to_grid(f, 16), "to_coeffs", 16)
    assert res < 1e-13
    assert g.allclose(f, atol=1e-13)


def test_aliasing_residual_reported():
    s = to_grid(TrigPoly.cos_mode([3]), 8)
    p, res = to_coeffs(s, bandwidth=1)
    assert res > 0.1
    assert p.l1_norm() < 1e-14


def test_grid_needs_resolution():
    with pytest.raises(AliasingError):
        to_coeffs(np.zeros(8), bandwidth=4)


def test_zero_to_grid():
    assert not np.any(to_grid(TrigPoly.zero(2), 8))


def test_basis_functions_count():
    assert len(basis_functions(2, 1)) == 8


# ------------------------------------------------------------------- forms

def test_d_of_function():
    df = exterior_derivative(poly("sin(2*pi*(0,1).x)"))
    assert df[0].l1_norm() == 0.0
    assert df[1].allclose(poly("6.283185307179586*cos(2*pi*(0,1).x)"), atol=1e-14)


def test_d_squared_zero(rng):
    f = TrigPoly.random(3, 3, rng)
    # mixed partials agree up to the rounding of (c a) b versus (c b) a
    assert exterior_derivative(exterior_derivative(f)).l1_norm() < 1e-12
    theta = OneForm([TrigPoly.random(3, 2, rng) for _ in range(3)])
    d2 = exterior_derivative_2(exterior_derivative(theta))
    assert max(v.l1_norm() for v in d2.values()) < 1e-12


def test_d_constant_form():
    assert exterior_derivative(OneForm.constant([0.0, 2.0])).is_zero()


def test_interior_of_area_form():
    w = TwoForm.constant(canonical_symplectic(2))
    assert interior_product(VectorField.basis(2, 0), w).allclose(OneForm.basis(2, 1))


def test_interior_one_form_pointwise(rng):
    X = VectorField([TrigPoly.random(2, 2, rng) for _ in range(2)])
    th = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    pts = rng.random((20, 2))
    assert np.allclose(interior_product(X, th)(pts), np.sum(X(pts) * th(pts), axis=1), atol=1e-12)


def test_interior_zero_field(rng):
    w = TwoForm.from_upper(2, {(0, 1): TrigPoly.random(2, 2, rng)})
    assert interior_product(VectorField.zero(2), w).l1_norm() == 0.0


def test_lie_derivative_function(rng):
    X = VectorField([TrigPoly.random(2, 1, rng) for _ in range(2)])
    f = TrigPoly.random(2, 2, rng)
    pts = rng.random((10, 2))
    grad = np.stack([f.diff(i)(pts) for i in range(2)], axis=1)
    assert np.allclose(lie_derivative(X, f)(pts), np.sum(X(pts) * grad, axis=1), atol=1e-12)


def test_lie_derivative_cartan(rng):
    X = VectorField([TrigPoly.random(2, 1, rng) for _ in range(2)])
    f = TrigPoly.random(2, 2, rng)
    assert lie_derivative(X, exterior_derivative(f)).allclose(exterior_derivative(directional(X, f)), atol=1e-12)


def test_lie_derivative_coordinate():
    th = OneForm([TrigPoly.zero(2), poly("cos(2*pi*(1,0).x)")])
    out = lie_derivative(VectorField.basis(2, 0), th)
    assert out[0].l1_norm() < 1e-15
    assert out[1].allclose(poly("-6.283185307179586*sin(2*pi*(1,0).x)"), atol=1e-14)


# ----------------------------------------------------------------- poisson

def test_sharp_zero(rng):
    th = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    assert sharp(PoissonTensor.zero(2), th).l1_norm() == 0.0


def test_sharp_convention(rng):
    X = sharp(STD_PI, OneForm.basis(2, 0))
    # pi^12 = -1 for pi = W^-1 with W = [[0, 1], [-1, 0]]
    assert X.allclose(VectorField.basis(2, 1).scale(-1.0))
    a = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    b = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    lhs = interior_product(sharp(STD_PI, a), b)
    assert lhs.allclose(poisson_pairing(STD_PI, a, b), atol=1e-12)


def test_sharp_linear(rng):
    pi = PoissonTensor.from_upper(2, {(0, 1): TrigPoly.random(2, 1, rng)})
    a = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    b = OneForm([TrigPoly.random(2, 2, rng) for _ in range(2)])
    assert sharp(pi, a + b.scale(2.0)).allclose(sharp(pi, a) + sharp(pi, b).scale(2.0), atol=1e-12)


def test_bracket_basics(rng):
    f = TrigPoly.random(2, 2, rng)
    assert poisson_bracket(STD_PI, f, f).l1_norm() < 1e-13
    assert poisson_bracket(STD_PI, f, TrigPoly.constant(2, 3.0)).l1_norm() == 0.0


def test_bracket_coordinate_oracle():
    f, g = poly("sin(2*pi*(1,0).x)"), poly("sin(2*pi*(0,1).x)")
    expected = poly("cos(2*pi*(1,0).x)").mul(poly("cos(2*pi*(0,1).x)")).scale(-TWO_PI ** 2)
    assert poisson_bracket(STD_PI, f, g).allclose(expected, atol=1e-12)


def test_jacobi_constant_is_zero(rng):
    A = rng.standard_normal((4, 4))
    assert jacobi_residual(PoissonTensor.constant(A - A.T)) == 0.0
    assert jacobi_residual(PoissonTensor.zero(3)) == 0.0


def test_jacobi_fixture_rejected():
    pi = non_poisson_fixture()
    assert jacobi_residual(pi) > 0.1
    with pytest.raises(NotPoissonError):
        require_poisson(pi)


def test_jacobi_fixture_bruteforce_agrees():
    pi = non_poisson_fixture()
    x1, x2 = TrigPoly.sin_mode([1, 0, 0]), TrigPoly.cos_mode([0, 1, 0])
    x3 = TrigPoly.cos_mode([0, 0, 1])
    assert jacobi_bruteforce(pi, x1, x2, x3).sup_norm() > 0.1


def test_jacobi_poisson_family_is_zero(rng):
    # pi^12 depending on x3 only is Poisson on T^3 when the other entries vanish
    pi = PoissonTensor.from_upper(3, {(0, 1): poly("1 + 0.5*cos(2*pi*(0,0,1).x)", 3)})
    assert jacobi_residual(pi) < 1e-10
    f, g, h = (TrigPoly.random(3, 1, rng) for _ in range(3))
    assert jacobi_bruteforce(pi, f, g, h).sup_norm() < 1e-9


# ------------------------------------------------------------------ grammar

def test_grammar_coefficients():
    p = parse_expression("1+0.5*cos(2*pi*(1,0).x)", 2)
    assert p.coeff((0, 0)) == pytest.approx(1.0)
    assert p.coeff((1, 0)) == pytest.approx(0.25)
    assert p.coeff((-1, 0)) == pytest.approx(0.25)
    assert sum(1 for v in p.terms().values() if abs(v) > 0) == 3


def test_grammar_terms_and_errors():
    assert parse_terms("-2 + sin(2*pi*(0,1).x)", 2) == [("const", -2.0, None), ("sin", 1.0, (0, 1))]
    with pytest.raises(DimensionError):
        parse_expression("cos(2*pi*(1,0,0).x)", 2)
    with pytest.raises(ExpressionError):
        parse_expression("1 +", 2)


# -------------------------------------------------------------- properties

coeff = st.floats(-1.0, 1.0, allow_nan=False)
kvec = st.tuples(st.integers(-3, 3), st.integers(-3, 3))


@st.composite
def trig2(draw):
    terms = draw(st.lists(st.tuples(kvec, coeff, coeff), min_size=1, max_size=5))
    p = TrigPoly.zero(2)
    for k, a, b in terms:
        p = p + TrigPoly.cos_mode(k, a) + TrigPoly.sin_mode(k, b)
    return p


@settings(max_examples=40, deadline=None)
@given(trig2(), trig2(), trig2())
def test_mul_distributes(a, b, c):
    assert a.mul(b + c).allclose(a.mul(b) + a.mul(c), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(trig2(), trig2())
def test_bracket_leibniz_and_antisymmetry(f, g):
    h = f.mul(g)
    assert (poisson_bracket(STD_PI, f, g) + poisson_bracket(STD_PI, g, f)).l1_norm() < 1e-10
    lhs = poisson_bracket(STD_PI, h, f)
    rhs = poisson_bracket(STD_PI, f, f).mul(g) + poisson_bracket(STD_PI, g, f).mul(f)
    assert (lhs - rhs).l1_norm() < 1e-9


@settings(max_examples=40, deadline=None)
@given(trig2())
def test_stokes(f):
    assert abs(f.diff(0).integrate()) < 1e-15 and abs(f.diff(1).integrate()) < 1e-15


@settings(max_examples=30, deadline=None)
@given(trig2(), st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=8))
def test_grid_eval_agrees_with_pointwise(f, pts):
    pts = np.array(pts)
    samples = to_grid(f, 8)
    back, res = to_coeffs(samples)
    assert res < 1e-12
    assert np.allclose(back(pts), f(pts), atol=1e-12)
