"""Acceptance criteria: one PASS/FAIL line per criterion, tolerances pinned below."""
import time

import numpy as np
import pytest

from torflux.cli.suite import _Suite, algebra_checks, homomorphism_checks, pairing_checks, standard_structures
from torflux.flows import ShearIsotopy, TranslationIsotopy, exp_bisection_path, hamiltonian_isotopy, symplecto_residual
from torflux.groupoid import (
    GroupoidModel,
    circle_distance,
    closed_form_flux,
    endpoint_bisection,
    exactness_verdict,
    flux,
    flux_via_lambda,
    generator_loops,
    holonomy_phi,
    is_isotropy,
    lambda_map,
    lattice_translation_isotopy,
    prefix_flux,
    rho,
)
from torflux.koszul import CohomologyClass
from torflux.trigcalc import OneForm, parse_expression

TRANSLATION_TOL = 1e-9
TRANSLATION_SECONDS = 1.0
SHEAR_SYMPLECTO_TOL = 1e-12
SHEAR_TOL = 1e-6
SHEAR_IMPROVEMENT = 10.0
SHEAR_FLOOR = 1e-14
SHEAR_SECONDS = 10.0
PREFIX_TOL = 1e-8
PHI_TOL = 1e-6
EXP_PREFIX_TOL = 1e-7
RHO_PHI_TOL = 1e-6
JACOBI_TOL = 1e-9
ANCHOR_TOL = 1e-10
B1_TOL = 1e-10
CENTRAL_TOL = 1e-9
ALGEBRA_SECONDS = 60.0
PAIRING_EXACT_TOL = 1e-12
SIGMA_SPREAD_TOL = 1e-10
HOMOMORPHISM_TOL = 1e-7


@pytest.fixture(scope="module")
def model():
    return GroupoidModel.symplectic_torus()


@pytest.fixture
def verdict_line(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return emit


def pipelines(model, iso, steps):
    F = flux(model, iso, steps=steps)
    L = endpoint_bisection(model, iso)
    Fl, Fc = flux_via_lambda(model, L), closed_form_flux(model, L)
    return max(F.distance(Fl), F.distance(Fc), Fl.distance(Fc)), F, L


def shear_iso():
    return ShearIsotopy(0, parse_expression("0.1*sin(2*pi*(0,1).x) + 0.05", 2))


def test_translation_closed_form(model, verdict_line):
    t0 = time.perf_counter()
    dev, F, _ = pipelines(model, TranslationIsotopy([0.3, -0.2]), 200)
    dt = time.perf_counter() - t0
    ok = dev < TRANSLATION_TOL and dt < TRANSLATION_SECONDS
    verdict_line("translation closed form", ok,
                 f"flux {F.coeffs.tolist()}, pairwise deviation {dev:.2e} < {TRANSLATION_TOL:.0e}, "
                 f"{dt:.3f} s < {TRANSLATION_SECONDS} s")


def test_shear_closed_form(model, verdict_line):
    t0 = time.perf_counter()
    iso = shear_iso()
    sym = max(symplecto_residual(model.omega, iso.lift(float(t))) for t in np.linspace(0.0, 1.0, 101))
    dev200, _, _ = pipelines(model, iso, 200)
    dev2000, _, _ = pipelines(model, iso, 2000)
    dt = time.perf_counter() - t0
    improved = dev2000 <= max(dev200 / SHEAR_IMPROVEMENT, SHEAR_FLOOR)
    ok = sym < SHEAR_SYMPLECTO_TOL and dev200 < SHEAR_TOL and improved and dt < SHEAR_SECONDS
    verdict_line("shear closed form", ok,
                 f"symplecto {sym:.2e}, deviation {dev200:.2e} at 200 steps, {dev2000:.2e} at 2000 steps "
                 f"(improvement or roundoff floor {SHEAR_FLOOR:.0e}), {dt:.2f} s")


def test_hamiltonian_path_criterion(model, verdict_line):
    f = parse_expression("0.2*sin(2*pi*(1,1).x)", 2)
    rep = exactness_verdict(model, hamiltonian_isotopy(model.pi, f), samples=11)
    exp = exp_bisection_path(OneForm.basis(2, 0), model)
    exp_dev = max(prefix_flux(model, exp, T).distance(CohomologyClass([T, 0.0])) for T in (0.25, 0.5, 0.75, 1.0))
    ok = (rep["max_prefix_flux"] < PREFIX_TOL and rep["phi_max_distance_from_zero"] < PHI_TOL
          and exp_dev < EXP_PREFIX_TOL)
    verdict_line("hamiltonian path criterion", ok,
                 f"max prefix flux {rep['max_prefix_flux']:.2e}, endpoint phi {rep['phi_max_distance_from_zero']:.2e}, "
                 f"exp(t dx) prefix deviation {exp_dev:.2e}")


def test_rho_flux_equals_phi(model, verdict_line):
    worst = 0.0
    for iso in (TranslationIsotopy([0.3, -0.2]), shear_iso()):
        F = flux(model, iso)
        L = endpoint_bisection(model, iso)
        for w in generator_loops(2):
            worst = max(worst, circle_distance(rho(F, w), holonomy_phi(model, L, w)))
    verdict_line("rho of flux equals phi", worst < RHO_PHI_TOL, f"worst |rho(F) - phi| mod 1 {worst:.2e}")


def _worst(checks, key):
    picked = [c for c in checks if key in c["name"]]
    assert picked, key
    return max(c.get("residual", np.inf) for c in picked), all(c["pass"] for c in picked)


def test_algebra_suite(verdict_line):
    s = _Suite()
    t0 = time.perf_counter()
    algebra_checks(s, np.random.default_rng(7), standard_structures(), triples=20)
    dt = time.perf_counter() - t0
    parts = {key: _worst(s.checks, key) for key in
             ("d_homomorphism", "jacobi.", "anchor_morphism", "Z1_bracket_in_B1", "central_extension_jacobi")}
    bounds = {"jacobi.": JACOBI_TOL, "anchor_morphism": ANCHOR_TOL, "Z1_bracket_in_B1": B1_TOL,
              "central_extension_jacobi": CENTRAL_TOL}
    ok = all(p for _, p in parts.values()) and all(parts[k][0] < v for k, v in bounds.items())
    ok = ok and dt < ALGEBRA_SECONDS
    detail = ", ".join(f"{k.rstrip('.')} {v[0]:.2e}" for k, v in parts.items())
    verdict_line("algebra suite", ok, f"{detail}, {dt:.1f} s")


def test_pairing_suite(verdict_line):
    s = _Suite()
    pairing_checks(s, np.random.default_rng(11), standard_structures())
    exact, e_ok = _worst(s.checks, "mu_exact_pairs_zero")
    skew, k_ok = _worst(s.checks, "mu_skew")
    spread, p_ok = _worst(s.checks, "sigma_proportional_mu")
    _, inv_ok = _worst(s.checks, "mu_invertible")
    ok = e_ok and k_ok and p_ok and inv_ok and exact < PAIRING_EXACT_TOL and spread < SIGMA_SPREAD_TOL
    verdict_line("pairing suite", ok,
                 f"exact pairing {exact:.2e}, skew {skew:.2e}, sigma/mu spread {spread:.2e}, invertible {inv_ok}")


def test_homomorphism_suite(verdict_line):
    s = _Suite()
    homomorphism_checks(s, np.random.default_rng(13), pairs=10)
    parts = {key: _worst(s.checks, key) for key in ("flux_homomorphism", "epsilon_homomorphism", "phi_cocycle")}
    ok = all(p and r < HOMOMORPHISM_TOL for r, p in parts.values())
    verdict_line("homomorphism suite", ok, ", ".join(f"{k} {v[0]:.2e}" for k, v in parts.items()))


def test_lattice_loop_capture(model, verdict_line):
    iso = lattice_translation_isotopy(2, 0)
    F = flux(model, iso).coeffs
    L = endpoint_bisection(model, iso)
    lam = lambda_map(model, L)
    generator = np.max(np.abs(F - np.round(F))) < 1e-12 and sorted(np.abs(np.round(F))) == [0.0, 1.0]
    ok = bool(generator and is_isotropy(L) and np.max(np.abs(lam)) > 0.5)
    verdict_line("lattice loop capture", ok,
                 f"flux {F.tolist()}, isotropy {is_isotropy(L)}, lambda {lam.tolist()}")
