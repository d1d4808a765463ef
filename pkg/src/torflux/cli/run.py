"""Execute scenario tasks through every available pipeline."""
from __future__ import annotations

import numpy as np

from ..errors import TorfluxError
from ..flows import ConstantIsotopy, ShearIsotopy, TranslationIsotopy, exp_bisection_path, hamiltonian_isotopy
from ..groupoid import (
    GroupoidModel,
    closed_form_flux,
    endpoint_bisection,
    flux_details,
    flux_via_lambda,
    generator_loops,
    holonomy_details,
    lambda_map,
    rho,
    theta_t,
)
from ..koszul import CohomologyClass, mu_matrix, pairing_mu, pairing_sigma, sigma_mu_ratio
from ..trigcalc import exterior_derivative
from .report import agreement, circle_agreement, empty_report
from .scenario import Scenario, form_value, poly_value

CONVENTIONS = {
    "sharp": "<pi#(a), b> = pi(a, b), (pi# a)^j = sum_i pi^ij a_i",
    "interior": "(X _| w)_j = sum_i X^i w_ij",
    "symplectic_form": "w = sum_{i<j} W_ij dx_i ^ dx_j, pi = W^-1",
    "bisection": "L(x) = (x + u/2, -u), alpha(x, p) = x - p/2, beta(x, p) = x + p/2, Ad_L = id + u",
    "theta_t": "theta_t = V_t _| w with V_t the Eulerian velocity of psi_t",
    "cohomology_chart": "[theta] -> zero modes in the basis [dx_i]",
    "cocycle_chart": "[dx_i] -> [J_i], J_i(x, p) = p_i",
    "mu_action": "mu(c) = M c with M_ij = integral of pi^ij",
    "holonomy": "Phi_L(gamma) = integral over L(gamma) of (W p) . dX mod 1",
    "central_extension_identification": "(-df, f) -> -f carries the bracket to +{f, g}",
}


def settings(sc: Scenario, overrides: dict | None = None) -> dict:
    o = overrides or {}
    return {
        "steps": int(o.get("steps") or sc.setting("numerics", "steps")),
        "grid": int(o.get("grid") or sc.setting("space", "grid")),
        "tolerance": float(o.get("tolerance") or sc.setting("numerics", "tolerance")),
        "holonomy_nodes": int(sc.setting("numerics", "holonomy_nodes")),
        "bandwidth_cap": int(sc.setting("space", "bandwidth_cap")),
        "quadrature": sc.setting("numerics", "quadrature"),
    }


def build_model(sc: Scenario) -> GroupoidModel:
    if sc.is_symplectic():
        return GroupoidModel.symplectic_torus(sc.omega())
    return GroupoidModel.zero_poisson(sc.dim)


def build_isotopy(sc: Scenario, task: dict, model: GroupoidModel, cfg: dict):
    dim = sc.dim
    kind = task["isotopy"]
    if kind == "identity":
        return ConstantIsotopy(dim)
    if kind == "translation":
        return TranslationIsotopy(task["c"])
    if kind == "shear":
        return ShearIsotopy(task["axis"] - 1, poly_value(task.get("g", 0.0), dim))
    if kind == "hamiltonian":
        return hamiltonian_isotopy(model.pi, poly_value(task.get("f", 0.0), dim),
                                   steps=cfg["steps"], grid=cfg["grid"])
    if kind == "closed_form":
        return exp_bisection_path(form_value(task["theta"], dim), model, steps=cfg["steps"], grid=cfg["grid"])
    raise ValueError(f"unknown isotopy kind {kind!r}")


def _closedness(model, iso, samples=5):
    worst = 0.0
    for t in np.linspace(0.0, 1.0, samples):
        th = theta_t(model, iso, float(t), check=False)
        if th.dim > 1:
            worst = max(worst, exterior_derivative(th).l1_norm())
    return worst


def run_flux(sc, task, cfg):
    model = build_model(sc)
    iso = build_isotopy(sc, task, model, cfg)
    tol = float(task.get("tolerance", cfg["tolerance"]))
    fd = flux_details(model, iso, steps=cfg["steps"], tol=max(tol, 1e-8))
    F = fd["class"]
    L = endpoint_bisection(model, iso)
    Fl = flux_via_lambda(model, L)
    Fc = closed_form_flux(model, L)
    values = {
        "time_integral_flux": F.coeffs,
        "endpoint_flux": Fl.coeffs,
        "closed_form_flux": Fc.coeffs,
        "lambda_endpoint": lambda_map(model, L),
        "mu_times_flux": mu_matrix(model.pi) @ F.coeffs,
        "theta_closedness": _closedness(model, iso),
        "quadrature_halving_change": fd["halving_change"],
        "endpoint_lagrangian_residual": L.gate_residual,
        "endpoint_interpolation_residual": L.lift.residual,
    }
    agreements = [
        agreement("time_integral-endpoint", F.coeffs, Fl.coeffs, tol),
        agreement("time_integral-closed_form", F.coeffs, Fc.coeffs, tol),
        agreement("endpoint-closed_form", Fl.coeffs, Fc.coeffs, tol),
        agreement("mu_flux-lambda", values["mu_times_flux"], values["lambda_endpoint"], tol),
    ]
    for i, w in enumerate(generator_loops(model.dim)):
        phi = holonomy_details(model, L, w, quad=cfg["holonomy_nodes"])["value"]
        values[f"phi_loop_{i + 1}"] = phi
        values[f"rho_flux_loop_{i + 1}"] = rho(F, w)
        agreements.append(circle_agreement(f"rho_flux-phi_loop_{i + 1}", rho(F, w), phi, tol))
    return iso, values, agreements


def run_holonomy(sc, task, cfg):
    model = build_model(sc)
    iso = build_isotopy(sc, task, model, cfg)
    tol = float(task.get("tolerance", cfg["tolerance"]))
    L = endpoint_bisection(model, iso)
    w = np.asarray(task["loop"], dtype=float)
    hd = holonomy_details(model, L, w, base=task.get("base"), quad=cfg["holonomy_nodes"])
    F = flux_details(model, iso, steps=cfg["steps"], tol=max(tol, 1e-8))["class"]
    values = {"phi": hd["value"], "rho_flux": rho(F, w), "quadrature_nodes": hd["nodes"],
              "quadrature_change": hd["change"]}
    return iso, values, [circle_agreement("rho_flux-phi", values["rho_flux"], hd["value"], tol)]


def _pair_arg(v, dim):
    if v is None:
        return None
    if all(isinstance(x, (int, float)) for x in v):
        return CohomologyClass(v)
    return form_value(v, dim)


def run_pair(sc, task, cfg):
    tol = float(task.get("tolerance", 1e-12))
    pairing = task.get("pairing", "mu")
    pi = sc.poisson()
    M = mu_matrix(pi)
    values = {"mu_matrix": M}
    agreements = [agreement("mu-(-mu^T)", M, -M.T, tol)]
    a = _pair_arg(task.get("a"), sc.dim)
    b = _pair_arg(task.get("b"), sc.dim)
    if sc.is_symplectic():
        ratio, spread = sigma_mu_ratio(sc.omega())
        values["sigma_over_mu"] = ratio
        agreements.append({"between": "sigma_mu_ratio_spread", "deviation": spread,
                           "tolerance": 1e-10, "pass": bool(spread <= 1e-10)})
        values["mu_determinant"] = float(np.linalg.det(M))
    if a is not None and b is not None:
        f = pairing_mu if pairing == "mu" else (lambda _pi, x, y: pairing_sigma(sc.omega(), x, y))
        ab = f(pi, a, b)
        ba = f(pi, b, a)
        values["value"] = ab
        agreements.append(agreement("pair(a,b)+pair(b,a)", ab, -ba, tol))
    return None, values, agreements


def run_task(sc: Scenario, task: dict, cfg: dict) -> dict:
    kind = task["type"]
    out = {"index": task["index"], "type": kind}
    runner = {"flux": run_flux, "holonomy": run_holonomy, "pair": run_pair}.get(kind)
    if runner is None:  # verify tasks are handled by the caller
        return out
    try:
        iso, values, agreements = runner(sc, task, cfg)
    except TorfluxError as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
        out["pass"] = False
        return out
    if iso is not None:
        out["isotopy"] = iso.describe()
    out["values"] = values
    out["agreements"] = agreements
    out["pass"] = all(a["pass"] for a in agreements)
    return out


def run_scenario(sc: Scenario, overrides: dict | None = None, suite_runner=None) -> dict:
    """Run every task in index order; ``verify`` tasks call ``suite_runner``."""
    cfg = settings(sc, overrides)
    report = empty_report({"settings": cfg, "conventions": CONVENTIONS,
                           "notes": "time-integral flux is the definition; endpoint mu^-1 lambda is the oracle"})
    for task in sc.tasks:
        if task["type"] == "verify":
            if suite_runner is not None:
                report["suite"] = suite_runner(sc)
            report["tasks"].append({"index": task["index"], "type": "verify",
                                    "pass": bool(report["suite"] and report["suite"]["pass"])})
            continue
        report["tasks"].append(run_task(sc, task, cfg))
    return report


def explain_task(task: dict) -> str:
    """Plain description of the formulas a task evaluates."""
    kind = task.get("type")
    if kind == "flux":
        return ("flux task\n"
                "  time integral:  F = integral_0^1 [theta_t] dt, theta_t = V_t _| w,"
                " V_t the Eulerian velocity of psi_t\n"
                "  endpoint:       F = mu^-1 lambda(L_1), lambda_i = integral of p_i(L_1(x)) dx\n"
                "  closed form:    F = W . integral of (x - psi_1(x)) dx\n"
                "  holonomy check: rho(F)(gamma) = Phi_{L_1}(gamma) mod 1 for each generator loop")
    if kind == "holonomy":
        return ("holonomy task\n"
                "  Phi_L(gamma) = integral over L(gamma) of (W p) . dX mod 1 (connection vanishing on the units)\n"
                "  compared with rho(F)(gamma) = F . w mod 1")
    if kind == "pair":
        return ("pair task\n"
                "  mu: <[t1], [t2]> = integral of pi(t1, t2) dx\n"
                "  sigma: integral of t1 ^ t2 ^ w^(m-1); on symplectic tori sigma = r mu for one constant r")
    if kind == "verify":
        return "verify task\n  runs the invariant suite of every module and reports each residual"
    return f"unknown task type {kind!r}"
