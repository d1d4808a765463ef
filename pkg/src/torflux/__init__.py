"""Flux of lagrangian bisection paths on flat symplectic tori.

Subpackages: ``trigcalc`` (spectral calculus), ``koszul`` (bracket on one-forms
and invariant pairings), ``flows`` (torus diffeomorphisms and isotopies),
``groupoid`` (bisections, flux, integral maps and holonomy) and ``cli``.
"""
__version__ = "0.1.0"

from ._accel import backend_name
from .errors import (
    AliasingError,
    BandwidthError,
    DegenerateFormError,
    DimensionError,
    EndpointMismatchError,
    LagrangianGateError,
    NotClosedError,
    NotPoissonError,
    QuadratureError,
    TorfluxError,
)
from .trigcalc import OneForm, PoissonTensor, TrigPoly, TwoForm, VectorField, parse_expression
from .koszul import CohomologyClass, koszul_bracket, mu_matrix, pairing_mu, pairing_sigma
from .flows import MapLift, ShearIsotopy, TranslationIsotopy, hamiltonian_isotopy, then
from .groupoid import (
    GroupoidModel,
    endpoint_bisection,
    epsilon,
    flux,
    flux_via_lambda,
    holonomy_phi,
    lambda_map,
    rho,
)

__all__ = [
    "AliasingError", "BandwidthError", "CohomologyClass", "DegenerateFormError", "DimensionError",
    "EndpointMismatchError", "GroupoidModel", "LagrangianGateError", "MapLift", "NotClosedError",
    "NotPoissonError", "OneForm", "PoissonTensor", "QuadratureError", "ShearIsotopy", "TorfluxError",
    "TranslationIsotopy", "TrigPoly", "TwoForm", "VectorField", "backend_name", "endpoint_bisection",
    "epsilon", "flux", "flux_via_lambda", "hamiltonian_isotopy", "holonomy_phi", "koszul_bracket",
    "lambda_map", "mu_matrix", "pairing_mu", "pairing_sigma", "parse_expression", "rho", "then",
]
