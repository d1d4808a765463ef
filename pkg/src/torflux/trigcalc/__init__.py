"""Spectral calculus on the flat torus: trigonometric polynomials, forms, Poisson tensors."""
from .trigpoly import (
    DEFAULT_BANDWIDTH_CAP,
    TrigPoly,
    basis_functions,
    grid_points,
    grid_transform,
    to_coeffs,
    to_grid,
    tp_arith,
    tp_diff,
    tp_eval,
    tp_integrate,
)
from .grammar import ExpressionError, parse_expression, parse_terms
from .forms import (
    OneForm,
    PoissonTensor,
    TwoForm,
    VectorField,
    canonical_symplectic,
    commutator,
    const_one_form,
    const_two_form,
    const_wedge,
    directional,
    exterior_derivative,
    exterior_derivative_2,
    flipped_sharp,
    hamiltonian_field,
    interior_product,
    jacobi_bruteforce,
    jacobi_residual,
    jacobiator_tensor,
    lie_derivative,
    poisson_bracket,
    poisson_pairing,
    sharp,
    top_coefficient,
)
