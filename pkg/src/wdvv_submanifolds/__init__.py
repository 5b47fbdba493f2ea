"""WDVV potentials, Frobenius algebras and flat torsionless submanifolds.

Submodules:

- ``potential_field``: exact polynomials, metrics, problem files
- ``frobenius_algebra``: structure constants, WDVV/associativity residuals
- ``submanifold_equations``: Gauss, Ricci, Codazzi residuals and the potential reduction
- ``lax_integrator``: transport and loop holonomy of the linear problem
- ``bonnet_builder``: frame integration and verification of the immersion
- ``hydro_flows``: hydrodynamic-type flows and their commutators
- ``cli``: the ``wdvv-sub`` command
"""
from .potential_field import (
    MetricMatrix,
    Polynomial,
    ProblemSpec,
    eval_partial,
    gradient_potentials,
    hessian,
    invert_metric,
    load_problem,
    parse_problem,
    third_tensor,
)

__all__ = [
    "MetricMatrix",
    "Polynomial",
    "ProblemSpec",
    "eval_partial",
    "gradient_potentials",
    "hessian",
    "invert_metric",
    "load_problem",
    "parse_problem",
    "third_tensor",
]
__version__ = "0.1.0"
