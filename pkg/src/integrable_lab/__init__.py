"""Verification toolkit for a family of 1+1 and 2+1 integrable evolution
equations: exact operator-commutator checks, singularity-structure analysis,
multi-soliton solution construction, and quadrature-backed residual sweeps.
"""

__version__ = "0.1.0"

from .expr import (EvaluationPoint, Expression, PoleError, SampleBox,
                   differentiate, equivalent_on_samples, evaluate)
from .quadrature import NonConvergence, QuadConfig, antiderivative_on_path
from .scalars import SIGMA, SigmaRational
from .tau import (DegenerateWavenumbers, SolitonParams, SolutionBundle, TauPair,
                  build_ckdv_solution, build_h_polynomial, build_lambda,
                  build_mkdv_solution, build_tau_pair, check_integral_identity,
                  eta_coefficients, eta_pair)

__all__ = [
    "EvaluationPoint", "Expression", "PoleError", "SampleBox", "differentiate",
    "equivalent_on_samples", "evaluate", "NonConvergence", "QuadConfig",
    "antiderivative_on_path", "SIGMA", "SigmaRational", "DegenerateWavenumbers",
    "SolitonParams", "SolutionBundle", "TauPair", "build_ckdv_solution",
    "build_h_polynomial", "build_lambda", "build_mkdv_solution",
    "build_tau_pair", "check_integral_identity", "eta_coefficients", "eta_pair",
    "__version__",
]
