"""Numerical laboratory for weighted (N-Bakry-Emery) Lorentzian geometry.

Modules:

* :mod:`bakrylab.geometry`: warped/twisted products, Ric^N_f, TCD checks
* :mod:`bakrylab.congruence`: weight profiles, the s-parameter, f-Raychaudhuri integration
* :mod:`bakrylab.focusing`: focusing-time bounds and theorem hypothesis checkers
* :mod:`bakrylab.mcflow`: scalar (lambda, f)-mean-curvature flow and rigidity terms
* :mod:`bakrylab.cli`: scenario runner
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    ConstantCurvatureFiber,
    SpacetimeModel,
    SyntheticDimension,
    TabulatedFiber,
    WeightFunction,
)
