"""Exact finite-window computations for spectral triples on Cuntz-Pimsner algebras.

Modules: ``graph_core`` (inputs, paths, Perron data), ``bimodule`` (the
coefficient algebra, frames and the operators ``q_l``), ``xi_module`` (the
module ``Xi_A`` and the projections ``P_{n,k}``), ``operators`` (``c``,
``kappa``, ``D`` and its spectral data), ``shift_groupoid`` (the Cuntz-Krieger
groupoid picture), ``ktheory`` (Smith normal form) and ``cli``.
"""

from .bimodule import make_backend
from .graph_core import (
    PreconditionError,
    ValidationError,
    cuntz_graph,
    cycle_graph,
    fibonacci_graph,
    full_shift,
    golden_mean,
)
from .ktheory import pimsner_K0, pimsner_K1, smith_normal_form
from .operators import commutator_norm, dirac_apply, spectral_decomposition
from .shift_groupoid import compare_models
from .xi_module import XiVector, apply_Pnk, apply_Qnk, symbol

__version__ = "0.1.0"

__all__ = [
    "PreconditionError",
    "ValidationError",
    "XiVector",
    "apply_Pnk",
    "apply_Qnk",
    "commutator_norm",
    "compare_models",
    "cuntz_graph",
    "cycle_graph",
    "dirac_apply",
    "fibonacci_graph",
    "full_shift",
    "golden_mean",
    "make_backend",
    "pimsner_K0",
    "pimsner_K1",
    "smith_normal_form",
    "spectral_decomposition",
    "symbol",
]
