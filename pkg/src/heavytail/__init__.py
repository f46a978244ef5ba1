"""Heavy-tailed additive functionals of Markov chains.

Stable-law targets, samplers and CDF machinery; chain models whose
observables have regularly varying stationary tails; regeneration
coupling diagnostics; spectral discretization with corrector equations;
ensemble convergence reports; and a fractional heat solver matched
against kinetic Monte Carlo.
"""

from .errors import (
    ConfigError,
    DomainError,
    HeavytailError,
    NumericError,
    ResolutionError,
    SingularStateError,
)
from .stable_laws import (
    LevyExponent,
    StableCDF,
    TailSpec,
    exponent_curve,
    levy_exponent,
    sample_stable,
    stable_cdf,
    symmetric_exponent_scale,
)
from .chain_core import (
    CenteringResult,
    ChainModel,
    Trajectory,
    WeightSpec,
    centering_c_N,
    constant_model,
    doeblin_mixture,
    iid_pareto,
    iid_reciprocal,
    run_functional,
    run_functional_raw_ensemble,
    run_path,
    run_sum,
    run_sum_ensemble,
    run_weighted_sum,
    run_weighted_sum_ensemble,
    time_change_estimate,
)
from . import boltzmann

__version__ = "0.1.0"

__all__ = [
    "HeavytailError",
    "DomainError",
    "SingularStateError",
    "NumericError",
    "ResolutionError",
    "ConfigError",
    "TailSpec",
    "LevyExponent",
    "levy_exponent",
    "exponent_curve",
    "symmetric_exponent_scale",
    "sample_stable",
    "stable_cdf",
    "StableCDF",
    "ChainModel",
    "Trajectory",
    "WeightSpec",
    "CenteringResult",
    "run_sum",
    "run_sum_ensemble",
    "run_weighted_sum",
    "run_weighted_sum_ensemble",
    "run_functional",
    "run_functional_raw_ensemble",
    "run_path",
    "time_change_estimate",
    "centering_c_N",
    "iid_pareto",
    "iid_reciprocal",
    "doeblin_mixture",
    "constant_model",
    "boltzmann",
    "__version__",
]
