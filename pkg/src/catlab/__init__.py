"""catlab: exact discretized cat-map dynamics, classically and on simulated qubits."""

from ._kernels import USING_NUMBA
from ._version import __version__
from .classical import (
    Density,
    DivergenceSeries,
    FineStructureResult,
    FixedPointState,
    backward_fine_structure,
    breakdown_time,
    breakdown_times,
    divergence_series,
    evolve_density,
    first_passage,
    fit_growth_rate,
    fit_lyapunov,
    random_rational_point,
    torus_distance,
)
from .experiments import (
    SCENARIOS,
    ExperimentConfig,
    ExperimentReport,
    run_compare,
    run_divergence,
    run_reversibility,
    run_scenario,
    run_spectrum,
)
from .maps import (
    CatMatrix,
    LatticePoint,
    RationalPoint,
    TorusPoint,
    continuous_step,
    discrete_inverse_step,
    discrete_step,
    lattice_permutation,
    lyapunov_exponent,
    map_period,
    matrix_pow_mod,
    rational_step,
)
from .quantum import (
    MeasurementHistogram,
    NoiseModel,
    StateVector,
    apply_map_step,
    apply_noise,
    evolve_noisy,
    fidelity,
    mean_fidelity_series,
    measure_samples,
    prepare_state,
    qft2d,
    sample_trajectory_outcomes,
)
from .spectral import Spectrum, estimate_spectrum, power_spectrum, tv_distance

__all__ = [
    "__version__",
    "USING_NUMBA",
    "CatMatrix",
    "TorusPoint",
    "LatticePoint",
    "RationalPoint",
    "continuous_step",
    "rational_step",
    "discrete_step",
    "discrete_inverse_step",
    "matrix_pow_mod",
    "map_period",
    "lyapunov_exponent",
    "lattice_permutation",
    "Density",
    "FixedPointState",
    "DivergenceSeries",
    "FineStructureResult",
    "evolve_density",
    "divergence_series",
    "first_passage",
    "fit_lyapunov",
    "fit_growth_rate",
    "breakdown_time",
    "breakdown_times",
    "backward_fine_structure",
    "random_rational_point",
    "torus_distance",
    "StateVector",
    "NoiseModel",
    "MeasurementHistogram",
    "prepare_state",
    "apply_map_step",
    "apply_noise",
    "qft2d",
    "measure_samples",
    "fidelity",
    "evolve_noisy",
    "mean_fidelity_series",
    "sample_trajectory_outcomes",
    "Spectrum",
    "power_spectrum",
    "estimate_spectrum",
    "tv_distance",
    "SCENARIOS",
    "ExperimentConfig",
    "ExperimentReport",
    "run_scenario",
    "run_compare",
    "run_spectrum",
    "run_reversibility",
    "run_divergence",
]
