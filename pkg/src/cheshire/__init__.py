"""Simulator for a single particle in a path superposition coupled to two
spatially separated meters, with postselection.

The package quantifies how postselection builds entanglement between the
two meters through the signed cross-moment indicator C = <tau x y>
(tau = +-1 for postselection success/failure): exactly for Gaussian
pointer states, numerically for arbitrary gridded pointer states, and
statistically from seeded Monte Carlo trials.  A positive check against
the PPT negativity of the embedded two-meter state certifies that a
nonzero indicator really is entanglement.
"""

from .config import ExperimentConfig, dump_config, load_config, parse_config_text
from .dynamics import (
    BranchWeights,
    FailureBranch,
    JointMeterState,
    SuccessMoments,
    classical_mixture_density,
    classical_mixture_moment,
    failure_density,
    grid_moments,
    success_moments,
    success_probability,
)
from .entanglement import (
    EmbeddedMeterState,
    NegativityReport,
    embed,
    gram_orthonormalize,
    meter_negativity,
    negativity,
)
from .errors import (
    CheshireError,
    ConsistencyError,
    FlatObjective,
    GridTooSmall,
    OrthogonalPostselection,
    PositivityError,
    ValidationError,
)
from .indicator import (
    OPTIMAL_COUPLING,
    CheshireResult,
    CouplingOptimum,
    MomentDecomposition,
    StateOptimum,
    cheshire_analytic,
    cross_moment,
    indicator_bound,
    local_averages,
    moment_decomposition,
    optimize_couplings,
    optimize_states,
)
from .meter import (
    DEFAULT_GRID,
    GaussianMeter,
    Grid,
    GridMeter,
    check_coverage,
    format_complex,
    gaussian_ground_state,
    gaussian_overlap0,
    gaussian_overlap1,
    grid_overlap,
    matrix_element,
    overlap_set,
    parse_complex,
)
from .qsystem import (
    BASIS_LABELS,
    PhotonDensity,
    PhotonEffect,
    PhotonKet,
    TransitionAmplitudes,
    WeakValues,
    canonical_operators,
    trace_term,
    transition_amplitudes,
    weak_values,
)
from .sampler import (
    EstimatorOutput,
    NoiseModel,
    NoiseStudyRow,
    TrialRecord,
    Trials,
    estimate_cheshire,
    max_threads,
    noise_robustness,
    read_trials_csv,
    sample_trials,
    trial_variance,
    write_trials_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BASIS_LABELS",
    "BranchWeights",
    "CheshireError",
    "CheshireResult",
    "ConsistencyError",
    "CouplingOptimum",
    "DEFAULT_GRID",
    "EmbeddedMeterState",
    "EstimatorOutput",
    "ExperimentConfig",
    "FailureBranch",
    "FlatObjective",
    "GaussianMeter",
    "Grid",
    "GridMeter",
    "GridTooSmall",
    "JointMeterState",
    "MomentDecomposition",
    "NegativityReport",
    "NoiseModel",
    "NoiseStudyRow",
    "OPTIMAL_COUPLING",
    "OrthogonalPostselection",
    "PhotonDensity",
    "PhotonEffect",
    "PhotonKet",
    "PositivityError",
    "StateOptimum",
    "SuccessMoments",
    "TransitionAmplitudes",
    "TrialRecord",
    "Trials",
    "ValidationError",
    "WeakValues",
    "canonical_operators",
    "check_coverage",
    "cheshire_analytic",
    "classical_mixture_density",
    "classical_mixture_moment",
    "cross_moment",
    "dump_config",
    "embed",
    "estimate_cheshire",
    "failure_density",
    "format_complex",
    "gaussian_ground_state",
    "gaussian_overlap0",
    "gaussian_overlap1",
    "gram_orthonormalize",
    "grid_moments",
    "grid_overlap",
    "indicator_bound",
    "load_config",
    "local_averages",
    "matrix_element",
    "max_threads",
    "meter_negativity",
    "moment_decomposition",
    "negativity",
    "noise_robustness",
    "optimize_couplings",
    "optimize_states",
    "overlap_set",
    "parse_complex",
    "parse_config_text",
    "read_trials_csv",
    "sample_trials",
    "success_moments",
    "success_probability",
    "trace_term",
    "transition_amplitudes",
    "trial_variance",
    "weak_values",
    "write_trials_csv",
]
