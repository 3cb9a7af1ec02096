"""Simulation and certification toolkit for CHSH tests of entangled joint
measurements in a three-party entanglement-swapping network."""

from .blocks import (
    BlockPair,
    ChshBlockStructure,
    ObservableBlock,
    ObservableBlocks,
    SepBoundResult,
    TheoremCheckReport,
    block_chsh,
    chsh_operator,
    chsh_spectrum,
    jordan_blocks,
    sep_bound,
    sep_bound_formula,
    sep_bound_oracle,
    sep_bound_value,
    theorem_check,
)
from .certify import (
    CLASSICAL_BOUND,
    SQRT2,
    TSIRELSON,
    DistanceBounds,
    Verdict,
    VerdictWitness,
    certify_crit1,
    certify_crit2,
    distance_bounds,
    overlap_chsh,
    overlap_version_matrix,
    relabel,
    threshold_for_distance,
    trace_distance,
    version_operator,
)
from .linalg import (
    DEFAULT_TOL,
    DensityMatrix,
    PureState,
    ValidationError,
    eig_hermitian,
    overlap_sq,
    partial_trace,
    permute_subsystems,
    ptrace_array,
    tensor,
)
from .measurements import (
    BinnedMeasurement,
    DichotomicObservable,
    FourOutcomeMeasurement,
    bell_basis,
    bell_measurement,
    charlie_settings_ideal,
    perturbed_bell_measurement,
    product_measurement,
    qubit_observable,
    two_outcome_projectors,
)
from .protocol import (
    ChshReport,
    CorrelationRecord,
    CountsTable,
    ReportStdErr,
    Scenario,
    chsh_ac,
    chsh_bc,
    conditional_chsh_ab,
    conditional_version_matrix,
    correlators_ac,
    correlators_bc,
    estimate_report,
    exact_report,
    ideal_scenario,
    joint_distribution,
    noisy_scenario,
    sample_counts,
    steer,
    steered_states,
)

__version__ = "0.1.0"
