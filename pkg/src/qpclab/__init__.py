"""Exactly solvable bosonic dimer models: spectra, Bethe roots, QES
potentials, and crossover diagnostics."""

from .bethe import (
    BetheRoots,
    bae_jacobian,
    bae_residual,
    bethe_energy,
    max_residual,
    roots_from_eigenvector,
    solve_all,
    solve_newton,
)
from .classical import (
    ClassicalMinimum,
    CrossoverCoupling,
    CrossoverReport,
    ExponentFit,
    LandauFit,
    ScalingReport,
    classify_order,
    crossover_coupling,
    exponent_fit,
    fluctuation_estimate,
    global_minima,
    landau_energy_estimate,
    landau_fit,
    scaling_checks,
)
from .correlators import (
    CriticalFit,
    HfDerivative,
    SweepResult,
    critical_behaviour_fit,
    hf_derivative,
    quantum_crossover_locator,
    sweep,
)
from .errors import (
    ConfigError,
    ConsistencyError,
    DomainError,
    NewtonError,
    NoCrossoverError,
    NodeProximityError,
    PairingViolationError,
    QpclabError,
    QuarticInstabilityError,
    ReconstructionError,
    SingularRootError,
)
from .finitediff import (
    FaithfulnessReport,
    FdGrid,
    FdResult,
    converged_fd_spectrum,
    fd_node_counts,
    fd_spectrum,
    verify_ground_faithfulness,
)
from .hamiltonians import (
    FockBlock,
    Model,
    ModelParams,
    Observable,
    Spectrum,
    build_block,
    eigs,
    expectation,
    ground_state,
    spectrum,
)
from .qes import (
    PotentialSpec,
    QesState,
    check_node_ordering,
    count_nodes,
    expected_node_sequence,
    log_derivative_residual,
    map_energy,
    potential_value,
    qes_family,
    qes_state,
    residual_sample_points,
    verify_residual_constancy,
)

__version__ = "0.1.0"
