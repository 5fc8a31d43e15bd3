"""MBQC on cluster-phase spin chains: a desk-scale numerical laboratory."""

__version__ = "0.1.0"

from .errors import CapacityError, ConvergenceError
from .pauli import (
    ChainSpec,
    PauliString,
    cluster_stabilizer,
    multiply,
    string_order_geq,
    string_order_pair,
    symmetry_generators,
)
from .groundstate import (
    Convergence,
    GroundState,
    SolverParams,
    build_hamiltonian,
    expectation,
    load_state,
    save_state,
    solve_dmrg,
    solve_exact,
)
from .stringorder import (
    ConvexityReport,
    F_of_delta,
    StringOrderProfile,
    convexity_check,
    factorization_residual,
    kappa,
    make_synthetic_profile,
    moon_edge_areas,
    profile,
)
from .channel import (
    LogicalChannel,
    RotationSchedule,
    channel_matrix,
    decoherence,
    gm_exact,
    plus_state_product_formula,
    purity_loss,
    target_rotation,
    two_site_closed_form,
)
from .oracle import (
    MeasurementPlan,
    OracleResult,
    decorated_expectation,
    enumerate_channel,
    enumerate_logical_expectations,
    readout_bit,
    side_process_q,
)
from .experiments import (
    ExperimentConfig,
    GroundStateCache,
    ResultTable,
    run_experiment,
)

__all__ = [
    "CapacityError",
    "ChainSpec",
    "Convergence",
    "ConvergenceError",
    "ConvexityReport",
    "ExperimentConfig",
    "F_of_delta",
    "GroundState",
    "GroundStateCache",
    "LogicalChannel",
    "MeasurementPlan",
    "OracleResult",
    "PauliString",
    "ResultTable",
    "RotationSchedule",
    "SolverParams",
    "StringOrderProfile",
    "build_hamiltonian",
    "channel_matrix",
    "cluster_stabilizer",
    "convexity_check",
    "decoherence",
    "decorated_expectation",
    "enumerate_channel",
    "enumerate_logical_expectations",
    "expectation",
    "factorization_residual",
    "gm_exact",
    "kappa",
    "load_state",
    "make_synthetic_profile",
    "moon_edge_areas",
    "multiply",
    "plus_state_product_formula",
    "profile",
    "purity_loss",
    "readout_bit",
    "run_experiment",
    "save_state",
    "side_process_q",
    "solve_dmrg",
    "solve_exact",
    "string_order_geq",
    "string_order_pair",
    "symmetry_generators",
    "target_rotation",
    "two_site_closed_form",
]
