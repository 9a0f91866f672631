"""Distributed mechanisms for private and public goods on directed graphs."""

from .errors import (
    Diverged,
    DistMechError,
    InsufficientData,
    InvalidRange,
    InvalidUtility,
    NoConvergence,
    NotStronglyConnected,
    TuningFailed,
)
from .graph import (
    Graph,
    RoutingTable,
    build_routing,
    check_strong_connectivity,
    gen_complete,
    gen_directed_cycle,
    gen_erdos_renyi,
    gen_full_binary_tree,
    read_edge_list,
    write_edge_list,
)
from .kernels import BACKEND
from .learning import LearningDynamic, Trajectory, distance_series, fit_rate, run
from .mech_private import PrivateMechanism
from .mech_public import PublicMechanism
from .mechanism import EquilibriumAudit, MessageProfile, Outcome, SeparableMechanism
from .model import (
    EfficientSolution,
    LogCoshUtility,
    QuadraticUtility,
    UtilityProfile,
    load_profile,
    sample_quadratic_profile,
    save_profile,
    solve_private,
    solve_public,
)
from .tuning import (
    ContractionBounds,
    TunedParams,
    bounds_private,
    bounds_public,
    build_mechanism,
    certify_contraction,
    tune,
)

__version__ = "0.1.0"
