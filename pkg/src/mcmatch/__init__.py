"""MCMC optimisation of perfect matchings under a global utility."""
from .canonical import CanonicalPath, Census, canonical_path, congestion_census
from .core import (
    CapExceeded,
    FunctionUtility,
    GibbsParams,
    Instance,
    InvalidMatching,
    Matching,
    UtilityOracle,
    check_matching,
    enumerate_matchings,
    gibbs_distribution,
)
from .exact import (
    BoundViolated,
    DiagnosticsReport,
    ExactChain,
    NoConvergence,
    build_exact_chain,
    conductance_exhaustive,
    diagnose,
    mixing_time,
    stationary_distribution,
    tv_distance_curve,
    verify_bounds,
    verify_detailed_balance,
)
from .problems import (
    CnfSpec,
    GraphColouringSpec,
    JobSchedulingSpec,
    KnapsackSpec,
    TableUtility,
    load_problem,
)
from .sampler import ChainConfig, ChainRng, ChainState, run

__version__ = "0.1.0"

__all__ = [
    "CanonicalPath",
    "Census",
    "canonical_path",
    "congestion_census",
    "CapExceeded",
    "FunctionUtility",
    "GibbsParams",
    "Instance",
    "InvalidMatching",
    "Matching",
    "UtilityOracle",
    "check_matching",
    "enumerate_matchings",
    "gibbs_distribution",
    "BoundViolated",
    "DiagnosticsReport",
    "ExactChain",
    "NoConvergence",
    "build_exact_chain",
    "conductance_exhaustive",
    "diagnose",
    "mixing_time",
    "stationary_distribution",
    "tv_distance_curve",
    "verify_bounds",
    "verify_detailed_balance",
    "CnfSpec",
    "GraphColouringSpec",
    "JobSchedulingSpec",
    "KnapsackSpec",
    "TableUtility",
    "load_problem",
    "ChainConfig",
    "ChainRng",
    "ChainState",
    "run",
]
