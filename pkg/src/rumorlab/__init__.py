"""Rumor spreading with spontaneous stifling on quasi-transitive graphs.

Exact event-driven simulation, the deterministic density limit, and the
Gaussian fluctuation law around it, plus blueprint tooling for the graphs.
"""

from . import errors
from .engine import (
    IGNORANT,
    SPREADER,
    STIFLER,
    ReplicaSummary,
    SimConfig,
    SimState,
    Trajectory,
    YYRule,
    exact_mean_counts,
    init_state,
    run,
    run_replicas,
    step,
)
from .fluctuations import (
    EmpiricalFluctuations,
    FluctuationSample,
    MomentStats,
    NoiseCheckReport,
    NoiseCovariance,
    NoiseRealizations,
    VarianceScalingReport,
    center_and_rescale,
    empirical_noise_check,
    eval_noise_covariance,
    initial_noise_covariance,
    moment_stats,
    sample_limit_noises,
    solve_fclt,
    variance_scaling_check,
    write_covariance_blocks,
)
from .meanfield import (
    ConvergenceReport,
    MeanFieldProblem,
    MeanFieldSolution,
    convergence_order,
    solve_classic_mt_ode,
    solve_mean_field,
)
from .qtgraph import (
    Graph,
    GrowthTable,
    MarginReport,
    RealizationReport,
    TypeBlueprint,
    bipartite24,
    blueprint_from_json,
    blueprint_to_json,
    boundary_margin_g,
    build_configuration_model,
    build_family,
    comb,
    cycle,
    decorated_grid,
    read_graph,
    strip3,
    torus2d,
    validate_blueprint,
    verify_realization,
    write_graph,
)
from .stifling import (
    Deterministic,
    Exponential,
    Immediate,
    Never,
    StiflingLaw,
    TruncatedCauchy,
    Weibull,
    law_from_config,
    law_to_config,
    parse_law,
    rescale_law,
)

__version__ = "0.1.0"
