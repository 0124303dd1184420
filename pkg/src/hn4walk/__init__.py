"""Lackadaisical quantum-walk search on a periodic 2-D grid with
hierarchical (HN4-style) long-range edges: state-vector engine, experiment
protocols, runtime-model fitting, and a CLI."""

from .reporting import ENGINE_VERSION as __version__  # noqa: F401

from .topology import (  # noqa: F401
    GridVertex,
    HierCoord,
    TopologyError,
    TopologyParams,
    admissible_vertices,
    compose,
    decompose,
    grid_neighbor,
    is_exceptional,
    long_range_neighbor,
)
from .engine import (  # noqa: F401
    CoinDirection,
    EdgeMode,
    ProbabilityTrace,
    ResourceLimitError,
    WalkConfig,
    WalkEngine,
    amplified_cost,
    memory_requirement,
    run,
    success_probability,
)
from .experiments import (  # noqa: F401
    NoPeakError,
    PeakResult,
    PeakRule,
    ScalingRecord,
    SweepResult,
    TargetEnsemble,
    density_experiment,
    detect_first_peak,
    random_target_set,
    run_to_first_peak,
    scaling_experiment,
    sweep_self_loop,
)
from .fitting import (  # noqa: F401
    FitError,
    FitResult,
    RuntimeModel,
    compare_models,
    fit_scaling,
)
