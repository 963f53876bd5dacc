"""Seeded simulator of biased random walkers flocking on discretized street networks."""

from .engine import (
    ARGMAX,
    BASELINE,
    CRITERIA,
    RunResult,
    SimState,
    TacticSpec,
    choose_moves,
    criterion_value,
    init,
    rule_probabilities,
    run,
    step_baseline,
    step_tactic,
    tactic_probabilities,
)
from .errors import (
    ConfigError,
    ContractViolationError,
    GraphParseError,
    GraphReferenceError,
    StreetflockError,
)
from .experiments import (
    SpaceTimeMatrix,
    SweepPlan,
    SweepRow,
    enumerate_simplex,
    run_baseline_reference,
    run_line_diagram,
    run_robustness,
    run_sweep,
)
from .graph import (
    DEFAULT_DELTA,
    DiscretizedGraph,
    RawStreetNetwork,
    discretize,
    load_cache,
    load_graph,
    load_raw,
    make_cycle,
    make_grid,
    make_line,
    write_cache,
)
from .metrics import (
    Cluster,
    MetricsRecord,
    MetricsSeries,
    find_clusters,
    gathering,
    mobility,
    sample,
    sprawling,
)

__version__ = "0.1.0"
