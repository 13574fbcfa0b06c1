"""Sparse LQR feedback synthesis with link prioritization and
denial-of-service rerouting countermeasures.

The workflow mirrors a resilient-control deployment: sweep a weighted
block-l1 penalty to learn which feedback links matter, rank them into a
priority table offline, and when links are attacked, reroute high-priority
data over sacrificed low-priority channels and resynthesize an optimal gain
on the surviving sparsity pattern.
"""

from .errors import (
    DimensionMismatch,
    EmptySweep,
    IndexOutOfRange,
    InfeasibleOutcome,
    InvalidAssumption,
    LineSearchFailure,
    LostStabilizability,
    MaxIterations,
    NotHurwitz,
    NotStabilizing,
    PatternNotStabilizable,
    RiccatiFailure,
    SingularSolve,
    SparselinkError,
    UnknownFormat,
)
from .plant import (
    BlockPartition,
    GainMatrix,
    LtiPlant,
    SimulationTrace,
    SparsityPattern,
)
from .h2 import (
    closed_loop_cost,
    cost_gradient,
    is_stabilizing,
    lqr_centralized,
    simulate_closed_loop,
    solve_lyapunov,
)
from .structured import (
    AugLagConfig,
    AugLagState,
    SynthesisInfo,
    augmented_lagrangian,
    minimize_inner,
    synthesize_structured,
    synthesize_structured_info,
)
from .sparse import (
    SparsityConfig,
    SweepEntry,
    SweepResult,
    block_frobenius,
    block_soft_threshold,
    default_beta_schedule,
    reweight,
    sparse_gain,
    sparsity_sweep,
    sweep_csv,
)
from .priority import (
    PriorityRow,
    PriorityTable,
    rank_links,
    removal_loss,
    table_from_gain,
)
from .reroute import (
    AttackScenario,
    RerouteOutcome,
    pattern_from,
    reroute_multi,
    reroute_single,
    reroute_uniform,
)
from .render import (
    classify_blocks,
    parse_pattern,
    render_pattern,
    render_svg,
    render_text,
)
from .serialize import (
    attack_from_doc,
    dumps_canonical,
    gain_from_doc,
    gain_to_doc,
    outcome_from_doc,
    outcome_to_doc,
    pattern_from_doc,
    pattern_to_doc,
    plant_from_doc,
    plant_to_doc,
    read_json,
    table_from_doc,
    table_to_doc,
    write_json,
)
from .scenario import (
    CostReport,
    GeneratorSpec,
    PipelineResult,
    Scenario,
    generate_plant,
    load_scenario,
    report_csv,
    report_from_doc,
    report_to_doc,
    run_pipeline,
    scenario_from_doc,
    select_reroute,
    write_artifacts,
)

__version__ = "0.1.0"

__all__ = [
    "AttackScenario",
    "AugLagConfig",
    "AugLagState",
    "BlockPartition",
    "CostReport",
    "DimensionMismatch",
    "EmptySweep",
    "GainMatrix",
    "GeneratorSpec",
    "IndexOutOfRange",
    "InfeasibleOutcome",
    "InvalidAssumption",
    "LineSearchFailure",
    "LostStabilizability",
    "LtiPlant",
    "MaxIterations",
    "NotHurwitz",
    "NotStabilizing",
    "PatternNotStabilizable",
    "PipelineResult",
    "PriorityRow",
    "PriorityTable",
    "RerouteOutcome",
    "RiccatiFailure",
    "Scenario",
    "SimulationTrace",
    "SingularSolve",
    "SparselinkError",
    "SparsityConfig",
    "SparsityPattern",
    "SweepEntry",
    "SweepResult",
    "SynthesisInfo",
    "UnknownFormat",
    "attack_from_doc",
    "augmented_lagrangian",
    "block_frobenius",
    "block_soft_threshold",
    "classify_blocks",
    "closed_loop_cost",
    "cost_gradient",
    "default_beta_schedule",
    "dumps_canonical",
    "gain_from_doc",
    "gain_to_doc",
    "generate_plant",
    "is_stabilizing",
    "load_scenario",
    "lqr_centralized",
    "minimize_inner",
    "outcome_from_doc",
    "outcome_to_doc",
    "parse_pattern",
    "pattern_from",
    "pattern_from_doc",
    "pattern_to_doc",
    "plant_from_doc",
    "plant_to_doc",
    "rank_links",
    "read_json",
    "removal_loss",
    "render_pattern",
    "render_svg",
    "render_text",
    "report_csv",
    "report_from_doc",
    "report_to_doc",
    "reroute_multi",
    "reroute_single",
    "reroute_uniform",
    "run_pipeline",
    "scenario_from_doc",
    "select_reroute",
    "simulate_closed_loop",
    "solve_lyapunov",
    "sparse_gain",
    "sparsity_sweep",
    "sweep_csv",
    "synthesize_structured",
    "synthesize_structured_info",
    "table_from_doc",
    "table_from_gain",
    "table_to_doc",
    "write_artifacts",
    "write_json",
]
