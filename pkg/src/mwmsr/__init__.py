"""Resilient multi-agent consensus: MW-MSR simulator and robustness certifier.

Library surface: directed graphs with bounded-path queries, exact
(r,s)-robustness and strong-robustness certification, the multi-hop
trimmed-mean fusion rule, the event-triggered per-node protocol, a
deterministic simulation engine with Byzantine adversaries and delays,
and scenario/Monte-Carlo plumbing behind the `mwmsr` CLI.
"""

from .adversary import (
    ByzantineStrategy,
    FaultModel,
    adversarial_emit,
    adversarial_relay,
    fault_model_violations,
    no_adversary,
    validate_fault_model,
)
from .engine import (
    DelayPolicy,
    MonteCarloResult,
    RunMetrics,
    SchedulerSpec,
    SimConfig,
    converged_step,
    joint_envelopes,
    max_in_path_count,
    monte_carlo,
    run,
    safety_interval,
    spread,
    theoretical_error_level,
    weight_floor,
)
from .graph import (
    Graph,
    GraphFormatError,
    enumerate_paths,
    graph_from_edgelist_text,
    graph_from_edges,
    graph_from_json_obj,
    in_neighbors_l,
    is_simple_path,
    load_graph,
    out_neighbors_l,
)
from .msr import Message, fuse, minimum_cover, trim
from .protocol import (
    C1Schedule,
    ConfigError,
    NodeState,
    RelayModel,
    TriggerParams,
    evaluate_trigger,
    initial_exchange,
    receive,
    transmit,
    update,
)
from .robustness import (
    CertifierScaleError,
    RobustnessCertificate,
    is_rs_robust_wrt,
    is_strongly_robust,
    max_independent_paths,
    z_set,
)
from .scenario import (
    Scenario,
    ScenarioError,
    dump_scenario,
    list_bundled,
    load_bundled,
    load_scenario_file,
    parse_scenario,
    resolve_scenario,
)

__version__ = "0.1.0"
