"""Spatio-temporal decision support for smart grids.

Models are conjunctions of guarded clauses over a cell grid: time and owner
guards imply occupied cells, measured quantities and topology claims.  On
top of the model sit reasoning folds, monitoring rules with reactions,
grid analysis maps, and fault isolation planning, wired together by an
HTTP service and a command line.
"""

from .analysis import (
    HeatMap,
    RenewableEstimate,
    estimate_renewable,
    heatmap_to_json_obj,
    heatmap_to_pgm,
    weak_link_heatmap,
)
from .errors import (
    CapExceeded,
    DimensionMismatch,
    DomainError,
    DuplicateId,
    FetchError,
    FoldStepError,
    GridspaceError,
    InvalidPath,
    MissingQuantities,
    NegativeDuration,
    NoIsolatingSwitches,
    ParseError,
    PathUnreachable,
    RestoreSafetyViolation,
    RuleParseError,
    TopologyNotRadial,
    UnknownEdge,
    UnknownId,
    UnknownLoad,
    UnknownOp,
    UnsupportedFragment,
    VersionMismatch,
)
from .fdir import (
    CloseSwitch,
    GridEdge,
    Interruption,
    LoadNode,
    OpenSwitch,
    ReconfigPlan,
    RelaySetting,
    ReliabilityReport,
    ScenarioResult,
    ScenarioStep,
    SourceNode,
    SwitchNode,
    Topology,
    apply_plan,
    capacity_violations,
    clear_fault,
    edge_flows,
    energized_nodes,
    expected_load,
    find_restoration_paths,
    isolate_fault,
    mark_fault,
    parse_topology,
    parse_topology_csv,
    plan_reconfiguration,
    reliability_indices,
    restore,
    run_scenario,
    set_switch,
    topology_to_json_obj,
    update_loads,
)
from .ingestion import (
    GridFrame,
    SourceConfig,
    SourceHandle,
    frame_to_invariant,
    parse_frames,
    parse_grid_frame,
    parse_quantity_csv,
    run_source,
)
from .invariants import (
    FALSE,
    TRUE,
    And,
    BigAnd,
    Clause,
    Edge,
    Event,
    Falsity,
    Implies,
    Invariant,
    Not,
    Occupy3DBox,
    OccupyBox,
    OccupyPoint,
    Or,
    Owner,
    Quantity,
    TimeInterval,
    TimePoint,
    Transition,
    Truth,
    clauses_to_invariant,
    decompose_box_to_points,
    normalize,
    to_clauses,
)
from .reasoning import (
    Overlap,
    SpacePath,
    TimeWindow,
    cloudy_area_count,
    coverage_counter,
    filter_by_area,
    filter_by_time,
    fold_space,
    fold_time,
    overlaps,
)
from .rules import (
    EvaluationOutcome,
    Rule,
    RuleDirectoryWatcher,
    RuleSet,
    RuleWindow,
    Trigger,
    apply_rule_mutation,
    evaluate_all,
    evaluate_rule,
    load_rules,
    parse_rule,
    rule_to_json_obj,
)
from .reactions import (
    Delivery,
    DisplayInstruction,
    ReactionDoc,
    ReactionSpec,
    WallHint,
    parse_reaction_spec,
    render_reaction,
    route_reactions,
)
from .serialization import (
    FORMAT_VERSION,
    load_model_text,
    model_to_ndjson_lines,
    ndjson_to_model,
    parse_json,
    parse_xml,
    serialize_json,
    serialize_json_node,
    serialize_xml,
)
from .service import AlertLog, DecisionService, FrameOutcome
from .store import ModelStore, StoreState, candidate_clauses, state_model, window_model

__version__ = "0.1.0"
