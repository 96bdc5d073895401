"""specforge: parse, model-check, animate, and compile guarded-event machine
specifications (.ebs), shipped with a verified hemodialysis safety corpus."""

from .kernel import (
    Assign,
    BoolType,
    BoolV,
    ContextDef,
    EventDef,
    Expr,
    IntType,
    IntV,
    Labeled,
    MachineDef,
    MapletType,
    MapletV,
    SetType,
    SetV,
    State,
    SymType,
    SymV,
    format_value,
    state_update,
    value_equal,
)
from .parser import (
    Diagnostic,
    ParseError,
    SourceSpan,
    format_expr,
    parse_expression,
    parse_module,
    pretty_print,
)
from .loader import LoadedModel, load_files, load_source
from .evaluator import (
    EnabledEvent,
    enabled_events,
    enumerate_type,
    eval_expr,
    fire_event,
    initial_state,
    type_check,
)
from .checker import (
    CheckReport,
    Counterexample,
    ExploreConfig,
    Obligation,
    check_deadlock,
    check_invariants,
    check_refinement,
    check_variant,
    explore,
    overall_exit_code,
    report_to_dict,
    run_checks,
)
from .animator import (
    Scenario,
    ScenarioReport,
    Session,
    load_scenario,
    parse_scenario,
    scenario_run,
    session_fire,
    session_start,
    session_undo,
)
from .codegen import SubsetReport, check_subset, generate, run_schedule
from .corpus import CorpusEntry, load_corpus
from . import errors

__version__ = "0.1.0"
