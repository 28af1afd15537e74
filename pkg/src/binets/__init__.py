"""Hierarchical interaction nets with principal ports and nested boxes.

Agents carry one principal port, ordered external and internal ports, and
nested child agents; ports are joined by sharing a label, each label used at
most twice, and labels used once form the net's interface.  Rewriting runs in
repeated passes: collect the rule matches, prioritise them into a safe set of
non-overlapping regions, rewrite all admitted matches at once, then tidy the
leftover wires away.  A small pattern-matching calculus compiles onto the
bundled rule library as a worked example.
"""

from .core import (
    Agent,
    AgentSymbol,
    Binet,
    InvalidBinetError,
    PlaceNode,
    PortRef,
    Signature,
    SignatureError,
    ValidationReport,
    Violation,
    Wire,
    find_iso,
    from_views,
    interface,
    iso,
    iter_agents,
    labels,
    link_view,
    occurrences,
    place_view,
    rename_binet,
    require_valid,
    sorted_binet,
    validate,
)
from .engine import (
    Candidates,
    ConflictDetected,
    EngineError,
    Firing,
    PassRecord,
    ReductionTrace,
    SafeSet,
    StepLimitExceeded,
    Strategy,
    StuckPair,
    collect,
    prioritise,
    reduce,
    rewrite_pass,
    tidy,
    trace_tsv,
)
from .rho import (
    Abstraction,
    Application,
    Constructor,
    RhoError,
    Variable,
    compile_rho,
    parse_rho,
    rho_rules,
)
from .rules import (
    Delta,
    FreshLabels,
    InstantiationError,
    Match,
    Rule,
    RuleSet,
    check_rule,
    check_ruleset,
    instantiate,
    match_pattern,
)
from .syntax import ParseError, parse_binet, parse_rules, print_binet

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentSymbol",
    "Binet",
    "InvalidBinetError",
    "PlaceNode",
    "PortRef",
    "Signature",
    "SignatureError",
    "ValidationReport",
    "Violation",
    "Wire",
    "find_iso",
    "from_views",
    "interface",
    "iso",
    "iter_agents",
    "labels",
    "link_view",
    "occurrences",
    "place_view",
    "rename_binet",
    "require_valid",
    "sorted_binet",
    "validate",
    "Candidates",
    "ConflictDetected",
    "EngineError",
    "Firing",
    "PassRecord",
    "ReductionTrace",
    "SafeSet",
    "StepLimitExceeded",
    "Strategy",
    "StuckPair",
    "collect",
    "prioritise",
    "reduce",
    "rewrite_pass",
    "tidy",
    "trace_tsv",
    "Abstraction",
    "Application",
    "Constructor",
    "RhoError",
    "Variable",
    "compile_rho",
    "parse_rho",
    "rho_rules",
    "Delta",
    "FreshLabels",
    "InstantiationError",
    "Match",
    "Rule",
    "RuleSet",
    "check_rule",
    "check_ruleset",
    "instantiate",
    "match_pattern",
    "__version__",
]
