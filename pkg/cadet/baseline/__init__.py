"""Configurable rule-based baseline detector."""

from .rules import (
    Comparator,
    Predicate,
    Rule,
    RuleSet,
    RuleVerdict,
    rule_decide,
    rule_detect,
    rule_detect_batch,
)
from .parser import (
    DEFAULT_RULESET,
    POLICY_RULESET,
    load_rules,
    load_shipped_rules,
    parse_rules,
    shipped_rules_text,
)

__all__ = [
    "Comparator",
    "Predicate",
    "Rule",
    "RuleSet",
    "RuleVerdict",
    "rule_decide",
    "rule_detect",
    "rule_detect_batch",
    "parse_rules",
    "load_rules",
    "load_shipped_rules",
    "shipped_rules_text",
    "DEFAULT_RULESET",
    "POLICY_RULESET",
]
