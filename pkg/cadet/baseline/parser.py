"""
Rule file parser.

    # comment
    IF on_heparin >= 1 AND plt_drop_from_first >= 0.5 THEN 1
    DEFAULT 0

One rule per line; keywords are case-sensitive. DEFAULT must be the last
non-comment line. Errors carry the 1-based line number.
"""

from __future__ import annotations

import math
from importlib import resources
from pathlib import Path
from typing import List, Optional, Union

from cadet.errors import CadetIOError, RuleSyntaxError, UnknownFeature
from cadet.data.model import Decision, FeatureSchema
from cadet.baseline.rules import Comparator, Predicate, Rule, RuleSet

DEFAULT_RULESET = "hit_screening"
POLICY_RULESET = "policy"


def parse_rules(text: str, schema: FeatureSchema, source: Optional[str] = None) -> RuleSet:
    """
    Parse rule-file text against a schema.

    Raises:
        RuleSyntaxError: malformed line
        UnknownFeature: a predicate names a feature absent from the schema
    """
    rules: List[Rule] = []
    default: Optional[Decision] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if default is not None:
            raise RuleSyntaxError("content after DEFAULT", path=source, line=number)
        tokens = line.split()
        if tokens[0] == "DEFAULT":
            if len(tokens) != 2:
                raise RuleSyntaxError("expected 'DEFAULT <0|1>'", path=source, line=number)
            default = _decision(tokens[1], source, number)
        elif tokens[0] == "IF":
            rule = _parse_rule(tokens, schema, source, number)
            rules.append(rule)
        else:
            raise RuleSyntaxError(
                f"line must start with IF or DEFAULT, got {tokens[0]!r}",
                path=source, line=number,
            )
    if default is None:
        raise RuleSyntaxError("missing DEFAULT line", path=source)
    return RuleSet(schema=schema, rules=tuple(rules), default_decision=default)


def _parse_rule(tokens: List[str], schema: FeatureSchema, source: Optional[str], number: int) -> Rule:
    if len(tokens) < 6 or tokens[-2] != "THEN":
        raise RuleSyntaxError(
            "expected 'IF <name> <op> <const> [AND ...] THEN <0|1>'",
            path=source, line=number,
        )
    body = tokens[1:-2]
    predicates = []
    for start in range(0, len(body), 4):
        chunk = body[start:start + 3]
        if len(chunk) != 3:
            raise RuleSyntaxError("incomplete predicate", path=source, line=number)
        if start + 3 < len(body) and body[start + 3] != "AND":
            raise RuleSyntaxError(
                f"expected AND, got {body[start + 3]!r}", path=source, line=number
            )
        name, op, const = chunk
        if name not in schema:
            raise UnknownFeature(f"unknown feature {name!r}", path=source, line=number)
        try:
            comparator = Comparator.parse(op)
        except RuleSyntaxError as e:
            raise RuleSyntaxError(e.message, path=source, line=number) from None
        try:
            constant = float(const)
        except ValueError:
            raise RuleSyntaxError(f"not a number: {const!r}", path=source, line=number) from None
        if not math.isfinite(constant):
            raise RuleSyntaxError(f"non-finite constant: {const!r}", path=source, line=number)
        predicates.append(Predicate(name, comparator, constant))
    if body and body[-1] == "AND":
        raise RuleSyntaxError("dangling AND", path=source, line=number)
    return Rule(tuple(predicates), _decision(tokens[-1], source, number))


def _decision(token: str, source: Optional[str], number: int) -> Decision:
    if token not in ("0", "1"):
        raise RuleSyntaxError(f"decision must be 0 or 1, got {token!r}", path=source, line=number)
    return Decision(int(token))


def load_rules(path: Union[str, Path], schema: FeatureSchema) -> RuleSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CadetIOError(f"cannot read rules: {e}", path=str(path)) from e
    return parse_rules(text, schema, source=str(path))


def shipped_rules_text(name: str = DEFAULT_RULESET) -> str:
    """Text of a rule file bundled with the package."""
    try:
        return (
            resources.files("cadet.baseline")
            .joinpath("rulesets", f"{name}.rules")
            .read_text(encoding="utf-8")
        )
    except FileNotFoundError:
        raise CadetIOError(f"no bundled rule set named {name!r}") from None


def load_shipped_rules(schema: FeatureSchema, name: str = DEFAULT_RULESET) -> RuleSet:
    return parse_rules(shipped_rules_text(name), schema, source=f"<{name}.rules>")
