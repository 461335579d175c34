"""
Rule-based comparison detector.

A RuleSet is an ordered list of conjunctive rules plus a default
decision. The first rule whose predicates all hold gives the recommended
decision; the baseline flags an example whenever the observed decision
differs from that recommendation.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from cadet.errors import DimensionMismatch, RuleSyntaxError, UnknownFeature
from cadet.data.model import Decision, Example, FeatureSchema, PatientState


class Comparator(str, Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="

    @classmethod
    def parse(cls, token: str) -> "Comparator":
        token = _UNICODE_COMPARATORS.get(token, token)
        try:
            return cls(token)
        except ValueError:
            raise RuleSyntaxError(f"unknown comparator {token!r}") from None

    @property
    def func(self) -> Callable[[float, float], bool]:
        return _COMPARE[self]


_UNICODE_COMPARATORS = {"≤": "<=", "≥": ">="}
_COMPARE: Dict[Comparator, Callable[[float, float], bool]] = {
    Comparator.LT: operator.lt,
    Comparator.LE: operator.le,
    Comparator.GT: operator.gt,
    Comparator.GE: operator.ge,
}


@dataclass(frozen=True)
class Predicate:
    """feature <comparator> constant"""

    feature: str
    comparator: Comparator
    constant: float

    def render(self) -> str:
        return f"{self.feature} {self.comparator.value} {self.constant!r}"


@dataclass(frozen=True)
class Rule:
    predicates: Tuple[Predicate, ...]
    recommended: Decision

    def __post_init__(self) -> None:
        if not self.predicates:
            raise RuleSyntaxError("a rule needs at least one predicate")

    def render(self) -> str:
        body = " AND ".join(p.render() for p in self.predicates)
        return f"IF {body} THEN {int(self.recommended)}"


@dataclass(frozen=True)
class RuleSet:
    """
    Ordered rules bound to a feature schema.

    Feature names are resolved to column positions once, at
    construction; an unknown name raises UnknownFeature there and never
    during evaluation.
    """

    schema: FeatureSchema
    rules: Tuple[Rule, ...] = ()
    default_decision: Decision = Decision.NO_ORDER
    _columns: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        columns = []
        for number, rule in enumerate(self.rules, start=1):
            positions = []
            for predicate in rule.predicates:
                if predicate.feature not in self.schema:
                    raise UnknownFeature(
                        f"rule {number} references unknown feature {predicate.feature!r}"
                    )
                positions.append(self.schema.index(predicate.feature))
            columns.append(tuple(positions))
        object.__setattr__(self, "_columns", tuple(columns))

    def match(self, features: Sequence[float]) -> int:
        """Position of the first matching rule, or -1."""
        if len(features) != self.schema.count:
            raise DimensionMismatch(
                f"state has {len(features)} features, rules expect {self.schema.count}"
            )
        for number, (rule, cols) in enumerate(zip(self.rules, self._columns)):
            if all(
                p.comparator.func(features[c], p.constant)
                for p, c in zip(rule.predicates, cols)
            ):
                return number
        return -1

    def render(self) -> List[str]:
        return [r.render() for r in self.rules] + [f"DEFAULT {int(self.default_decision)}"]


@dataclass(frozen=True)
class RuleVerdict:
    is_anomaly: bool
    recommended: Decision


def rule_decide(rules: RuleSet, state: PatientState) -> Decision:
    """First-match recommendation; the default when no rule fires."""
    hit = rules.match(state.features)
    if hit < 0:
        return rules.default_decision
    return rules.rules[hit].recommended


def rule_detect(rules: RuleSet, example: Example) -> RuleVerdict:
    recommended = rule_decide(rules, example.state)
    return RuleVerdict(is_anomaly=example.decision != recommended, recommended=recommended)


def rule_detect_batch(rules: RuleSet, examples: Sequence[Example]) -> np.ndarray:
    """Boolean anomaly flags, in input order."""
    return np.array([rule_detect(rules, ex).is_anomaly for ex in examples], dtype=bool)
