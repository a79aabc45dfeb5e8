"""Canonical evaluation fixtures for the shipped models.

Two small suites: dialogue-act assignments for the taxonomy's example
utterances, and the four relation-labeling rows the entity pipeline must get
exactly right. `eval-fixtures` runs both and CI keys off the same code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .acts import ActClassifier, DialogueAct, classify, featurize, normalize
from .entities import (
    Attribute,
    RelationScorer,
    extract_entities,
    score_relations,
)

# Example teacher utterances per act category. The rhetorical question is the
# known hard case; the act suite tolerates one miss.
ACT_FIXTURES: tuple[tuple[str, DialogueAct], ...] = (
    ("How did you get that answer?", DialogueAct.PROBING),
    ("Explain to me how you got that expression?", DialogueAct.PROBING),
    ("What does n represent in terms of the diagram?", DialogueAct.PROBING),
    ("Why is it staying the same?", DialogueAct.PROBING),
    ("What is 3x5?", DialogueAct.FACTUAL),
    ("Does this picture show ½ or ¼?", DialogueAct.FACTUAL),
    ("What do you subtract first?", DialogueAct.FACTUAL),
    ("The answer is three, right?", DialogueAct.EXPOSITORY),
    ("Look at this diagram", DialogueAct.EXPOSITORY),
)

ACT_SUITE_MIN_CORRECT = 8

# Relation-labeling rows: text, attribute, value (None = no value), expected label.
RELATION_FIXTURES: tuple[tuple[str, Attribute, Optional[Fraction], bool], ...] = (
    ("The length of the object is 5, what is the width?", Attribute.LENGTH, Fraction(5), True),
    ("What is the scale factor?", Attribute.SCALE_FACTOR, None, False),
    ("No, the length is not 5, the width is.", Attribute.WIDTH, Fraction(5), True),
    ("No, the length is not 5, the width is.", Attribute.LENGTH, Fraction(5), False),
)


@dataclass(frozen=True)
class FixtureResult:
    description: str
    expected: str
    got: str
    passed: bool


@dataclass(frozen=True)
class FixtureReport:
    name: str
    results: tuple[FixtureResult, ...]
    required_correct: int

    @property
    def correct(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> bool:
        return self.correct >= self.required_correct

    def lines(self) -> list[str]:
        out = [f"{self.name}: {self.correct}/{self.total} correct (need >= {self.required_correct})"]
        for r in self.results:
            mark = "ok " if r.passed else "FAIL"
            out.append(f"  [{mark}] {r.description} -> {r.got} (expected {r.expected})")
        return out

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "correct": self.correct,
            "total": self.total,
            "required_correct": self.required_correct,
            "passed": self.passed,
            "results": [
                {
                    "description": r.description,
                    "expected": r.expected,
                    "got": r.got,
                    "passed": r.passed,
                }
                for r in self.results
            ],
        }


def run_act_fixtures(classifier: ActClassifier) -> FixtureReport:
    results = []
    for text, expected in ACT_FIXTURES:
        probs = classify(classifier, featurize(normalize(text), classifier.hash_space))
        got = DialogueAct(int(np.argmax(probs)))
        results.append(
            FixtureResult(
                description=text,
                expected=expected.label,
                got=got.label,
                passed=got is expected,
            )
        )
    return FixtureReport(
        name="dialogue-act fixtures",
        results=tuple(results),
        required_correct=ACT_SUITE_MIN_CORRECT,
    )


def run_relation_fixtures(scorer: RelationScorer) -> FixtureReport:
    results = []
    for raw, attribute, value, expected in RELATION_FIXTURES:
        text = normalize(raw)
        ann = extract_entities(text)
        candidates = score_relations(text, ann, scorer)
        got_label: Optional[bool] = None
        for c in candidates:
            if c.attribute is attribute and c.value == value:
                got_label = c.label
                break
        value_str = "-" if value is None else str(value)
        results.append(
            FixtureResult(
                description=f"{raw!r} ({attribute.value}, {value_str})",
                expected=str(expected),
                got="missing" if got_label is None else str(got_label),
                passed=got_label == expected,
            )
        )
    return FixtureReport(
        name="relation fixtures",
        results=tuple(results),
        required_correct=len(RELATION_FIXTURES),
    )
