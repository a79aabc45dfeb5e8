"""Mathematical entity extraction and (attribute, value) relation scoring.

Entity spotting is lexicon/rule based so spans are deterministic and
testable; only the relation labeling is learned, as a small binary logistic
regression over hand-built pair features. Values are exact rationals so the
downstream solver never touches floats.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AnnotationMismatch,
    DegenerateCorpus,
    ModelFormatError,
    UntrainedClassifier,
)

SCORER_MAGIC = "simstudent/relation-scorer"
SCORER_VERSION = 1

NUMBER_TOKEN_RE = re.compile(r"\d+(?:[./]\d+)?")

COPULAS = frozenset({"is", "are", "was", "were", "equals", "="})
NEGATIONS = frozenset({"not", "no", "never"})
WH_WORDS = frozenset({"what", "how", "why", "which", "who"})
PUNCT = frozenset({".", ",", "?", "!", ";"})

EXPLICIT_FIGURE_CONFIDENCE = 0.95
AMBIGUOUS_FIGURE_CONFIDENCE = 0.5

LEFT_CUES = frozenset({"left", "first"})
RIGHT_CUES = frozenset({"right", "second"})


class Attribute(Enum):
    LENGTH = "length"
    WIDTH = "width"
    HEIGHT = "height"
    VOLUME = "volume"
    SCALE_FACTOR = "scale factor"


DIMENSIONS = (Attribute.LENGTH, Attribute.WIDTH, Attribute.HEIGHT)

# Longest phrases first so "scale factor" wins over the bare "scale" alias.
ATTRIBUTE_LEXICON: tuple[tuple[tuple[str, ...], Attribute], ...] = (
    (("scale", "factor"), Attribute.SCALE_FACTOR),
    (("long", "side"), Attribute.LENGTH),
    (("length",), Attribute.LENGTH),
    (("len",), Attribute.LENGTH),
    (("width",), Attribute.WIDTH),
    (("height",), Attribute.HEIGHT),
    (("volume",), Attribute.VOLUME),
    (("vol",), Attribute.VOLUME),
    (("scale",), Attribute.SCALE_FACTOR),
)


class FigureRef(Enum):
    LEFT = "left"
    RIGHT = "right"
    UNSPECIFIED = "unspecified"


class Presence(Enum):
    VALUED = "V"
    NO_VALUE = "NV"


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # exclusive

    def slice(self, text: str) -> str:
        return text[self.start : self.end]


@dataclass(frozen=True)
class AttributeMention:
    attribute: Attribute
    span: Span


@dataclass(frozen=True)
class ValueMention:
    value: Fraction
    span: Span


@dataclass(frozen=True)
class EntityAnnotation:
    """Everything spotted in one normalized utterance."""

    text: str
    attributes: tuple[AttributeMention, ...]
    values: tuple[ValueMention, ...]
    figure: FigureRef
    figure_confidence: float
    value_presence: Presence
    presence_confidence: float

    def attribute_set(self) -> set[Attribute]:
        return {m.attribute for m in self.attributes}

    def is_empty(self) -> bool:
        return not self.attributes and not self.values


@dataclass(frozen=True)
class RelationCandidate:
    """One (attribute, value) pairing with the scorer's P(attached)."""

    attribute: Attribute
    attribute_span: Span
    value: Optional[Fraction]
    value_span: Optional[Span]
    confidence: float  # P(label is True)
    label: bool

    @property
    def decision_confidence(self) -> float:
        """Confidence in the assigned label, max(p, 1-p)."""
        return max(self.confidence, 1.0 - self.confidence)


def parse_value(token: str) -> Optional[Fraction]:
    """Exact rational from an integer, decimal, or simple-fraction token."""
    if not NUMBER_TOKEN_RE.fullmatch(token):
        return None
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        return None


def _token_offsets(text: str) -> list[tuple[str, int, int]]:
    out = []
    pos = 0
    for tok in text.split():
        start = text.index(tok, pos)
        end = start + len(tok)
        out.append((tok, start, end))
        pos = end
    return out


def _figure_cue(tokens: list[str], i: int) -> Optional[FigureRef]:
    tok = tokens[i]
    if tok in LEFT_CUES:
        return FigureRef.LEFT
    if tok in RIGHT_CUES:
        # "..., right ?" is a rhetorical tag, not a figure reference.
        if tok == "right":
            prev_tok = tokens[i - 1] if i > 0 else ""
            next_tok = tokens[i + 1] if i + 1 < len(tokens) else ""
            if prev_tok == "," or next_tok in {"?", ","}:
                return None
        return FigureRef.RIGHT
    return None


def extract_entities(text: str) -> EntityAnnotation:
    """Spot attributes, numeric values, and figure cues in normalized text.

    Value presence here is a pre-scoring placeholder; `finalize_presence`
    settles it once relation candidates exist.
    """
    toks = _token_offsets(text)
    words = [t for t, _, _ in toks]

    attributes: list[AttributeMention] = []
    i = 0
    while i < len(toks):
        matched = False
        for phrase, attr in ATTRIBUTE_LEXICON:
            k = len(phrase)
            if tuple(words[i : i + k]) == phrase:
                span = Span(toks[i][1], toks[i + k - 1][2])
                attributes.append(AttributeMention(attr, span))
                i += k
                matched = True
                break
        if not matched:
            i += 1

    values = [
        ValueMention(v, Span(start, end))
        for tok, start, end in toks
        if (v := parse_value(tok)) is not None
    ]

    left = right = 0
    for idx in range(len(words)):
        cue = _figure_cue(words, idx)
        if cue is FigureRef.LEFT:
            left += 1
        elif cue is FigureRef.RIGHT:
            right += 1
    if left and not right:
        figure, fig_conf = FigureRef.LEFT, EXPLICIT_FIGURE_CONFIDENCE
    elif right and not left:
        figure, fig_conf = FigureRef.RIGHT, EXPLICIT_FIGURE_CONFIDENCE
    elif left and right:
        figure, fig_conf = FigureRef.UNSPECIFIED, AMBIGUOUS_FIGURE_CONFIDENCE
    else:
        figure, fig_conf = FigureRef.UNSPECIFIED, 1.0

    provisional = Presence.VALUED if (values and attributes) else Presence.NO_VALUE
    return EntityAnnotation(
        text=text,
        attributes=tuple(attributes),
        values=tuple(values),
        figure=figure,
        figure_confidence=fig_conf,
        value_presence=provisional,
        presence_confidence=0.5,
    )


FEATURE_NAMES = (
    "attr_before_value",
    "gap_tokens",
    "negation_between",
    "copula_between",
    "copula_after_attr",
    "wh_before_attr",
    "other_attr_between",
    "value_follows_attr_copula",
    "elided_tail",
    "leading_copula",
)


def pair_features(
    words: Sequence[str],
    attr_range: tuple[int, int],
    value_index: int,
) -> np.ndarray:
    """Features for one (attribute mention, value token) pairing."""
    a0, a1 = attr_range
    v = value_index
    attr_first = a1 < v
    lo, hi = (a1, v) if attr_first else (v, a0)
    between = words[lo + 1 : hi]
    gap = max(len(between), 0)

    wh_before = any(
        words[j] in WH_WORDS for j in range(max(0, a0 - 3), a0)
    )
    other_attr_between = False
    j = lo + 1
    while j < hi:
        for phrase, _ in ATTRIBUTE_LEXICON:
            if tuple(words[j : j + len(phrase)]) == phrase:
                other_attr_between = True
                break
        if other_attr_between:
            break
        j += 1

    copula_after_attr = a1 + 1 < len(words) and words[a1 + 1] in COPULAS
    value_follows = attr_first and copula_after_attr and v == a1 + 2
    elided_tail = (
        not attr_first
        and copula_after_attr
        and (a1 + 2 >= len(words) or words[a1 + 2] in PUNCT)
    )

    return np.array(
        [
            1.0 if attr_first else 0.0,
            min(gap, 10) / 10.0,
            1.0 if any(w in NEGATIONS for w in between) else 0.0,
            1.0 if any(w in COPULAS for w in between) else 0.0,
            1.0 if copula_after_attr else 0.0,
            1.0 if wh_before else 0.0,
            1.0 if other_attr_between else 0.0,
            1.0 if value_follows else 0.0,
            1.0 if elided_tail else 0.0,
            1.0 if words and words[0] in COPULAS else 0.0,
        ]
    )


@dataclass(frozen=True, eq=False)
class RelationScorer:
    """Binary logistic regression over `FEATURE_NAMES`; immutable once trained."""

    weights: Optional[np.ndarray]
    bias: float = 0.0
    seed: int = 0
    corpus_hash: str = ""

    def is_trained(self) -> bool:
        return self.weights is not None

    def predict(self, features: np.ndarray) -> float:
        if not self.is_trained():
            raise UntrainedClassifier("relation scorer has no weights")
        z = float(self.weights @ features + self.bias)
        return float(1.0 / (1.0 + np.exp(-z)))


def _token_index_of_span(toks: list[tuple[str, int, int]], span: Span) -> tuple[int, int]:
    first = last = -1
    for i, (_, start, end) in enumerate(toks):
        if start >= span.start and end <= span.end:
            if first < 0:
                first = i
            last = i
    if first < 0:
        raise AnnotationMismatch(f"span {span} does not cover whole tokens")
    return first, last


def score_relations(
    text: str,
    ann: EntityAnnotation,
    scorer: RelationScorer,
) -> tuple[RelationCandidate, ...]:
    """Score every (attribute mention, value) pair in the utterance.

    Attributes in a value-free utterance get one candidate with no value,
    which is always labeled False. A candidate's label is True exactly when
    its confidence is >= 0.5.
    """
    if ann.text != text:
        raise AnnotationMismatch("annotation was produced from different text")
    for mention in ann.attributes:
        if mention.span.end > len(text):
            raise AnnotationMismatch(f"span {mention.span} exceeds text length {len(text)}")
    toks = _token_offsets(text)
    words = [t for t, _, _ in toks]

    candidates: list[RelationCandidate] = []
    for mention in ann.attributes:
        attr_range = _token_index_of_span(toks, mention.span)
        if ann.values:
            for vm in ann.values:
                v_idx, _ = _token_index_of_span(toks, vm.span)
                conf = scorer.predict(pair_features(words, attr_range, v_idx))
                candidates.append(
                    RelationCandidate(
                        attribute=mention.attribute,
                        attribute_span=mention.span,
                        value=vm.value,
                        value_span=vm.span,
                        confidence=conf,
                        label=bool(conf >= 0.5),
                    )
                )
        else:
            candidates.append(
                RelationCandidate(
                    attribute=mention.attribute,
                    attribute_span=mention.span,
                    value=None,
                    value_span=None,
                    confidence=0.0,
                    label=False,
                )
            )
    return tuple(candidates)


def finalize_presence(
    ann: EntityAnnotation, candidates: Sequence[RelationCandidate]
) -> EntityAnnotation:
    """Settle V/NV from the scored candidates: valued iff some True-labeled
    candidate carries a value."""
    valued = [c.confidence for c in candidates if c.value is not None]
    best = max(valued, default=0.0)
    if best >= 0.5:
        return replace(ann, value_presence=Presence.VALUED, presence_confidence=best)
    return replace(ann, value_presence=Presence.NO_VALUE, presence_confidence=1.0 - best)


def min_entity_confidence(candidates: Sequence[RelationCandidate]) -> float:
    """Weakest per-candidate decision confidence; 1.0 when nothing was extracted."""
    return min((c.decision_confidence for c in candidates), default=1.0)


@dataclass(frozen=True)
class RelationExample:
    """One labeled relation instance: does `text` attach `value` to `attribute`?"""

    text: str
    attribute: Attribute
    value: Optional[Fraction]
    label: bool


def relation_example_to_record(ex: RelationExample) -> dict:
    return {
        "text": ex.text,
        "attribute": ex.attribute.value,
        "value": None if ex.value is None else str(ex.value),
        "label": ex.label,
    }


def relation_example_from_record(rec: dict) -> RelationExample:
    value = rec.get("value")
    return RelationExample(
        text=rec["text"],
        attribute=Attribute(rec["attribute"]),
        value=None if value is None else Fraction(str(value)),
        label=bool(rec["label"]),
    )


def save_relation_corpus(corpus: Sequence[RelationExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in corpus:
            fh.write(json.dumps(relation_example_to_record(ex)) + "\n")


def load_relation_corpus(path: str | Path) -> list[RelationExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(relation_example_from_record(json.loads(line)))
    return out


def _example_features(ex: RelationExample) -> Optional[np.ndarray]:
    """Locate the example's mention pair in its text and featurize it."""
    text = ex.text
    ann = extract_entities(text)
    toks = _token_offsets(text)
    words = [t for t, _, _ in toks]
    mention = next((m for m in ann.attributes if m.attribute == ex.attribute), None)
    if mention is None or ex.value is None:
        return None
    vm = next((v for v in ann.values if v.value == ex.value), None)
    if vm is None:
        return None
    attr_range = _token_index_of_span(toks, mention.span)
    v_idx, _ = _token_index_of_span(toks, vm.span)
    return pair_features(words, attr_range, v_idx)


@dataclass(frozen=True)
class RelationTrainingConfig:
    epochs: int = 800
    learning_rate: float = 1.0
    l2_penalty: float = 1e-4
    seed: int = 0


def train_relation_scorer(
    corpus: Sequence[RelationExample],
    config: RelationTrainingConfig = RelationTrainingConfig(),
) -> RelationScorer:
    """Fit the pairwise relation scorer; deterministic given the corpus.

    Value-free examples carry no pair features (their label is forced False
    by rule) so they are excluded from the fit. Raises DegenerateCorpus when
    the remaining examples do not include both labels.
    """
    rows: list[np.ndarray] = []
    labels: list[float] = []
    for ex in corpus:
        feats = _example_features(ex)
        if feats is not None:
            rows.append(feats)
            labels.append(1.0 if ex.label else 0.0)
    if not rows:
        raise DegenerateCorpus("no trainable (attribute, value) pairs in corpus")
    y = np.asarray(labels)
    if y.min() == y.max():
        raise DegenerateCorpus("relation corpus must contain both True and False labels")
    x = np.vstack(rows)

    w = np.zeros(x.shape[1])
    b = 0.0
    n = len(y)
    for _ in range(config.epochs):
        z = x @ w + b
        p = 1.0 / (1.0 + np.exp(-z))
        g = (p - y) / n
        w -= config.learning_rate * (x.T @ g + config.l2_penalty * w)
        b -= config.learning_rate * float(g.sum())

    w.setflags(write=False)
    payload = json.dumps(
        [[ex.text, ex.attribute.value, str(ex.value), ex.label] for ex in corpus]
    )
    return RelationScorer(
        weights=w,
        bias=float(b),
        seed=config.seed,
        corpus_hash=hashlib.sha256(payload.encode("utf-8")).hexdigest(),
    )


def save_relation_scorer(scorer: RelationScorer, path: str | Path) -> None:
    if not scorer.is_trained():
        raise UntrainedClassifier("cannot save an untrained relation scorer")
    doc = {
        "magic": SCORER_MAGIC,
        "version": SCORER_VERSION,
        "weights": base64.b64encode(np.asarray(scorer.weights).tobytes()).decode("ascii"),
        "bias": scorer.bias,
        "seed": scorer.seed,
        "corpus_hash": scorer.corpus_hash,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_relation_scorer(path: str | Path) -> RelationScorer:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable relation scorer {path}: {exc}") from exc
    if doc.get("magic") != SCORER_MAGIC:
        raise ModelFormatError(f"{path} is not a relation-scorer file")
    if doc.get("version") != SCORER_VERSION:
        raise ModelFormatError(f"unsupported relation-scorer version {doc.get('version')}")
    weights = np.frombuffer(base64.b64decode(doc["weights"]), dtype=np.float64).copy()
    if weights.shape != (len(FEATURE_NAMES),):
        raise ModelFormatError("relation scorer weight shape is inconsistent")
    weights.setflags(write=False)
    return RelationScorer(
        weights=weights,
        bias=float(doc["bias"]),
        seed=doc.get("seed", 0),
        corpus_hash=doc.get("corpus_hash", ""),
    )
