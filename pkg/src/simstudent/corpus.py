"""Corpus bootstrapping: labeling functions, synthetic generators, CV harness.

The real training data behind this system is private, so the shipped corpus
is synthetic: a template grammar per act plus heuristic labeling functions
for raw text. A slice of the grammar deliberately avoids every labeling
function's pattern so cross-validation scores measure generalization rather
than pattern lookup.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .acts import ACTS, DialogueAct, TrainingConfig, act_from_label, classify, featurize, normalize, train
from .entities import NUMBER_TOKEN_RE, RelationExample, Attribute
from .errors import DegenerateCorpus

# Scores reported by the original system on its private data. Shown next to
# our synthetic-corpus numbers for context only; the datasets differ, so the
# values are not comparable.
REFERENCE_ACT_MACRO_F1 = 0.71
REFERENCE_RELATION_PRF = (0.84, 0.82, 0.83)
NON_COMPARABLE_NOTE = (
    "reference scores come from the original system's private data "
    "and are not comparable to this synthetic corpus"
)

ATTR_WORDS = frozenset({"length", "len", "width", "height", "volume", "vol", "scale"})
WH_TOKENS = frozenset({"what", "how", "why", "who", "which", "when", "where"})
CLASSROOM_VERBS = frozenset(
    {"sit", "close", "stand", "open", "stop", "line", "take", "put", "raise", "quiet"}
)
STATEMENT_OPENERS = frozenset(
    {"the", "this", "that", "these", "remember", "notice", "now"}
)
CLARIFY_OPENERS = frozenset({"between", "over", "under", "so", "and"})


@dataclass(frozen=True)
class LabelingFunction:
    """A pure heuristic over normalized text; may abstain by returning None."""

    name: str
    fn: Callable[[str], Optional[DialogueAct]]

    def __call__(self, text: str) -> Optional[DialogueAct]:
        return self.fn(text)


def _tokens(text: str) -> list[str]:
    return text.split()


def _has_number(tokens: list[str]) -> bool:
    return any(NUMBER_TOKEN_RE.fullmatch(t) for t in tokens)


def _has_attr(tokens: list[str]) -> bool:
    return any(t in ATTR_WORDS for t in tokens)


def _lf_how(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    for i, t in enumerate(toks):
        if t == "how" and (i + 1 >= len(toks) or toks[i + 1] not in {"many", "much"}):
            return DialogueAct.PROBING
    return None


def _lf_why(text: str) -> Optional[DialogueAct]:
    return DialogueAct.PROBING if "why" in _tokens(text) else None


def _lf_explain(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    return DialogueAct.PROBING if {"explain", "elaborate"} & set(toks) else None


def _lf_represent(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    return DialogueAct.PROBING if {"represent", "mean"} & set(toks) else None


def _lf_what_arithmetic(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if "what" in toks and _has_number(toks):
        return DialogueAct.FACTUAL
    return None


def _lf_what_attribute(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if "what" in toks and _has_attr(toks):
        return DialogueAct.FACTUAL
    return None


def _lf_what_do(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    for i in range(len(toks) - 1):
        if toks[i] == "what" and toks[i + 1] in {"do", "should"}:
            return DialogueAct.FACTUAL
    return None


def _lf_how_many(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    for i in range(len(toks) - 1):
        if toks[i] == "how" and toks[i + 1] in {"many", "much"}:
            return DialogueAct.FACTUAL
    return None


def _lf_yesno_math(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if not toks:
        return None
    if toks[0] in {"is", "are", "does", "do", "can"} and (_has_number(toks) or _has_attr(toks)):
        return DialogueAct.FACTUAL
    return None


def _lf_rhetorical_tag(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if len(toks) >= 3 and toks[-2:] == ["right", "?"] and toks[-3] == ",":
        return DialogueAct.EXPOSITORY
    return None


def _lf_look(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if toks and toks[0] == "look":
        return DialogueAct.EXPOSITORY
    for i in range(len(toks) - 1):
        if toks[i] == "look" and toks[i + 1] == "at":
            return DialogueAct.EXPOSITORY
    return None


def _lf_cueing_statement(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if not toks or toks[0] not in STATEMENT_OPENERS:
        return None
    if "?" in toks or set(toks) & WH_TOKENS:
        return None
    if _has_attr(toks) or _has_number(toks):
        return DialogueAct.EXPOSITORY
    return None


def _lf_clarify_fragment(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if 2 <= len(toks) <= 5 and toks[0] in CLARIFY_OPENERS and toks[-1] == "?":
        return DialogueAct.EXPOSITORY
    return None


def _lf_classroom(text: str) -> Optional[DialogueAct]:
    toks = _tokens(text)
    if not toks:
        return None
    if toks[0] in CLASSROOM_VERBS or "please" in toks:
        return DialogueAct.OTHER
    return None


SHIPPED_LABELING_FUNCTIONS: tuple[LabelingFunction, ...] = (
    LabelingFunction("how_question", _lf_how),
    LabelingFunction("why_question", _lf_why),
    LabelingFunction("explain_request", _lf_explain),
    LabelingFunction("represent_meaning", _lf_represent),
    LabelingFunction("what_arithmetic", _lf_what_arithmetic),
    LabelingFunction("what_attribute", _lf_what_attribute),
    LabelingFunction("what_procedure", _lf_what_do),
    LabelingFunction("how_many", _lf_how_many),
    LabelingFunction("yesno_math", _lf_yesno_math),
    LabelingFunction("rhetorical_tag", _lf_rhetorical_tag),
    LabelingFunction("look_at", _lf_look),
    LabelingFunction("cueing_statement", _lf_cueing_statement),
    LabelingFunction("clarify_fragment", _lf_clarify_fragment),
    LabelingFunction("classroom_management", _lf_classroom),
)


@dataclass(frozen=True)
class LabelReport:
    """Output of weak labeling: the kept corpus plus coverage accounting."""

    labeled: tuple[tuple[str, DialogueAct], ...]
    total: int
    abstained: int
    conflicts: int
    lf_fires: dict[str, int] = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        return 0.0 if self.total == 0 else 1.0 - self.abstained / self.total


def label_corpus(
    utterances: Sequence[str],
    lfs: Sequence[LabelingFunction] = SHIPPED_LABELING_FUNCTIONS,
) -> LabelReport:
    """Majority-vote weak labeling; abstain-everywhere and ties are dropped."""
    if not lfs:
        raise ValueError("need at least one labeling function")
    labeled: list[tuple[str, DialogueAct]] = []
    abstained = 0
    conflicts = 0
    fires = {lf.name: 0 for lf in lfs}
    for raw in utterances:
        text = normalize(raw)
        votes: dict[DialogueAct, int] = {}
        for lf in lfs:
            verdict = lf(text)
            if verdict is not None:
                fires[lf.name] += 1
                votes[verdict] = votes.get(verdict, 0) + 1
        if not votes:
            abstained += 1
            continue
        top = max(votes.values())
        winners = [act for act, count in votes.items() if count == top]
        if len(winners) > 1:
            conflicts += 1
            continue
        labeled.append((text, winners[0]))
    return LabelReport(
        labeled=tuple(labeled),
        total=len(utterances),
        abstained=abstained,
        conflicts=conflicts,
        lf_fires=fires,
    )


@dataclass(frozen=True)
class Production:
    """One template in the per-act grammar.

    `lf_disjoint` marks templates built to dodge every labeling function, so
    the classifier cannot score well by memorizing LF patterns alone.
    """

    template: str
    slots: dict[str, tuple[str, ...]] = field(default_factory=dict)
    lf_disjoint: bool = False


_NUM = ("2", "3", "4", "5", "6", "7", "8", "9", "10", "12", "15", "20")
_SMALL = ("2", "3", "4", "5")
_FRAC = ("1/2", "1/4", "1/3", "3/4")
_ATTR = ("length", "width", "height", "volume")
_DIM = ("length", "width", "height")
_FIGNOUN = ("figure", "object", "prism", "box")
_SIDE = ("left", "right")
_WORDNUM = ("two", "three", "four", "five", "six")
_REASON = ("reasoning", "thinking", "steps")

GRAMMAR: dict[DialogueAct, tuple[Production, ...]] = {
    DialogueAct.PROBING: (
        Production("how did you get that {noun} ?", {"noun": ("answer", "result", "number")}),
        Production("how do you know the {dim} {change} ?", {"dim": _DIM, "change": ("doubles", "changes", "scales")}),
        Production("why is it {state} ?", {"state": ("staying the same", "getting bigger", "getting smaller", "doubling")}),
        Production("why did you {op} by {n} ?", {"op": ("divide", "multiply"), "n": _SMALL}),
        Production("explain to me how you got that {noun} ?", {"noun": ("expression", "answer", "value")}),
        Production("explain your {reason} to the class .", {"reason": _REASON}),
        Production("what does {var} represent in terms of the {noun} ?", {"var": ("n", "x", "k", "m"), "noun": ("diagram", "figure", "problem")}),
        Production("how would you check that your {noun} is correct ?", {"noun": ("answer", "result")}),
        Production("walk me through your {reason} .", {"reason": _REASON}, lf_disjoint=True),
        Production("tell me more about your {reason} .", {"reason": _REASON}, lf_disjoint=True),
        Production("what makes you {sure} about that ?", {"sure": ("sure", "confident", "certain")}, lf_disjoint=True),
        Production("convince me that your {plan} works .", {"plan": ("approach", "method", "strategy")}, lf_disjoint=True),
        Production("talk me through the step where you {op} .", {"op": ("divided", "multiplied", "compared the sides")}, lf_disjoint=True),
    ),
    DialogueAct.FACTUAL: (
        Production("what is {a} x {b} ?", {"a": _NUM, "b": _NUM}),
        Production("what is {a} {op} {b} ?", {"a": _NUM, "op": ("plus", "minus", "times", "divided by"), "b": _NUM}),
        Production("what is the {attr} of the {side} {fig} ?", {"attr": _ATTR, "side": _SIDE, "fig": _FIGNOUN}),
        Production("what is the scale factor ?", {}),
        Production("does this {pic} show {f1} or {f2} ?", {"pic": ("picture", "figure", "diagram"), "f1": _FRAC, "f2": _FRAC}),
        Production("what do you {op} first ?", {"op": ("subtract", "add", "divide", "multiply")}),
        Production("is the {dim} {n} ?", {"dim": _DIM, "n": _NUM}),
        Production("how many {unit} fit inside ?", {"unit": ("cubes", "unit cubes", "blocks")}),
        Production("give me the {attr} of the {side} {fig} .", {"attr": _ATTR, "side": _SIDE, "fig": _FIGNOUN}, lf_disjoint=True),
        Production("{a} {op} {b} equals ?", {"a": _WORDNUM, "op": ("plus", "times", "minus"), "b": _WORDNUM}, lf_disjoint=True),
        Production("tell me the {attr} of the {side} one .", {"attr": _ATTR, "side": _SIDE}, lf_disjoint=True),
        Production("name the side that measures {n} units .", {"n": _NUM}, lf_disjoint=True),
    ),
    DialogueAct.EXPOSITORY: (
        Production("the answer is {n} , right ?", {"n": _WORDNUM}),
        Production("the {dim} is {n} , right ?", {"dim": _DIM, "n": _NUM}),
        Production("look at {det} {noun} .", {"det": ("this", "the"), "noun": ("diagram", "figure", "picture")}),
        Production("look at the {side} {fig} .", {"side": _SIDE, "fig": _FIGNOUN}),
        Production("between the {n} ?", {"n": ("2", "two")}),
        Production("notice that the {dim} {change} .", {"dim": _DIM, "change": ("doubled", "changed", "went up")}),
        Production("remember the formula for {attr} .", {"attr": ("volume", "volume of a prism")}),
        Production("the {dim} of the {side} {fig} is {n} .", {"dim": _DIM, "side": _SIDE, "fig": _FIGNOUN, "n": _NUM}),
        Production("the {dim} of the {fig} is {n} .", {"dim": _DIM, "fig": _FIGNOUN, "n": _NUM}),
        Production("the {dim} is {n} .", {"dim": _DIM, "n": _NUM}),
        Production("this side is {n} units long .", {"n": _NUM}),
        Production("here is a hint , compare matching sides .", {}, lf_disjoint=True),
        Production("the two {figs} are similar .", {"figs": ("figures", "shapes", "boxes")}, lf_disjoint=True),
        Production("keep the scale in mind while you work .", {}, lf_disjoint=True),
        Production("compare the {side} {fig} with the other one .", {"side": _SIDE, "fig": _FIGNOUN}, lf_disjoint=True),
        Production("i want you to focus on the {noun} .", {"noun": ("diagram", "picture", "problem")}, lf_disjoint=True),
    ),
    DialogueAct.OTHER: (
        Production("sit down .", {}),
        Production("close your {noun} .", {"noun": ("books", "laptops", "notebooks")}),
        Production("open your {noun} .", {"noun": ("books", "notebooks")}),
        Production("stand up .", {}),
        Production("stop talking .", {}),
        Production("line up at the door .", {}),
        Production("take out your {noun} .", {"noun": ("homework", "pencils", "worksheets")}),
        Production("quiet down please .", {}),
        Production("put your {noun} away .", {"noun": ("phones", "pencils", "notebooks")}),
        Production("we will wrap up in a minute .", {}, lf_disjoint=True),
        Production("great job today everyone .", {}, lf_disjoint=True),
        Production("see you after the break .", {}, lf_disjoint=True),
        Production("thanks for showing up on time .", {}, lf_disjoint=True),
    ),
}

# Sampling mass given to LF-disjoint templates; tuned so shipped-LF coverage
# on a generated corpus stays near 0.9.
DISJOINT_SHARE = 0.08


def _pick(rng: np.random.Generator, seq: Sequence[str]) -> str:
    return seq[int(rng.integers(len(seq)))]


def _instantiate(rng: np.random.Generator, prod: Production) -> str:
    text = prod.template
    for slot, choices in prod.slots.items():
        text = text.replace("{" + slot + "}", _pick(rng, choices))
    return normalize(text)


def generate_synthetic(seed: int, n_per_class: int) -> list[tuple[str, DialogueAct]]:
    """Deterministic synthetic act corpus, `n_per_class` utterances per act."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    corpus: list[tuple[str, DialogueAct]] = []
    for act in ACTS:
        prods = GRAMMAR[act]
        covered = [p for p in prods if not p.lf_disjoint]
        disjoint = [p for p in prods if p.lf_disjoint]
        for _ in range(n_per_class):
            pool = disjoint if rng.random() < DISJOINT_SHARE else covered
            prod = pool[int(rng.integers(len(pool)))]
            corpus.append((_instantiate(rng, prod), act))
    return corpus


def save_corpus(corpus: Sequence[tuple[str, DialogueAct]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text, act in corpus:
            fh.write(json.dumps({"text": text, "label": act.label}) + "\n")


def load_corpus(path: str | Path) -> list[tuple[str, DialogueAct]]:
    out: list[tuple[str, DialogueAct]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append((rec["text"], act_from_label(rec["label"])))
    return out


# ---------------------------------------------------------------------------
# relation corpus generator

_REL_VALUES = ("2", "3", "4", "5", "6", "8", "10", "12", "2.5", "1/2", "3/4", "7")


def _rel_value(rng: np.random.Generator, exclude: Optional[str] = None) -> str:
    while True:
        v = _pick(rng, _REL_VALUES)
        if v != exclude:
            return v


def _rel_attr(rng: np.random.Generator, exclude: Optional[str] = None) -> str:
    while True:
        a = _pick(rng, ("length", "width", "height"))
        if a != exclude:
            return a


def generate_relation_corpus(seed: int, n_sentences: int = 140) -> list[RelationExample]:
    """Deterministic synthetic relation corpus with both labels present."""
    if n_sentences < 1:
        raise ValueError("n_sentences must be >= 1")
    rng = np.random.default_rng(seed)
    out: list[RelationExample] = []

    def ex(text: str, attr: str, value: Optional[str], label: bool) -> None:
        out.append(
            RelationExample(
                text=normalize(text),
                attribute=Attribute(attr),
                value=None if value is None else Fraction(value),
                label=label,
            )
        )

    makers: list[Callable[[], None]] = []

    def assert_then_query() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        b = _rel_attr(rng, exclude=a)
        fig = _pick(rng, _FIGNOUN)
        text = f"the {a} of the {fig} is {x} , what is the {b} ?"
        ex(text, a, x, True)
        ex(text, b, x, False)

    def simple_assert() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        ex(f"the {a} is {x}", a, x, True)

    def negated_assert() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        ex(f"the {a} is not {x}", a, x, False)

    def corrective() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        b = _rel_attr(rng, exclude=a)
        text = f"no , the {a} is not {x} , the {b} is ."
        ex(text, a, x, False)
        ex(text, b, x, True)

    def bare_query() -> None:
        a = _pick(rng, ("length", "width", "height", "volume", "scale factor"))
        ex(f"what is the {a} ?", a, None, False)

    def side_query() -> None:
        a = _rel_attr(rng)
        side = _pick(rng, _SIDE)
        fig = _pick(rng, _FIGNOUN)
        ex(f"what is the {a} of the {side} {fig} ?", a, None, False)

    def double_assert() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        b = _rel_attr(rng, exclude=a)
        y = _rel_value(rng, exclude=x)
        text = f"the {a} is {x} and the {b} is {y}"
        ex(text, a, x, True)
        ex(text, b, y, True)
        ex(text, a, y, False)
        ex(text, b, x, False)

    def yesno_probe() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        ex(f"is the {a} {x} ?", a, x, False)

    def equals_assert() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        ex(f"the {a} equals {x}", a, x, True)

    def side_assert() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        side = _pick(rng, _SIDE)
        fig = _pick(rng, _FIGNOUN)
        ex(f"the {a} of the {side} {fig} is {x}", a, x, True)

    def rhetorical_assert() -> None:
        a, x = _rel_attr(rng), _rel_value(rng)
        ex(f"the {a} is {x} , right ?", a, x, True)

    def scale_assert() -> None:
        x = _pick(rng, ("2", "3", "1/2", "4"))
        ex(f"the scale factor is {x}", "scale factor", x, True)

    makers = [
        assert_then_query,
        simple_assert,
        negated_assert,
        corrective,
        bare_query,
        side_query,
        double_assert,
        yesno_probe,
        equals_assert,
        side_assert,
        rhetorical_assert,
        scale_assert,
    ]
    for i in range(n_sentences):
        makers[i % len(makers)]()
    return out


# ---------------------------------------------------------------------------
# cross-validation harness

@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class FoldMetrics:
    confusion: tuple[tuple[int, ...], ...]  # confusion[true][pred]
    per_class: dict[str, ClassMetrics]
    macro_f1: float


@dataclass(frozen=True)
class CVReport:
    folds: tuple[FoldMetrics, ...]
    macro_f1: float
    k: int
    seed: int
    corpus_hash: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "seed": self.seed,
                "corpus_hash": self.corpus_hash,
                "macro_f1": self.macro_f1,
                "reference_macro_f1": REFERENCE_ACT_MACRO_F1,
                "reference_note": NON_COMPARABLE_NOTE,
                "folds": [
                    {
                        "macro_f1": f.macro_f1,
                        "confusion": [list(row) for row in f.confusion],
                        "per_class": {
                            name: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                            for name, m in f.per_class.items()
                        },
                    }
                    for f in self.folds
                ],
            },
            indent=2,
        )

    def to_table(self) -> str:
        lines = [f"{'fold':>4} {'class':>12} {'precision':>9} {'recall':>7} {'f1':>7}"]
        for i, fold in enumerate(self.folds):
            for name, m in fold.per_class.items():
                lines.append(
                    f"{i:>4} {name:>12} {m.precision:9.4f} {m.recall:7.4f} {m.f1:7.4f}"
                )
            lines.append(f"{i:>4} {'macro-f1':>12} {fold.macro_f1:25.4f}")
        lines.append("")
        lines.append(f"macro-F1 (mean of {self.k} folds): {self.macro_f1:.4f}")
        lines.append(
            f"reference macro-F1 (original system, private data): "
            f"{REFERENCE_ACT_MACRO_F1:.2f} [not comparable]"
        )
        return "\n".join(lines)


def corpus_hash_hex(corpus: Sequence[tuple[str, DialogueAct]]) -> str:
    payload = json.dumps([[t, a.label] for t, a in corpus])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _prf_from_confusion(confusion: np.ndarray) -> tuple[dict[str, ClassMetrics], float]:
    per_class: dict[str, ClassMetrics] = {}
    f1s = []
    for c, act in enumerate(ACTS):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[act.label] = ClassMetrics(float(precision), float(recall), float(f1))
        f1s.append(f1)
    return per_class, float(np.mean(f1s))


def stratified_folds(
    labels: Sequence[int], k: int, seed: int
) -> list[np.ndarray]:
    """Class-stratified partition into k folds; every index lands in exactly one."""
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    labels_arr = np.asarray(labels)
    for c in sorted(set(labels_arr.tolist())):
        idx = np.flatnonzero(labels_arr == c)
        rng.shuffle(idx)
        for j in range(k):
            folds[j].extend(idx[j::k].tolist())
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def cross_validate(
    corpus: Sequence[tuple[str, DialogueAct]],
    k: int = 5,
    seed: int = 0,
    training: TrainingConfig = TrainingConfig(),
) -> CVReport:
    """Stratified k-fold CV of the act classifier; deterministic given seed."""
    labels = [int(act) for _, act in corpus]
    for act in ACTS:
        if labels.count(int(act)) < k:
            raise DegenerateCorpus(
                f"class {act.label} has fewer than {k} samples; cannot stratify"
            )
    folds = stratified_folds(labels, k, seed)
    fold_metrics: list[FoldMetrics] = []
    for j in range(k):
        test_idx = set(folds[j].tolist())
        train_set = [corpus[i] for i in range(len(corpus)) if i not in test_idx]
        clf = train(train_set, training)
        confusion = np.zeros((len(ACTS), len(ACTS)), dtype=np.int64)
        for i in sorted(test_idx):
            text, act = corpus[i]
            probs = classify(clf, featurize(normalize(text), training.hash_space))
            confusion[int(act), int(np.argmax(probs))] += 1
        per_class, macro = _prf_from_confusion(confusion)
        fold_metrics.append(
            FoldMetrics(
                confusion=tuple(tuple(int(x) for x in row) for row in confusion),
                per_class=per_class,
                macro_f1=macro,
            )
        )
    return CVReport(
        folds=tuple(fold_metrics),
        macro_f1=float(np.mean([f.macro_f1 for f in fold_metrics])),
        k=k,
        seed=seed,
        corpus_hash=corpus_hash_hex(corpus),
    )


@dataclass(frozen=True)
class RelationCVReport:
    precision: float
    recall: float
    f1: float
    folds: tuple[ClassMetrics, ...]
    k: int
    seed: int

    def to_json(self) -> str:
        ref_p, ref_r, ref_f = REFERENCE_RELATION_PRF
        return json.dumps(
            {
                "k": self.k,
                "seed": self.seed,
                "precision": self.precision,
                "recall": self.recall,
                "f1": self.f1,
                "folds": [
                    {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                    for m in self.folds
                ],
                "reference": {"precision": ref_p, "recall": ref_r, "f1": ref_f},
                "reference_note": NON_COMPARABLE_NOTE,
            },
            indent=2,
        )

    def to_table(self) -> str:
        ref_p, ref_r, ref_f = REFERENCE_RELATION_PRF
        lines = [f"{'fold':>4} {'precision':>9} {'recall':>7} {'f1':>7}"]
        for i, m in enumerate(self.folds):
            lines.append(f"{i:>4} {m.precision:9.4f} {m.recall:7.4f} {m.f1:7.4f}")
        lines.append("")
        lines.append(
            f"relation scorer (mean of {self.k} folds): "
            f"P={self.precision:.4f} R={self.recall:.4f} F1={self.f1:.4f}"
        )
        lines.append(
            f"reference (original system, private data): "
            f"P={ref_p:.2f} R={ref_r:.2f} F1={ref_f:.2f} [not comparable]"
        )
        return "\n".join(lines)


def cross_validate_relations(
    corpus: Sequence[RelationExample], k: int = 5, seed: int = 0
) -> RelationCVReport:
    """Stratified k-fold CV of the relation scorer (binary metrics on True)."""
    from .entities import score_relations, extract_entities, train_relation_scorer

    labels = [1 if ex.label else 0 for ex in corpus]
    for value in (0, 1):
        if labels.count(value) < k:
            raise DegenerateCorpus(f"label {value} has fewer than {k} examples")
    folds = stratified_folds(labels, k, seed)
    fold_metrics: list[ClassMetrics] = []
    for j in range(k):
        test_idx = set(folds[j].tolist())
        train_set = [corpus[i] for i in range(len(corpus)) if i not in test_idx]
        scorer = train_relation_scorer(train_set)
        tp = fp = fn = 0
        for i in sorted(test_idx):
            ex = corpus[i]
            ann = extract_entities(ex.text)
            cands = score_relations(ex.text, ann, scorer)
            predicted = False
            for c in cands:
                if c.attribute == ex.attribute and c.value == ex.value:
                    predicted = c.label
                    break
            if predicted and ex.label:
                tp += 1
            elif predicted and not ex.label:
                fp += 1
            elif not predicted and ex.label:
                fn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        fold_metrics.append(ClassMetrics(float(precision), float(recall), float(f1)))
    return RelationCVReport(
        precision=float(np.mean([m.precision for m in fold_metrics])),
        recall=float(np.mean([m.recall for m in fold_metrics])),
        f1=float(np.mean([m.f1 for m in fold_metrics])),
        folds=tuple(fold_metrics),
        k=k,
        seed=seed,
    )
