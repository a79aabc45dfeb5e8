"""Utterance normalization, hashed lexical features, and the dialogue-act classifier.

The classifier is a multinomial logistic regression over hashed unigram/bigram
counts plus a handful of hand-picked keyword flags. It is deliberately small:
deterministic to train, cheap to ship, and easy to swap for a neural backend
later because everything downstream only sees probability vectors.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
import unicodedata
import zlib
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .errors import DegenerateCorpus, ModelFormatError, UntrainedClassifier

DEFAULT_HASH_SPACE = 1 << 16

MODEL_MAGIC = "simstudent/act-classifier"
MODEL_VERSION = 1

# U+2044 shows up when NFKC decomposes vulgar fractions like '1/2' glyphs.
_FRACTION_SLASH = "⁄"

NUMBER_RE = re.compile(r"\d+(?:[./]\d+)?")

INTERROGATIVES = ("how", "why", "what")
OTHER_WH_WORDS = frozenset({"who", "when", "where", "which", "whose"})
IMPERATIVE_VERBS = frozenset(
    {
        "sit", "stand", "close", "open", "look", "stop", "listen", "take",
        "put", "go", "come", "write", "read", "draw", "turn", "raise",
        "line", "quiet", "pay", "wait", "be", "remember", "notice", "keep",
    }
)

FLAG_NAMES = ("how", "why", "what", "wh_other", "imperative", "number", "qmark")


class DialogueAct(IntEnum):
    """Teacher question categories; a closed four-way taxonomy."""

    PROBING = 0
    FACTUAL = 1
    EXPOSITORY = 2
    OTHER = 3

    @property
    def label(self) -> str:
        return self.name.lower()


ACTS: tuple[DialogueAct, ...] = tuple(DialogueAct)
NUM_ACTS = len(ACTS)


def act_from_label(label: str) -> DialogueAct:
    try:
        return DialogueAct[label.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown dialogue act {label!r}") from None


def normalize(text: str) -> str:
    """Lowercase, split punctuation into standalone tokens, collapse whitespace.

    Numbers keep their internal '.' and '/' ("2.5", "1/2" stay one token) and
    digit/letter boundaries split ("3x5" -> "3 x 5"). Idempotent.
    """
    text = unicodedata.normalize("NFKC", text).replace(_FRACTION_SLASH, "/").lower()
    tokens: list[str] = []
    buf: list[str] = []
    kind = ""  # "a" = letter run, "d" = number run

    def flush() -> None:
        nonlocal kind
        if buf:
            tokens.append("".join(buf))
            buf.clear()
        kind = ""

    n = len(text)
    for i, ch in enumerate(text):
        if ch.isspace():
            flush()
        elif ch.isalpha():
            if kind != "a":
                flush()
                kind = "a"
            buf.append(ch)
        elif ch.isdigit():
            if kind != "d":
                flush()
                kind = "d"
            buf.append(ch)
        elif ch in "./" and kind == "d" and buf[-1].isdigit() and i + 1 < n and text[i + 1].isdigit():
            buf.append(ch)
        else:
            flush()
            tokens.append(ch)
    flush()
    return " ".join(tokens)


@dataclass(frozen=True)
class FeatureVector:
    """Sparse non-negative feature vector over a fixed hashed space."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must align")

    def is_empty(self) -> bool:
        return not self.indices


def feature_dim(hash_space: int = DEFAULT_HASH_SPACE) -> int:
    return hash_space + len(FLAG_NAMES)


def _hash_gram(gram: str, hash_space: int) -> int:
    return zlib.crc32(gram.encode("utf-8")) % hash_space


def _grams(tokens: Sequence[str]) -> Iterable[str]:
    yield from tokens
    for i in range(len(tokens) - 1):
        yield tokens[i] + " " + tokens[i + 1]


def featurize(text: str, hash_space: int = DEFAULT_HASH_SPACE) -> FeatureVector:
    """Build the deterministic sparse feature vector for normalized text.

    Hashed unigram/bigram counts live in [0, hash_space); keyword flags occupy
    the trailing slots. Hashing may collide; see `hash_collision_rate`.
    """
    tokens = text.split()
    weights: dict[int, float] = {}
    for gram in _grams(tokens):
        idx = _hash_gram(gram, hash_space)
        weights[idx] = weights.get(idx, 0.0) + 1.0

    flags = set()
    for i, word in enumerate(INTERROGATIVES):
        if word in tokens:
            flags.add(i)
    if any(tok in OTHER_WH_WORDS for tok in tokens):
        flags.add(FLAG_NAMES.index("wh_other"))
    if tokens and tokens[0] in IMPERATIVE_VERBS:
        flags.add(FLAG_NAMES.index("imperative"))
    if any(NUMBER_RE.fullmatch(tok) for tok in tokens):
        flags.add(FLAG_NAMES.index("number"))
    if "?" in tokens:
        flags.add(FLAG_NAMES.index("qmark"))
    for f in flags:
        weights[hash_space + f] = 1.0

    items = sorted(weights.items())
    return FeatureVector(
        indices=tuple(i for i, _ in items),
        values=tuple(v for _, v in items),
        dim=feature_dim(hash_space),
    )


def hash_collision_rate(texts: Iterable[str], hash_space: int = DEFAULT_HASH_SPACE) -> float:
    """Fraction of distinct n-grams whose hashed id is shared with another n-gram."""
    buckets: dict[int, set[str]] = {}
    for text in texts:
        tokens = normalize(text).split()
        for gram in _grams(tokens):
            buckets.setdefault(_hash_gram(gram, hash_space), set()).add(gram)
    total = sum(len(s) for s in buckets.values())
    if total == 0:
        return 0.0
    colliding = sum(len(s) for s in buckets.values() if len(s) > 1)
    return colliding / total


@dataclass(frozen=True)
class TrainingConfig:
    """Fixed-epoch gradient-descent settings; one record, no hidden knobs."""

    epochs: int = 400
    learning_rate: float = 0.5
    l2_penalty: float = 1e-4
    seed: int = 0
    hash_space: int = DEFAULT_HASH_SPACE


@dataclass(frozen=True, eq=False)
class ActClassifier:
    """Immutable trained act classifier (weights may be absent before training)."""

    weights: Optional[np.ndarray]  # (NUM_ACTS, dim)
    bias: Optional[np.ndarray]  # (NUM_ACTS,)
    hash_space: int = DEFAULT_HASH_SPACE
    corpus_hash: str = ""
    seed: int = 0

    @property
    def dim(self) -> int:
        return feature_dim(self.hash_space)

    def is_trained(self) -> bool:
        return self.weights is not None and self.bias is not None


def untrained_classifier(hash_space: int = DEFAULT_HASH_SPACE) -> ActClassifier:
    return ActClassifier(weights=None, bias=None, hash_space=hash_space)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=-1, keepdims=True)


def classify(
    clf: ActClassifier,
    fv: FeatureVector,
    mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Probability vector over the four acts; masked features contribute zero.

    `mask` aligns with `fv.indices` (1.0 keeps a feature, 0.0 drops it). The
    output is non-negative and sums to 1 within 1e-9.
    """
    if not clf.is_trained():
        raise UntrainedClassifier("classifier has no weights; train or load one first")
    if fv.dim != clf.dim:
        raise ValueError(f"feature dim {fv.dim} does not match classifier dim {clf.dim}")
    logits = clf.bias.astype(float).copy()
    if fv.indices:
        idx = np.asarray(fv.indices, dtype=np.int64)
        vals = np.asarray(fv.values, dtype=float)
        if mask is not None:
            mask = np.asarray(mask, dtype=float)
            if mask.shape != vals.shape:
                raise ValueError("mask must align with the feature vector indices")
            vals = vals * mask
        logits += clf.weights[:, idx] @ vals
    probs = _softmax_rows(logits)
    return probs / probs.sum()


def corpus_fingerprint(corpus: Sequence[tuple[str, DialogueAct]]) -> str:
    payload = json.dumps([[t, a.label] for t, a in corpus], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _design_matrix(
    corpus: Sequence[tuple[str, DialogueAct]], hash_space: int
) -> tuple[sparse.csr_matrix, np.ndarray]:
    dim = feature_dim(hash_space)
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    labels = np.empty(len(corpus), dtype=np.int64)
    for r, (text, act) in enumerate(corpus):
        fv = featurize(normalize(text), hash_space)
        rows.extend([r] * len(fv.indices))
        cols.extend(fv.indices)
        data.extend(fv.values)
        labels[r] = int(act)
    x = sparse.csr_matrix((data, (rows, cols)), shape=(len(corpus), dim))
    return x, labels


def train(
    corpus: Sequence[tuple[str, DialogueAct]],
    config: TrainingConfig = TrainingConfig(),
) -> ActClassifier:
    """Fit the multinomial classifier with full-batch gradient descent.

    Deterministic for a given corpus and config (zero init, fixed epochs, no
    sampling). Raises DegenerateCorpus when a class is missing or the corpus
    is smaller than the number of classes.
    """
    if len(corpus) < NUM_ACTS:
        raise DegenerateCorpus(f"need at least {NUM_ACTS} samples, got {len(corpus)}")
    present = {act for _, act in corpus}
    missing = [a.label for a in ACTS if a not in present]
    if missing:
        raise DegenerateCorpus(f"corpus is missing classes: {', '.join(missing)}")

    x, labels = _design_matrix(corpus, config.hash_space)
    n, dim = x.shape
    y = np.zeros((n, NUM_ACTS))
    y[np.arange(n), labels] = 1.0

    w = np.zeros((NUM_ACTS, dim))
    b = np.zeros(NUM_ACTS)
    lr = config.learning_rate
    for _ in range(config.epochs):
        probs = _softmax_rows(x @ w.T + b)
        g = (probs - y) / n
        grad_w = (x.T @ g).T + config.l2_penalty * w
        w -= lr * grad_w
        b -= lr * g.sum(axis=0)

    w.setflags(write=False)
    b.setflags(write=False)
    return ActClassifier(
        weights=w,
        bias=b,
        hash_space=config.hash_space,
        corpus_hash=corpus_fingerprint(corpus),
        seed=config.seed,
    )


def _encode_array(arr: np.ndarray) -> dict:
    return {
        "dtype": str(arr.dtype),
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _decode_array(blob: dict) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(blob["data"]), dtype=blob["dtype"])
    arr = arr.reshape(blob["shape"]).copy()
    arr.setflags(write=False)
    return arr


def save_classifier(clf: ActClassifier, path: str | Path) -> None:
    if not clf.is_trained():
        raise UntrainedClassifier("cannot save an untrained classifier")
    doc = {
        "magic": MODEL_MAGIC,
        "version": MODEL_VERSION,
        "hash_space": clf.hash_space,
        "seed": clf.seed,
        "corpus_hash": clf.corpus_hash,
        "weights": _encode_array(np.asarray(clf.weights)),
        "bias": _encode_array(np.asarray(clf.bias)),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_classifier(path: str | Path) -> ActClassifier:
    """Load a classifier saved by `save_classifier`; bit-exact round trip."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable classifier file {path}: {exc}") from exc
    if doc.get("magic") != MODEL_MAGIC:
        raise ModelFormatError(f"{path} is not an act-classifier file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"classifier version {doc.get('version')} unsupported (want {MODEL_VERSION})"
        )
    weights = _decode_array(doc["weights"])
    bias = _decode_array(doc["bias"])
    if weights.shape != (NUM_ACTS, feature_dim(doc["hash_space"])):
        raise ModelFormatError(f"classifier weight shape {weights.shape} is inconsistent")
    return ActClassifier(
        weights=weights,
        bias=bias,
        hash_space=doc["hash_space"],
        corpus_hash=doc.get("corpus_hash", ""),
        seed=doc.get("seed", 0),
    )
