"""Ensemble uncertainty over classifier outputs and the escalate/proceed gate.

Uncertainty comes from averaging stochastic forward passes with random
feature-dropout masks (test-time dropout). The statistic fed to the gate is
the predictive entropy of the mean distribution; argmax agreement across
passes is kept as a secondary diagnostic for the supervisor panel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .acts import ACTS, ActClassifier, FeatureVector, classify
from .errors import EmptyEvaluation, NotADistribution

SIMPLEX_TOLERANCE = 1e-9


def entropy(probs: Sequence[float], tolerance: float = SIMPLEX_TOLERANCE) -> float:
    """Shannon entropy -sum(p ln p) in nats, with 0*ln(0) taken as 0."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise NotADistribution("expected a non-empty 1-d probability vector")
    if p.min() < -tolerance:
        raise NotADistribution(f"negative entry {p.min()}")
    if abs(p.sum() - 1.0) > tolerance:
        raise NotADistribution(f"entries sum to {p.sum()}, not 1")
    p = np.clip(p, 0.0, None)
    nz = p[p > 0.0]
    return float(max(-(nz * np.log(nz)).sum(), 0.0))


@dataclass(frozen=True)
class UncertaintyConfig:
    """Knobs for the dropout ensemble and the escalation thresholds."""

    sample_count: int = 30
    dropout_rate: float = 0.2
    tau_act: float = 0.8  # entropy threshold, nats
    tau_entity: float = 0.6  # minimum per-entity decision confidence
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not 0.0 <= self.dropout_rate <= 1.0:
            raise ValueError("dropout_rate must be in [0, 1]")
        if self.tau_act < 0.0:
            raise ValueError("tau_act must be >= 0")
        if not 0.0 <= self.tau_entity <= 1.0:
            raise ValueError("tau_entity must be in [0, 1]")


@dataclass(frozen=True)
class ActDistribution:
    """Mean act probabilities from an ensemble plus its uncertainty summary."""

    mean_probs: tuple[float, ...]
    predictive_entropy: float
    sample_count: int
    argmax_agreement: float  # fraction of passes agreeing with the mean argmax

    def argmax(self) -> int:
        """Index of the most probable act; ties break to the lowest index."""
        return int(np.argmax(self.mean_probs))

    def by_act(self) -> dict[str, float]:
        return {act.label: self.mean_probs[i] for i, act in enumerate(ACTS)}


def ensemble_classify(
    clf: ActClassifier, fv: FeatureVector, cfg: UncertaintyConfig
) -> ActDistribution:
    """Run `cfg.sample_count` dropout passes and summarize them.

    Each pass drops every active feature independently with probability
    `cfg.dropout_rate`; the mask stream is seeded per call, so the result is
    a pure function of (classifier, features, config).
    """
    rng = np.random.default_rng(cfg.seed)
    n_active = len(fv.indices)
    samples = np.empty((cfg.sample_count, len(ACTS)))
    for s in range(cfg.sample_count):
        mask: Optional[np.ndarray] = None
        if cfg.dropout_rate > 0.0 and n_active:
            mask = (rng.random(n_active) >= cfg.dropout_rate).astype(float)
        samples[s] = classify(clf, fv, mask)
    mean = samples.mean(axis=0)
    mean = mean / mean.sum()
    modal = int(np.argmax(mean))
    agreement = float((samples.argmax(axis=1) == modal).mean())
    return ActDistribution(
        mean_probs=tuple(float(x) for x in mean),
        predictive_entropy=entropy(mean),
        sample_count=cfg.sample_count,
        argmax_agreement=agreement,
    )


class Verdict(Enum):
    PROCEED = "proceed"
    ESCALATE = "escalate"


class Trigger(Enum):
    ACT_UNCERTAINTY = "act_uncertainty"
    ENTITY_UNCERTAINTY = "entity_uncertainty"
    NO_TEMPLATE = "no_template"
    SCENARIO_CONFLICT = "scenario_conflict"
    NONE = "none"


@dataclass(frozen=True)
class GateDiagnostics:
    entropy: float
    tau_act: float
    entity_confidence: float
    tau_entity: float
    template_available: bool
    scenario_consistent: bool
    argmax_agreement: float = 1.0


@dataclass(frozen=True)
class GateDecision:
    verdict: Verdict
    triggered_by: Trigger
    diagnostics: GateDiagnostics

    def __post_init__(self) -> None:
        escalated = self.verdict is Verdict.ESCALATE
        if escalated != (self.triggered_by is not Trigger.NONE):
            raise ValueError("verdict must be Escalate exactly when a trigger fired")


def gate(
    act: ActDistribution,
    entity_confidence: float,
    template_available: bool,
    scenario_consistent: bool,
    cfg: UncertaintyConfig,
) -> GateDecision:
    """Escalate/proceed decision; checks run in a fixed order so the reported
    trigger is deterministic: act entropy, entity confidence, template, scenario."""
    diagnostics = GateDiagnostics(
        entropy=act.predictive_entropy,
        tau_act=cfg.tau_act,
        entity_confidence=entity_confidence,
        tau_entity=cfg.tau_entity,
        template_available=template_available,
        scenario_consistent=scenario_consistent,
        argmax_agreement=act.argmax_agreement,
    )
    trigger = Trigger.NONE
    if act.predictive_entropy > cfg.tau_act:
        trigger = Trigger.ACT_UNCERTAINTY
    elif entity_confidence < cfg.tau_entity:
        trigger = Trigger.ENTITY_UNCERTAINTY
    elif not template_available:
        trigger = Trigger.NO_TEMPLATE
    elif not scenario_consistent:
        trigger = Trigger.SCENARIO_CONFLICT
    verdict = Verdict.PROCEED if trigger is Trigger.NONE else Verdict.ESCALATE
    return GateDecision(verdict=verdict, triggered_by=trigger, diagnostics=diagnostics)


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    count: int
    mean_confidence: float
    accuracy: float


@dataclass(frozen=True)
class CalibrationReport:
    ece: float
    accuracy: float
    mean_entropy: float
    sample_count: int
    bins: tuple[CalibrationBin, ...] = field(default=())

    def to_json(self) -> str:
        return json.dumps(
            {
                "ece": self.ece,
                "accuracy": self.accuracy,
                "mean_entropy": self.mean_entropy,
                "sample_count": self.sample_count,
                "bins": [
                    {
                        "lower": b.lower,
                        "upper": b.upper,
                        "count": b.count,
                        "mean_confidence": b.mean_confidence,
                        "accuracy": b.accuracy,
                    }
                    for b in self.bins
                ],
            },
            indent=2,
        )

    def to_table(self) -> str:
        lines = [
            f"{'bin':>12} {'count':>7} {'confidence':>11} {'accuracy':>9}",
        ]
        for b in self.bins:
            lines.append(
                f"[{b.lower:4.2f},{b.upper:4.2f}) {b.count:7d} "
                f"{b.mean_confidence:11.4f} {b.accuracy:9.4f}"
            )
        lines.append("")
        lines.append(f"ECE          {self.ece:8.4f}")
        lines.append(f"accuracy     {self.accuracy:8.4f}")
        lines.append(f"mean entropy {self.mean_entropy:8.4f} nats")
        lines.append(f"samples      {self.sample_count:8d}")
        return "\n".join(lines)


def calibration_report(
    pairs: Sequence[tuple[Sequence[float], int]], num_bins: int = 10
) -> CalibrationReport:
    """Expected calibration error over (mean_probs, true label) pairs.

    Confidence is the max class probability; bins partition [0, 1] into
    `num_bins` equal widths, with confidence 1.0 falling in the top bin.
    """
    if not pairs:
        raise EmptyEvaluation("no prediction/label pairs to evaluate")
    probs = np.asarray([p for p, _ in pairs], dtype=float)
    labels = np.asarray([y for _, y in pairs], dtype=np.int64)
    confidences = probs.max(axis=1)
    predictions = probs.argmax(axis=1)
    correct = (predictions == labels).astype(float)
    entropies = np.array([entropy(p) for p in probs])

    bin_ids = np.minimum((confidences * num_bins).astype(int), num_bins - 1)
    bins: list[CalibrationBin] = []
    ece = 0.0
    n = len(pairs)
    for b in range(num_bins):
        in_bin = bin_ids == b
        count = int(in_bin.sum())
        if count:
            mean_conf = float(confidences[in_bin].mean())
            acc = float(correct[in_bin].mean())
            ece += (count / n) * abs(acc - mean_conf)
        else:
            mean_conf = 0.0
            acc = 0.0
        bins.append(
            CalibrationBin(
                lower=b / num_bins,
                upper=(b + 1) / num_bins,
                count=count,
                mean_confidence=mean_conf,
                accuracy=acc,
            )
        )
    return CalibrationReport(
        ece=float(ece),
        accuracy=float(correct.mean()),
        mean_entropy=float(entropies.mean()),
        sample_count=n,
        bins=tuple(bins),
    )
