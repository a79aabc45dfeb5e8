import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simstudent.acts import classify, featurize
from simstudent.errors import EmptyEvaluation, NotADistribution
from simstudent.uncertainty import (
    ActDistribution,
    GateDecision,
    GateDiagnostics,
    Trigger,
    UncertaintyConfig,
    Verdict,
    calibration_report,
    ensemble_classify,
    entropy,
    gate,
)


class TestEntropy:
    def test_one_hot_is_zero(self):
        assert entropy([1.0, 0.0, 0.0, 0.0]) == 0.0

    def test_uniform_is_ln4(self):
        assert entropy([0.25, 0.25, 0.25, 0.25]) == pytest.approx(math.log(4), abs=1e-12)

    def test_two_way_uniform_is_ln2(self):
        assert entropy([0.5, 0.5, 0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-12)

    def test_rejects_non_distribution(self):
        with pytest.raises(NotADistribution):
            entropy([0.5, 0.6])
        with pytest.raises(NotADistribution):
            entropy([-0.1, 1.1])
        with pytest.raises(NotADistribution):
            entropy([])

    @given(
        st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=1, max_size=12)
    )
    @settings(max_examples=300, deadline=None)
    def test_bounds_property(self, raw):
        p = np.asarray(raw)
        p = p / p.sum()
        h = entropy(p)
        assert 0.0 <= h <= math.log(len(p)) + 1e-12


class TestUncertaintyConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            UncertaintyConfig(sample_count=0)
        with pytest.raises(ValueError):
            UncertaintyConfig(dropout_rate=1.5)
        with pytest.raises(ValueError):
            UncertaintyConfig(tau_entity=2.0)


class TestEnsemble:
    def test_degenerate_matches_plain_classify(self, classifier):
        fv = featurize("what is 3 x 5 ?")
        cfg = UncertaintyConfig(sample_count=1, dropout_rate=0.0)
        dist = ensemble_classify(classifier, fv, cfg)
        plain = classify(classifier, fv)
        assert np.allclose(dist.mean_probs, plain, atol=1e-12)
        assert dist.argmax_agreement == 1.0
        assert dist.sample_count == 1

    def test_seeded_reproducibility(self, classifier):
        fv = featurize("how did you get that answer ?")
        cfg = UncertaintyConfig(seed=42)
        a = ensemble_classify(classifier, fv, cfg)
        b = ensemble_classify(classifier, fv, cfg)
        assert a == b

    def test_gibberish_has_higher_entropy(self, classifier):
        cfg = UncertaintyConfig()
        known = ensemble_classify(classifier, featurize("what is 3 x 5 ?"), cfg)
        gibberish = ensemble_classify(classifier, featurize("zzq qqz zqz"), cfg)
        assert gibberish.predictive_entropy > known.predictive_entropy

    def test_mean_is_simplex(self, classifier):
        cfg = UncertaintyConfig()
        dist = ensemble_classify(classifier, featurize("look at the left figure ."), cfg)
        probs = np.asarray(dist.mean_probs)
        assert probs.min() >= 0.0
        assert abs(probs.sum() - 1.0) < 1e-9
        assert 0.0 <= dist.argmax_agreement <= 1.0


def _dist(entropy_value, probs=(0.7, 0.1, 0.1, 0.1)):
    return ActDistribution(
        mean_probs=probs,
        predictive_entropy=entropy_value,
        sample_count=30,
        argmax_agreement=1.0,
    )


class TestGate:
    def test_act_uncertainty_trips_first(self):
        cfg = UncertaintyConfig(tau_act=0.8)
        decision = gate(_dist(1.3), 0.2, False, False, cfg)
        assert decision.verdict is Verdict.ESCALATE
        assert decision.triggered_by is Trigger.ACT_UNCERTAINTY

    def test_proceed_when_all_clear(self):
        cfg = UncertaintyConfig()
        decision = gate(_dist(0.1), 0.95, True, True, cfg)
        assert decision.verdict is Verdict.PROCEED
        assert decision.triggered_by is Trigger.NONE

    def test_no_template_after_entity_check(self):
        cfg = UncertaintyConfig()
        decision = gate(_dist(0.1), 0.95, False, True, cfg)
        assert decision.triggered_by is Trigger.NO_TEMPLATE

    def test_entity_before_template(self):
        cfg = UncertaintyConfig()
        decision = gate(_dist(0.1), 0.2, False, False, cfg)
        assert decision.triggered_by is Trigger.ENTITY_UNCERTAINTY

    def test_scenario_conflict_last(self):
        cfg = UncertaintyConfig()
        decision = gate(_dist(0.1), 0.95, True, False, cfg)
        assert decision.triggered_by is Trigger.SCENARIO_CONFLICT

    def test_totality_over_grid(self):
        cfg = UncertaintyConfig()
        for h in (0.0, 0.5, 1.0, 1.386):
            for conf in (0.0, 0.5, 1.0):
                for template in (True, False):
                    for consistent in (True, False):
                        decision = gate(_dist(h), conf, template, consistent, cfg)
                        assert decision.verdict in (Verdict.PROCEED, Verdict.ESCALATE)

    def test_verdict_trigger_coherence_enforced(self):
        diag = GateDiagnostics(0.1, 0.8, 1.0, 0.6, True, True)
        with pytest.raises(ValueError):
            GateDecision(verdict=Verdict.ESCALATE, triggered_by=Trigger.NONE, diagnostics=diag)

    def test_escalation_monotone_in_tau_act(self, classifier, act_corpus):
        cfg = UncertaintyConfig()
        entropies = [
            ensemble_classify(classifier, featurize(text), cfg).predictive_entropy
            for text, _ in act_corpus[:100]
        ]
        previous: set[int] = set()
        for tau in (1.2, 0.9, 0.6, 0.3, 0.0):
            tau_cfg = UncertaintyConfig(tau_act=tau)
            escalated = {
                i
                for i, h in enumerate(entropies)
                if gate(_dist(h), 1.0, True, True, tau_cfg).verdict is Verdict.ESCALATE
            }
            assert previous <= escalated
            previous = escalated


class TestCalibration:
    def test_empty_rejected(self):
        with pytest.raises(EmptyEvaluation):
            calibration_report([])

    def test_perfectly_confident_and_correct(self):
        pairs = [((1.0, 0.0, 0.0, 0.0), 0)] * 20
        report = calibration_report(pairs)
        assert report.ece == pytest.approx(0.0, abs=1e-12)
        assert report.accuracy == 1.0

    def test_uniform_prediction_on_balanced_classes(self):
        pairs = [((0.25, 0.25, 0.25, 0.25), label) for label in (0, 1, 2, 3) * 10]
        report = calibration_report(pairs)
        # confidence 0.25 matches accuracy 0.25 exactly
        assert report.ece == pytest.approx(0.0, abs=1e-12)
        assert report.accuracy == pytest.approx(0.25)
        assert report.mean_entropy == pytest.approx(math.log(4), abs=1e-9)

    def test_ece_bounds(self):
        pairs = [((0.9, 0.1, 0.0, 0.0), 1)] * 10
        report = calibration_report(pairs)
        assert 0.0 <= report.ece <= 1.0

    def test_report_renders(self):
        pairs = [((0.7, 0.1, 0.1, 0.1), 0)] * 5
        report = calibration_report(pairs)
        assert "ECE" in report.to_table()
        assert '"ece"' in report.to_json()

    def test_held_out_ece_regression_baseline(self, act_corpus):
        # frozen baseline from the shipped seed: ECE 0.0843 on fold 0
        from simstudent.acts import TrainingConfig, train
        from simstudent.corpus import stratified_folds

        labels = [int(a) for _, a in act_corpus]
        folds = stratified_folds(labels, 5, seed=13)
        held_out = set(folds[0].tolist())
        clf = train(
            [act_corpus[i] for i in range(len(act_corpus)) if i not in held_out],
            TrainingConfig(seed=13),
        )
        cfg = UncertaintyConfig()
        pairs = [
            (
                ensemble_classify(clf, featurize(act_corpus[i][0]), cfg).mean_probs,
                int(act_corpus[i][1]),
            )
            for i in sorted(held_out)
        ]
        report = calibration_report(pairs)
        assert report.ece == pytest.approx(0.0843, abs=0.05)
