import numpy as np
import pytest

from simstudent.acts import ACTS, DialogueAct, normalize
from simstudent.corpus import (
    GRAMMAR,
    NON_COMPARABLE_NOTE,
    SHIPPED_LABELING_FUNCTIONS,
    cross_validate,
    cross_validate_relations,
    generate_relation_corpus,
    generate_synthetic,
    label_corpus,
    load_corpus,
    save_corpus,
    stratified_folds,
)
from simstudent.errors import DegenerateCorpus


class TestLabelingFunctions:
    def test_probing_example(self):
        report = label_corpus(["how did you get that answer ?"])
        assert report.labeled[0][1] is DialogueAct.PROBING

    def test_rhetorical_example(self):
        report = label_corpus(["the answer is three , right ?"])
        assert report.labeled[0][1] is DialogueAct.EXPOSITORY

    def test_unmatched_dropped_and_counted(self):
        report = label_corpus(["blorp fizzle unrelated chatter"])
        assert report.labeled == ()
        assert report.abstained == 1
        assert report.coverage == 0.0

    def test_purity(self):
        texts = [t for t, _ in generate_synthetic(3, 25)]
        a = label_corpus(texts)
        b = label_corpus(texts)
        assert a.labeled == b.labeled
        assert a.conflicts == b.conflicts

    def test_requires_a_function(self):
        with pytest.raises(ValueError):
            label_corpus(["hello"], lfs=[])


class TestGrammar:
    def test_disjoint_share_of_productions(self):
        for act, productions in GRAMMAR.items():
            disjoint = sum(1 for p in productions if p.lf_disjoint)
            assert disjoint / len(productions) >= 0.30, act

    def test_disjoint_productions_dodge_every_lf(self):
        rng = np.random.default_rng(0)
        from simstudent.corpus import _instantiate

        for act, productions in GRAMMAR.items():
            for production in productions:
                if not production.lf_disjoint:
                    continue
                for _ in range(20):
                    text = _instantiate(rng, production)
                    fired = [
                        lf.name for lf in SHIPPED_LABELING_FUNCTIONS if lf(text) is not None
                    ]
                    assert not fired, (production.template, text, fired)

    def test_covered_productions_mostly_fire(self):
        corpus = generate_synthetic(13, 100)
        report = label_corpus([t for t, _ in corpus])
        # measured 0.9225 on the shipped seed; pinned with +/-0.05
        assert report.coverage == pytest.approx(0.9225, abs=0.05)
        assert report.coverage >= 0.85

    def test_weak_labels_agree_with_grammar_labels(self):
        corpus = generate_synthetic(13, 100)
        gold = dict(corpus)
        report = label_corpus([t for t, _ in corpus])
        for text, label in report.labeled:
            assert gold[text] is label


class TestGenerateSynthetic:
    def test_arity(self):
        corpus = generate_synthetic(1, 5)
        assert len(corpus) == 20
        for act in ACTS:
            assert sum(1 for _, a in corpus if a is act) == 5

    def test_deterministic(self):
        assert generate_synthetic(1, 20) == generate_synthetic(1, 20)

    def test_seed_changes_output(self):
        assert generate_synthetic(1, 20) != generate_synthetic(2, 20)

    def test_texts_are_normalized(self):
        for text, _ in generate_synthetic(5, 10):
            assert text == normalize(text)

    def test_bad_arity_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(1, 0)

    def test_round_trip(self, tmp_path):
        corpus = generate_synthetic(9, 10)
        path = tmp_path / "corpus.ndjson"
        save_corpus(corpus, path)
        assert load_corpus(path) == corpus


class TestStratifiedFolds:
    def test_partition(self):
        labels = [i % 4 for i in range(103)]
        folds = stratified_folds(labels, 5, seed=3)
        seen = np.concatenate(folds)
        assert sorted(seen.tolist()) == list(range(103))

    def test_stratification(self):
        labels = [i % 4 for i in range(200)]
        folds = stratified_folds(labels, 5, seed=3)
        for fold in folds:
            counts = np.bincount([labels[i] for i in fold], minlength=4)
            assert counts.min() >= 9  # 50 per class / 5 folds = 10 each, +- rounding


class TestCrossValidate:
    def test_macro_f1_meets_floor(self, act_corpus):
        report = cross_validate(act_corpus, k=5, seed=13)
        assert report.macro_f1 >= 0.85
        assert report.k == 5
        assert len(report.folds) == 5

    def test_deterministic(self, act_corpus):
        a = cross_validate(act_corpus, k=5, seed=13)
        b = cross_validate(act_corpus, k=5, seed=13)
        assert a == b

    def test_small_class_rejected(self):
        corpus = generate_synthetic(1, 3)
        with pytest.raises(DegenerateCorpus):
            cross_validate(corpus, k=5)

    def test_metric_identities_from_confusion(self, act_corpus):
        report = cross_validate(act_corpus, k=5, seed=13)
        for fold in report.folds:
            confusion = np.asarray(fold.confusion)
            f1s = []
            for c, act in enumerate(ACTS):
                tp = confusion[c, c]
                fp = confusion[:, c].sum() - tp
                fn = confusion[c, :].sum() - tp
                p = tp / (tp + fp) if tp + fp else 0.0
                r = tp / (tp + fn) if tp + fn else 0.0
                f1 = 2 * p * r / (p + r) if p + r else 0.0
                metrics = fold.per_class[act.label]
                assert metrics.precision == pytest.approx(p, abs=1e-12)
                assert metrics.recall == pytest.approx(r, abs=1e-12)
                assert metrics.f1 == pytest.approx(2 * p * r / (p + r) if p + r else 0.0, abs=1e-12)
                assert 0.0 <= metrics.f1 <= 1.0
                f1s.append(f1)
            assert fold.macro_f1 == pytest.approx(float(np.mean(f1s)), abs=1e-12)

    def test_report_marks_reference_non_comparable(self, act_corpus):
        report = cross_validate(act_corpus, k=5, seed=13)
        assert "not comparable" in report.to_table()
        assert "0.71" in report.to_table()
        assert NON_COMPARABLE_NOTE in report.to_json()


class TestRelationCV:
    def test_metrics_meet_floor(self):
        corpus = generate_relation_corpus(17, 140)
        report = cross_validate_relations(corpus, k=5, seed=17)
        assert report.precision >= 0.85
        assert report.recall >= 0.85
        assert report.f1 >= 0.85

    def test_reference_marked_non_comparable(self):
        corpus = generate_relation_corpus(17, 140)
        report = cross_validate_relations(corpus, k=5, seed=17)
        table = report.to_table()
        assert "0.84" in table and "0.82" in table and "0.83" in table
        assert "not comparable" in table

    def test_both_labels_required(self):
        corpus = [ex for ex in generate_relation_corpus(17, 60) if ex.label]
        with pytest.raises(DegenerateCorpus):
            cross_validate_relations(corpus, k=5)

    def test_corpus_has_both_labels_and_enough_pairs(self):
        corpus = generate_relation_corpus(17, 140)
        assert len(corpus) >= 200
        assert any(ex.label for ex in corpus)
        assert any(not ex.label for ex in corpus)
