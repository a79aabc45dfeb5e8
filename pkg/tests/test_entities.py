from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simstudent.acts import normalize
from simstudent.corpus import generate_relation_corpus
from simstudent.entities import (
    Attribute,
    FigureRef,
    Presence,
    RelationExample,
    RelationTrainingConfig,
    extract_entities,
    finalize_presence,
    load_relation_corpus,
    load_relation_scorer,
    min_entity_confidence,
    parse_value,
    save_relation_corpus,
    save_relation_scorer,
    score_relations,
    train_relation_scorer,
)
from simstudent.errors import AnnotationMismatch, DegenerateCorpus, ModelFormatError
from simstudent.fixtures import RELATION_FIXTURES, run_relation_fixtures


class TestParseValue:
    def test_integers_decimals_fractions(self):
        assert parse_value("5") == Fraction(5)
        assert parse_value("2.5") == Fraction(5, 2)
        assert parse_value("1/2") == Fraction(1, 2)

    def test_non_numbers(self):
        assert parse_value("five") is None
        assert parse_value("") is None
        assert parse_value("1/0") is None


class TestExtraction:
    def test_length_and_width_with_value(self):
        text = normalize("The length of the object is 5, what is the width?")
        ann = extract_entities(text)
        assert ann.attribute_set() == {Attribute.LENGTH, Attribute.WIDTH}
        assert [v.value for v in ann.values] == [Fraction(5)]

    def test_scale_factor_single_mention(self):
        ann = extract_entities("what is the scale factor ?")
        assert ann.attribute_set() == {Attribute.SCALE_FACTOR}
        assert ann.values == ()
        # longest-match: no extra bare-"scale" mention inside "scale factor"
        assert len(ann.attributes) == 1

    def test_no_entities(self):
        ann = extract_entities("sit down")
        assert ann.is_empty()
        assert ann.figure is FigureRef.UNSPECIFIED

    def test_figure_cues(self):
        assert extract_entities("look at the left figure .").figure is FigureRef.LEFT
        assert extract_entities("the second prism is bigger .").figure is FigureRef.RIGHT
        both = extract_entities("compare the left and right figures .")
        assert both.figure is FigureRef.UNSPECIFIED
        assert both.figure_confidence == 0.5

    def test_rhetorical_right_is_not_a_figure(self):
        ann = extract_entities("the answer is three , right ?")
        assert ann.figure is FigureRef.UNSPECIFIED
        assert ann.figure_confidence == 1.0

    def test_span_soundness(self):
        text = normalize("The length of the object is 5, what is the width?")
        ann = extract_entities(text)
        for mention in ann.attributes:
            assert mention.span.slice(text) == mention.attribute.value.split()[0] or (
                mention.span.slice(text) == mention.attribute.value
            )
        for vm in ann.values:
            assert parse_value(vm.span.slice(text)) == vm.value

    def test_spans_do_not_overlap(self):
        text = normalize("the scale factor and the scale are related .")
        ann = extract_entities(text)
        spans = sorted((m.span.start, m.span.end) for m in ann.attributes)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert e1 <= s2


@st.composite
def assertion_sentences(draw):
    attr = draw(st.sampled_from(["length", "width", "height"]))
    value = draw(st.integers(min_value=1, max_value=99))
    negated = draw(st.booleans())
    neg = "not " if negated else ""
    return f"the {attr} is {neg}{value}", attr, value, negated


class TestScoreRelations:
    def test_candidate_per_pair_plus_valueless(self, scorer):
        text = normalize("the length is 5 and the width is 3")
        ann = extract_entities(text)
        cands = score_relations(text, ann, scorer)
        # 2 attributes x 2 values
        assert len(cands) == 4

    def test_valueless_candidates_always_false(self, scorer):
        text = "what is the scale factor ?"
        cands = score_relations(text, extract_entities(text), scorer)
        assert len(cands) == 1
        assert cands[0].value is None
        assert cands[0].label is False
        assert cands[0].confidence == 0.0

    def test_label_confidence_coherence(self, scorer):
        corpus = generate_relation_corpus(29, 60)
        for ex in corpus:
            cands = score_relations(ex.text, extract_entities(ex.text), scorer)
            for c in cands:
                assert c.label == (c.confidence >= 0.5)
                assert 0.0 <= c.confidence <= 1.0
                assert c.decision_confidence >= 0.5

    def test_mismatched_annotation_rejected(self, scorer):
        ann = extract_entities("the length is 5")
        with pytest.raises(AnnotationMismatch):
            score_relations("a different text", ann, scorer)

    @given(assertion_sentences())
    @settings(max_examples=60, deadline=None)
    def test_negation_flips_label(self, case):
        from simstudent.pretrained import default_relation_scorer

        scorer = default_relation_scorer()
        text, attr, value, negated = case
        ann = extract_entities(text)
        cands = score_relations(text, ann, scorer)
        assert len(cands) == 1
        assert cands[0].label == (not negated)

    def test_negation_keeps_entities_identical(self, scorer):
        plain = extract_entities("the width is 7")
        negated = extract_entities("the width is not 7")
        assert plain.attribute_set() == negated.attribute_set()
        assert [v.value for v in plain.values] == [v.value for v in negated.values]

    def test_min_entity_confidence(self, scorer):
        text = normalize("the length is 5")
        cands = score_relations(text, extract_entities(text), scorer)
        assert 0.5 <= min_entity_confidence(cands) <= 1.0
        assert min_entity_confidence([]) == 1.0


class TestPresence:
    def test_valued_after_true_relation(self, scorer):
        text = normalize("the length is 5")
        ann = extract_entities(text)
        cands = score_relations(text, ann, scorer)
        ann = finalize_presence(ann, cands)
        assert ann.value_presence is Presence.VALUED
        assert ann.presence_confidence >= 0.5

    def test_no_value_when_query_only(self, scorer):
        text = "what is the width ?"
        ann = extract_entities(text)
        cands = score_relations(text, ann, scorer)
        ann = finalize_presence(ann, cands)
        assert ann.value_presence is Presence.NO_VALUE
        assert ann.presence_confidence >= 0.5


class TestTrainRelationScorer:
    def test_single_label_rejected(self):
        corpus = [
            RelationExample("the length is 5", Attribute.LENGTH, Fraction(5), True),
            RelationExample("the width is 3", Attribute.WIDTH, Fraction(3), True),
        ]
        with pytest.raises(DegenerateCorpus):
            train_relation_scorer(corpus)

    def test_empty_rejected(self):
        with pytest.raises(DegenerateCorpus):
            train_relation_scorer([])

    def test_deterministic(self):
        corpus = generate_relation_corpus(3, 40)
        a = train_relation_scorer(corpus, RelationTrainingConfig(epochs=100))
        b = train_relation_scorer(corpus, RelationTrainingConfig(epochs=100))
        assert (a.weights == b.weights).all()
        assert a.bias == b.bias

    def test_canonical_rows_all_correct(self, scorer):
        report = run_relation_fixtures(scorer)
        assert report.correct == len(RELATION_FIXTURES) == 4

    def test_corpus_round_trip(self, tmp_path):
        corpus = generate_relation_corpus(11, 30)
        path = tmp_path / "relations.ndjson"
        save_relation_corpus(corpus, path)
        assert load_relation_corpus(path) == corpus

    def test_scorer_round_trip(self, scorer, tmp_path):
        path = tmp_path / "scorer.json"
        save_relation_scorer(scorer, path)
        loaded = load_relation_scorer(path)
        assert (loaded.weights == scorer.weights).all()
        assert loaded.bias == scorer.bias

    def test_scorer_bad_file_rejected(self, tmp_path):
        path = tmp_path / "nope.json"
        path.write_text('{"magic": "other"}')
        with pytest.raises(ModelFormatError):
            load_relation_scorer(path)
