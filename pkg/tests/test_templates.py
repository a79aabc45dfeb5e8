import pytest

from simstudent.acts import DialogueAct
from simstudent.entities import FigureRef, extract_entities
from simstudent.errors import TemplateValidationError
from simstudent.scenario import default_scenario, empty_state
from simstudent.templates import (
    DEFAULT_TEMPLATE_RECORDS,
    default_templates,
    load_templates,
    load_templates_file,
    parse_guard,
    render_response,
)


class TestGuardParsing:
    def test_atoms(self):
        atoms = parse_guard("mentioned(scale factor) and hasScale")
        assert [a.name for a in atoms] == ["mentioned", "hasScale"]
        assert atoms[0].args == ("scale factor",)

    def test_known_atom(self):
        (atom,) = parse_guard("known(width, left)")
        assert atom.args == ("width", "left")

    def test_bad_atom_rejected(self):
        with pytest.raises(TemplateValidationError):
            parse_guard("frobnicate(x)")
        with pytest.raises(TemplateValidationError):
            parse_guard("mentioned(sideways)")
        with pytest.raises(TemplateValidationError):
            parse_guard("known(width, middle)")
        with pytest.raises(TemplateValidationError):
            parse_guard("")


class TestSlotAnalysis:
    def test_unguarded_slot_rejected_at_load(self):
        records = [{"act": "factual", "guard": "true", "pattern": "It is {scale}."}]
        with pytest.raises(TemplateValidationError):
            load_templates(records)

    def test_unknown_slot_rejected(self):
        records = [{"act": "factual", "guard": "true", "pattern": "It is {wibble}."}]
        with pytest.raises(TemplateValidationError):
            load_templates(records)

    def test_value_requires_answerable(self):
        records = [
            {"act": "factual", "guard": "mentioned(any)", "pattern": "{attr} is {value}."}
        ]
        with pytest.raises(TemplateValidationError):
            load_templates(records)

    def test_defaults_validate(self):
        templates = default_templates()
        assert len(templates) >= 6
        acts = {t.act for t in templates}
        assert DialogueAct.OTHER not in acts
        for act in (DialogueAct.PROBING, DialogueAct.FACTUAL, DialogueAct.EXPOSITORY):
            assert sum(1 for t in templates if t.act is act) >= 2

    def test_template_file_round_trip(self, tmp_path):
        import json

        path = tmp_path / "templates.json"
        path.write_text(json.dumps(list(DEFAULT_TEMPLATE_RECORDS)))
        assert load_templates_file(path) == default_templates()

    def test_template_file_errors(self, tmp_path):
        import json

        with pytest.raises(TemplateValidationError):
            load_templates_file(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"act": "factual"}))
        with pytest.raises(TemplateValidationError):
            load_templates_file(bad)


class TestRender:
    def test_scale_factor_fill(self):
        templates = default_templates()
        ann = extract_entities("what is the scale factor ?")
        text = render_response(DialogueAct.FACTUAL, ann, default_scenario(), templates)
        assert text == "The scale factor is 2 because 10 / 5 = 2."

    def test_probing_restates_derivation(self):
        templates = default_templates()
        ann = extract_entities("how did you get that answer ?")
        text = render_response(DialogueAct.PROBING, ann, default_scenario(), templates)
        assert "10 / 5" in text
        assert "2" in text

    def test_expository_acknowledgment(self):
        templates = default_templates()
        ann = extract_entities("look at this diagram")
        text = render_response(DialogueAct.EXPOSITORY, ann, default_scenario(), templates)
        assert text == "Okay, I am looking at it."

    def test_other_has_no_template(self):
        templates = default_templates()
        ann = extract_entities("sit down")
        assert render_response(DialogueAct.OTHER, ann, default_scenario(), templates) is None

    def test_factual_dimension_answer_uses_resolved_figure(self):
        templates = default_templates()
        ann = extract_entities("what is the width ?")
        text = render_response(
            DialogueAct.FACTUAL, ann, default_scenario(), templates, figure=FigureRef.RIGHT
        )
        assert text == "The width is 6."  # right width derived via the scale factor

    def test_unanswerable_factual_is_none(self):
        templates = default_templates()
        ann = extract_entities("what is the width ?")
        assert (
            render_response(DialogueAct.FACTUAL, ann, empty_state(), templates) is None
        )

    def test_first_matching_template_wins(self):
        templates = load_templates(
            [
                {"act": "expository", "guard": "true", "pattern": "first"},
                {"act": "expository", "guard": "true", "pattern": "second"},
            ]
        )
        ann = extract_entities("look here .")
        assert render_response(DialogueAct.EXPOSITORY, ann, empty_state(), templates) == "first"
