"""Student response templates: guard predicates plus slot-filled patterns.

Responses are scripted, not generative. Each template names the dialogue act
it can answer, a guard over (annotation, scenario), and a text pattern whose
slots are guaranteed fillable whenever the guard holds; that guarantee is
checked once at load time, not per turn.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .acts import DialogueAct, act_from_label
from .entities import Attribute, EntityAnnotation, FigureRef
from .errors import TemplateValidationError
from .scenario import ScenarioState, query

_ATOM_RE = re.compile(r"^(\w+)(?:\(([^()]*)\))?$")
_SLOT_RE = re.compile(r"\{(\w+)\}")

KNOWN_SLOTS = {"attr", "value", "figure", "scale", "derivation"}


@dataclass(frozen=True)
class GuardAtom:
    name: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class ResponseTemplate:
    act: DialogueAct
    guard: tuple[GuardAtom, ...]
    guard_source: str
    pattern: str


def _parse_atom(source: str) -> GuardAtom:
    m = _ATOM_RE.match(source.strip())
    if not m:
        raise TemplateValidationError(f"unparseable guard atom {source!r}")
    name, raw_args = m.group(1), m.group(2)
    args = tuple(a.strip() for a in raw_args.split(",")) if raw_args else ()
    if name == "true" and not args:
        return GuardAtom("true")
    if name == "hasScale" and not args:
        return GuardAtom("hasScale")
    if name == "figureKnown" and not args:
        return GuardAtom("figureKnown")
    if name == "answerable" and not args:
        return GuardAtom("answerable")
    if name == "mentioned" and len(args) == 1:
        if args[0] != "any":
            Attribute(args[0])  # raises ValueError on unknown attribute
        return GuardAtom("mentioned", args)
    if name == "known" and len(args) == 2:
        Attribute(args[0])
        if args[1] not in ("left", "right"):
            raise TemplateValidationError(f"known() needs left/right, got {args[1]!r}")
        return GuardAtom("known", args)
    raise TemplateValidationError(f"unknown guard atom {source!r}")


def parse_guard(source: str) -> tuple[GuardAtom, ...]:
    parts = [p for p in source.split(" and ") if p.strip()]
    if not parts:
        raise TemplateValidationError("empty guard")
    try:
        return tuple(_parse_atom(p) for p in parts)
    except ValueError as exc:
        raise TemplateValidationError(str(exc)) from exc


# Which guard atoms make a slot fillable. "answerable" implies a mentioned
# attribute whose value can be produced from the scenario.
_SLOT_REQUIREMENTS = {
    "scale": {"hasScale"},
    "derivation": {"hasScale"},
    "attr": {"mentioned", "answerable"},
    "value": {"answerable"},
    "figure": {"figureKnown"},
}


def _check_slots(template: ResponseTemplate) -> None:
    guard_names = {atom.name for atom in template.guard}
    for slot in _SLOT_RE.findall(template.pattern):
        if slot not in KNOWN_SLOTS:
            raise TemplateValidationError(
                f"unknown slot {{{slot}}} in pattern {template.pattern!r}"
            )
        needed = _SLOT_REQUIREMENTS[slot]
        if not needed & guard_names:
            raise TemplateValidationError(
                f"slot {{{slot}}} in {template.pattern!r} is not covered by guard "
                f"{template.guard_source!r} (needs one of {sorted(needed)})"
            )


def load_templates(records: Sequence[dict]) -> tuple[ResponseTemplate, ...]:
    """Validate template records; evaluation order is file order."""
    templates = []
    for rec in records:
        try:
            act = act_from_label(rec["act"])
        except (KeyError, ValueError) as exc:
            raise TemplateValidationError(f"bad template act in {rec!r}: {exc}") from exc
        pattern = rec.get("pattern", "")
        if not pattern:
            raise TemplateValidationError(f"template {rec!r} has no pattern")
        template = ResponseTemplate(
            act=act,
            guard=parse_guard(rec.get("guard", "true")),
            guard_source=rec.get("guard", "true"),
            pattern=pattern,
        )
        _check_slots(template)
        templates.append(template)
    return tuple(templates)


def load_templates_file(path: str | Path) -> tuple[ResponseTemplate, ...]:
    try:
        records = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TemplateValidationError(f"unreadable template file {path}: {exc}") from exc
    if not isinstance(records, list):
        raise TemplateValidationError("template file must hold a JSON list")
    return load_templates(records)


def _first_attribute(ann: EntityAnnotation) -> Optional[Attribute]:
    return ann.attributes[0].attribute if ann.attributes else None


def _answerable(ann: EntityAnnotation, state: ScenarioState, figure: FigureRef) -> bool:
    attr = _first_attribute(ann)
    if attr is None:
        return False
    if attr is Attribute.SCALE_FACTOR:
        return state.scale_factor() is not None
    if figure is FigureRef.UNSPECIFIED:
        return False
    return query(state, figure, attr) is not None


def _eval_atom(
    atom: GuardAtom, ann: EntityAnnotation, state: ScenarioState, figure: FigureRef
) -> bool:
    if atom.name == "true":
        return True
    if atom.name == "hasScale":
        return state.scale_factor() is not None
    if atom.name == "figureKnown":
        return figure is not FigureRef.UNSPECIFIED
    if atom.name == "answerable":
        return _answerable(ann, state, figure)
    if atom.name == "mentioned":
        if atom.args[0] == "any":
            return bool(ann.attributes)
        return Attribute(atom.args[0]) in ann.attribute_set()
    if atom.name == "known":
        attr = Attribute(atom.args[0])
        fig = FigureRef(atom.args[1])
        return query(state, fig, attr) is not None
    raise TemplateValidationError(f"unknown guard atom {atom.name!r}")


def _derivation_text(state: ScenarioState) -> str:
    witness = state.scale_witness()
    assert witness is not None, "derivation slot guarded by hasScale"
    _, left, right = witness
    return f"{right} / {left} = {right / left}"


def _fill(template: ResponseTemplate, ann, state, figure) -> str:
    def value_for(slot: str) -> str:
        if slot == "scale":
            return str(state.scale_factor())
        if slot == "derivation":
            return _derivation_text(state)
        if slot == "attr":
            attr = _first_attribute(ann)
            assert attr is not None, "attr slot guarded by mentioned/answerable"
            return attr.value
        if slot == "value":
            return str(query(state, figure, _first_attribute(ann)))
        if slot == "figure":
            return figure.value
        raise TemplateValidationError(f"unknown slot {{{slot}}}")

    return _SLOT_RE.sub(lambda m: value_for(m.group(1)), template.pattern)


def render_response(
    act: DialogueAct,
    ann: EntityAnnotation,
    state: ScenarioState,
    templates: Sequence[ResponseTemplate],
    figure: Optional[FigureRef] = None,
) -> Optional[str]:
    """First template whose act matches and guard holds, slots filled.

    Returns None when nothing applies; the gate turns that into escalation.
    `figure` is the dialogue-resolved figure (defaults to the annotation's).
    """
    fig = ann.figure if figure is None else figure
    for template in templates:
        if template.act is not act:
            continue
        if all(_eval_atom(atom, ann, state, fig) for atom in template.guard):
            return _fill(template, ann, state, fig)
    return None


DEFAULT_TEMPLATE_RECORDS: tuple[dict, ...] = (
    {
        "act": "factual",
        "guard": "mentioned(scale factor) and hasScale",
        "pattern": "The scale factor is {scale} because {derivation}.",
    },
    {
        "act": "factual",
        "guard": "answerable",
        "pattern": "The {attr} is {value}.",
    },
    {
        "act": "probing",
        "guard": "hasScale",
        "pattern": "I compared matching sides and divided: {derivation}, so the scale factor is {scale}.",
    },
    {
        "act": "probing",
        "guard": "mentioned(any)",
        "pattern": "I was thinking about the {attr} of both figures when I answered.",
    },
    {
        "act": "expository",
        "guard": "mentioned(any)",
        "pattern": "Okay, I will keep the {attr} in mind.",
    },
    {
        "act": "expository",
        "guard": "true",
        "pattern": "Okay, I am looking at it.",
    },
)


def default_templates() -> tuple[ResponseTemplate, ...]:
    return load_templates(list(DEFAULT_TEMPLATE_RECORDS))
