"""World model for the similar-figures task: two rectangular prisms.

All arithmetic is exact (fractions.Fraction), so answers are deterministic
and similarity checks are equality checks, never tolerance comparisons. The
scale factor convention is left -> right: k = right / left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Union

from .entities import DIMENSIONS, Attribute, FigureRef
from .errors import ConfigError, NonPositiveValue, UnspecifiedFigure


@dataclass(frozen=True)
class Assertion:
    turn_id: int
    figure: FigureRef
    attribute: Attribute
    value: Fraction


@dataclass(frozen=True)
class Conflict:
    """A fact that would break similarity; names the violated pair."""

    figure: FigureRef
    attribute: Attribute
    expected: Fraction
    actual: Fraction

    def message(self) -> str:
        return (
            f"{self.figure.value} {self.attribute.value} would be {self.actual}, "
            f"but similarity requires {self.expected}"
        )


@dataclass(frozen=True)
class ScenarioState:
    """Immutable snapshot of both figures' known dimensions.

    Volume is never stored; it is derived from the three dimensions (or via
    the cubed scale factor) on demand.
    """

    left: Mapping[Attribute, Fraction]
    right: Mapping[Attribute, Fraction]
    log: tuple[Assertion, ...] = ()

    def side(self, figure: FigureRef) -> Mapping[Attribute, Fraction]:
        if figure is FigureRef.LEFT:
            return self.left
        if figure is FigureRef.RIGHT:
            return self.right
        raise UnspecifiedFigure("no stored side for an unspecified figure")

    def scale_factor(self) -> Optional[Fraction]:
        for attr in DIMENSIONS:
            if attr in self.left and attr in self.right:
                return self.right[attr] / self.left[attr]
        return None

    def scale_witness(self) -> Optional[tuple[Attribute, Fraction, Fraction]]:
        """First dimension known on both sides, as (attr, left, right)."""
        for attr in DIMENSIONS:
            if attr in self.left and attr in self.right:
                return attr, self.left[attr], self.right[attr]
        return None


def empty_state() -> ScenarioState:
    return ScenarioState(left={}, right={})


def assert_fact(
    state: ScenarioState,
    figure: FigureRef,
    attribute: Attribute,
    value: Fraction,
    turn_id: int = -1,
) -> Union[ScenarioState, Conflict]:
    """Record a dimension; returns the new state, or a Conflict if the fact
    breaks similarity (the old state is never mutated either way)."""
    if figure is FigureRef.UNSPECIFIED:
        raise UnspecifiedFigure("assert_fact needs a concrete figure")
    if attribute not in DIMENSIONS:
        raise ValueError(f"only linear dimensions can be asserted, not {attribute.value}")
    value = Fraction(value)
    if value <= 0:
        raise NonPositiveValue(f"{attribute.value} must be positive, got {value}")

    side = dict(state.side(figure))
    if attribute in side and side[attribute] != value:
        return Conflict(figure=figure, attribute=attribute, expected=side[attribute], actual=value)

    k = state.scale_factor()
    if k is not None:
        other = state.right if figure is FigureRef.LEFT else state.left
        if attribute in other:
            expected = other[attribute] / k if figure is FigureRef.LEFT else other[attribute] * k
            if value != expected:
                return Conflict(
                    figure=figure, attribute=attribute, expected=expected, actual=value
                )

    side[attribute] = value
    left = side if figure is FigureRef.LEFT else dict(state.left)
    right = side if figure is FigureRef.RIGHT else dict(state.right)
    entry = Assertion(turn_id=turn_id, figure=figure, attribute=attribute, value=value)
    return ScenarioState(left=left, right=right, log=state.log + (entry,))


def _dimension_value(
    state: ScenarioState, figure: FigureRef, attribute: Attribute
) -> Optional[Fraction]:
    side = state.side(figure)
    if attribute in side:
        return side[attribute]
    k = state.scale_factor()
    if k is None:
        return None
    other = state.right if figure is FigureRef.LEFT else state.left
    if attribute in other:
        return other[attribute] / k if figure is FigureRef.LEFT else other[attribute] * k
    return None


def query(
    state: ScenarioState,
    figure: Optional[FigureRef],
    attribute: Attribute,
) -> Optional[Fraction]:
    """Answer a dimension/volume/scale question exactly, or None when unknown.

    Scale-factor queries ignore the figure. Volume multiplies the figure's
    three dimensions, each of which may itself be derived through the scale
    factor (which is how V_right = k^3 * V_left falls out). Never guesses.
    """
    if attribute is Attribute.SCALE_FACTOR:
        return state.scale_factor()
    if figure is None or figure is FigureRef.UNSPECIFIED:
        return None
    if attribute is Attribute.VOLUME:
        dims = [_dimension_value(state, figure, a) for a in DIMENSIONS]
        if any(d is None for d in dims):
            return None
        product = Fraction(1)
        for d in dims:
            product *= d
        return product
    return _dimension_value(state, figure, attribute)


def consistent(state: ScenarioState) -> bool:
    """True iff every dimension known on both sides yields the same ratio."""
    ratios = {
        state.right[a] / state.left[a]
        for a in DIMENSIONS
        if a in state.left and a in state.right
    }
    return len(ratios) <= 1


def state_to_record(state: ScenarioState) -> dict:
    return {
        "left": {a.value: str(v) for a, v in state.left.items()},
        "right": {a.value: str(v) for a, v in state.right.items()},
    }


def state_from_record(record: dict) -> ScenarioState:
    def parse_side(side: dict) -> dict[Attribute, Fraction]:
        out: dict[Attribute, Fraction] = {}
        for name, raw in side.items():
            attr = Attribute(name)
            if attr not in DIMENSIONS:
                raise ConfigError(f"scenario files store dimensions only, not {name!r}")
            value = Fraction(str(raw))
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {raw!r}")
            out[attr] = value
        return out

    try:
        state = ScenarioState(
            left=parse_side(record.get("left", {})),
            right=parse_side(record.get("right", {})),
        )
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad scenario record: {exc}") from exc
    if not consistent(state):
        raise ConfigError("scenario seed violates similarity")
    return state


def load_scenario(path: str | Path) -> ScenarioState:
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"unreadable scenario file {path}: {exc}") from exc
    return state_from_record(record)


def default_scenario() -> ScenarioState:
    """Shipped session opener: left prism 5 x 3 x 4, right length 10 (k = 2)."""
    return state_from_record(
        {"left": {"length": "5", "width": "3", "height": "4"}, "right": {"length": "10"}}
    )
