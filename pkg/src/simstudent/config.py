"""Service configuration: thresholds, ensemble knobs, paths, server settings.

A full snapshot of this record is written into every session log so a replay
can rebuild the exact engine that produced the transcript.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .uncertainty import UncertaintyConfig

# Q1/Q2/Q4/Q5 are fixed survey wording; slots 3 and 6 are deployment-specific
# and intentionally placeholders rather than invented questions.
DEFAULT_SURVEY_QUESTIONS = (
    "Did the task get accomplished?",
    "Do you think the student learned anything?",
    "Configurable question 3",
    "How fluent was the conversation?",
    "How sensible were the responses?",
    "Configurable question 6",
)


@dataclass(frozen=True)
class Config:
    tau_act: float = 0.8
    tau_entity: float = 0.6
    sample_count: int = 30
    dropout_rate: float = 0.2
    seed: int = 0
    corpus_seed: int = 13
    corpus_per_class: int = 100
    relation_seed: int = 17
    relation_sentences: int = 140
    classifier_path: Optional[str] = None
    scorer_path: Optional[str] = None
    template_path: Optional[str] = None
    scenario_path: Optional[str] = None
    log_dir: Optional[str] = None
    port: int = 8000
    supervisor_token: str = ""
    require_claim: bool = False
    survey_questions: tuple[str, ...] = DEFAULT_SURVEY_QUESTIONS

    def __post_init__(self) -> None:
        if len(self.survey_questions) != 6:
            raise ConfigError("survey_questions must have exactly six entries")

    def uncertainty(self) -> UncertaintyConfig:
        return UncertaintyConfig(
            sample_count=self.sample_count,
            dropout_rate=self.dropout_rate,
            tau_act=self.tau_act,
            tau_entity=self.tau_entity,
            seed=self.seed,
        )

    def to_record(self) -> dict:
        record = asdict(self)
        record["survey_questions"] = list(self.survey_questions)
        return record


def config_from_record(record: dict) -> Config:
    known = {f for f in Config.__dataclass_fields__}
    unknown = set(record) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "survey_questions" in record:
        record = dict(record, survey_questions=tuple(record["survey_questions"]))
    try:
        return Config(**record)
    except TypeError as exc:
        raise ConfigError(f"bad config record: {exc}") from exc


def load_config(path: str | Path) -> Config:
    try:
        record = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"unreadable config file {path}: {exc}") from exc
    if not isinstance(record, dict):
        raise ConfigError("config file must hold a JSON object")
    return config_from_record(record)


def save_config(config: Config, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_record(), indent=2), encoding="utf-8")
