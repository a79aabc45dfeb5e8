"""Deterministic shipped artifacts: models rebuilt on demand from fixed seeds.

Nothing binary is checked in; the "shipped" classifier and relation scorer
are whatever the fixed seeds produce, which is reproducible bit-for-bit on a
given platform and takes well under a second to build.
"""

from __future__ import annotations

import time
from functools import lru_cache
from typing import Callable

from .acts import ActClassifier, TrainingConfig, load_classifier, train
from .config import Config
from .corpus import generate_relation_corpus, generate_synthetic
from .dialogue import DialogueEngine
from .entities import (
    RelationScorer,
    RelationTrainingConfig,
    load_relation_scorer,
    train_relation_scorer,
)
from .templates import default_templates, load_templates_file

DEFAULT_CORPUS_SEED = 13
DEFAULT_PER_CLASS = 100
DEFAULT_RELATION_SEED = 17
DEFAULT_RELATION_SENTENCES = 140


@lru_cache(maxsize=4)
def default_act_corpus(seed: int = DEFAULT_CORPUS_SEED, per_class: int = DEFAULT_PER_CLASS):
    return tuple(generate_synthetic(seed, per_class))


@lru_cache(maxsize=4)
def default_classifier(
    seed: int = DEFAULT_CORPUS_SEED, per_class: int = DEFAULT_PER_CLASS
) -> ActClassifier:
    corpus = list(default_act_corpus(seed, per_class))
    return train(corpus, TrainingConfig(seed=seed))


@lru_cache(maxsize=4)
def default_relation_corpus(
    seed: int = DEFAULT_RELATION_SEED, n_sentences: int = DEFAULT_RELATION_SENTENCES
):
    return tuple(generate_relation_corpus(seed, n_sentences))


@lru_cache(maxsize=4)
def default_relation_scorer(
    seed: int = DEFAULT_RELATION_SEED, n_sentences: int = DEFAULT_RELATION_SENTENCES
) -> RelationScorer:
    corpus = list(default_relation_corpus(seed, n_sentences))
    return train_relation_scorer(corpus, RelationTrainingConfig(seed=seed))


def build_engine(config: Config, clock: Callable[[], float] = time.time) -> DialogueEngine:
    """Assemble a dialogue engine from a config: model files when paths are
    set, otherwise the seed-built defaults."""
    classifier = (
        load_classifier(config.classifier_path)
        if config.classifier_path
        else default_classifier(config.corpus_seed, config.corpus_per_class)
    )
    scorer = (
        load_relation_scorer(config.scorer_path)
        if config.scorer_path
        else default_relation_scorer(config.relation_seed, config.relation_sentences)
    )
    templates = (
        load_templates_file(config.template_path)
        if config.template_path
        else default_templates()
    )
    return DialogueEngine(
        classifier=classifier,
        scorer=scorer,
        templates=templates,
        config=config.uncertainty(),
        clock=clock,
    )
