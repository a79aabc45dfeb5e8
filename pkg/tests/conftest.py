import itertools

import pytest

from simstudent.config import Config
from simstudent.dialogue import DialogueEngine
from simstudent.pretrained import (
    default_act_corpus,
    default_classifier,
    default_relation_scorer,
)
from simstudent.templates import default_templates
from simstudent.uncertainty import UncertaintyConfig


@pytest.fixture(scope="session")
def classifier():
    return default_classifier()


@pytest.fixture(scope="session")
def scorer():
    return default_relation_scorer()


@pytest.fixture(scope="session")
def act_corpus():
    return list(default_act_corpus())


@pytest.fixture()
def fixed_clock():
    counter = itertools.count(1000.0, 1.0)
    return lambda: float(next(counter))


@pytest.fixture()
def engine(classifier, scorer, fixed_clock):
    return DialogueEngine(
        classifier=classifier,
        scorer=scorer,
        templates=default_templates(),
        config=UncertaintyConfig(),
        clock=fixed_clock,
    )


@pytest.fixture()
def service_config():
    return Config()
