import os
from pathlib import Path
from typing import Callable

import numpy as np
import pytest
from dotenv import load_dotenv

from hyperperiodic.config import Settings, get_settings
from hyperperiodic.schemas.problem import ProblemData
from tests.utils import FIXTURES, load_fixture_problem


def pytest_configure(config):
    """Load test environment variables before any tests run"""
    if os.path.exists(".env.test"):
        load_dotenv(".env.test", override=True)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Rebuild settings for every test so monkeypatched environment variables apply."""
    for name in list(os.environ):
        if name.startswith("HYPERPERIODIC_"):
            monkeypatch.delenv(name)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def settings() -> Settings:
    """Return application settings"""
    return get_settings()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture
def fixture_path() -> Callable[[str], Path]:
    return lambda name: FIXTURES / name


@pytest.fixture
def family_one() -> ProblemData:
    return load_fixture_problem("family_one.json")


@pytest.fixture
def family_two() -> ProblemData:
    return load_fixture_problem("family_two.json")


@pytest.fixture
def random_walk() -> ProblemData:
    return load_fixture_problem("random_walk.json")


@pytest.fixture
def dissipative() -> ProblemData:
    return load_fixture_problem("dissipative.json")


@pytest.fixture
def zero_reflection() -> ProblemData:
    return load_fixture_problem("zero_reflection.json")
