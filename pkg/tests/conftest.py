"""Shared fixtures: the counting model in its three usual forms."""

from pathlib import Path

import pytest

from actrchr.engine import normalize_model
from actrchr.parser import parse_model

MODELS = Path(__file__).parents[1] / "models"


@pytest.fixture(scope="session")
def counting_path() -> Path:
    return MODELS / "counting.actr"


@pytest.fixture(scope="session")
def counting_src(counting_path) -> str:
    return counting_path.read_text()


@pytest.fixture(scope="session")
def counting_model(counting_src):
    return parse_model(counting_src)


@pytest.fixture(scope="session")
def counting_norm(counting_model):
    return normalize_model(counting_model)
