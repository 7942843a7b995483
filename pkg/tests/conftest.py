from pathlib import Path

import pytest

from riskrl import RewardConfig

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def config() -> RewardConfig:
    return RewardConfig()


@pytest.fixture
def scenarios_dir() -> Path:
    return REPO_ROOT / "scenarios"


@pytest.fixture
def configs_dir() -> Path:
    return REPO_ROOT / "configs"
