import importlib.util
import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


def load_fixture_gen():
    """Import scripts/make_fixtures.py as a module (fixture tooling)."""
    spec = importlib.util.spec_from_file_location(
        "make_fixtures", REPO / "scripts" / "make_fixtures.py"
    )
    module = importlib.util.module_from_spec(spec)
    sys.modules.setdefault("make_fixtures", module)
    spec.loader.exec_module(module)
    return module


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    assert (FIXTURES / "debate_mini.wav").exists(), "run scripts/make_fixtures.py first"
    return FIXTURES


@pytest.fixture(scope="session")
def fixture_gen():
    return load_fixture_gen()


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO
