import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import directional_projects, localize_dataset  # noqa: E402

from workbench.pipeline import default_config  # noqa: E402


@pytest.fixture(scope="session")
def pipe_cfg():
    return default_config()


@pytest.fixture(scope="session")
def directional():
    return directional_projects()


@pytest.fixture(scope="session")
def bug_fixture():
    return localize_dataset()
