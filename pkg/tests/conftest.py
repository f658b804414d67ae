import sys
from pathlib import Path

import hypothesis
import pytest

sys.path.insert(0, str(Path(__file__).parent))

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

from ipram import build_ifpr, plan_blocks  # noqa: E402
from ipram import datasets  # noqa: E402


@pytest.fixture(scope="session")
def worked():
    freq = datasets.frequency_table()
    plan = plan_blocks(freq, datasets.TARGET, datasets.XI)
    return freq, plan, build_ifpr(freq, plan)


@pytest.fixture(scope="session")
def worked_column():
    return datasets.column()
