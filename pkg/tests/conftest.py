import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nthcoeff.cli import bundled_instance  # noqa: E402
from nthcoeff.ff_core import FieldCtx  # noqa: E402

from instances import random_instance  # noqa: E402


@pytest.fixture
def f5():
    """Fresh copy of the bundled F_5 example (caches are per instance)."""
    return bundled_instance()


@pytest.fixture
def F5():
    return FieldCtx(5)


@pytest.fixture
def F9():
    return FieldCtx(3, [1, 0, 1])


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def make_instance():
    return random_instance


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        ok, text = mod.RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}")
