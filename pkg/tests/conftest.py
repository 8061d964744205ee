import hypothesis
import numpy as np
import pytest

from actint.model import Observation
from actint.tscore import SmoothingConfig, TimeSeries

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=25, deadline=None)
hypothesis.settings.load_profile("ci")


def make_obs(rng, n=120, channels=("a", "b", "c"), tod=None, oid="o", smoothing=SmoothingConfig()):
    chans = {c: TimeSeries(rng.normal(10.0, 2.0, n), 1.0, c) for c in channels}
    tod = float(rng.uniform(0, 24)) if tod is None else tod
    return Observation.from_raw(oid, chans, tod, smoothing)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
