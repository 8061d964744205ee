import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from actint.external import (
    ChildExited,
    ExternalModelSession,
    HandshakeTimeout,
    ProtocolError,
    TransportError,
    external_model_session,
)
from actint.model import Label, ModelError, predict_proba

from conftest import make_obs

STUB = str(Path(__file__).parent / "stubs" / "stub_model.py")


def session(mode, *args, **kw):
    return external_model_session(sys.executable, [STUB, mode, *map(str, args)], **kw)


@pytest.fixture
def obs(rng):
    return make_obs(rng, n=60)


def test_constant_half(obs):
    with session("const", 0.5) as s:
        assert s.name == "stub-const"
        assert all(s.probability(obs) == 0.5 for _ in range(5))


def test_pass_through(obs):
    with session("const", 0.73) as s:
        pred = predict_proba(s, obs)
    assert pred.label == Label.POSITIVE and pred.probability == 0.73


def test_out_of_range(obs):
    with session("const", 1.2) as s:
        with pytest.raises(ProtocolError, match="probability out of range"):
            s.probability(obs)


def test_protocol_error_is_model_error():
    assert issubclass(ProtocolError, ModelError)
    assert not issubclass(TransportError, ModelError)
    assert TransportError("x").retriable


def test_exit_mid_session(obs):
    with session("exit_after", 2) as s:
        s.probability(obs)
        s.probability(obs)
        with pytest.raises(ChildExited) as err:
            s.probability(obs)
    assert err.value.request_id == "req-3"
    assert "req-3" in str(err.value)
    assert err.value.returncode == 3


def test_echo_roundtrip_exact(rng):
    with session("echo_tod") as s:
        for _ in range(10):
            o = make_obs(rng, n=30)
            assert s.probability(o) == o.time_of_day / 24


def test_handshake_timeout():
    t0 = time.monotonic()
    with pytest.raises(HandshakeTimeout):
        session("silent", handshake_timeout=0.5)
    assert time.monotonic() - t0 < 5


def test_malformed(obs):
    with session("garbage") as s:
        with pytest.raises(ProtocolError, match="malformed"):
            s.probability(obs)


def test_wrong_id(obs):
    with session("wrong_id") as s:
        with pytest.raises(ProtocolError, match="does not match"):
            s.probability(obs)


def test_unknown_type(obs):
    with session("unknown_type") as s:
        with pytest.raises(ProtocolError, match="unexpected message type"):
            s.probability(obs)


def test_request_timeout(obs):
    with session("slow", 3, request_timeout=0.3) as s:
        with pytest.raises(TransportError, match="timed out") as err:
            s.probability(obs)
    assert err.value.request_id == "req-1"


def test_missing_executable():
    with pytest.raises(TransportError):
        ExternalModelSession(["/nonexistent/model-binary"])


def test_closed_session(obs):
    s = session("const", 0.5)
    s.close()
    s.close()
    with pytest.raises(TransportError, match="closed"):
        s.probability(obs)


def test_serialized_under_threads(rng):
    observations = [make_obs(rng, n=30) for _ in range(16)]
    with session("echo_tod") as s:
        with ThreadPoolExecutor(4) as pool:
            got = list(pool.map(s.probability, observations))
    assert got == [o.time_of_day / 24 for o in observations]


def test_wire_is_json_and_unmodified(obs):
    before = json.dumps(obs.to_wire())
    with session("const", 0.1) as s:
        s.probability(obs)
    assert json.dumps(obs.to_wire()) == before
    assert np.isfinite(json.loads(before)["roc"]["a"]["values"]).all()
