"""Adapter for out-of-process models speaking line-delimited JSON over stdio.

Protocol (one JSON object per line)::

    -> {"type": "hello", "version": 1}
    <- {"type": "ready", "name": "<model name>"}
    -> {"type": "predict", "id": "<req id>", "observation": {...}}
    <- {"type": "prediction", "id": "<req id>", "probability": p}
    -> {"type": "close"}

A session is a serial channel: requests are issued one at a time under a lock.
Workers that interpret in parallel must each open their own session.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
from typing import Sequence

from .model import ModelError, Observation

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
_EOF = object()


class TransportError(RuntimeError):
    """The pipe to the child broke or timed out. Retrying with a fresh session may help."""

    retriable = True

    def __init__(self, message: str, request_id: str | None = None):
        super().__init__(message)
        self.request_id = request_id


class HandshakeTimeout(TransportError):
    pass


class ChildExited(TransportError):
    def __init__(self, message: str, returncode: int | None, request_id: str | None = None):
        super().__init__(message, request_id)
        self.returncode = returncode


class ProtocolError(ModelError):
    """The child answered, but not according to the protocol."""


class ExternalModelSession:
    def __init__(
        self,
        command: Sequence[str],
        handshake_timeout: float = 10.0,
        request_timeout: float = 60.0,
        decision_threshold: float = 0.5,
    ):
        self.command = list(command)
        self.request_timeout = request_timeout
        self.decision_threshold = decision_threshold
        self.name: str | None = None
        self._lock = threading.Lock()
        self._counter = 0
        self._closed = False
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start external model {self.command[0]!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake(handshake_timeout)

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _send(self, msg: dict, request_id: str | None = None):
        try:
            self._proc.stdin.write(json.dumps(msg) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise self._exit_error(request_id) from exc

    def _exit_error(self, request_id: str | None) -> ChildExited:
        try:
            rc = self._proc.wait(timeout=1.0)
        except subprocess.TimeoutExpired:
            rc = None
        where = f" while request {request_id!r} was in flight" if request_id else ""
        return ChildExited(f"external model exited (code {rc}){where}", rc, request_id)

    def _recv(self, timeout: float, request_id: str | None = None, handshake: bool = False) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            if handshake:
                raise HandshakeTimeout(f"no handshake reply within {timeout} s") from None
            raise TransportError(f"request {request_id!r} timed out after {timeout} s", request_id) from None
        if line is _EOF:
            raise self._exit_error(request_id)
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line {line.strip()[:80]!r}: {exc}") from exc
        if not isinstance(msg, dict) or "type" not in msg:
            raise ProtocolError(f"response is not a typed message: {line.strip()[:80]!r}")
        return msg

    def _handshake(self, timeout: float):
        self._send({"type": "hello", "version": PROTOCOL_VERSION})
        try:
            msg = self._recv(timeout, handshake=True)
        except TransportError:
            self._kill()
            raise
        if msg["type"] != "ready":
            self._kill()
            raise ProtocolError(f"expected 'ready', got {msg['type']!r}")
        self.name = str(msg.get("name", "external"))
        log.debug("external model %r ready", self.name)

    def probability(self, obs: Observation) -> float:
        with self._lock:
            if self._closed:
                raise TransportError("session is closed")
            self._counter += 1
            rid = f"req-{self._counter}"
            self._send({"type": "predict", "id": rid, "observation": obs.to_wire()}, rid)
            msg = self._recv(self.request_timeout, rid)
            if msg["type"] != "prediction":
                raise ProtocolError(f"unexpected message type {msg['type']!r} for request {rid!r}")
            if msg.get("id") != rid:
                raise ProtocolError(f"response id {msg.get('id')!r} does not match request {rid!r}")
            p = msg.get("probability")
            if isinstance(p, bool) or not isinstance(p, (int, float)):
                raise ProtocolError(f"probability missing or not a number: {p!r}")
            if not 0.0 <= p <= 1.0:
                raise ProtocolError(f"probability out of range: {p}")
            return float(p)

    def _kill(self):
        self._closed = True
        if self._proc.poll() is None:
            self._proc.kill()
        self._proc.wait()

    def close(self):
        with self._lock:
            if self._closed:
                return
            self._closed = True
            try:
                self._send({"type": "close"})
                self._proc.stdin.close()
            except TransportError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_model_session(executable_path: str, args: Sequence[str] = (), **kwargs) -> ExternalModelSession:
    return ExternalModelSession([executable_path, *args], **kwargs)
