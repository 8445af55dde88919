"""HTTP control surface for the policy engine.

A small stdlib server exposes the reviewer console contract:

* ``GET  /api/pending``   — escalations awaiting a human verdict
* ``POST /api/decision``  — resolve one escalation (idempotent)
* ``GET  /api/policy``    — strictness, thresholds, and a zone preview grid
* ``PATCH /api/policy``   — change strictness
* ``GET  /api/audit``     — paginated audit chain
* ``GET  /api/events``    — server-sent events: pending / resolved / policy

All JSON payloads carry ``"v": 1``.  Static files (the console frontend)
are served from an optional directory; everything else is API-only.  The
optional background loop drives scripted counterparts through real
handshakes so the console has live traffic to review.
"""

from __future__ import annotations

import json
import mimetypes
import queue
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from . import pod
from .gatekeeper import AuditLog, Gatekeeper, HitlRequest, Policy, route
from .protocol import HandshakeEngine, run_handshake
from .sim.agents import ARCHETYPES, ArchetypeTransport
from .sim import persona

API_VERSION = 1


class ServiceError(Exception):
    """Service construction failed (bad pod, bad directory)."""


# ---------------------------------------------------------------- event bus


class EventBus:
    """Fan-out of service events to any number of stream subscribers."""

    def __init__(self, *, capacity: int = 256) -> None:
        self._capacity = capacity
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()

    def subscribe(self) -> queue.Queue:
        subscriber: queue.Queue = queue.Queue(maxsize=self._capacity)
        with self._lock:
            self._subscribers.append(subscriber)
        return subscriber

    def unsubscribe(self, subscriber: queue.Queue) -> None:
        with self._lock:
            if subscriber in self._subscribers:
                self._subscribers.remove(subscriber)

    def publish(self, event: str, payload: dict) -> None:
        with self._lock:
            targets = list(self._subscribers)
        for target in targets:
            try:
                target.put_nowait((event, payload))
            except queue.Full:
                pass  # a stalled stream drops events rather than the server


# ---------------------------------------------------------- escalation queue


@dataclass
class _Escalation:
    escalation_id: str
    request: HitlRequest
    created_at: float
    signal: threading.Event = field(default_factory=threading.Event)
    verdict: Optional[bool] = None

    def to_payload(self) -> dict:
        return {
            "v": API_VERSION,
            "id": self.escalation_id,
            "counterpart_id": self.request.counterpart_id,
            "declared_purpose": self.request.declared_purpose,
            "fields": [[path, level] for path, level in self.request.fields],
            "sensitivity": self.request.sensitivity,
            "risk": self.request.risk,
            "created_at": self.created_at,
        }


class EscalationQueue:
    """Blocking reviewer port backed by the HTTP console.

    ``decide`` parks the calling (simulation) thread until a human posts a
    verdict, the timeout lapses, or the service shuts down; the protocol
    machine treats a None result as a timeout and blocks the handshake.
    """

    def __init__(
        self,
        *,
        bus: EventBus,
        decision_timeout: float = 90.0,
        stop_signal: threading.Event | None = None,
    ) -> None:
        self.bus = bus
        self.decision_timeout = decision_timeout
        self.stop_signal = stop_signal if stop_signal is not None else threading.Event()
        self._lock = threading.Lock()
        self._pending: dict[str, _Escalation] = {}
        self._resolved: dict[str, bool] = {}
        self._counter = 0

    def decide(self, request: HitlRequest) -> Optional[bool]:
        with self._lock:
            self._counter += 1
            escalation = _Escalation(
                escalation_id=f"esc-{self._counter:04d}",
                request=request,
                created_at=time.time(),
            )
            self._pending[escalation.escalation_id] = escalation
        self.bus.publish("pending", escalation.to_payload())
        deadline = time.monotonic() + self.decision_timeout
        while not escalation.signal.is_set():
            if self.stop_signal.is_set() or time.monotonic() >= deadline:
                break
            escalation.signal.wait(0.1)
        with self._lock:
            self._pending.pop(escalation.escalation_id, None)
            if escalation.verdict is None:
                # Timed out or shutting down: record so late posts get a 409.
                self._resolved.setdefault(escalation.escalation_id, False)
        if escalation.verdict is None:
            self.bus.publish(
                "resolved",
                {"v": API_VERSION, "id": escalation.escalation_id, "approve": False,
                 "timed_out": True},
            )
            return None
        return escalation.verdict

    def resolve(self, escalation_id: str, approve: bool) -> str:
        """Returns one of: resolved, duplicate, conflict, unknown."""
        with self._lock:
            if escalation_id in self._resolved:
                same = self._resolved[escalation_id] == approve
                return "duplicate" if same else "conflict"
            escalation = self._pending.get(escalation_id)
            if escalation is None:
                return "unknown"
            self._resolved[escalation_id] = approve
            escalation.verdict = approve
            escalation.signal.set()
        self.bus.publish(
            "resolved",
            {"v": API_VERSION, "id": escalation_id, "approve": approve,
             "timed_out": False},
        )
        return "resolved"

    def snapshot(self) -> list[dict]:
        with self._lock:
            pending = sorted(self._pending.values(), key=lambda e: e.escalation_id)
            return [escalation.to_payload() for escalation in pending]


# ------------------------------------------------------------ service state


class ServiceState:
    """Everything the HTTP handlers and the demo loop share."""

    def __init__(
        self,
        *,
        keeper: Gatekeeper,
        session: pod.PodSession,
        static_dir: Path | None = None,
        decision_timeout: float = 90.0,
    ) -> None:
        self.keeper = keeper
        self.session = session
        self.bus = EventBus()
        self.stop_signal = threading.Event()
        self.queue = EscalationQueue(
            bus=self.bus,
            decision_timeout=decision_timeout,
            stop_signal=self.stop_signal,
        )
        self.static_dir = static_dir
        self.sim_thread: threading.Thread | None = None

    # ------------------------------------------------------------ lifecycle

    def start_sim_loop(self, *, interval: float = 1.5) -> None:
        if self.sim_thread is not None:
            return
        self.sim_thread = threading.Thread(
            target=self._sim_loop, args=(interval,), name="sim-loop", daemon=True
        )
        self.sim_thread.start()

    def shutdown(self) -> pod.ErasureReceipt | None:
        self.stop_signal.set()
        if self.sim_thread is not None:
            self.sim_thread.join(timeout=5.0)
            self.sim_thread = None
        try:
            return pod.unmount(self.session)
        except pod.PodStateError:
            return None

    # ------------------------------------------------------------- sim loop

    def _sim_loop(self, interval: float) -> None:
        counter = 0
        while not self.stop_signal.is_set():
            archetype = ARCHETYPES[counter % len(ARCHETYPES)]
            counter += 1
            session_id = f"live-{counter:05d}"
            engine = HandshakeEngine(self.keeper, self.session)
            transport = ArchetypeTransport(archetype, session_id)
            try:
                state, _transcript = run_handshake(transport, engine, hitl=self.queue)
            except pod.SessionClosedError:
                return
            self.bus.publish(
                "handshake",
                {"v": API_VERSION, "session_id": session_id, "agent": archetype.name,
                 "phase": state.phase.value},
            )
            self.stop_signal.wait(interval)

    # ------------------------------------------------------------- payloads

    def policy_payload(self) -> dict:
        policy = self.keeper.policy
        grid = []
        for sensitivity in range(11):
            decision = route(policy.strictness, sensitivity, policy)
            grid.append({
                "sensitivity": sensitivity,
                "zone": decision.zone.value,
                "risk": decision.risk,
                "hard_rule": decision.hard_rule_triggered,
            })
        return {
            "v": API_VERSION,
            "strictness": policy.strictness,
            "thresholds": {
                "auto": policy.auto_threshold,
                "block": policy.block_threshold,
                "hard_rule": policy.hard_rule_sensitivity,
            },
            "zones": grid,
        }

    def audit_payload(self, offset: int, limit: int) -> dict:
        records = self.keeper.audit.records
        window = records[offset : offset + limit]
        return {
            "v": API_VERSION,
            "total": len(records),
            "offset": offset,
            "records": [
                {
                    "seq": record.seq,
                    "timestamp": record.timestamp,
                    "counterpart_id": record.counterpart_id,
                    "decision": record.decision,
                    "requested_fields": list(record.requested_fields),
                    "record_hash": record.record_hash,
                }
                for record in window
            ],
        }


def build_state(
    *,
    pod_path: str | Path | None = None,
    passphrase: str | None = None,
    strictness: int = 5,
    static_dir: str | Path | None = None,
    decision_timeout: float = 90.0,
) -> ServiceState:
    """Mount the pod (or the built-in fixture) and assemble shared state."""
    if pod_path is not None:
        if passphrase is None:
            raise ServiceError("a pod file needs a passphrase")
        sealed = pod.import_pod(pod_path)
        session = pod.mount(sealed, passphrase)
    else:
        secret = passphrase if passphrase is not None else persona.SIM_PASSPHRASE
        session = pod.mount(persona.build_sealed_pod(secret), secret)
    keeper = Gatekeeper(policy=Policy(strictness=strictness), audit=AuditLog())
    directory = Path(static_dir) if static_dir is not None else None
    if directory is not None and not directory.is_dir():
        pod.unmount(session)
        raise ServiceError(f"static directory {directory} does not exist")
    return ServiceState(
        keeper=keeper,
        session=session,
        static_dir=directory,
        decision_timeout=decision_timeout,
    )


# ------------------------------------------------------------ HTTP handler

_LANDING_PAGE = """<!doctype html>
<meta charset="utf-8">
<title>reviewer console API</title>
<h1>reviewer console API</h1>
<p>No frontend build is mounted. The API is live:</p>
<ul>
<li><code>GET /api/pending</code></li>
<li><code>POST /api/decision</code></li>
<li><code>GET /api/policy</code> / <code>PATCH /api/policy</code></li>
<li><code>GET /api/audit?offset=0&amp;limit=50</code></li>
<li><code>GET /api/events</code> (server-sent events)</li>
</ul>
"""


class ConsoleHandler(BaseHTTPRequestHandler):
    server: "ConsoleServer"

    # ----------------------------------------------------------- plumbing

    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._send_json(status, {"v": API_VERSION, "error": message})

    def _read_json(self) -> dict | None:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            body = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            return None
        return body if isinstance(body, dict) else None

    # ------------------------------------------------------------- routes

    def do_GET(self) -> None:
        path = self.path.split("?", 1)[0]
        if path == "/api/pending":
            self._send_json(200, {"v": API_VERSION,
                                  "pending": self.server.state.queue.snapshot()})
        elif path == "/api/policy":
            self._send_json(200, self.server.state.policy_payload())
        elif path == "/api/audit":
            self._get_audit()
        elif path == "/api/events":
            self._stream_events()
        elif path.startswith("/api/"):
            self._error(404, f"no such endpoint {path}")
        else:
            self._serve_static(path)

    def do_POST(self) -> None:
        path = self.path.split("?", 1)[0]
        if path != "/api/decision":
            self._error(404, f"no such endpoint {path}")
            return
        body = self._read_json()
        if body is None or not isinstance(body.get("id"), str) \
                or not isinstance(body.get("approve"), bool):
            self._error(400, "expected {id: string, approve: boolean}")
            return
        status = self.server.state.queue.resolve(body["id"], body["approve"])
        if status == "unknown":
            self._error(404, f"no pending escalation {body['id']!r}")
        elif status == "conflict":
            self._error(409, "already resolved with the opposite verdict")
        else:
            self._send_json(200, {"v": API_VERSION, "id": body["id"],
                                  "status": status})

    def do_PATCH(self) -> None:
        path = self.path.split("?", 1)[0]
        if path != "/api/policy":
            self._error(404, f"no such endpoint {path}")
            return
        body = self._read_json()
        strictness = body.get("strictness") if body else None
        if not isinstance(strictness, int) or isinstance(strictness, bool) \
                or not 0 <= strictness <= 10:
            self._error(400, "strictness must be an integer in 0..10")
            return
        self.server.state.keeper.set_strictness(strictness)
        self.server.state.bus.publish(
            "policy", {"v": API_VERSION, "strictness": strictness}
        )
        self._send_json(200, self.server.state.policy_payload())

    # ------------------------------------------------------------ details

    def _get_audit(self) -> None:
        from urllib.parse import parse_qs, urlparse

        params = parse_qs(urlparse(self.path).query)
        try:
            offset = int(params.get("offset", ["0"])[0])
            limit = int(params.get("limit", ["50"])[0])
        except ValueError:
            self._error(400, "offset and limit must be integers")
            return
        if offset < 0 or not 1 <= limit <= 500:
            self._error(400, "offset must be >= 0 and limit in 1..500")
            return
        self._send_json(200, self.server.state.audit_payload(offset, limit))

    def _stream_events(self) -> None:
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-store")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        subscriber = self.server.state.bus.subscribe()
        try:
            self.wfile.write(b": connected\n\n")
            self.wfile.flush()
            while not self.server.state.stop_signal.is_set():
                try:
                    event, payload = subscriber.get(timeout=10.0)
                except queue.Empty:
                    self.wfile.write(b": ping\n\n")
                    self.wfile.flush()
                    continue
                frame = f"event: {event}\ndata: {json.dumps(payload, sort_keys=True)}\n\n"
                self.wfile.write(frame.encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            self.server.state.bus.unsubscribe(subscriber)

    def _serve_static(self, path: str) -> None:
        directory = self.server.state.static_dir
        if directory is None:
            if path in ("/", "/index.html"):
                body = _LANDING_PAGE.encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            else:
                self._error(404, f"no static content mounted for {path}")
            return
        relative = path.lstrip("/") or "index.html"
        target = (directory / relative).resolve()
        if not str(target).startswith(str(directory.resolve())) or not target.is_file():
            self._error(404, f"not found: {path}")
            return
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class ConsoleServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], state: ServiceState) -> None:
        super().__init__(address, ConsoleHandler)
        self.state = state


def make_server(state: ServiceState, *, host: str = "127.0.0.1", port: int = 0) -> ConsoleServer:
    return ConsoleServer((host, port), state)


def serve_forever(
    state: ServiceState,
    *,
    host: str = "127.0.0.1",
    port: int = 0,
    with_sim: bool = False,
    sim_interval: float = 1.5,
) -> int:
    """Run the console server until interrupted; returns an exit status."""
    server = make_server(state, host=host, port=port)
    actual_port = server.server_address[1]
    if with_sim:
        state.start_sim_loop(interval=sim_interval)
    print(f"listening on {actual_port}", flush=True)
    print(f"console: http://{host}:{actual_port}/  api: http://{host}:{actual_port}/api/",
          flush=True)
    try:
        server.serve_forever(poll_interval=0.2)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
        receipt = state.shutdown()
        if receipt is not None:
            print(f"pod unmounted; {receipt.cleared_buffers} buffers cleared", flush=True)
    return 0
