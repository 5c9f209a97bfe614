"""WebSocket broadcast service for the live practice view.

One producer thread runs the live loop and fans every message out to all
subscribers through bounded queues; a subscriber that falls too far behind
is sent a final status message and disconnected rather than stalling the
capture path. Control actions (reference selection, recording flag, tempo)
are JSON requests to /session/* — served over a companion HTTP port for the
browser UI, and accepted as messages on the socket as well.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from websockets.exceptions import ConnectionClosed
from websockets.sync.server import serve as ws_serve

from .config import Settings
from .errors import BindFailure, SourceDisconnected
from .geometry import BatonSpec, ControlFrame
from .live import live_loop
from .messages import StatusMessage, StreamMessage, message_to_json
from .pipeline import AverageTrajectory, MovementClass
from .sources import StreamSource

SUBSCRIBER_QUEUE_LIMIT = 512
WAITING_STATUS_PERIOD_S = 1.0


@dataclass
class _Subscriber:
    pending: list[str] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    ready: threading.Event = field(default_factory=threading.Event)
    dropped: bool = False

    def push(self, payload: str) -> bool:
        with self.lock:
            if self.dropped:
                return False
            if len(self.pending) >= SUBSCRIBER_QUEUE_LIMIT:
                self.dropped = True
                self.pending.append(message_to_json(
                    StatusMessage("disconnected: subscriber too slow")))
                self.ready.set()
                return False
            self.pending.append(payload)
            self.ready.set()
            return True

    def drain(self) -> list[str]:
        with self.lock:
            out = self.pending
            self.pending = []
            self.ready.clear()
            return out


class StreamServer:
    """Broadcasts live-loop messages to WebSocket subscribers.

    The producer starts once ``min_subscribers`` clients are connected (so a
    finite mock source is not consumed before anyone is listening). With no
    source attached, subscribers receive periodic "waiting" status messages.
    """

    def __init__(self, *, port: int, source: StreamSource | None,
                 control: ControlFrame, settings: Settings | None = None,
                 references: list[AverageTrajectory] | None = None,
                 min_subscribers: int = 1, paced: bool = False,
                 host: str = "127.0.0.1", control_port: int | None = None):
        self.host = host
        self.port = port
        self.control_port = control_port
        self.source = source
        self.control = control
        self.settings = settings if settings is not None else Settings()
        self.references = references
        self.min_subscribers = min_subscribers
        self.paced = paced

        self.selected_reference: MovementClass | None = None
        self.recording = False

        self._subscribers: list[_Subscriber] = []
        self._subscribers_lock = threading.Lock()
        self._enough_subscribers = threading.Event()
        self._stopping = threading.Event()
        self._producer_done = threading.Event()
        self._server = None
        self._http_server: ThreadingHTTPServer | None = None
        self._threads: list[threading.Thread] = []

    # lifecycle

    def start(self) -> None:
        try:
            self._server = ws_serve(self._handle_client, self.host, self.port)
        except OSError as exc:
            raise BindFailure(f"cannot bind ws endpoint on port {self.port}: {exc}") from exc
        accept = threading.Thread(target=self._server.serve_forever, daemon=True)
        accept.start()
        self._start_control_endpoint()
        producer = threading.Thread(target=self._produce, daemon=True)
        producer.start()
        self._threads = [accept, producer]

    def _start_control_endpoint(self) -> None:
        http_port = self.control_port
        if http_port is None:
            http_port = 0 if self.port == 0 else self.port + 1
        server = self

        class ControlHandler(BaseHTTPRequestHandler):
            def _reply(self, payload: dict, status: int = 200) -> None:
                body = json.dumps(payload, separators=(",", ":")).encode("ascii")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)

            def do_OPTIONS(self):  # CORS preflight for the browser UI
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.end_headers()

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    request = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    self._reply({"ok": False, "error": "malformed request"}, status=400)
                    return
                result = server.apply_action(self.path, request.get("value"))
                self._reply(result, status=200 if result.get("ok") else 400)

            def log_message(self, *args):  # keep the capture path quiet
                pass

        try:
            self._http_server = ThreadingHTTPServer((self.host, http_port), ControlHandler)
        except OSError as exc:
            raise BindFailure(f"cannot bind control endpoint on port {http_port}: {exc}") from exc
        threading.Thread(target=self._http_server.serve_forever, daemon=True).start()

    def stop(self) -> None:
        self._stopping.set()
        self._enough_subscribers.set()
        if self._server is not None:
            self._server.shutdown()
        if self._http_server is not None:
            self._http_server.shutdown()

    @property
    def bound_port(self) -> int:
        """Effective port (useful when constructed with port 0)."""
        if self._server is None:
            return self.port
        return self._server.socket.getsockname()[1]

    @property
    def bound_control_port(self) -> int:
        if self._http_server is None:
            return self.control_port or 0
        return self._http_server.server_address[1]

    def wait_producer(self, timeout: float | None = None) -> bool:
        return self._producer_done.wait(timeout)

    # broadcast plumbing

    def _broadcast(self, msg: StreamMessage) -> None:
        payload = message_to_json(msg)
        with self._subscribers_lock:
            targets = list(self._subscribers)
        for sub in targets:
            sub.push(payload)

    def _produce(self) -> None:
        try:
            if self.source is None:
                while not self._stopping.is_set():
                    self._broadcast(StatusMessage("waiting: no source attached"))
                    self._stopping.wait(WAITING_STATUS_PERIOD_S)
                return
            # hold the (possibly finite) source until listeners are ready
            while not self._stopping.is_set() and not self._enough_subscribers.is_set():
                self._enough_subscribers.wait(0.05)
            if self._stopping.is_set():
                return
            self._broadcast(StatusMessage("source attached; streaming"))
            dt = 1.0 / self.source.rate_hz
            try:
                for msg in live_loop(self.source, self.control,
                                     BatonSpec(self.settings.baton_length_m),
                                     self.settings.smoothing_width,
                                     settings=self.settings,
                                     references=self.references):
                    if self._stopping.is_set():
                        return
                    self._broadcast(msg)
                    if self.paced:
                        time.sleep(dt)
            except SourceDisconnected as exc:
                self._broadcast(StatusMessage(f"source disconnected: {exc}"))
            self._broadcast(StatusMessage("stream complete"))
        finally:
            self._producer_done.set()

    # per-connection handling

    def _handle_client(self, websocket) -> None:
        sub = _Subscriber()
        with self._subscribers_lock:
            self._subscribers.append(sub)
            if len(self._subscribers) >= self.min_subscribers:
                self._enough_subscribers.set()
        sub.push(message_to_json(StatusMessage("joined: streaming from this point")))

        sender = threading.Thread(target=self._send_loop, args=(websocket, sub), daemon=True)
        sender.start()
        try:
            for raw in websocket:
                response = self._handle_action(raw)
                websocket.send(json.dumps(response, separators=(",", ":")))
        except ConnectionClosed:
            pass
        finally:
            with sub.lock:
                sub.dropped = True
                sub.ready.set()
            with self._subscribers_lock:
                if sub in self._subscribers:
                    self._subscribers.remove(sub)

    def _send_loop(self, websocket, sub: _Subscriber) -> None:
        try:
            while True:
                sub.ready.wait(0.1)
                batch = sub.drain()
                for payload in batch:
                    websocket.send(payload)
                with sub.lock:
                    if sub.dropped and not sub.pending:
                        break
                if self._stopping.is_set() and self._producer_done.is_set() and not batch:
                    break
        except ConnectionClosed:
            with sub.lock:
                sub.dropped = True

    def _handle_action(self, raw) -> dict:
        try:
            request = json.loads(raw)
            action = request["action"]
        except (json.JSONDecodeError, TypeError, KeyError):
            return {"ok": False, "error": "malformed request"}
        return self.apply_action(action, request.get("value"))

    def apply_action(self, action: str, value) -> dict:
        """Session control: /session/reference, /session/recording,
        /session/tempo; tempo may not change while streaming."""
        if action == "/session/reference":
            try:
                self.selected_reference = MovementClass.coerce(value)
            except ValueError as exc:
                return {"ok": False, "error": str(exc)}
            return {"ok": True, "action": action, "value": self.selected_reference.value}
        if action == "/session/recording":
            self.recording = bool(value)
            return {"ok": True, "action": action, "value": self.recording}
        if action == "/session/tempo":
            if self.source is not None and self._enough_subscribers.is_set():
                return {"ok": False, "error": "tempo is fixed during a live session"}
            try:
                tempo = float(value)
            except (TypeError, ValueError):
                return {"ok": False, "error": "tempo must be a number"}
            if tempo <= 0:
                return {"ok": False, "error": "tempo must be positive"}
            self.settings.tempo_bpm = tempo
            return {"ok": True, "action": action, "value": tempo}
        return {"ok": False, "error": f"unknown action {action!r}"}


def serve_stream(*, port: int, source: StreamSource | None, control: ControlFrame,
                 settings: Settings | None = None,
                 references: list[AverageTrajectory] | None = None,
                 min_subscribers: int = 1, paced: bool = False) -> StreamServer:
    """Create and start a broadcast server; caller owns stop()."""
    server = StreamServer(port=port, source=source, control=control,
                          settings=settings, references=references,
                          min_subscribers=min_subscribers, paced=paced)
    server.start()
    return server
