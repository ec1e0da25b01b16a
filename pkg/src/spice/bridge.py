"""Transport glue: typed event envelopes, canonical encoding, pub/sub, the
tracker-datagram ingest filter, and the UI message channel.

Everything that crosses a process boundary is an EventEnvelope in canonical
JSON (sorted keys, no insignificant whitespace, UTF-8, no NaN). The stream
channel length-prefixes each envelope; UDP carries one bare envelope per
datagram; the UI channel carries one envelope per WebSocket text frame.
"""

from __future__ import annotations

import asyncio
import json
import math
import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass

from spice.tracking import MalformedDatagram, PoseFrame, decode_pose_datagram

TOPICS = ("pose", "zone", "nav", "detection", "display", "command", "status")
MAX_FRAME_BYTES = 1 << 24
SUBSCRIBER_QUEUE_LIMIT = 1024
_LEN = struct.Struct("<I")


class MalformedEvent(ValueError):
    """An envelope failed structural validation or canonical decoding."""


class SocketClosed(Exception):
    """The ingest socket went away; the stream ends cleanly."""


@dataclass(frozen=True)
class EventEnvelope:
    seq: int
    timestamp: float
    topic: str
    payload: object


def _validate_envelope(env: EventEnvelope):
    if not isinstance(env.seq, int) or not 0 <= env.seq < 2**64:
        raise MalformedEvent("seq must be a u64")
    if not isinstance(env.timestamp, (int, float)) or not math.isfinite(env.timestamp):
        raise MalformedEvent("timestamp must be finite")
    if env.topic not in TOPICS:
        raise MalformedEvent(f"unknown topic {env.topic!r}")


def encode_event(env: EventEnvelope) -> bytes:
    """Canonical JSON bytes for one envelope (bare, no framing)."""
    _validate_envelope(env)
    doc = {"payload": env.payload, "seq": env.seq, "timestamp": env.timestamp, "topic": env.topic}
    try:
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise MalformedEvent(f"payload not canonically serializable: {exc}") from exc
    return text.encode("utf-8")


def decode_event(data: bytes) -> EventEnvelope:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedEvent(f"not canonical JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"seq", "timestamp", "topic", "payload"}:
        raise MalformedEvent("envelope must have exactly seq/timestamp/topic/payload")
    seq, timestamp, topic = doc["seq"], doc["timestamp"], doc["topic"]
    if isinstance(seq, bool) or not isinstance(seq, int):
        raise MalformedEvent("seq must be an integer")
    env = EventEnvelope(seq=seq, timestamp=float(timestamp), topic=topic, payload=doc["payload"])
    _validate_envelope(env)
    return env


# ---------------------------------------------------------------------------
# Length-prefixed stream framing
# ---------------------------------------------------------------------------


def encode_frame(env: EventEnvelope) -> bytes:
    body = encode_event(env)
    return _LEN.pack(len(body)) + body


def iter_frames(data: bytes, errors: list | None = None):
    """Decode a concatenation of length-prefixed envelopes.

    A frame whose body fails to decode is skipped (its length prefix still
    delimits it, so the stream resynchronizes at the next boundary); the
    error is appended to ``errors`` when given. A truncated tail raises.
    """
    offset = 0
    while offset < len(data):
        if offset + _LEN.size > len(data):
            raise MalformedEvent("truncated length prefix")
        (length,) = _LEN.unpack_from(data, offset)
        if length > MAX_FRAME_BYTES:
            raise MalformedEvent("frame length exceeds limit")
        offset += _LEN.size
        if offset + length > len(data):
            raise MalformedEvent("truncated frame body")
        body = data[offset : offset + length]
        offset += length
        try:
            yield decode_event(body)
        except MalformedEvent as exc:
            if errors is not None:
                errors.append(exc)


def read_frames(path, errors: list | None = None) -> list[EventEnvelope]:
    with open(path, "rb") as f:
        return list(iter_frames(f.read(), errors=errors))


def write_frames(path, envelopes):
    with open(path, "wb") as f:
        for env in envelopes:
            f.write(encode_frame(env))


# ---------------------------------------------------------------------------
# In-process pub/sub
# ---------------------------------------------------------------------------


class Subscription:
    """Bounded FIFO of envelopes; oldest are dropped under backpressure."""

    def __init__(self, topics, limit: int = SUBSCRIBER_QUEUE_LIMIT):
        self.topics = frozenset(topics) if topics else None
        self._queue: deque[EventEnvelope] = deque()
        self._limit = limit
        self.dropped = 0

    def _offer(self, env: EventEnvelope):
        if self.topics is not None and env.topic not in self.topics:
            return
        if len(self._queue) >= self._limit:
            self._queue.popleft()
            self.dropped += 1
        self._queue.append(env)

    def poll(self) -> EventEnvelope | None:
        return self._queue.popleft() if self._queue else None

    def drain(self) -> list[EventEnvelope]:
        out = list(self._queue)
        self._queue.clear()
        return out

    def __len__(self):
        return len(self._queue)


class EventBus:
    """Single-writer event fan-out with per-bus strictly increasing seq."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._next_seq = 0
        self.last_seq = -1

    def subscribe(self, topics=None, limit: int = SUBSCRIBER_QUEUE_LIMIT) -> Subscription:
        sub = Subscription(topics, limit)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription):
        with self._lock:
            self._subs.remove(sub)

    def emit(self, topic: str, timestamp: float, payload) -> EventEnvelope:
        """Stamp the next sequence number and publish."""
        with self._lock:
            env = EventEnvelope(seq=self._next_seq, timestamp=timestamp, topic=topic, payload=payload)
            self._next_seq += 1
            self._publish_locked(env)
        return env

    def publish(self, env: EventEnvelope):
        with self._lock:
            self._publish_locked(env)

    def _publish_locked(self, env: EventEnvelope):
        _validate_envelope(env)
        if env.seq <= self.last_seq:
            raise MalformedEvent(f"seq {env.seq} not increasing past {self.last_seq}")
        self.last_seq = env.seq
        self._next_seq = max(self._next_seq, env.seq + 1)
        for sub in self._subs:
            sub._offer(env)


# ---------------------------------------------------------------------------
# Tracker ingest: duplicate/reorder suppression
# ---------------------------------------------------------------------------


class SequenceFilter:
    """Keeps only frames with strictly increasing sequence numbers."""

    def __init__(self):
        self.last_seq = -1
        self.delivered = 0
        self.dropped_stale = 0
        self.dropped_malformed = 0

    def admit(self, frame: PoseFrame) -> bool:
        if frame.sequence <= self.last_seq:
            self.dropped_stale += 1
            return False
        self.last_seq = frame.sequence
        self.delivered += 1
        return True

    def feed_datagram(self, data: bytes) -> PoseFrame | None:
        try:
            frame = decode_pose_datagram(data)
        except MalformedDatagram:
            self.dropped_malformed += 1
            return None
        return frame if self.admit(frame) else None


def ingest_tracker_stream(sock: socket.socket, filter_: SequenceFilter | None = None):
    """Yield in-order PoseFrames from a bound UDP socket until it closes."""
    filter_ = filter_ or SequenceFilter()
    while True:
        try:
            data, _addr = sock.recvfrom(65535)
        except OSError as exc:
            raise SocketClosed(str(exc)) from exc
        frame = filter_.feed_datagram(data)
        if frame is not None:
            yield frame


class UdpEventPublisher:
    """Best-effort bare-envelope datagrams to one peer."""

    def __init__(self, host: str, port: int):
        self.addr = (host, port)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send(self, env: EventEnvelope):
        try:
            self._sock.sendto(encode_event(env), self.addr)
        except OSError:
            pass  # UDP out is declared lossy

    def close(self):
        self._sock.close()


# ---------------------------------------------------------------------------
# UI channel: one envelope per WebSocket text frame
# ---------------------------------------------------------------------------


class UiChannelServer:
    """WebSocket fan-out of envelopes to UI clients, commands back in.

    Runs its own asyncio loop on a daemon thread so the synchronous runtime
    can push envelopes with ``broadcast`` and poll ``commands``.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.host = host
        self.port = port
        self.commands: deque[EventEnvelope] = deque()
        self._clients: set = set()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()
        self._server = None
        self._lock = threading.Lock()
        self._snapshot: EventEnvelope | None = None

    async def _handler(self, ws):
        with self._lock:
            self._clients.add(ws)
            snapshot = self._snapshot
        try:
            if snapshot is not None:
                await ws.send(encode_event(snapshot).decode("utf-8"))
            async for message in ws:
                try:
                    env = decode_event(message.encode("utf-8") if isinstance(message, str) else message)
                except MalformedEvent:
                    continue
                if env.topic == "command":
                    self.commands.append(env)
        finally:
            with self._lock:
                self._clients.discard(ws)

    async def _serve(self):
        import websockets.asyncio.server

        self._server = await websockets.asyncio.server.serve(self._handler, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._started.set()
        await self._server.wait_closed()

    def start(self):
        def run():
            self._loop = asyncio.new_event_loop()
            asyncio.set_event_loop(self._loop)
            try:
                self._loop.run_until_complete(self._serve())
            finally:
                self._loop.close()

        self._thread = threading.Thread(target=run, name="ui-channel", daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=5.0):
            raise RuntimeError("UI channel failed to start")

    def broadcast(self, env: EventEnvelope):
        """Send to all connected clients; the latest display event is also
        retained and replayed to clients that connect later."""
        text = encode_event(env).decode("utf-8")
        with self._lock:
            if env.topic == "display":
                self._snapshot = env
            clients = list(self._clients)
        if self._loop is None:
            return

        async def send_all():
            for ws in clients:
                try:
                    await ws.send(text)
                except Exception:
                    pass

        asyncio.run_coroutine_threadsafe(send_all(), self._loop)

    def poll_command(self) -> EventEnvelope | None:
        return self.commands.popleft() if self.commands else None

    def stop(self):
        if self._loop is None or self._server is None:
            return
        self._loop.call_soon_threadsafe(self._server.close)
        if self._thread is not None:
            self._thread.join(timeout=5.0)
