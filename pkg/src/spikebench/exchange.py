"""Spike exchange: wire format, delay queue, transports, all-to-all.

Wire format.  A spike on the wire is 12 bytes, little-endian: the source
neuron id as uint32 followed by the emission step as uint64.  Delays are
never transmitted; the receiver regenerates the connectivity rows of the
source, so (source, step) is all it needs.

Exchange.  Once per step every rank sends to every rank, in two phases: a
4-byte spike-count frame to each peer, then the payload frame (possibly
empty).  Empty payloads are sent, not skipped; the count doubles as an
integrity check on the payload length.  A dissemination barrier closes the
step so no rank can run ahead.

Transports.  ``InProcFabric`` wires ranks in one process through per-pair
queues (thread-based driver); ``SocketTransport`` runs a full TCP mesh with
16-byte message headers.  Both present the same blocking send/recv/barrier
surface, so the engine does not know which one it is on.
"""

from __future__ import annotations

import json
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass

import numpy as np

from spikebench.errors import (BarrierError, ConfigError, EncodeError,
                               ExchangeError, FramingError, ProtocolError)

SPIKE_BYTES = 12
SPIKE_DTYPE = np.dtype([("source", "<u4"), ("step", "<u8")])
assert SPIKE_DTYPE.itemsize == SPIKE_BYTES

_COUNT_FRAME = struct.Struct("<I")
_MSG_HEADER = struct.Struct("<IQI")  # sender rank, step, payload bytes
_HELLO = struct.Struct("<I")

DEFAULT_TIMEOUT_S = 30.0


@dataclass(frozen=True, order=True)
class AxonalSpike:
    """A spike event: who fired, and on which step."""

    source: int
    step: int


def encode(spikes) -> bytes:
    """Pack spikes into the 12-byte wire records, preserving order.

    Raises:
        EncodeError: if a source id does not fit uint32 or a step uint64.
    """
    out = np.empty(len(spikes), dtype=SPIKE_DTYPE)
    for i, sp in enumerate(spikes):
        if not 0 <= sp.source < 2**32:
            raise EncodeError(f"source id {sp.source} does not fit uint32")
        if not 0 <= sp.step < 2**64:
            raise EncodeError(f"step {sp.step} does not fit uint64")
        out[i] = (sp.source, sp.step)
    return out.tobytes()


def encode_arrays(sources: np.ndarray, step: int) -> bytes:
    """Pack an array of source ids fired on one step."""
    if np.any(sources < 0) or np.any(sources >= 2**32):
        raise EncodeError("source id does not fit uint32")
    if not 0 <= step < 2**64:
        raise EncodeError(f"step {step} does not fit uint64")
    out = np.empty(len(sources), dtype=SPIKE_DTYPE)
    out["source"] = sources
    out["step"] = step
    return out.tobytes()


def decode(payload: bytes) -> list[AxonalSpike]:
    """Unpack wire records, preserving order.

    Raises:
        FramingError: if the buffer is not a whole number of records.
    """
    sources, steps = decode_arrays(payload)
    return [AxonalSpike(int(s), int(t)) for s, t in zip(sources, steps)]


def decode_arrays(payload: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Unpack wire records into (sources, steps) int64 arrays."""
    if len(payload) % SPIKE_BYTES:
        raise FramingError(
            f"payload of {len(payload)} bytes is not a multiple of {SPIKE_BYTES}")
    rec = np.frombuffer(payload, dtype=SPIKE_DTYPE)
    return rec["source"].astype(np.int64), rec["step"].astype(np.int64)


class DelayQueue:
    """Ring buffer of pending deliveries, one slot per future step.

    A spike scheduled with delay d lands in slot (spike.step + d) mod
    (d_max + 1); because delays are at least 1 and at most d_max, a slot is
    always drained before it is reused.  ``drain`` returns the batch sorted
    by (source, emission step), the canonical delivery order.
    """

    def __init__(self, d_min: int = 1, d_max: int = 16):
        if not 1 <= d_min <= d_max:
            raise ConfigError("need 1 <= d_min <= d_max")
        self.d_min = d_min
        self.d_max = d_max
        self._slots: list[list[AxonalSpike]] = [[] for _ in range(d_max + 1)]
        self._pending = 0

    def __len__(self) -> int:
        return self._pending

    def schedule(self, spike: AxonalSpike, delay: int) -> None:
        if not self.d_min <= delay <= self.d_max:
            raise ConfigError(
                f"delay {delay} outside [{self.d_min}, {self.d_max}]")
        self._slots[(spike.step + delay) % len(self._slots)].append(spike)
        self._pending += 1

    def drain(self, step: int) -> list[AxonalSpike]:
        idx = step % len(self._slots)
        batch = self._slots[idx]
        self._slots[idx] = []
        self._pending -= len(batch)
        batch.sort(key=lambda sp: (sp.source, sp.step))
        return batch


class Transport:
    """Blocking point-to-point fabric between ranks (interface)."""

    rank: int
    n_ranks: int

    def send(self, dest: int, step: int, payload: bytes) -> None:
        raise NotImplementedError

    def recv(self, src: int, timeout: float | None = None) -> tuple[int, bytes]:
        raise NotImplementedError

    def barrier(self, timeout: float | None = None) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


def all_to_all(transport: Transport | None, step: int,
               outgoing: list[bytes]) -> list[bytes]:
    """Exchange one step's payloads with every rank, self included.

    ``outgoing[d]`` is the payload for rank d; the result lists the payload
    received from each rank.  Counts go out first, then payloads, so a
    length mismatch is diagnosed as a protocol violation rather than a hang.

    Raises:
        ProtocolError: wrong step, malformed count frame, or payload length
            disagreeing with the announced count.
    """
    if transport is None or transport.n_ranks == 1:
        if len(outgoing) != 1:
            raise ConfigError("single-rank exchange expects one payload")
        if len(outgoing[0]) % SPIKE_BYTES:
            raise FramingError("payload is not a whole number of spikes")
        return [outgoing[0]]
    n, me = transport.n_ranks, transport.rank
    if len(outgoing) != n:
        raise ConfigError(f"expected {n} payloads, got {len(outgoing)}")
    for dest in range(n):
        if len(outgoing[dest]) % SPIKE_BYTES:
            raise FramingError("payload is not a whole number of spikes")
        if dest != me:
            count = len(outgoing[dest]) // SPIKE_BYTES
            transport.send(dest, step, _COUNT_FRAME.pack(count))
    for dest in range(n):
        if dest != me:
            transport.send(dest, step, outgoing[dest])
    counts = [0] * n
    for src in range(n):
        if src == me:
            continue
        got_step, body = transport.recv(src)
        if got_step != step:
            raise ProtocolError(
                f"count frame from rank {src} is for step {got_step}, "
                f"expected {step}")
        if len(body) != _COUNT_FRAME.size:
            raise ProtocolError(
                f"count frame from rank {src} has {len(body)} bytes")
        counts[src] = _COUNT_FRAME.unpack(body)[0]
    received = [b""] * n
    received[me] = outgoing[me]
    for src in range(n):
        if src == me:
            continue
        got_step, body = transport.recv(src)
        if got_step != step:
            raise ProtocolError(
                f"payload from rank {src} is for step {got_step}, "
                f"expected {step}")
        if len(body) != counts[src] * SPIKE_BYTES:
            raise ProtocolError(
                f"rank {src} announced {counts[src]} spikes but sent "
                f"{len(body)} bytes")
        received[src] = body
    return received


def exchange_spikes(transport: Transport | None, step: int,
                    outgoing: list[list[AxonalSpike]]) -> list[list[AxonalSpike]]:
    """Spike-object convenience wrapper around :func:`all_to_all`."""
    payloads = [encode(sp) for sp in outgoing]
    return [decode(p) for p in all_to_all(transport, step, payloads)]


# ---------------------------------------------------------------------------
# in-process fabric


class _InProcEndpoint(Transport):
    def __init__(self, fabric: "InProcFabric", rank: int):
        self._fabric = fabric
        self.rank = rank
        self.n_ranks = fabric.n_ranks

    def send(self, dest: int, step: int, payload: bytes) -> None:
        self._fabric.pipes[(self.rank, dest)].put((step, payload))

    def recv(self, src: int, timeout: float | None = None) -> tuple[int, bytes]:
        if timeout is None:
            timeout = self._fabric.timeout_s
        try:
            return self._fabric.pipes[(src, self.rank)].get(timeout=timeout)
        except queue.Empty:
            raise ExchangeError(
                f"rank {self.rank}: no message from rank {src} within "
                f"{timeout:.1f}s") from None

    def barrier(self, timeout: float | None = None) -> None:
        if timeout is None:
            timeout = self._fabric.timeout_s
        try:
            self._fabric.barrier.wait(timeout=timeout)
        except threading.BrokenBarrierError:
            raise BarrierError(
                f"rank {self.rank}: step barrier broken or timed out "
                f"after {timeout:.1f}s") from None

    def close(self) -> None:
        pass


class InProcFabric:
    """Shared-memory mesh for running all ranks as threads of one process."""

    def __init__(self, n_ranks: int, timeout_s: float = DEFAULT_TIMEOUT_S):
        if n_ranks < 1:
            raise ConfigError("n_ranks must be positive")
        self.n_ranks = n_ranks
        self.timeout_s = timeout_s
        self.pipes = {(s, d): queue.SimpleQueue()
                      for s in range(n_ranks) for d in range(n_ranks) if s != d}
        self.barrier = threading.Barrier(n_ranks)

    def endpoint(self, rank: int) -> Transport:
        if not 0 <= rank < self.n_ranks:
            raise ConfigError(f"rank {rank} outside [0, {self.n_ranks})")
        return _InProcEndpoint(self, rank)


# ---------------------------------------------------------------------------
# TCP mesh


def _recv_exact(sock: socket.socket, n: int, peer, me: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        try:
            chunk = sock.recv(n - got)
        except socket.timeout:
            raise ExchangeError(
                f"rank {me}: timed out reading from rank {peer}") from None
        except OSError as exc:
            raise ExchangeError(
                f"rank {me}: read from rank {peer} failed: {exc}") from None
        if not chunk:
            raise ExchangeError(f"rank {me}: rank {peer} closed the connection")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


class SocketTransport(Transport):
    """Full TCP mesh: every pair of ranks shares one ordered byte stream.

    Each rank listens on its own address from ``peers`` (index = rank),
    actively connects to all lower ranks, and accepts from all higher ones.
    A 4-byte hello carrying the connector's rank identifies each accepted
    stream.  Messages are framed as (sender u32, step u64, length u32) +
    payload, little-endian.
    """

    def __init__(self, rank: int, peers: list[tuple[str, int]],
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        if not 0 <= rank < len(peers):
            raise ConfigError(f"rank {rank} outside peer list of {len(peers)}")
        self.rank = rank
        self.n_ranks = len(peers)
        self.timeout_s = timeout_s
        self._epoch = 0
        self._socks: dict[int, socket.socket] = {}
        host, port = peers[rank]
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(self.n_ranks)
        self._listener.settimeout(timeout_s)
        try:
            self._connect_lower(peers)
            self._accept_higher()
        except Exception:
            self.close()
            raise

    def _connect_lower(self, peers):
        for dest in range(self.rank):
            deadline = time.monotonic() + self.timeout_s
            while True:
                s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
                s.settimeout(self.timeout_s)
                try:
                    s.connect(peers[dest])
                    break
                except (ConnectionRefusedError, socket.timeout, OSError):
                    s.close()
                    if time.monotonic() > deadline:
                        raise ExchangeError(
                            f"rank {self.rank}: cannot reach rank {dest} at "
                            f"{peers[dest][0]}:{peers[dest][1]}") from None
                    time.sleep(0.05)
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            s.sendall(_HELLO.pack(self.rank))
            self._socks[dest] = s

    def _accept_higher(self):
        expected = set(range(self.rank + 1, self.n_ranks))
        while expected:
            try:
                s, _addr = self._listener.accept()
            except socket.timeout:
                raise ExchangeError(
                    f"rank {self.rank}: ranks {sorted(expected)} never "
                    f"connected") from None
            s.settimeout(self.timeout_s)
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            who = _HELLO.unpack(
                _recv_exact(s, _HELLO.size, "unknown", self.rank))[0]
            if who not in expected:
                s.close()
                raise ProtocolError(
                    f"rank {self.rank}: unexpected hello from rank {who}")
            expected.discard(who)
            self._socks[who] = s

    def send(self, dest: int, step: int, payload: bytes) -> None:
        try:
            self._socks[dest].sendall(
                _MSG_HEADER.pack(self.rank, step, len(payload)) + payload)
        except OSError as exc:
            raise ExchangeError(
                f"rank {self.rank}: send to rank {dest} failed: {exc}") from None

    def recv(self, src: int, timeout: float | None = None) -> tuple[int, bytes]:
        sock = self._socks[src]
        sock.settimeout(self.timeout_s if timeout is None else timeout)
        head = _recv_exact(sock, _MSG_HEADER.size, src, self.rank)
        sender, step, nbytes = _MSG_HEADER.unpack(head)
        if sender != src:
            raise ProtocolError(
                f"rank {self.rank}: stream from rank {src} carried a frame "
                f"claiming sender {sender}")
        return step, _recv_exact(sock, nbytes, src, self.rank)

    def barrier(self, timeout: float | None = None) -> None:
        # dissemination barrier: one empty frame to everyone, one from everyone
        self._epoch += 1
        for dest in range(self.n_ranks):
            if dest != self.rank:
                self.send(dest, self._epoch, b"")
        for src in range(self.n_ranks):
            if src == self.rank:
                continue
            try:
                epoch, body = self.recv(src, timeout)
            except ExchangeError as exc:
                raise BarrierError(str(exc)) from None
            if epoch != self._epoch or body:
                raise BarrierError(
                    f"rank {self.rank}: barrier frame from rank {src} has "
                    f"epoch {epoch}, expected {self._epoch}")

    def close(self) -> None:
        for s in self._socks.values():
            try:
                s.close()
            except OSError:
                pass
        try:
            self._listener.close()
        except OSError:
            pass


def load_peers(path) -> list[tuple[str, int]]:
    """Read a peer file: a JSON array of "host:port", indexed by rank."""
    with open(path) as f:
        entries = json.load(f)
    if not isinstance(entries, list) or not entries:
        raise ConfigError("peer file must be a non-empty JSON array")
    peers = []
    for i, entry in enumerate(entries):
        host, sep, port = str(entry).rpartition(":")
        if not sep or not host:
            raise ConfigError(f"peer {i}: expected host:port, got {entry!r}")
        peers.append((host, int(port)))
    return peers
