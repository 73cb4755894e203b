"""Deterministic connectivity, generated on demand.

No connectivity matrix is ever stored or communicated.  Each source neuron's
out-list (``fan_out`` distinct targets, no self-connections, plus integer
delays) is a pure function of (seed, source id), so any rank can regenerate
the rows it needs.  Receiver-side generation keeps the wire format down to
bare spikes: a rank that owns targets regenerates the out-lists of every
possible source and keeps only the synapses landing in its own range.

Target sampling uses Floyd's algorithm, which draws exactly ``fan_out``
distinct values in ``fan_out`` uniform draws regardless of network size.

Excitatory neurons occupy ids [0, n_excitatory); their synapses carry weight
``+j_exc``.  Inhibitory ids follow with weight ``-g_rel * j_exc``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from spikebench import defaults, rng
from spikebench.backends import Backend, resolve_backend
from spikebench.errors import ConfigError, FramingError

_TABLE_MAGIC = b"SYN1"
_TABLE_HEADER = struct.Struct("<4sQQQQQBBQ")


@dataclass(frozen=True)
class NetworkSpec:
    """Global description of a network; identical on every rank."""

    n_neurons: int
    fan_out: int = defaults.FAN_OUT
    frac_excitatory: float = defaults.FRAC_EXCITATORY
    j_exc: float = defaults.J_EXC
    g_rel: float = defaults.G_REL
    d_min: int = defaults.D_MIN
    d_max: int = defaults.D_MAX
    seed: int = defaults.SEED

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ConfigError("need at least one neuron")
        if not 0 <= self.fan_out <= self.n_neurons - 1:
            raise ConfigError(
                f"fan_out must lie in [0, n_neurons-1], got {self.fan_out} "
                f"for {self.n_neurons} neurons")
        if not 0.0 <= self.frac_excitatory <= 1.0:
            raise ConfigError("frac_excitatory must lie in [0, 1]")
        if self.j_exc < 0:
            raise ConfigError("j_exc must be non-negative")
        if self.g_rel < 0:
            raise ConfigError("g_rel must be non-negative")
        if not 1 <= self.d_min <= self.d_max:
            raise ConfigError("delays must satisfy 1 <= d_min <= d_max")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def n_excitatory(self) -> int:
        return int(round(self.n_neurons * self.frac_excitatory))

    @property
    def n_delays(self) -> int:
        return self.d_max - self.d_min + 1

    def is_excitatory(self, neuron_id: int) -> bool:
        return neuron_id < self.n_excitatory

    def weight_of(self, source: int) -> float:
        """Weight every synapse of ``source`` carries."""
        if self.is_excitatory(source):
            return self.j_exc
        return -self.g_rel * self.j_exc


@dataclass(frozen=True)
class Synapse:
    source: int
    target: int
    weight: float
    delay: int


@dataclass(frozen=True)
class Partition:
    """Contiguous slice of neuron ids owned by one rank."""

    n_ranks: int
    rank: int
    lo: int
    hi: int

    @property
    def n_local(self) -> int:
        return self.hi - self.lo

    def owns(self, neuron_id: int) -> bool:
        return self.lo <= neuron_id < self.hi


def partition(n_neurons: int, n_ranks: int, rank: int) -> Partition:
    """Split [0, n_neurons) into n_ranks contiguous ranges.

    Sizes differ by at most one; the remainder goes to the lowest ranks.
    """
    if n_ranks < 1:
        raise ConfigError("n_ranks must be positive")
    if not 0 <= rank < n_ranks:
        raise ConfigError(f"rank {rank} outside [0, {n_ranks})")
    base, rem = divmod(n_neurons, n_ranks)
    lo = rank * base + min(rank, rem)
    hi = lo + base + (1 if rank < rem else 0)
    return Partition(n_ranks=n_ranks, rank=rank, lo=lo, hi=hi)


def outgoing(spec: NetworkSpec, source: int) -> list[Synapse]:
    """Regenerate one source's full out-list, in draw order.

    Scalar reference path; the table builder uses the array kernels and is
    tested to agree with this exactly.
    """
    if not 0 <= source < spec.n_neurons:
        raise ConfigError(f"source {source} outside network")
    m = spec.n_neurons - 1
    k = spec.fan_out
    weight = spec.weight_of(source)
    taken: set[int] = set()
    out = []
    for j in range(k):
        h = rng.hash_words(spec.seed, rng.STREAM_TARGETS, source, j)
        pick = rng.uniform_int(h, m - k + j + 1)
        if pick in taken:
            pick = m - k + j
        taken.add(pick)
        target = pick + 1 if pick >= source else pick
        hd = rng.hash_words(spec.seed, rng.STREAM_DELAYS, source, j)
        delay = spec.d_min + rng.uniform_int(hd, spec.n_delays)
        out.append(Synapse(source=source, target=target, weight=weight, delay=delay))
    return out


@dataclass
class SynapseTable:
    """The synapses a rank owns, bucketed by (source, delay).

    Flat arrays sorted by (source, delay, target); ``offsets`` has
    ``n_neurons * n_delays + 1`` entries so bucket (s, d) is the slice
    ``offsets[s*n_delays + d - d_min] : offsets[... + 1]``.  Targets are
    stored as rank-local indices ready for scatter kernels.
    """

    part: Partition
    n_neurons: int
    d_min: int
    d_max: int
    targets_local: np.ndarray = field(repr=False)  # int32
    weights: np.ndarray = field(repr=False)        # float64
    offsets: np.ndarray = field(repr=False)        # int64

    @property
    def n_delays(self) -> int:
        return self.d_max - self.d_min + 1

    @property
    def n_synapses(self) -> int:
        return int(self.targets_local.shape[0])

    def bucket(self, source: int, delay: int) -> tuple[np.ndarray, np.ndarray]:
        """Views of (local targets, weights) for one (source, delay) bucket."""
        if not self.d_min <= delay <= self.d_max:
            raise ConfigError(f"delay {delay} outside [{self.d_min}, {self.d_max}]")
        key = source * self.n_delays + (delay - self.d_min)
        a, b = self.offsets[key], self.offsets[key + 1]
        return self.targets_local[a:b], self.weights[a:b]

    def bucket_sizes(self, source: int) -> np.ndarray:
        """Per-delay bucket sizes for one source (length n_delays)."""
        k = source * self.n_delays
        row = self.offsets[k:k + self.n_delays + 1]
        return np.diff(row)

    def iter_synapses(self):
        """Yield every owned synapse with global target ids (test helper)."""
        n_d = self.n_delays
        for key in range(self.n_neurons * n_d):
            a, b = int(self.offsets[key]), int(self.offsets[key + 1])
            if a == b:
                continue
            source, d = divmod(key, n_d)
            for i in range(a, b):
                yield Synapse(source=source,
                              target=int(self.targets_local[i]) + self.part.lo,
                              weight=float(self.weights[i]),
                              delay=self.d_min + d)


def build_table(spec: NetworkSpec, part: Partition,
                backend: Backend | None = None,
                block_sources: int = 512) -> SynapseTable:
    """Scan all sources and keep the synapses targeting ``part``.

    Work and memory scale with n_neurons * fan_out for the scan but only the
    owned slice is retained.  Output is independent of backend and block
    size: blocks ascend in source id and each block is sorted by
    (source, delay, target) before being appended.
    """
    if backend is None:
        backend = resolve_backend()
    n = spec.n_neurons
    n_d = spec.n_delays
    # cap the block so the Floyd membership scratch stays modest
    block = max(1, min(block_sources, (1 << 25) // max(n, 1)))
    chunks_t, chunks_s, chunks_d = [], [], []
    for src_lo in range(0, n, block):
        cnt = min(block, n - src_lo)
        tg, dl = backend.sample_block(spec.seed, src_lo, cnt, n, spec.fan_out,
                                      spec.d_min, n_d)
        keep = (tg >= part.lo) & (tg < part.hi)
        if not keep.any():
            continue
        src = np.broadcast_to(
            np.arange(src_lo, src_lo + cnt, dtype=np.int64)[:, None], tg.shape)
        t_f, d_f, s_f = tg[keep], dl[keep], src[keep]
        order = np.lexsort((t_f, d_f, s_f))
        chunks_t.append((t_f[order] - part.lo).astype(np.int32))
        chunks_s.append(s_f[order].astype(np.int64))
        chunks_d.append(d_f[order].astype(np.int64))
    if chunks_t:
        targets_local = np.concatenate(chunks_t)
        src_all = np.concatenate(chunks_s)
        dly_all = np.concatenate(chunks_d)
    else:
        targets_local = np.empty(0, dtype=np.int32)
        src_all = np.empty(0, dtype=np.int64)
        dly_all = np.empty(0, dtype=np.int64)
    keys = src_all * n_d + (dly_all - spec.d_min)
    counts = np.bincount(keys, minlength=n * n_d)
    offsets = np.zeros(n * n_d + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    n_exc = spec.n_excitatory
    weights = np.where(src_all < n_exc, spec.j_exc, -spec.g_rel * spec.j_exc)
    return SynapseTable(part=part, n_neurons=n, d_min=spec.d_min,
                        d_max=spec.d_max, targets_local=targets_local,
                        weights=weights, offsets=offsets)


def write_table(path, table: SynapseTable) -> None:
    """Serialize a table to the deterministic little-endian dump format."""
    with open(path, "wb") as f:
        f.write(_TABLE_HEADER.pack(_TABLE_MAGIC, table.n_neurons,
                                   table.part.lo, table.part.hi,
                                   table.part.n_ranks, table.part.rank,
                                   table.d_min, table.d_max,
                                   table.n_synapses))
        f.write(table.offsets.astype("<i8").tobytes())
        f.write(table.targets_local.astype("<i4").tobytes())
        f.write(table.weights.astype("<f8").tobytes())


def read_table(path) -> SynapseTable:
    """Load a table written by :func:`write_table`."""
    with open(path, "rb") as f:
        head = f.read(_TABLE_HEADER.size)
        if len(head) < _TABLE_HEADER.size:
            raise FramingError("truncated synapse table header")
        magic, n, lo, hi, n_ranks, rank, d_min, d_max, n_syn = \
            _TABLE_HEADER.unpack(head)
        if magic != _TABLE_MAGIC:
            raise FramingError(f"bad synapse table magic {magic!r}")
        n_d = d_max - d_min + 1
        body = f.read()
    need = 8 * (n * n_d + 1) + 4 * n_syn + 8 * n_syn
    if len(body) != need:
        raise FramingError(
            f"synapse table body is {len(body)} bytes, expected {need}")
    cut1 = 8 * (n * n_d + 1)
    cut2 = cut1 + 4 * n_syn
    offsets = np.frombuffer(body[:cut1], dtype="<i8").copy()
    targets = np.frombuffer(body[cut1:cut2], dtype="<i4").copy()
    weights = np.frombuffer(body[cut2:], dtype="<f8").copy()
    part = Partition(n_ranks=int(n_ranks), rank=int(rank), lo=int(lo), hi=int(hi))
    return SynapseTable(part=part, n_neurons=int(n), d_min=int(d_min),
                        d_max=int(d_max),
                        targets_local=targets.astype(np.int32),
                        weights=weights.astype(np.float64),
                        offsets=offsets.astype(np.int64))
