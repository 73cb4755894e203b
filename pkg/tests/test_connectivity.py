"""Connectivity: regeneration determinism, partitioning, table assembly."""

import numpy as np
import pytest

from spikebench import connectivity as conn
from spikebench.backends import resolve_backend
from spikebench.errors import ConfigError, FramingError

SPEC = conn.NetworkSpec(n_neurons=256, fan_out=32, j_exc=0.4, seed=42)


def test_partition_covers_and_balances():
    for n, r in [(10, 3), (256, 4), (7, 7), (20480, 8), (5, 1)]:
        parts = [conn.partition(n, r, i) for i in range(r)]
        assert parts[0].lo == 0 and parts[-1].hi == n
        for a, b in zip(parts, parts[1:]):
            assert a.hi == b.lo
        sizes = [p.n_local for p in parts]
        assert sum(sizes) == n
        assert max(sizes) - min(sizes) <= 1
        assert sizes == sorted(sizes, reverse=True)  # remainder goes low


def test_partition_validation():
    with pytest.raises(ConfigError):
        conn.partition(10, 0, 0)
    with pytest.raises(ConfigError):
        conn.partition(10, 2, 2)
    with pytest.raises(ConfigError):
        conn.partition(10, 2, -1)


def test_spec_validation():
    with pytest.raises(ConfigError):
        conn.NetworkSpec(n_neurons=0)
    with pytest.raises(ConfigError):
        conn.NetworkSpec(n_neurons=10, fan_out=10)  # no room without self
    with pytest.raises(ConfigError):
        conn.NetworkSpec(n_neurons=10, fan_out=2, frac_excitatory=1.5)
    with pytest.raises(ConfigError):
        conn.NetworkSpec(n_neurons=10, fan_out=2, d_min=0)
    with pytest.raises(ConfigError):
        conn.NetworkSpec(n_neurons=10, fan_out=2, d_min=5, d_max=4)
    with pytest.raises(ConfigError):
        conn.NetworkSpec(n_neurons=10, fan_out=2, seed=-1)


def test_population_split_and_weights():
    spec = conn.NetworkSpec(n_neurons=2048, j_exc=0.4)
    assert spec.n_excitatory == 1638  # round(0.8 * 2048)
    assert spec.is_excitatory(0) and spec.is_excitatory(1637)
    assert not spec.is_excitatory(1638)
    assert spec.weight_of(0) == 0.4
    assert spec.weight_of(2000) == -2.0  # -g_rel * j_exc


def test_outgoing_shape_and_constraints():
    for src in (0, 100, 255):
        syns = conn.outgoing(SPEC, src)
        assert len(syns) == SPEC.fan_out
        targets = [s.target for s in syns]
        assert len(set(targets)) == SPEC.fan_out  # distinct
        assert src not in targets                 # no self-connection
        assert all(0 <= t < SPEC.n_neurons for t in targets)
        assert all(SPEC.d_min <= s.delay <= SPEC.d_max for s in syns)
        assert all(s.weight == SPEC.weight_of(src) for s in syns)


def test_outgoing_is_deterministic_and_seed_keyed():
    a = conn.outgoing(SPEC, 7)
    b = conn.outgoing(SPEC, 7)
    assert a == b
    other_seed = conn.NetworkSpec(n_neurons=256, fan_out=32, j_exc=0.4, seed=43)
    assert conn.outgoing(other_seed, 7) != a


def test_outgoing_source_bounds():
    with pytest.raises(ConfigError):
        conn.outgoing(SPEC, -1)
    with pytest.raises(ConfigError):
        conn.outgoing(SPEC, 256)


def test_table_matches_outgoing_multiset():
    part = conn.partition(SPEC.n_neurons, 3, 1)
    table = conn.build_table(SPEC, part)
    from_table = set()
    for syn in table.iter_synapses():
        from_table.add((syn.source, syn.target, syn.delay, syn.weight))
    expected = set()
    for src in range(SPEC.n_neurons):
        for syn in conn.outgoing(SPEC, src):
            if part.lo <= syn.target < part.hi:
                expected.add((syn.source, syn.target, syn.delay, syn.weight))
    assert from_table == expected


def test_union_of_ranks_equals_single_rank():
    whole = conn.build_table(SPEC, conn.partition(SPEC.n_neurons, 1, 0))
    union = []
    for rank in range(4):
        part = conn.partition(SPEC.n_neurons, 4, rank)
        table = conn.build_table(SPEC, part)
        union.extend((s.source, s.target, s.delay, s.weight)
                     for s in table.iter_synapses())
    single = [(s.source, s.target, s.delay, s.weight)
              for s in whole.iter_synapses()]
    assert sorted(union) == sorted(single)
    assert len(union) == SPEC.n_neurons * SPEC.fan_out


def test_table_backends_agree_exactly():
    part = conn.partition(SPEC.n_neurons, 2, 0)
    ta = conn.build_table(SPEC, part, resolve_backend("numba"))
    tb = conn.build_table(SPEC, part, resolve_backend("numpy"))
    assert np.array_equal(ta.targets_local, tb.targets_local)
    assert np.array_equal(ta.weights, tb.weights)
    assert np.array_equal(ta.offsets, tb.offsets)


def test_table_independent_of_block_size():
    part = conn.partition(SPEC.n_neurons, 2, 1)
    base = conn.build_table(SPEC, part)
    odd = conn.build_table(SPEC, part, block_sources=7)
    assert np.array_equal(base.targets_local, odd.targets_local)
    assert np.array_equal(base.offsets, odd.offsets)


def test_buckets_sorted_and_consistent():
    part = conn.partition(SPEC.n_neurons, 2, 0)
    table = conn.build_table(SPEC, part)
    assert np.all(np.diff(table.offsets) >= 0)
    total = 0
    for src in range(SPEC.n_neurons):
        sizes = table.bucket_sizes(src)
        for d in range(SPEC.d_min, SPEC.d_max + 1):
            tgt, w = table.bucket(src, d)
            assert tgt.shape == w.shape
            assert sizes[d - SPEC.d_min] == tgt.size
            if tgt.size > 1:
                assert np.all(np.diff(tgt) > 0)  # ascending, distinct
            total += tgt.size
    assert total == table.n_synapses


def test_bucket_delay_bounds():
    part = conn.partition(SPEC.n_neurons, 1, 0)
    table = conn.build_table(SPEC, part)
    with pytest.raises(ConfigError):
        table.bucket(0, 0)
    with pytest.raises(ConfigError):
        table.bucket(0, 17)


def test_zero_fanout():
    spec = conn.NetworkSpec(n_neurons=8, fan_out=0, j_exc=0.4)
    assert conn.outgoing(spec, 3) == []
    table = conn.build_table(spec, conn.partition(8, 1, 0))
    assert table.n_synapses == 0


def test_table_dump_round_trip(tmp_path):
    part = conn.partition(SPEC.n_neurons, 3, 2)
    table = conn.build_table(SPEC, part)
    path = tmp_path / "table.syn"
    conn.write_table(path, table)
    back = conn.read_table(path)
    assert back.part == table.part
    assert back.n_neurons == table.n_neurons
    assert (back.d_min, back.d_max) == (table.d_min, table.d_max)
    assert np.array_equal(back.targets_local, table.targets_local)
    assert np.array_equal(back.weights, table.weights)
    assert np.array_equal(back.offsets, table.offsets)
    # and the dump itself is deterministic
    path2 = tmp_path / "table2.syn"
    conn.write_table(path2, table)
    assert path.read_bytes() == path2.read_bytes()


def test_table_dump_rejects_bad_magic(tmp_path):
    path = tmp_path / "bogus.syn"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(FramingError):
        conn.read_table(path)


def test_table_dump_rejects_truncation(tmp_path):
    part = conn.partition(SPEC.n_neurons, 1, 0)
    table = conn.build_table(SPEC, part)
    path = tmp_path / "table.syn"
    conn.write_table(path, table)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FramingError):
        conn.read_table(path)


def test_in_degree_totals():
    # every synapse lands somewhere: in-degrees over all ranks sum to n*k
    in_deg = np.zeros(SPEC.n_neurons, dtype=int)
    for rank in range(2):
        table = conn.build_table(SPEC, conn.partition(SPEC.n_neurons, 2, rank))
        for syn in table.iter_synapses():
            in_deg[syn.target] += 1
    assert in_deg.sum() == SPEC.n_neurons * SPEC.fan_out
    assert in_deg.min() > 0  # dense enough that nobody is orphaned
