"""Hot kernels, in two interchangeable flavours.

Each kernel exists twice: a jitted loop (numba) and a vectorized fallback
(pure numpy).  ``resolve_backend`` picks one, honouring the
``SPIKEBENCH_BACKEND`` environment variable ("numba" or "numpy").

The two flavours are required to be bit-identical, not merely close.  That
works because every transcendental factor (decay constants, exp(-lambda)) is
computed once by the caller in plain Python; the kernels themselves only
multiply, add, compare, and hash integers, all of which IEEE-754 pins down
exactly for elementwise evaluation.
"""

from __future__ import annotations

import math
import os

import numpy as np

from spikebench import rng
from spikebench.errors import ConfigError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TAG_EXT = np.uint64(rng.STREAM_EXTERNAL)
_TAG_TGT = np.uint64(rng.STREAM_TARGETS)
_TAG_DLY = np.uint64(rng.STREAM_DELAYS)
_INV53 = 2.0**-53

ENV_BACKEND = "SPIKEBENCH_BACKEND"


def _mix64_np(z: np.ndarray) -> np.ndarray:
    # uint64 array ops wrap modulo 2**64 silently, matching the scalar path
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


# ---------------------------------------------------------------------------
# numpy flavour


def _poisson_counts_np(seed: int, gid_lo: int, count: int, step: int,
                       exp_neg_lam: float) -> np.ndarray:
    out = np.zeros(count, dtype=np.int64)
    if exp_neg_lam >= 1.0 or count == 0:
        return out
    prefix = rng.hash_words(seed, rng.STREAM_EXTERNAL)
    gids = np.arange(gid_lo, gid_lo + count, dtype=np.uint64)
    h = _mix64_np(_mix64_np(np.uint64(prefix) ^ gids) ^ np.uint64(step))
    prod = np.ones(count, dtype=np.float64)
    idx = np.arange(count)
    draw = 0
    while idx.size:
        u = (_mix64_np(h[idx] ^ np.uint64(draw)) >> _S11).astype(np.float64) * _INV53
        prod[idx] *= u
        alive = prod[idx] > exp_neg_lam
        out[idx[alive]] += 1
        idx = idx[alive]
        draw += 1
    return out


def _sample_block_np(seed: int, src_lo: int, count: int, n_neurons: int,
                     fan_out: int, d_min: int, n_delays: int):
    m = n_neurons - 1
    targets = np.empty((count, fan_out), dtype=np.int64)
    delays = np.empty((count, fan_out), dtype=np.int64)
    if count == 0 or fan_out == 0:
        return targets, delays
    h1t = rng.hash_words(seed, rng.STREAM_TARGETS)
    h1d = rng.hash_words(seed, rng.STREAM_DELAYS)
    srcs = np.arange(src_lo, src_lo + count, dtype=np.uint64)
    h3t = _mix64_np(np.uint64(h1t) ^ srcs)
    h3d = _mix64_np(np.uint64(h1d) ^ srcs)
    taken = np.zeros((count, m), dtype=bool)
    rows = np.arange(count)
    for j in range(fan_out):
        dom = np.uint64(m - fan_out + j + 1)
        r = (_mix64_np(h3t ^ np.uint64(j)) % dom).astype(np.int64)
        pick = np.where(taken[rows, r], m - fan_out + j, r)
        taken[rows, pick] = True
        targets[:, j] = pick
        delays[:, j] = d_min + (_mix64_np(h3d ^ np.uint64(j)) %
                                np.uint64(n_delays)).astype(np.int64)
    # the sampling domain excludes the source itself; open the gap back up
    targets += targets >= srcs.astype(np.int64)[:, None]
    return targets, delays


def _apply_deliveries_np(v, refr_until, t_now, tgt, w):
    ok = refr_until[tgt] <= t_now
    np.add.at(v, tgt[ok], w[ok])


def _apply_external_np(v, refr_until, t_now, counts, j_ext):
    ok = refr_until <= t_now
    v[ok] += counts[ok] * j_ext


def _advance_and_fire_np(v, c, refr_until, t_end, e_m, e_c, p_sfa, v_rest,
                         v_theta, v_reset, alpha_c, tau_arp):
    v[:] = (v_rest + (v - v_rest) * e_m) - c * p_sfa
    c *= e_c
    fired = (v >= v_theta) & (t_end >= refr_until)
    v[fired] = v_reset[fired]
    c[fired] += alpha_c[fired]
    refr_until[fired] = t_end + tau_arp[fired]
    return np.nonzero(fired)[0]


# ---------------------------------------------------------------------------
# numba flavour

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - mirror only matters when installed
    _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @njit(cache=True, nogil=True, inline="always")
    def _mix64_nb(x):
        z = x + _GOLDEN
        z = (z ^ (z >> _S30)) * _MIX1
        z = (z ^ (z >> _S27)) * _MIX2
        return z ^ (z >> _S31)

    @njit(cache=True, nogil=True)
    def _poisson_counts_nb(seed, gid_lo, count, step, exp_neg_lam):
        out = np.zeros(count, dtype=np.int64)
        if exp_neg_lam >= 1.0:
            return out
        h2 = _mix64_nb(_mix64_nb(np.uint64(seed)) ^ _TAG_EXT)
        for i in range(count):
            h3 = _mix64_nb(h2 ^ np.uint64(gid_lo + i))
            h4 = _mix64_nb(h3 ^ np.uint64(step))
            k = 0
            prod = 1.0
            while True:
                u = (_mix64_nb(h4 ^ np.uint64(k)) >> _S11) * _INV53
                prod *= u
                if prod <= exp_neg_lam:
                    break
                k += 1
            out[i] = k
        return out

    @njit(cache=True, nogil=True)
    def _sample_block_nb(seed, src_lo, count, n_neurons, fan_out, d_min,
                         n_delays):
        m = n_neurons - 1
        targets = np.empty((count, fan_out), dtype=np.int64)
        delays = np.empty((count, fan_out), dtype=np.int64)
        scratch = np.zeros(m, dtype=np.bool_)
        h1 = _mix64_nb(np.uint64(seed))
        h2t = _mix64_nb(h1 ^ _TAG_TGT)
        h2d = _mix64_nb(h1 ^ _TAG_DLY)
        for b in range(count):
            src = src_lo + b
            h3t = _mix64_nb(h2t ^ np.uint64(src))
            h3d = _mix64_nb(h2d ^ np.uint64(src))
            for j in range(fan_out):
                dom = np.uint64(m - fan_out + j + 1)
                r = np.int64(_mix64_nb(h3t ^ np.uint64(j)) % dom)
                if scratch[r]:
                    r = m - fan_out + j
                scratch[r] = True
                targets[b, j] = r
                dd = np.int64(_mix64_nb(h3d ^ np.uint64(j)) %
                              np.uint64(n_delays))
                delays[b, j] = d_min + dd
            for j in range(fan_out):
                scratch[targets[b, j]] = False
            for j in range(fan_out):
                if targets[b, j] >= src:
                    targets[b, j] += 1
        return targets, delays

    @njit(cache=True, nogil=True)
    def _apply_deliveries_nb(v, refr_until, t_now, tgt, w):
        for i in range(tgt.shape[0]):
            j = tgt[i]
            if refr_until[j] <= t_now:
                v[j] += w[i]

    @njit(cache=True, nogil=True)
    def _apply_external_nb(v, refr_until, t_now, counts, j_ext):
        for i in range(v.shape[0]):
            if refr_until[i] <= t_now:
                v[i] += counts[i] * j_ext

    @njit(cache=True, nogil=True)
    def _advance_and_fire_nb(v, c, refr_until, t_end, e_m, e_c, p_sfa, v_rest,
                             v_theta, v_reset, alpha_c, tau_arp):
        fired = np.empty(v.shape[0], dtype=np.int64)
        nf = 0
        for i in range(v.shape[0]):
            vi = (v_rest[i] + (v[i] - v_rest[i]) * e_m[i]) - c[i] * p_sfa[i]
            ci = c[i] * e_c[i]
            if vi >= v_theta[i] and t_end >= refr_until[i]:
                vi = v_reset[i]
                ci = ci + alpha_c[i]
                refr_until[i] = t_end + tau_arp[i]
                fired[nf] = i
                nf += 1
            v[i] = vi
            c[i] = ci
        return fired[:nf]


class Backend:
    """Bundle of kernel implementations behind a common signature set."""

    def __init__(self, name, poisson_counts, sample_block, apply_deliveries,
                 apply_external, advance_and_fire):
        self.name = name
        self.poisson_counts = poisson_counts
        self.sample_block = sample_block
        self.apply_deliveries = apply_deliveries
        self.apply_external = apply_external
        self.advance_and_fire = advance_and_fire

    def __repr__(self):
        return f"Backend({self.name!r})"


_BACKENDS = {
    "numpy": Backend("numpy", _poisson_counts_np, _sample_block_np,
                     _apply_deliveries_np, _apply_external_np,
                     _advance_and_fire_np),
}
if _HAVE_NUMBA:
    _BACKENDS["numba"] = Backend("numba", _poisson_counts_nb,
                                 _sample_block_nb, _apply_deliveries_nb,
                                 _apply_external_nb, _advance_and_fire_nb)


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def resolve_backend(name: str | None = None) -> Backend:
    """Select a kernel backend.

    Args:
        name: explicit backend name, or None to consult the
            ``SPIKEBENCH_BACKEND`` environment variable and finally fall
            back to numba when available, else numpy.

    Returns:
        The selected :class:`Backend`.

    Raises:
        ConfigError: if the requested backend is unknown or unavailable.
    """
    if name is None:
        name = os.environ.get(ENV_BACKEND)
    if name is None:
        name = "numba" if _HAVE_NUMBA else "numpy"
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(
            f"unknown backend {name!r}; available: {available_backends()}"
        ) from None


def poisson_lambda(n_ext: int, rate_ext_hz: float, step_ms: float) -> float:
    """Expected external events per neuron per step."""
    return n_ext * rate_ext_hz * step_ms * 1e-3


def exp_neg(lam: float) -> float:
    """exp(-lam), the Knuth sampler's stopping threshold, computed once."""
    return math.exp(-lam)
