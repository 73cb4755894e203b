"""Counter-based deterministic random streams.

Every random quantity in a simulation is a pure function of the global seed
plus a handful of integer coordinates (stream tag, entity id, step, draw
index).  Nothing is stateful, so results cannot depend on rank count, thread
scheduling, or call order.  The mixer is the splitmix64 finalizer chained
over the coordinate words; uniform doubles take the top 53 bits.

This module is the scalar reference path, written with plain Python integers
(masked to 64 bits).  The vectorized and jitted equivalents live in
:mod:`spikebench.backends` and are tested for bit-identical output.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1

# splitmix64 finalizer constants
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream tags. Arbitrary distinct constants; changing one changes every
# realization drawn from that stream, so they are frozen.
STREAM_EXTERNAL = 0x45585431
STREAM_TARGETS = 0x54475431
STREAM_DELAYS = 0x444C5931

_INV_2_53 = 2.0**-53


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit word.

    Args:
        x: input word; only the low 64 bits are used.

    Returns:
        Mixed 64-bit word as a non-negative Python int.
    """
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def hash_words(seed: int, *words: int) -> int:
    """Chain the mixer over ``seed`` and the coordinate ``words``."""
    h = mix64(seed & MASK64)
    for w in words:
        h = mix64(h ^ (w & MASK64))
    return h


def uniform01(h: int) -> float:
    """Map a mixed word to a double in [0, 1) using its top 53 bits."""
    return (h >> 11) * _INV_2_53


def uniform_int(h: int, n: int) -> int:
    """Map a mixed word to an integer in [0, n).

    Uses plain modulo; for the domain sizes in this package (< 2**32) the
    bias is far below anything observable.
    """
    if n <= 0:
        raise ValueError(f"domain size must be positive, got {n}")
    return h % n


def poisson(lam: float, seed: int, tag: int, entity: int, step: int) -> int:
    """Draw a Poisson count from the stream (seed, tag, entity, step).

    Knuth's product method: multiply uniforms until the product drops below
    exp(-lam).  Draw ``i`` consumes counter word ``i``, so the sequence is
    reproducible regardless of how many draws earlier steps consumed.

    Args:
        lam: expected count per interval, >= 0.
        seed: global seed.
        tag: stream tag, e.g. ``STREAM_EXTERNAL``.
        entity: entity id (global neuron id).
        step: time step index.

    Returns:
        Sampled count.
    """
    if lam < 0:
        raise ValueError(f"rate must be non-negative, got {lam}")
    if lam == 0:
        return 0
    limit = math.exp(-lam)
    k = 0
    prod = 1.0
    prefix = hash_words(seed, tag, entity, step)
    while True:
        prod *= uniform01(mix64(prefix ^ k))
        if prod <= limit:
            return k
        k += 1
