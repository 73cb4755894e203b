"""Single-neuron dynamics.

Leaky integrate-and-fire with spike-frequency adaptation (SFA), delta-current
synapses, and an absolute refractory period.  Between events the state obeys

    dv/dt = -(v - v_rest)/tau_m - g_c * c
    dc/dt = -c / tau_c

and both equations integrate in closed form over any gap, so the simulation
is event-driven on a fixed grid with no sub-step truncation error:

    c(dt) = c0 * exp(-dt/tau_c)
    v(dt) = v_rest + (v0 - v_rest) * exp(-dt/tau_m) - g_c * c0 * phi(dt)
    phi(dt) = exp(-dt/tau_m) * expm1(dt * r) / r,   r = 1/tau_m - 1/tau_c

with the r -> 0 limit phi = dt * exp(-dt/tau_m), evaluated through expm1 so
nearly equal time constants lose no precision.

A spike resets v, increments c by alpha_c, and opens a refractory window
during which arriving impulses are discarded (shunted), not queued.

These are the pure scalar reference operations.  The engine runs the same
arithmetic through array kernels (see :mod:`spikebench.backends`); both paths
share :func:`decay_factors`, so they agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from spikebench import rng
from spikebench.errors import ConfigError


@dataclass(frozen=True)
class NeuronParams:
    """Membrane and adaptation constants for one population.

    Times are in ms, potentials in mV, the adaptation conductance ``g_c`` in
    1/ms per unit of adaptation variable.  Inhibitory populations run with
    adaptation disabled (``alpha_c`` must be 0).
    """

    tau_m: float = 20.0
    v_rest: float = 0.0
    v_reset: float = 0.0
    v_theta: float = 20.0
    tau_arp: float = 2.0
    tau_c: float = 500.0
    alpha_c: float = 0.0
    g_c: float = 0.0
    is_excitatory: bool = True

    def __post_init__(self):
        if self.tau_m <= 0 or self.tau_c <= 0:
            raise ConfigError("membrane and adaptation time constants must be positive")
        if self.tau_arp < 0:
            raise ConfigError("refractory period must be non-negative")
        if self.v_theta <= self.v_rest:
            raise ConfigError("threshold must sit above resting potential")
        if self.v_reset >= self.v_theta:
            raise ConfigError("reset must sit below threshold")
        if self.alpha_c < 0 or self.g_c < 0:
            raise ConfigError("adaptation constants must be non-negative")
        if not self.is_excitatory and self.alpha_c != 0:
            raise ConfigError("inhibitory neurons run without adaptation (alpha_c = 0)")


@dataclass(frozen=True)
class NeuronState:
    """Value-like neuron state; operations return new instances."""

    v: float
    c: float = 0.0
    last_update: float = 0.0
    refractory_until: float = 0.0


@dataclass(frozen=True)
class ExternalDrive:
    """Homogeneous external Poisson bombardment.

    Each neuron receives ``n_ext`` independent source fibres firing at
    ``rate_ext`` Hz; every arrival kicks the membrane by ``j_ext`` mV.  Per
    1 ms step the aggregate arrival count is Poisson with mean
    ``n_ext * rate_ext / 1000``.
    """

    n_ext: int = 400
    rate_ext: float = 3.0
    j_ext: float = 0.0

    def __post_init__(self):
        if self.n_ext < 0:
            raise ConfigError("n_ext must be non-negative")
        if self.rate_ext < 0:
            raise ConfigError("rate_ext must be non-negative")
        if self.j_ext < 0:
            raise ConfigError("j_ext must be non-negative")

    def lam_per_step(self, step_ms: float = 1.0) -> float:
        return self.n_ext * self.rate_ext * step_ms * 1e-3


def decay_factors(params: NeuronParams, dt: float) -> tuple[float, float, float]:
    """Closed-form propagator factors over a gap of ``dt`` ms.

    Returns:
        (e_m, e_c, p_sfa) such that

            v' = (v_rest + (v - v_rest) * e_m) - c * p_sfa
            c' = c * e_c

    ``p_sfa`` folds g_c and the cross-term integral into one factor; it is
    computed with expm1 so tau_c ~ tau_m costs no precision.
    """
    e_m = math.exp(-dt / params.tau_m)
    e_c = math.exp(-dt / params.tau_c)
    r = 1.0 / params.tau_m - 1.0 / params.tau_c
    if r == 0.0:
        g = dt
    else:
        g = math.expm1(dt * r) / r
    return e_m, e_c, params.g_c * e_m * g


def evolve_to(state: NeuronState, params: NeuronParams, t: float) -> NeuronState:
    """Advance the free dynamics from ``state.last_update`` to ``t``.

    Exact for any gap width: two evaluations with gaps a then b equal one
    evaluation with gap a+b (up to float rounding).

    Raises:
        ValueError: if ``t`` lies in the past of the state.
    """
    dt = t - state.last_update
    if dt < 0:
        raise ValueError(f"cannot evolve backwards: {t} < {state.last_update}")
    if dt == 0:
        return state
    e_m, e_c, p_sfa = decay_factors(params, dt)
    v = (params.v_rest + (state.v - params.v_rest) * e_m) - state.c * p_sfa
    return replace(state, v=v, c=state.c * e_c, last_update=t)


def apply_impulse(state: NeuronState, weight: float) -> NeuronState:
    """Add a delta-current kick at the state's current time.

    Inside the refractory window the impulse is discarded, not deferred.
    """
    if state.last_update < state.refractory_until:
        return state
    return replace(state, v=state.v + weight)


def fire_check(state: NeuronState, params: NeuronParams) -> tuple[NeuronState, bool]:
    """Threshold test at the state's current time.

    A neuron still inside its refractory window cannot fire even if an
    impulse pushed v above threshold.  On a spike: v resets, the adaptation
    variable jumps by alpha_c, and a new refractory window opens.

    Returns:
        (new state, fired flag).
    """
    t = state.last_update
    if state.v >= params.v_theta and t >= state.refractory_until:
        return (
            replace(
                state,
                v=params.v_reset,
                c=state.c + params.alpha_c,
                refractory_until=t + params.tau_arp,
            ),
            True,
        )
    return state, False


def external_events(neuron_id: int, step: int, drive: ExternalDrive, seed: int,
                    step_ms: float = 1.0) -> int:
    """Number of external impulses hitting ``neuron_id`` during ``step``.

    Deterministic in (seed, neuron_id, step); independent of partitioning.
    """
    return rng.poisson(drive.lam_per_step(step_ms), seed, rng.STREAM_EXTERNAL,
                       neuron_id, step)
