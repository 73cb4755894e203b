"""Distributed simulation engine and per-phase profiling.

One rank owns a contiguous range of neurons as dense state arrays.  Each
1 ms step runs four phases, timed separately with ``perf_counter_ns``:

  computation    drain due deliveries and scatter them into the membrane
                 (refractory neurons shunt arrivals), add the step's external
                 Poisson drive, advance every neuron by the closed-form
                 propagator, threshold, and record local spikes;
  communication  exchange the step's spikes with all ranks (two-phase
                 all-to-all) and schedule the received spikes into the local
                 delay queue via regenerated connectivity buckets;
  barrier        the step-end rendezvous;
  other          per-step bookkeeping, plus at report level whatever the
                 loop spent outside the three timed phases.

Determinism: deliveries apply in ascending (source, emission step) order,
external drive is keyed by (seed, neuron, step), and connectivity is a pure
function of (seed, source), so a run's raster is bit-identical for any rank
count and either kernel backend.

Floating-point note: a step's external arrivals fold into one compound
impulse of count * j_ext (a single add per neuron), recurrent impulses apply
one add per synapse in canonical order.

Wall clock covers the step loop only; table construction and state
allocation are reported separately as ``setup_s``.  A run is "real time"
when wall clock <= simulated seconds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from spikebench import defaults, model
from spikebench.backends import exp_neg, resolve_backend
from spikebench.connectivity import (NetworkSpec, SynapseTable, build_table,
                                     partition)
from spikebench.errors import ConfigError, FramingError, ProtocolError
from spikebench.exchange import (AxonalSpike, DelayQueue, Transport,
                                 all_to_all, decode, decode_arrays, encode,
                                 encode_arrays)
from spikebench.model import ExternalDrive, NeuronParams

REPORT_FORMAT = "spikebench.report/1"
RASTER_MAGIC = b"AER1"


@dataclass(frozen=True)
class StepProfile:
    """Per-step phase timings, seconds."""

    computation_s: float
    communication_s: float
    barrier_s: float
    other_s: float
    wall_s: float

    @property
    def phase_sum_s(self) -> float:
        return (self.computation_s + self.communication_s + self.barrier_s
                + self.other_s)


@dataclass(frozen=True)
class SimConfig:
    """Everything a rank needs to run; identical on every rank."""

    spec: NetworkSpec
    drive: ExternalDrive
    exc_params: NeuronParams
    inh_params: NeuronParams
    duration_ms: int
    record_raster: bool = True
    record_step_profiles: bool = True
    backend: str | None = None

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ConfigError("duration must be non-negative")
        if not self.exc_params.is_excitatory:
            raise ConfigError("exc_params must be flagged excitatory")
        if self.inh_params.is_excitatory:
            raise ConfigError("inh_params must be flagged inhibitory")


def make_config(n_neurons: int, duration_ms: int, seed: int = defaults.SEED,
                fan_out: int | None = None, j_exc: float = defaults.J_EXC,
                j_ext: float = defaults.J_EXT,
                record_raster: bool = True, record_step_profiles: bool = True,
                backend: str | None = None) -> SimConfig:
    """Build a config at the calibrated default operating point."""
    if fan_out is None:
        fan_out = min(defaults.FAN_OUT, n_neurons - 1)
    spec = NetworkSpec(n_neurons=n_neurons, fan_out=fan_out, j_exc=j_exc,
                       seed=seed)
    drive = ExternalDrive(n_ext=defaults.N_EXT, rate_ext=defaults.RATE_EXT,
                          j_ext=j_ext)
    exc = NeuronParams(tau_m=defaults.TAU_M, v_rest=defaults.V_REST,
                       v_reset=defaults.V_RESET, v_theta=defaults.V_THETA,
                       tau_arp=defaults.TAU_ARP, tau_c=defaults.TAU_C,
                       alpha_c=defaults.ALPHA_C, g_c=defaults.G_C,
                       is_excitatory=True)
    inh = NeuronParams(tau_m=defaults.TAU_M, v_rest=defaults.V_REST,
                       v_reset=defaults.V_RESET, v_theta=defaults.V_THETA,
                       tau_arp=defaults.TAU_ARP, tau_c=defaults.TAU_C,
                       alpha_c=0.0, g_c=0.0, is_excitatory=False)
    return SimConfig(spec=spec, drive=drive, exc_params=exc, inh_params=inh,
                     duration_ms=duration_ms, record_raster=record_raster,
                     record_step_profiles=record_step_profiles,
                     backend=backend)


@dataclass
class RunReport:
    """One rank's outcome: counters, phase timings, optional raster."""

    rank: int
    n_ranks: int
    n_neurons: int
    lo: int
    hi: int
    duration_ms: int
    backend: str
    setup_s: float
    wall_clock_s: float
    computation_s: float
    communication_s: float
    barrier_s: float
    other_s: float
    total_spikes: int
    external_events: int
    recurrent_scheduled: int
    recurrent_delivered: int
    queue_pending_spikes: int
    mean_rate_hz: float
    real_time: bool
    raster: list[AxonalSpike] | None = None
    step_profiles: list[StepProfile] | None = field(default=None, repr=False)

    @property
    def n_local(self) -> int:
        return self.hi - self.lo

    def phase_fractions(self) -> dict[str, float]:
        """Phase shares of this rank's wall clock (sums to 1)."""
        w = self.wall_clock_s
        if w <= 0:
            return {"computation": 0.0, "communication": 0.0,
                    "barrier": 0.0, "other": 0.0}
        return {"computation": self.computation_s / w,
                "communication": self.communication_s / w,
                "barrier": self.barrier_s / w,
                "other": self.other_s / w}

    def to_dict(self) -> dict:
        d = {
            "format": REPORT_FORMAT,
            "rank": self.rank, "n_ranks": self.n_ranks,
            "n_neurons": self.n_neurons, "lo": self.lo, "hi": self.hi,
            "duration_ms": self.duration_ms, "backend": self.backend,
            "setup_s": self.setup_s, "wall_clock_s": self.wall_clock_s,
            "computation_s": self.computation_s,
            "communication_s": self.communication_s,
            "barrier_s": self.barrier_s, "other_s": self.other_s,
            "total_spikes": self.total_spikes,
            "external_events": self.external_events,
            "recurrent_scheduled": self.recurrent_scheduled,
            "recurrent_delivered": self.recurrent_delivered,
            "queue_pending_spikes": self.queue_pending_spikes,
            "mean_rate_hz": self.mean_rate_hz, "real_time": self.real_time,
            "raster": (None if self.raster is None
                       else [[sp.source, sp.step] for sp in self.raster]),
            "step_profiles": (None if self.step_profiles is None else
                              [[p.computation_s, p.communication_s,
                                p.barrier_s, p.other_s, p.wall_s]
                               for p in self.step_profiles]),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        if d.get("format") != REPORT_FORMAT:
            raise ConfigError(f"not a run report: format={d.get('format')!r}")
        raster = d.get("raster")
        profiles = d.get("step_profiles")
        return cls(
            rank=d["rank"], n_ranks=d["n_ranks"], n_neurons=d["n_neurons"],
            lo=d["lo"], hi=d["hi"], duration_ms=d["duration_ms"],
            backend=d["backend"], setup_s=d["setup_s"],
            wall_clock_s=d["wall_clock_s"],
            computation_s=d["computation_s"],
            communication_s=d["communication_s"],
            barrier_s=d["barrier_s"], other_s=d["other_s"],
            total_spikes=d["total_spikes"],
            external_events=d["external_events"],
            recurrent_scheduled=d["recurrent_scheduled"],
            recurrent_delivered=d["recurrent_delivered"],
            queue_pending_spikes=d["queue_pending_spikes"],
            mean_rate_hz=d["mean_rate_hz"], real_time=d["real_time"],
            raster=(None if raster is None
                    else [AxonalSpike(s, t) for s, t in raster]),
            step_profiles=(None if profiles is None
                           else [StepProfile(*p) for p in profiles]),
        )


def _param_arrays(config: SimConfig, lo: int, hi: int):
    """Per-neuron parameter arrays for the kernel signatures."""
    spec = config.spec
    is_exc = np.arange(lo, hi) < spec.n_excitatory
    ep, ip = config.exc_params, config.inh_params
    fe = model.decay_factors(ep, defaults.STEP_MS)
    fi = model.decay_factors(ip, defaults.STEP_MS)

    def mix(a: float, b: float) -> np.ndarray:
        return np.where(is_exc, a, b)

    return {
        "e_m": mix(fe[0], fi[0]),
        "e_c": mix(fe[1], fi[1]),
        "p_sfa": mix(fe[2], fi[2]),
        "v_rest": mix(ep.v_rest, ip.v_rest),
        "v_theta": mix(ep.v_theta, ip.v_theta),
        "v_reset": mix(ep.v_reset, ip.v_reset),
        "alpha_c": mix(ep.alpha_c, ip.alpha_c),
        "tau_arp": mix(ep.tau_arp, ip.tau_arp),
    }


def run(config: SimConfig, rank: int = 0,
        transport: Transport | None = None) -> RunReport:
    """Simulate this rank's slice of the network.

    Args:
        config: shared simulation configuration.
        rank: this rank's index; 0 for a single-rank run.
        transport: fabric connecting all ranks, or None when running alone.

    Returns:
        This rank's :class:`RunReport`.
    """
    n_ranks = 1 if transport is None else transport.n_ranks
    if transport is not None and transport.rank != rank:
        raise ConfigError(
            f"transport is bound to rank {transport.rank}, not {rank}")
    spec, drive = config.spec, config.drive
    backend = resolve_backend(config.backend)

    setup0 = time.perf_counter_ns()
    part = partition(spec.n_neurons, n_ranks, rank)
    table = build_table(spec, part, backend)
    pa = _param_arrays(config, part.lo, part.hi)
    n_local = part.n_local
    v = pa["v_rest"].astype(np.float64).copy()
    c = np.zeros(n_local, dtype=np.float64)
    refr = np.zeros(n_local, dtype=np.float64)
    n_d = spec.n_delays
    # per source: which delay buckets exist here, and total owned synapses
    sizes = np.diff(table.offsets).reshape(spec.n_neurons, n_d)
    owned_per_source = sizes.sum(axis=1)
    nonempty_delays = [np.nonzero(row)[0] for row in sizes]
    lam = drive.lam_per_step(defaults.STEP_MS)
    enl = exp_neg(lam)
    dq = DelayQueue(spec.d_min, spec.d_max)
    setup_s = (time.perf_counter_ns() - setup0) * 1e-9

    total_spikes = 0
    external_events = 0
    recurrent_scheduled = 0
    recurrent_delivered = 0
    raster_chunks: list[tuple[int, np.ndarray]] = []
    profiles: list[StepProfile] = [] if config.record_step_profiles else None
    comp_ns = comm_ns = barr_ns = 0
    n_steps = config.duration_ms
    d_min = spec.d_min

    wall0 = time.perf_counter_ns()
    for s in range(n_steps):
        t0 = time.perf_counter_ns()
        due = dq.drain(s)
        if due:
            t_parts, w_parts = [], []
            for sp in due:
                tv, wv = table.bucket(sp.source, s - sp.step)
                t_parts.append(tv)
                w_parts.append(wv)
            tgt = np.concatenate(t_parts)
            w = np.concatenate(w_parts)
            backend.apply_deliveries(v, refr, float(s), tgt, w)
            recurrent_delivered += int(tgt.size)
        counts = backend.poisson_counts(spec.seed, part.lo, n_local, s, enl)
        external_events += int(counts.sum())
        backend.apply_external(v, refr, float(s), counts, drive.j_ext)
        fired = backend.advance_and_fire(
            v, c, refr, float(s + 1), pa["e_m"], pa["e_c"], pa["p_sfa"],
            pa["v_rest"], pa["v_theta"], pa["v_reset"], pa["alpha_c"],
            pa["tau_arp"])
        total_spikes += int(fired.size)
        fired_gids = fired + part.lo
        if config.record_raster and fired.size:
            raster_chunks.append((s, fired_gids))
        payload = encode_arrays(fired_gids, s)
        t1 = time.perf_counter_ns()

        if n_ranks > 1:
            received = all_to_all(transport, s, [payload] * n_ranks)
        else:
            received = [payload]
        for body in received:  # sender order == ascending source ranges
            if not body:
                continue
            sources, steps = decode_arrays(body)
            if steps.size and (steps != s).any():
                raise ProtocolError(f"received spikes not from step {s}")
            for src in sources.tolist():
                if owned_per_source[src] == 0:
                    continue
                for di in nonempty_delays[src]:
                    dq.schedule(AxonalSpike(src, s), d_min + int(di))
                recurrent_scheduled += int(owned_per_source[src])
        t2 = time.perf_counter_ns()

        if n_ranks > 1:
            transport.barrier()
        t3 = time.perf_counter_ns()
        comp_ns += t1 - t0
        comm_ns += t2 - t1
        barr_ns += t3 - t2
        if profiles is not None:
            t4 = time.perf_counter_ns()
            profiles.append(StepProfile(
                computation_s=(t1 - t0) * 1e-9,
                communication_s=(t2 - t1) * 1e-9,
                barrier_s=(t3 - t2) * 1e-9,
                other_s=(t4 - t3) * 1e-9,
                wall_s=(t4 - t0) * 1e-9))
    wall_clock_s = (time.perf_counter_ns() - wall0) * 1e-9

    raster = None
    if config.record_raster:
        raster = [AxonalSpike(int(g), s) for s, gids in raster_chunks
                  for g in gids.tolist()]
    duration_s = config.duration_ms * 1e-3
    mean_rate = (total_spikes / (n_local * duration_s)
                 if n_local and duration_s else 0.0)
    computation_s = comp_ns * 1e-9
    communication_s = comm_ns * 1e-9
    barrier_s = barr_ns * 1e-9
    other_s = max(wall_clock_s - computation_s - communication_s - barrier_s,
                  0.0)
    return RunReport(
        rank=rank, n_ranks=n_ranks, n_neurons=spec.n_neurons,
        lo=part.lo, hi=part.hi, duration_ms=config.duration_ms,
        backend=backend.name, setup_s=setup_s, wall_clock_s=wall_clock_s,
        computation_s=computation_s, communication_s=communication_s,
        barrier_s=barrier_s, other_s=other_s, total_spikes=total_spikes,
        external_events=external_events,
        recurrent_scheduled=recurrent_scheduled,
        recurrent_delivered=recurrent_delivered,
        queue_pending_spikes=len(dq), mean_rate_hz=mean_rate,
        real_time=wall_clock_s <= duration_s, raster=raster,
        step_profiles=profiles)


def run_threaded(config: SimConfig, n_ranks: int,
                 timeout_s: float | None = None) -> list[RunReport]:
    """Drive all ranks as threads over the in-process fabric.

    Raises the lowest-rank failure if any rank dies; surviving ranks are
    unblocked by breaking the barrier.
    """
    import threading

    from spikebench.exchange import DEFAULT_TIMEOUT_S, InProcFabric

    if n_ranks == 1:
        return [run(config, 0, None)]
    fabric = InProcFabric(
        n_ranks, DEFAULT_TIMEOUT_S if timeout_s is None else timeout_s)
    reports: list[RunReport | None] = [None] * n_ranks
    failures: list[tuple[int, BaseException]] = []

    def worker(r: int) -> None:
        try:
            reports[r] = run(config, r, fabric.endpoint(r))
        except BaseException as exc:  # noqa: BLE001 - propagated to caller
            failures.append((r, exc))
            fabric.barrier.abort()

    threads = [threading.Thread(target=worker, args=(r,), name=f"rank-{r}")
               for r in range(n_ranks)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        failures.sort(key=lambda f: f[0])
        rank, exc = failures[0]
        raise exc
    return reports  # type: ignore[return-value]


def merged_raster(reports: list[RunReport]) -> list[AxonalSpike]:
    """All ranks' spikes in (step, source) order."""
    out: list[AxonalSpike] = []
    for rep in reports:
        if rep.raster:
            out.extend(rep.raster)
    out.sort(key=lambda sp: (sp.step, sp.source))
    return out


def profile_summary(reports: list[RunReport]) -> dict:
    """Cross-rank phase summary: slowest wall clock, mean phase fractions."""
    if not reports:
        raise ConfigError("no reports to summarize")
    n = len(reports)
    fr = [r.phase_fractions() for r in reports]
    wall = max(r.wall_clock_s for r in reports)
    duration_s = reports[0].duration_ms * 1e-3
    return {
        "n_ranks": reports[0].n_ranks,
        "wall_clock_s": wall,
        "setup_s": max(r.setup_s for r in reports),
        "computation_frac": sum(f["computation"] for f in fr) / n,
        "communication_frac": sum(f["communication"] for f in fr) / n,
        "barrier_frac": sum(f["barrier"] for f in fr) / n,
        "other_frac": sum(f["other"] for f in fr) / n,
        "real_time": wall <= duration_s,
    }


def merge_reports(reports: list[RunReport]) -> dict:
    """Combine per-rank reports into one global summary dict."""
    if not reports:
        raise ConfigError("no reports to merge")
    ranks = sorted(r.rank for r in reports)
    n_ranks = reports[0].n_ranks
    if ranks != list(range(n_ranks)):
        raise ConfigError(f"expected ranks 0..{n_ranks - 1}, got {ranks}")
    for r in reports:
        if (r.n_neurons, r.duration_ms, r.n_ranks) != (
                reports[0].n_neurons, reports[0].duration_ms, n_ranks):
            raise ConfigError("reports disagree on run shape")
    total_spikes = sum(r.total_spikes for r in reports)
    duration_s = reports[0].duration_ms * 1e-3
    n_neurons = reports[0].n_neurons
    summary = {
        "format": "spikebench.summary/1",
        "n_neurons": n_neurons,
        "n_ranks": n_ranks,
        "duration_ms": reports[0].duration_ms,
        "backend": reports[0].backend,
        "total_spikes": total_spikes,
        "external_events": sum(r.external_events for r in reports),
        "recurrent_scheduled": sum(r.recurrent_scheduled for r in reports),
        "recurrent_delivered": sum(r.recurrent_delivered for r in reports),
        "mean_rate_hz": (total_spikes / (n_neurons * duration_s)
                         if duration_s and n_neurons else 0.0),
        "real_time_threshold_s": duration_s,
    }
    summary.update(profile_summary(reports))
    return summary


# ---------------------------------------------------------------------------
# artifact io


def write_raster(path, spikes: list[AxonalSpike]) -> None:
    """Dump spikes as the 12-byte wire records behind an "AER1" magic."""
    with open(path, "wb") as f:
        f.write(RASTER_MAGIC)
        f.write(encode(spikes))


def read_raster(path) -> list[AxonalSpike]:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != RASTER_MAGIC:
        raise FramingError(f"bad raster magic {blob[:4]!r}")
    return decode(blob[4:])


def write_report(path, report: RunReport) -> None:
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def read_report(path) -> RunReport:
    with open(path) as f:
        return RunReport.from_dict(json.load(f))
