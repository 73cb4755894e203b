"""Energy-to-solution analysis of external power traces.

A power meter samples the machine under test at a modest rate while the
benchmark runs, bracketed by idle pauses.  The analysis is deliberately
simple and fully deterministic:

  baseline   mean power over a declared pause window (the idle draw);
  window     the run is located as the excursion above baseline plus
             k standard deviations of the pause noise (knee detection),
             unless explicit bounds are given;
  energy     trapezoidal integral of max(power - baseline, 0) over the
             window, i.e. the energy attributable to the run itself;
  per event  energy divided by the number of synaptic events, reported
             against two denominators: recurrent deliveries alone, and
             recurrent plus external drive events.

A sanity check flags book-keeping rows whose quoted duration x mean power
disagrees with their quoted energy by more than a tolerance (such rows do
appear in practice when figures are transcribed by hand).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from spikebench.errors import TraceError

ENERGY_FORMAT = "spikebench.energy/1"
DEFAULT_KNEE_SIGMA = 5.0
CONSISTENCY_TOL_J = 0.1


@dataclass(frozen=True)
class PowerTrace:
    """A sampled power time series: seconds and watts, same length."""

    t_s: np.ndarray
    p_w: np.ndarray
    path: str = ""

    @property
    def n_samples(self) -> int:
        return int(self.t_s.shape[0])

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t_s[0]), float(self.t_s[-1])


def load_trace(path) -> PowerTrace:
    """Read a two-column CSV (time_s, power_w).

    A single header row is allowed.  Rows must be exactly two cells, numeric
    and finite, with strictly increasing times; violations raise
    :class:`TraceError` naming the line.
    """
    t_vals: list[float] = []
    p_vals: list[float] = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise TraceError(
                    f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                t, p = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise TraceError(
                    f"{path}:{lineno}: non-numeric cell in {row!r}") from None
            if not (math.isfinite(t) and math.isfinite(p)):
                raise TraceError(f"{path}:{lineno}: non-finite sample")
            if p < 0:
                raise TraceError(f"{path}:{lineno}: negative power {p} W")
            if t_vals and t <= t_vals[-1]:
                raise TraceError(
                    f"{path}:{lineno}: time {t} not increasing "
                    f"(previous {t_vals[-1]})")
            t_vals.append(t)
            p_vals.append(p)
    if len(t_vals) < 2:
        raise TraceError(f"{path}: need at least 2 samples, got {len(t_vals)}")
    return PowerTrace(t_s=np.asarray(t_vals), p_w=np.asarray(p_vals),
                      path=str(path))


def _window_samples(trace: PowerTrace, window: tuple[float, float],
                    what: str) -> np.ndarray:
    a, b = window
    if not a < b:
        raise TraceError(f"{what} window [{a}, {b}] is empty")
    mask = (trace.t_s >= a) & (trace.t_s <= b)
    if not mask.any():
        raise TraceError(
            f"no samples inside {what} window [{a}, {b}] "
            f"(trace spans {trace.span})")
    return trace.p_w[mask]


def estimate_baseline(trace: PowerTrace,
                      pause_window: tuple[float, float]) -> float:
    """Mean power over the idle pause window."""
    return float(_window_samples(trace, pause_window, "pause").mean())


def baseline_sigma(trace: PowerTrace,
                   pause_window: tuple[float, float]) -> float:
    """Sample standard deviation of the pause window (needs >= 2 samples)."""
    p = _window_samples(trace, pause_window, "pause")
    if p.shape[0] < 2:
        raise TraceError("need at least 2 pause samples to estimate noise")
    return float(p.std(ddof=1))


def detect_run_window(trace: PowerTrace, baseline: float, sigma: float,
                      after: float | None = None,
                      k_sigma: float = DEFAULT_KNEE_SIGMA
                      ) -> tuple[float, float]:
    """Locate the run as the excursion above baseline + k_sigma * sigma.

    Args:
        after: ignore samples at or before this time (the pause itself),
            so the pause window cannot trigger its own detection.

    Returns:
        (first, last) sample times above the knee threshold.
    """
    thr = baseline + k_sigma * sigma
    mask = trace.p_w > thr
    if after is not None:
        mask &= trace.t_s > after
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise TraceError(
            f"no samples above knee threshold {thr:.3f} W; the trace never "
            f"leaves baseline")
    return float(trace.t_s[idx[0]]), float(trace.t_s[idx[-1]])


def energy_to_solution(trace: PowerTrace, baseline: float, start: float,
                       end: float) -> float:
    """Trapezoidal integral of max(p - baseline, 0) over [start, end], in J.

    The endpoints are interpolated onto the trace so a window that cuts a
    sampling interval is charged its exact sliver.  Summation uses
    math.fsum, so sample order cannot perturb the result.
    """
    lo, hi = trace.span
    if not start < end:
        raise TraceError(f"window [{start}, {end}] is empty")
    if start < lo or end > hi:
        raise TraceError(
            f"window [{start}, {end}] outside trace span [{lo}, {hi}]")
    inner = (trace.t_s > start) & (trace.t_s < end)
    t = np.concatenate(([start], trace.t_s[inner], [end]))
    p = np.concatenate(([np.interp(start, trace.t_s, trace.p_w)],
                        trace.p_w[inner],
                        [np.interp(end, trace.t_s, trace.p_w)]))
    excess = np.maximum(p - baseline, 0.0)
    dt = np.diff(t)
    return math.fsum(0.5 * (excess[:-1] + excess[1:]) * dt)


def joules_per_event(energy_j: float, n_events: int) -> float:
    """Energy per synaptic event, J/event."""
    if n_events <= 0:
        raise TraceError(f"need a positive event count, got {n_events}")
    return energy_j / n_events


def consistent_energy(time_s: float, power_w: float, energy_j: float,
                      tol_j: float = CONSISTENCY_TOL_J) -> bool:
    """Whether duration x mean power reproduces the quoted energy.

    Rows of published measurement tables occasionally fail this check
    (transcription slips); flagging them beats silently averaging them in.
    """
    return abs(time_s * power_w - energy_j) <= tol_j


@dataclass(frozen=True)
class EnergyReport:
    """Result of one trace analysis."""

    trace_path: str
    pause_window: tuple[float, float]
    baseline_w: float
    sigma_w: float
    start_s: float
    end_s: float
    energy_j: float
    events_recurrent: int
    events_external: int

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def mean_excess_w(self) -> float:
        return self.energy_j / self.duration_s if self.duration_s > 0 else 0.0

    @property
    def j_per_event_recurrent(self) -> float | None:
        if self.events_recurrent <= 0:
            return None
        return self.energy_j / self.events_recurrent

    @property
    def j_per_event_total(self) -> float | None:
        total = self.events_recurrent + self.events_external
        if total <= 0:
            return None
        return self.energy_j / total

    def to_dict(self) -> dict:
        jr, jt = self.j_per_event_recurrent, self.j_per_event_total
        return {
            "format": ENERGY_FORMAT,
            "trace_path": self.trace_path,
            "pause_window": list(self.pause_window),
            "baseline_w": self.baseline_w,
            "sigma_w": self.sigma_w,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "duration_s": self.duration_s,
            "energy_j": self.energy_j,
            "mean_excess_w": self.mean_excess_w,
            "events_recurrent": self.events_recurrent,
            "events_external": self.events_external,
            "j_per_event_recurrent": jr,
            "j_per_event_total": jt,
            "uj_per_event_recurrent": None if jr is None else jr * 1e6,
            "uj_per_event_total": None if jt is None else jt * 1e6,
        }


def analyze_trace(trace: PowerTrace, pause_window: tuple[float, float],
                  run_window: tuple[float, float] | None = None,
                  events_recurrent: int = 0, events_external: int = 0,
                  k_sigma: float = DEFAULT_KNEE_SIGMA) -> EnergyReport:
    """Full pipeline: baseline, window (given or detected), integral."""
    baseline = estimate_baseline(trace, pause_window)
    sigma = baseline_sigma(trace, pause_window)
    if run_window is None:
        run_window = detect_run_window(trace, baseline, sigma,
                                       after=pause_window[1], k_sigma=k_sigma)
    start, end = run_window
    energy = energy_to_solution(trace, baseline, start, end)
    return EnergyReport(trace_path=trace.path,
                        pause_window=(float(pause_window[0]),
                                      float(pause_window[1])),
                        baseline_w=baseline, sigma_w=sigma,
                        start_s=float(start), end_s=float(end),
                        energy_j=energy,
                        events_recurrent=int(events_recurrent),
                        events_external=int(events_external))


def write_energy_report(path, report: EnergyReport) -> None:
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
