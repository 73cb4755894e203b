"""Benchmark harness CLI.

Three subcommands:

  run     simulate one configuration and write per-rank JSON reports (and
          optionally the merged spike raster); inproc drives every rank as
          a thread, socket runs this process as one rank of a TCP mesh;
  scale   sweep network sizes x rank counts and append one row per cell to
          a fixed-schema CSV (failures become rows, the sweep continues);
  energy  analyze an external power-meter trace against a declared pause
          window and report energy-to-solution and energy per event.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from spikebench import defaults, energy
from spikebench.engine import (make_config, merge_reports, merged_raster,
                               run, run_threaded, write_raster, write_report)
from spikebench.errors import ConfigError, SpikebenchError
from spikebench.exchange import SocketTransport, load_peers

SCALE_CSV_COLUMNS = [
    "neurons", "ranks", "repetition", "seed", "duration_ms", "status",
    "backend", "wall_clock_s", "setup_s", "computation_frac",
    "communication_frac", "barrier_frac", "other_frac", "real_time",
    "real_time_threshold_s", "total_spikes", "mean_rate_hz",
]


def _parse_window(text: str) -> tuple[float, float]:
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(
            f"expected START:END, got {text!r}")
    try:
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected numeric START:END, got {text!r}") from None


def _parse_int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _bool_csv(flag: bool) -> str:
    return "true" if flag else "false"


def cmd_run(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = make_config(args.neurons, args.duration_ms, seed=args.seed,
                         record_raster=args.raster, backend=args.backend)
    if args.transport == "socket":
        if args.rank is None or args.peers is None:
            raise ConfigError("socket transport needs --rank and --peers")
        peers = load_peers(args.peers)
        if args.ranks != len(peers):
            raise ConfigError(
                f"--ranks {args.ranks} disagrees with peer file of "
                f"{len(peers)} entries")
        transport = SocketTransport(args.rank, peers)
        try:
            report = run(config, args.rank, transport)
        finally:
            transport.close()
        write_report(out / f"report_rank{args.rank}.json", report)
        if args.raster:
            write_raster(out / f"raster_rank{args.rank}.aer",
                         report.raster or [])
        print(f"rank {args.rank}/{len(peers)}: {report.total_spikes} spikes, "
              f"wall {report.wall_clock_s:.3f}s, "
              f"rate {report.mean_rate_hz:.3f} Hz")
        return 0

    reports = run_threaded(config, args.ranks)
    for rep in reports:
        write_report(out / f"report_rank{rep.rank}.json", rep)
    summary = merge_reports(reports)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    if args.raster:
        write_raster(out / "raster.aer", merged_raster(reports))
    print(f"{args.neurons} neurons x {args.ranks} ranks, "
          f"{args.duration_ms} ms: {summary['total_spikes']} spikes, "
          f"mean rate {summary['mean_rate_hz']:.3f} Hz, "
          f"wall {summary['wall_clock_s']:.3f}s "
          f"({'real time' if summary['real_time'] else 'slower than real time'})")
    return 0


def _scale_row(size: int, n_ranks: int, repetition: int, seed: int,
               args: argparse.Namespace) -> dict:
    row = {c: "" for c in SCALE_CSV_COLUMNS}
    row.update(neurons=size, ranks=n_ranks, repetition=repetition, seed=seed,
               duration_ms=args.duration_ms)
    try:
        config = make_config(size, args.duration_ms, seed=seed,
                             record_raster=False, record_step_profiles=False,
                             backend=args.backend)
        summary = merge_reports(run_threaded(config, n_ranks))
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        row["status"] = f"error:{type(exc).__name__}"
        print(f"  {size} x {n_ranks} rep {repetition}: FAILED {exc}",
              file=sys.stderr)
        return row
    row.update(
        status="ok",
        backend=summary["backend"],
        wall_clock_s=f"{summary['wall_clock_s']:.6f}",
        setup_s=f"{summary['setup_s']:.6f}",
        computation_frac=f"{summary['computation_frac']:.6f}",
        communication_frac=f"{summary['communication_frac']:.6f}",
        barrier_frac=f"{summary['barrier_frac']:.6f}",
        other_frac=f"{summary['other_frac']:.6f}",
        real_time=_bool_csv(summary["real_time"]),
        real_time_threshold_s=f"{summary['real_time_threshold_s']:.3f}",
        total_spikes=summary["total_spikes"],
        mean_rate_hz=f"{summary['mean_rate_hz']:.4f}",
    )
    print(f"  {size} x {n_ranks} rep {repetition}: "
          f"wall {summary['wall_clock_s']:.3f}s, "
          f"comm {summary['communication_frac']:.1%}")
    return row


def cmd_scale(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "scale.csv"
    rows = []
    for size in args.sizes:
        for n_ranks in args.ranks:
            for repetition in range(args.repetitions):
                rows.append(_scale_row(size, n_ranks, repetition,
                                       args.seed + repetition, args))
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=SCALE_CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    n_failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"wrote {path} ({len(rows)} rows, {n_failed} failed)")
    return 0 if n_failed == 0 else 1


def cmd_energy(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = energy.load_trace(args.trace)
    events_rec, events_ext = args.events_recurrent, args.events_external
    if args.summary is not None:
        with open(args.summary) as f:
            summary = json.load(f)
        if events_rec is None:
            events_rec = summary.get("recurrent_scheduled")
        if events_ext is None:
            events_ext = summary.get("external_events")
    report = energy.analyze_trace(
        trace, args.pause_window, run_window=args.run_window,
        events_recurrent=events_rec or 0, events_external=events_ext or 0,
        k_sigma=args.knee_sigma)
    energy.write_energy_report(out / "energy.json", report)
    print(f"baseline {report.baseline_w:.3f} W "
          f"(sigma {report.sigma_w:.3f} W), "
          f"run window [{report.start_s:.3f}, {report.end_s:.3f}] s")
    print(f"energy to solution: {report.energy_j:.3f} J over "
          f"{report.duration_s:.3f} s "
          f"(mean excess {report.mean_excess_w:.3f} W)")
    jr, jt = report.j_per_event_recurrent, report.j_per_event_total
    if jr is not None:
        print(f"  {jr * 1e6:.3f} uJ per recurrent event "
              f"({report.events_recurrent} events)")
    if jt is not None:
        print(f"  {jt * 1e6:.3f} uJ per event incl. external drive "
              f"({report.events_recurrent + report.events_external} events)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikebench",
        description="spiking-network simulation benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    p_run.add_argument("--neurons", type=int, required=True)
    p_run.add_argument("--duration-ms", type=int, required=True)
    p_run.add_argument("--seed", type=int, default=defaults.SEED)
    p_run.add_argument("--ranks", type=int, default=1,
                       help="number of ranks in the job")
    p_run.add_argument("--rank", type=int, default=None,
                       help="this process's rank (socket transport)")
    p_run.add_argument("--transport", choices=("inproc", "socket"),
                       default="inproc")
    p_run.add_argument("--peers", default=None,
                       help="JSON array of host:port, indexed by rank")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--raster", action="store_true",
                       help="also write the spike raster (AER binary)")
    p_run.add_argument("--backend", default=None,
                       choices=("numba", "numpy"),
                       help="kernel backend (default: env or numba)")
    p_run.set_defaults(func=cmd_run)

    p_scale = sub.add_parser("scale", help="sweep sizes x rank counts")
    p_scale.add_argument("--sizes", type=_parse_int_list, required=True,
                         help="comma-separated network sizes")
    p_scale.add_argument("--ranks", type=_parse_int_list, required=True,
                         help="comma-separated rank counts")
    p_scale.add_argument("--duration-ms", type=int, required=True)
    p_scale.add_argument("--seed", type=int, default=defaults.SEED)
    p_scale.add_argument("--repetitions", type=int, default=1)
    p_scale.add_argument("--out", required=True, help="output directory")
    p_scale.add_argument("--backend", default=None,
                         choices=("numba", "numpy"))
    p_scale.set_defaults(func=cmd_scale)

    p_energy = sub.add_parser("energy", help="analyze a power trace")
    p_energy.add_argument("--trace", required=True,
                          help="CSV power trace (time_s, power_w)")
    p_energy.add_argument("--pause-window", type=_parse_window, required=True,
                          metavar="START:END",
                          help="idle window used for the baseline")
    p_energy.add_argument("--run-window", type=_parse_window, default=None,
                          metavar="START:END",
                          help="run bounds (default: knee detection)")
    p_energy.add_argument("--events-recurrent", type=int, default=None)
    p_energy.add_argument("--events-external", type=int, default=None)
    p_energy.add_argument("--summary", default=None,
                          help="summary.json from a run, for event counts")
    p_energy.add_argument("--knee-sigma", type=float,
                          default=energy.DEFAULT_KNEE_SIGMA)
    p_energy.add_argument("--out", required=True, help="output directory")
    p_energy.set_defaults(func=cmd_energy)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpikebenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
