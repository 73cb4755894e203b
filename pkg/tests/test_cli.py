"""CLI tests: artifacts on disk, exit codes, output schemas."""

import csv
import json
import socket
import threading

import pytest

from spikebench import cli, energy
from spikebench.engine import read_raster

RUN_ARGS = ["run", "--neurons", "64", "--duration-ms", "80",
            "--seed", "3", "--ranks", "2", "--raster"]


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(RUN_ARGS + ["--out", str(out)]) == 0
    assert (out / "report_rank0.json").exists()
    assert (out / "report_rank1.json").exists()
    summary = json.loads((out / "summary.json").read_text())
    per_rank = [json.loads((out / f"report_rank{r}.json").read_text())
                for r in (0, 1)]
    assert summary["total_spikes"] == sum(r["total_spikes"] for r in per_rank)
    assert summary["n_neurons"] == 64
    assert summary["n_ranks"] == 2
    raster = read_raster(out / "raster.aer")
    assert len(raster) == summary["total_spikes"]
    assert summary["total_spikes"] > 0
    text = capsys.readouterr().out
    assert "64 neurons x 2 ranks" in text


def test_run_is_deterministic_across_invocations(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(RUN_ARGS + ["--out", str(out1)]) == 0
    assert cli.main(RUN_ARGS + ["--out", str(out2)]) == 0
    assert (out1 / "raster.aer").read_bytes() == \
        (out2 / "raster.aer").read_bytes()
    s1 = json.loads((out1 / "summary.json").read_text())
    s2 = json.loads((out2 / "summary.json").read_text())
    assert s1["total_spikes"] == s2["total_spikes"]
    assert s1["external_events"] == s2["external_events"]


def test_run_without_raster_flag(tmp_path):
    out = tmp_path / "out"
    args = ["run", "--neurons", "32", "--duration-ms", "10",
            "--ranks", "1", "--out", str(out)]
    assert cli.main(args) == 0
    assert not (out / "raster.aer").exists()
    assert (out / "report_rank0.json").exists()


def test_run_socket_requires_rank_and_peers(tmp_path, capsys):
    args = ["run", "--neurons", "32", "--duration-ms", "5",
            "--transport", "socket", "--out", str(tmp_path)]
    assert cli.main(args) == 1
    assert "error:" in capsys.readouterr().err


def _free_ports(n):
    socks = [socket.socket() for _ in range(n)]
    try:
        for s in socks:
            s.bind(("127.0.0.1", 0))
        return [s.getsockname()[1] for s in socks]
    finally:
        for s in socks:
            s.close()


def test_run_socket_matches_inproc(tmp_path):
    peers_path = tmp_path / "peers.json"
    ports = _free_ports(2)
    peers_path.write_text(json.dumps([f"127.0.0.1:{p}" for p in ports]))
    sock_out = tmp_path / "sock"
    codes = [None, None]

    def body(rank):
        codes[rank] = cli.main(
            ["run", "--neurons", "48", "--duration-ms", "60", "--seed", "4",
             "--transport", "socket", "--ranks", "2", "--rank", str(rank),
             "--peers", str(peers_path), "--raster", "--out", str(sock_out)])

    threads = [threading.Thread(target=body, args=(r,)) for r in (0, 1)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert codes == [0, 0]

    inproc_out = tmp_path / "inproc"
    assert cli.main(["run", "--neurons", "48", "--duration-ms", "60",
                     "--seed", "4", "--ranks", "2", "--raster",
                     "--out", str(inproc_out)]) == 0
    over_sockets = sorted(
        (sp.step, sp.source)
        for r in (0, 1)
        for sp in read_raster(sock_out / f"raster_rank{r}.aer"))
    merged = [(sp.step, sp.source)
              for sp in read_raster(inproc_out / "raster.aer")]
    assert len(merged) > 0
    assert over_sockets == merged


def test_run_socket_peer_count_mismatch(tmp_path, capsys):
    peers_path = tmp_path / "peers.json"
    peers_path.write_text('["127.0.0.1:1", "127.0.0.1:2"]')
    args = ["run", "--neurons", "32", "--duration-ms", "5",
            "--transport", "socket", "--rank", "0", "--ranks", "3",
            "--peers", str(peers_path), "--out", str(tmp_path)]
    assert cli.main(args) == 1
    assert "disagrees" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# scale sweep


def test_scale_csv_schema_and_rows(tmp_path):
    out = tmp_path / "out"
    args = ["scale", "--sizes", "32,48", "--ranks", "1,2",
            "--duration-ms", "20", "--seed", "7", "--out", str(out)]
    assert cli.main(args) == 0
    lines = (out / "scale.csv").read_text().splitlines()
    assert lines[0] == ("neurons,ranks,repetition,seed,duration_ms,status,"
                        "backend,wall_clock_s,setup_s,computation_frac,"
                        "communication_frac,barrier_frac,other_frac,"
                        "real_time,real_time_threshold_s,total_spikes,"
                        "mean_rate_hz")
    rows = list(csv.DictReader((out / "scale.csv").open()))
    assert len(rows) == 4  # 2 sizes x 2 rank counts x 1 repetition
    for row in rows:
        assert row["status"] == "ok"
        assert row["real_time"] in ("true", "false")
        fr = sum(float(row[c]) for c in ("computation_frac",
                                         "communication_frac",
                                         "barrier_frac", "other_frac"))
        assert 0.9 < fr <= 1.0 + 1e-6
        assert float(row["real_time_threshold_s"]) == pytest.approx(0.02)
        int(row["total_spikes"])  # numeric
    assert [(r["neurons"], r["ranks"]) for r in rows] == \
        [("32", "1"), ("32", "2"), ("48", "1"), ("48", "2")]


def test_scale_failure_becomes_row(tmp_path, capsys):
    out = tmp_path / "out"
    args = ["scale", "--sizes", "0,32", "--ranks", "1",
            "--duration-ms", "5", "--out", str(out)]
    assert cli.main(args) == 1  # a cell failed
    rows = list(csv.DictReader((out / "scale.csv").open()))
    assert len(rows) == 2
    assert rows[0]["status"] == "error:ConfigError"
    assert rows[0]["wall_clock_s"] == ""  # no numbers for a failed cell
    assert rows[1]["status"] == "ok"
    assert "FAILED" in capsys.readouterr().err


def test_scale_repetitions_vary_seed(tmp_path):
    out = tmp_path / "out"
    args = ["scale", "--sizes", "32", "--ranks", "1", "--duration-ms", "5",
            "--seed", "11", "--repetitions", "2", "--out", str(out)]
    assert cli.main(args) == 0
    rows = list(csv.DictReader((out / "scale.csv").open()))
    assert [(r["repetition"], r["seed"]) for r in rows] == \
        [("0", "11"), ("1", "12")]


# ---------------------------------------------------------------------------
# energy analysis


def _pulse_csv(path):
    rows = ["t_seconds,watts"]
    rows += [f"{t},10.0" for t in range(0, 5)]
    rows += [f"{t},40.0" for t in range(5, 15)]
    rows += [f"{t},10.0" for t in range(15, 20)]
    path.write_text("\n".join(rows) + "\n")


def test_energy_subcommand_matches_library(tmp_path, capsys):
    trace_path = tmp_path / "trace.csv"
    _pulse_csv(trace_path)
    out = tmp_path / "out"
    args = ["energy", "--trace", str(trace_path), "--pause-window", "0:4",
            "--events-recurrent", "1000", "--events-external", "500",
            "--out", str(out)]
    assert cli.main(args) == 0
    got = json.loads((out / "energy.json").read_text())
    expected = energy.analyze_trace(
        energy.load_trace(trace_path), (0.0, 4.0),
        events_recurrent=1000, events_external=500)
    assert got["energy_j"] == pytest.approx(expected.energy_j)
    assert got["baseline_w"] == pytest.approx(10.0)
    assert (got["start_s"], got["end_s"]) == (5.0, 14.0)
    assert got["events_recurrent"] == 1000
    text = capsys.readouterr().out
    assert "energy to solution" in text
    assert "uJ per recurrent event" in text


def test_energy_subcommand_reads_summary(tmp_path):
    run_out = tmp_path / "run"
    assert cli.main(["run", "--neurons", "32", "--duration-ms", "20",
                     "--ranks", "1", "--out", str(run_out)]) == 0
    summary = json.loads((run_out / "summary.json").read_text())
    trace_path = tmp_path / "trace.csv"
    _pulse_csv(trace_path)
    out = tmp_path / "out"
    args = ["energy", "--trace", str(trace_path), "--pause-window", "0:4",
            "--summary", str(run_out / "summary.json"), "--out", str(out)]
    assert cli.main(args) == 0
    got = json.loads((out / "energy.json").read_text())
    assert got["events_recurrent"] == summary["recurrent_scheduled"]
    assert got["events_external"] == summary["external_events"]


def test_energy_explicit_run_window(tmp_path):
    trace_path = tmp_path / "trace.csv"
    _pulse_csv(trace_path)
    out = tmp_path / "out"
    args = ["energy", "--trace", str(trace_path), "--pause-window", "0:4",
            "--run-window", "5:14", "--out", str(out)]
    assert cli.main(args) == 0
    got = json.loads((out / "energy.json").read_text())
    assert got["j_per_event_recurrent"] is None


def test_energy_bad_trace_exits_1(tmp_path, capsys):
    trace_path = tmp_path / "trace.csv"
    trace_path.write_text("0,10\n")  # single sample
    args = ["energy", "--trace", str(trace_path), "--pause-window", "0:1",
            "--out", str(tmp_path / "out")]
    assert cli.main(args) == 1
    assert "error:" in capsys.readouterr().err


def test_energy_missing_trace_exits_1(tmp_path, capsys):
    args = ["energy", "--trace", str(tmp_path / "nope.csv"),
            "--pause-window", "0:1", "--out", str(tmp_path / "out")]
    assert cli.main(args) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# argument plumbing


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--neurons", "16", "--out", "x"])  # no duration
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["energy", "--trace", "t", "--pause-window", "nope",
                  "--out", "x"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_parse_helpers():
    assert cli._parse_window("1.5:2.5") == (1.5, 2.5)
    assert cli._parse_int_list("1,2,8") == [1, 2, 8]
    import argparse
    with pytest.raises(argparse.ArgumentTypeError):
        cli._parse_window("15")
    with pytest.raises(argparse.ArgumentTypeError):
        cli._parse_int_list("a,b")
    with pytest.raises(argparse.ArgumentTypeError):
        cli._parse_int_list(",")
