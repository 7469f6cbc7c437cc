import json

import pytest

from switchseq.arrays import load_eadf
from switchseq.cli import run

TINY = {
    "name": "tiny",
    "config": {"n_freq": 6, "freq_step_hz": 5e6, "n_rx": 4, "n_tx": 4, "n_snap": 2,
               "rx_dwell_us": 10.0, "tx_dwell_us": 40.0, "period_us": 160.0},
    "tx_array": {"uca": {"radius": 0.4, "directivity": 1}},
    "rx_array": {"uca": {"radius": 0.4, "directivity": 1}},
    "schedule": {"columns": [[2, 4, 1, 3], [3, 1, 4, 2]]},
    "paths": [{"tau_ns": 60.0, "phi_t_deg": 20.0, "phi_r_deg": -50.0, "nu_hz": 700.0, "gain_db": 20.0}],
    "noise_power": 1.0,
}


@pytest.fixture
def scen(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(TINY))
    return str(p)


def test_synth_array_and_check(tmp_path):
    out = tmp_path / "arr"
    assert run(["synth-array", "--out", str(out), "--antennas", "4", "--radius", "0.3"]) == 0
    assert load_eadf(out / "eadf.json").num_antennas == 4
    assert run(["synth-array", "--out", str(out), "--check"]) == 0
    (out / "eadf.json").write_text("{}")
    assert run(["synth-array", "--out", str(out), "--check"]) == 1


def test_check_wrong_command(tmp_path):
    out = tmp_path / "arr"
    run(["synth-array", "--out", str(out)])
    assert run(["spectrum", "--out", str(out), "--check"]) == 1


def test_simulate_then_estimate(tmp_path, scen, capsys):
    sim = tmp_path / "sim"
    assert run(["simulate", "--scenario", scen, "--out", str(sim), "--seed", "4"]) == 0
    est = tmp_path / "est"
    assert run(["estimate", "--scenario", scen, "--observation", str(sim / "observation.json"),
                "--out", str(est)]) == 0
    doc = json.loads((est / "estimate.json").read_text())
    assert len(doc["paths"]) == 1
    rows = (est / "paths.csv").read_text().splitlines()
    head, vals = rows[0].split(","), [float(v) for v in rows[1].split(",")]
    crlb_nu = vals[head.index("crlb_nu_hz")]
    assert abs(doc["paths"][0]["nu_hz"] - 700.0) < 5 * crlb_nu
    assert "1 path(s)" in capsys.readouterr().out


def test_estimate_rejects_mismatched_observation(tmp_path, scen):
    sim = tmp_path / "sim"
    run(["simulate", "--scenario", scen, "--out", str(sim)])
    assert run(["estimate", "--scenario", scen, "--set", "freq_step_hz=4e6",
                "--observation", str(sim / "observation.json"), "--out", str(tmp_path / "e")]) == 1


def test_optimize_and_ambiguity(tmp_path, scen):
    opt = tmp_path / "opt"
    assert run(["optimize-seq", "--scenario", scen, "--out", str(opt), "--set", "k_max=15",
                "--n-phi", "8", "--n-nu", "9"]) == 0
    summary = json.loads((opt / "nsl.json").read_text())
    assert summary["cost"] <= summary["cost_uniform"] * 1.5
    amb = tmp_path / "amb"
    assert run(["ambiguity-map", "--scenario", scen, "--schedule", str(opt / "schedule.json"),
                "--n-phi", "6", "--n-nu", "5", "--phi-t", "0", "--out", str(amb)]) == 0
    assert len((amb / "ambiguity.csv").read_text().splitlines()) == 1 + 6 * 5


def test_spectrum_and_montecarlo(tmp_path, scen):
    sp = tmp_path / "sp"
    assert run(["spectrum", "--scenario", scen, "--n-tau", "8", "--n-nu", "9", "--n-angle", "6",
                "--out", str(sp)]) == 0
    assert (sp / "peaks.csv").exists()
    mc = tmp_path / "mc"
    assert run(["montecarlo", "--scenario", scen, "--schedule", "scenario", "--snr-db", "20",
                "--trials", "2", "--out", str(mc)]) == 0
    assert (mc / "rmse_scenario.csv").read_text().count("\n") == 5
    assert run(["montecarlo", "--out", str(mc), "--check"]) == 0


@pytest.mark.parametrize("argv", [
    ["simulate", "--scenario", "/nonexistent/s.json"],
    ["simulate", "--scenario", "preset:snapshot1", "--set", "n_snap=0"],
    ["simulate", "--scenario", "preset:snapshot1", "--set", "bogus=1"],
    ["simulate", "--scenario", "preset:snapshot1", "--jobs", "0"],
    ["simulate", "--scenario", "preset:nope"],
])
def test_input_errors_exit_1(tmp_path, argv, capsys):
    assert run(argv + ["--out", str(tmp_path / "r")]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_file_named(tmp_path, capsys):
    run(["simulate", "--scenario", str(tmp_path / "gone.json"), "--out", str(tmp_path / "r")])
    assert "gone.json" in capsys.readouterr().err


def test_zero_gain_scaling_exits_2(tmp_path):
    doc = dict(TINY, paths=[dict(TINY["paths"][0], gain_db=float("-inf"))])
    p = tmp_path / "z.json"
    p.write_text(json.dumps(doc))
    assert run(["simulate", "--scenario", str(p), "--snr-db", "10", "--out", str(tmp_path / "r")]) == 2
