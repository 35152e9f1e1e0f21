import csv
import os

import numpy as np
import pytest

from siridelay import cli
from siridelay.cli import (EXIT_CONFIG, EXIT_OK, CSV_HEADER, RunSummary, SweepRow, main,
                           read_summary, run_scenario, sweep, threshold_brackets, verify_incidence)
from siridelay.config import ConfigError, config_from_mapping, load_config, load_preset, preset_path

FIG1_KEYS = {
    "Lambda": "20", "mu": "0.4", "gamma": "0.7", "c": "0.1", "beta": "0.02", "delta": "0.006",
    "kernel_family": "truncated-exponential", "kernel_h": "2", "incidence_family": "bilinear",
    "history": "fig1",
}


def write_config(path, values):
    path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()))
    return str(path)


def test_presets_resolve():
    fig1 = load_preset("fig1")
    assert fig1.params.beta == 0.02
    assert fig1.n_nodes == 201
    assert fig1.history_tag == "fig1"
    assert load_preset("fig2").params.Lambda == 18


def test_preset_dir_from_environment(tmp_path, monkeypatch):
    write_config(tmp_path / "mine.conf", FIG1_KEYS)
    monkeypatch.setenv("SIRI_SCENARIO_DIR", str(tmp_path))
    assert preset_path("mine") == str(tmp_path / "mine.conf")
    with pytest.raises(ConfigError, match="Unknown preset"):
        load_preset("nothing-here")


def test_defaults_apply():
    config = config_from_mapping(FIG1_KEYS)
    assert (config.t_end, config.step, config.output) == (200.0, 0.01, "out")
    assert config.check_certificates and config.check_invariants
    assert config.incidence_saturation == 0


@pytest.mark.parametrize("changes, message", [
    ({"mu": "0"}, "mu"),
    ({"colour": "blue"}, "Unknown keys"),
    ({"beta": None}, "Missing required"),
    ({"kernel_family": "gamma"}, "kernel_family"),
    ({"kernel_family": "point-mass"}, "point-mass"),
    ({"step": "0.03"}, "divide"),
    ({"history": "fig3"}, "Unknown history"),
    ({"history": "sinusoidal"}, "history_s"),
    ({"check_invariants": "maybe"}, "check_invariants"),
])
def test_config_errors(changes, message):
    values = {**FIG1_KEYS, **changes}
    values = {k: v for k, v in values.items() if v is not None}
    with pytest.raises(ConfigError, match=message):
        config_from_mapping(values)


def test_sinusoidal_history():
    config = config_from_mapping({**FIG1_KEYS, "history": "sinusoidal",
                                  "history_s": "cos, 1, 5, 200", "history_i": "sin,10,1,30",
                                  "history_r": "sin,0,1,70"})
    history = config.history()
    np.testing.assert_allclose(history(-1.0), [np.cos(-5) + 200, 10 * np.sin(-1) + 30, 70])


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.conf"))


def test_mu_zero_exits_with_config_error(tmp_path):
    path = write_config(tmp_path / "bad.conf", {**FIG1_KEYS, "mu": "0"})
    assert main(["run", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


@pytest.mark.parametrize("overrides", [
    ["--step", "0"],
    ["--step", "-0.01"],
    ["--step", "nan"],
    ["--t-end", "0"],
    ["--t-end", "-5"],
])
def test_bad_run_overrides_exit_with_config_error(tmp_path, overrides):
    args = ["run", "--preset", "fig1", "--t-end", "1", "--out", str(tmp_path)] + overrides
    assert main(args) == EXIT_CONFIG
    assert not os.listdir(tmp_path)


def test_negative_sinusoidal_history_is_config_error(tmp_path):
    values = {**FIG1_KEYS, "history": "sinusoidal", "history_s": "sin,1,1,150",
              "history_i": "sin,30,1,20", "history_r": "sin,0,1,0"}
    with pytest.raises(ConfigError, match="non-negative"):
        config_from_mapping(values)
    path = write_config(tmp_path / "dips.conf", values)
    assert main(["run", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG


@pytest.mark.parametrize("changes", [{"step": 0.0}, {"step": -0.01}, {"t_end": 0.0}])
def test_replace_rejects_nonpositive_step_and_horizon(changes):
    with pytest.raises(ConfigError, match="positive"):
        load_preset("fig1").replace(**changes)


def test_run_writes_csv_and_summary(tmp_path):
    path = write_config(tmp_path / "short.conf", {**FIG1_KEYS, "t_end": "2", "output": str(tmp_path / "out")})
    summary = run_scenario(load_config(path))
    assert summary.scenario == "short"
    assert summary.endemic is None
    assert summary.stable_equilibrium == "E0"
    assert summary.w_monotone is True and summary.V_monotone is None
    assert summary.exit_code == EXIT_OK

    with open(summary.trajectory_path, newline="") as stream:
        rows = list(csv.reader(stream))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) - 1 == int(2 / 0.01) + 1
    first = rows[1]
    assert float(first[0]) == 0.0
    assert float(first[4]) == pytest.approx(float(first[1]) + float(first[2]) + float(first[3]))
    # w is evaluated, the endemic columns stay empty
    assert first[5] != "" and first[6:] == ["", "", "", ""]

    assert read_summary(summary.summary_path) == summary


def test_summary_round_trip():
    summary = RunSummary(scenario="fig2", R0=2.578925, stable_equilibrium="E*", E0=(0.1 + 0.2, 0.0, 0.0),
                         endemic=(10.738059701492537, 5.131402, 5.744107), t_end=200.0,
                         final_state=(1 / 3, 2 / 3, 1e-17), violation_count=0, clamp_count=0,
                         w_monotone=None, V_monotone=False, trajectory_path="out/fig2_trajectory.csv",
                         summary_path="out/fig2_summary.txt")
    assert RunSummary.from_text(summary.to_text()) == summary
    assert summary.exit_code == cli.EXIT_CERTIFICATE


def test_cli_run_is_deterministic(tmp_path):
    args = ["run", "--preset", "fig2", "--t-end", "1", "--step", "0.02"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    with open(tmp_path / "a" / "fig2_trajectory.csv") as a, open(tmp_path / "b" / "fig2_trajectory.csv") as b:
        assert a.read() == b.read()


def test_cli_history_swap(tmp_path):
    assert main(["run", "--preset", "fig1", "--history", "fig2", "--t-end", "1", "--no-certificates",
                 "--out", str(tmp_path)]) == EXIT_OK
    summary = read_summary(os.path.join(tmp_path, "fig1-history-fig2_summary.txt"))
    assert summary.w_monotone is None
    assert summary.final_state[2] > 60


def test_sweep_beta_is_linear_and_brackets_threshold():
    config = load_preset("fig1")
    rows = sweep(config, "beta", [0.005, 0.01, 0.02, 0.04])
    R0s = np.array([row.R0 for row in rows])
    np.testing.assert_allclose(R0s / R0s[0], [1, 2, 4, 8], rtol=1e-12)
    assert [row.endemic for row in rows] == [R0 > 1 for R0 in R0s]
    assert [row.endemic for row in rows] == [False, False, False, True]
    brackets = threshold_brackets(rows)
    assert len(brackets) == 1
    assert (brackets[0][0].value, brackets[0][1].value) == (0.02, 0.04)
    assert rows[0].i_star is None and rows[-1].i_star > 0


def test_sweep_h_leaves_R0_alone():
    rows = sweep(load_preset("fig2"), "h", [0.5, 1.0, 2.0])
    assert len({row.R0 for row in rows}) == 1
    assert all(row.endemic for row in rows)


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(ConfigError):
        sweep(load_preset("fig1"), "sigma", [1.0])
    with pytest.raises(ConfigError):
        sweep(load_preset("fig1"), "mu", [0.0])


def test_threshold_brackets_empty_without_crossing():
    rows = [SweepRow(1.0, 2.0, True, 1.0), SweepRow(2.0, 3.0, True, 2.0)]
    assert threshold_brackets(rows) == []


def test_cli_sweep_writes_csv(tmp_path, capsys):
    assert main(["sweep", "--preset", "fig1", "--param", "beta", "--values", "0.01,0.02,0.04",
                 "--out", str(tmp_path)]) == EXIT_OK
    with open(tmp_path / "sweep_beta.csv", newline="") as stream:
        rows = list(csv.reader(stream))
    assert rows[0] == ["value", "R0", "endemic", "i_star"]
    assert [r[2] for r in rows[1:]] == ["false", "false", "true"]
    assert rows[1][3] == ""
    assert "R0 crosses 1 between beta" in capsys.readouterr().out


def test_verify_incidence():
    report = verify_incidence(load_preset("fig2"), np.arange(0.0, 101.0), np.linspace(0.1, 50, 50))
    assert report.passed
    assert main(["verify-incidence", "--preset", "fig2"]) == EXIT_OK


def test_verify_incidence_bad_grid_is_config_error():
    assert main(["verify-incidence", "--preset", "fig1", "--i-grid", "0:10:11"]) == EXIT_CONFIG


def test_analyze_prints_report(capsys):
    assert main(["analyze", "--preset", "fig1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0.8405797" in out
    assert "none (R0 <= 1)" in out


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as excinfo:
        main(["run"])
    assert excinfo.value.code == 2
