"""Configuration parsing, preset step control, and the CLI surface."""

import json
import math
import os

import pytest

from komega1d import ConfigError, control_for, parse_config, run_scenario
from komega1d.cli import main
from komega1d.diagnostics import ROW_FIELDS, TOY_ROW_FIELDS


# ---------------------------------------------------------------------------
# Parser


def test_parse_minimal_and_defaults():
    cfg = parse_config("")
    assert cfg.scenario == "generic"
    assert cfg.n_points == 256
    assert cfg.t_final == 1.0
    assert not cfg.is_sweep()
    assert cfg.explicit == set()


def test_parse_comments_whitespace_and_normalization():
    cfg = parse_config(
        """
        # full-line comment
        scenario = uniform   # trailing comment

        N-Points = 64
        dt_max = 1e-3
        symmetry_projection = yes
        """
    )
    assert cfg.scenario == "uniform"
    assert cfg.n_points == 64
    assert cfg.dt_max == 1e-3
    assert cfg.symmetry_projection is True
    assert cfg.explicit == {"scenario", "n_points", "dt_max", "symmetry_projection"}


def test_parse_lists():
    cfg = parse_config("beta0_cos = 1.0, -0.5,0.25\nu0_sin = 2")
    assert cfg.beta0_cos == [1.0, -0.5, 0.25]
    assert cfg.u0_sin == [2.0]


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("scenario uniform", "expected 'key = value'"),
        ("frobnicate = 3", "unknown key"),
        ("t_final = 1\nt_final = 2", "duplicate key"),
        ("nu = many", "expects a number"),
        ("n_points = 2.5", "expects an integer"),
        ("symmetry_projection = maybe", "expects true/false"),
        ("u0_cos = 1, two", "comma-separated numbers"),
        ("scenario = vortex", "unknown scenario"),
        ("n_points = 7", "even integer >= 8"),
        ("t_final = 0", "t_final must be positive"),
        ("nu = -1", "nu"),
        ("cfl_advective = 1.5", "monotone-step"),
        ("dt_min = 1e-3\ndt_max = 1e-4", "dt_min"),
        ("beta0_cos = 1\nk0_cos = 1", "not both"),
        ("gamma0_cos = 1", "only to the toy scenario"),
        ("scenario = toy\nomega0_cos = 2", "no omega or beta"),
        ("sweep_parameter = speed\nsweep_values = 1", "unknown sweep_parameter"),
        ("sweep_parameter = epsilon", "sweep_values is empty"),
        ("sweep_values = 1, 2", "sweep_parameter is missing"),
        ("sweep_parameter = epsilon\nsweep_values = 1e-2, 1e-2", "duplicates"),
        ("sweep_parameter = n_points\nsweep_values = 100, 129", "even integers"),
        ("sweep_parameter = dt_max\nsweep_values = -1e-4", "must be positive"),
    ],
)
def test_parse_errors(text, fragment):
    # ConfigError subclasses ValueError; the coefficient and step-control
    # dataclasses raise plain ValueError, and the CLI treats both the same
    with pytest.raises(ValueError, match=fragment):
        parse_config(text)


def test_error_messages_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("scenario = generic\n\nnu = abc")


# ---------------------------------------------------------------------------
# Preset step control


def test_preset_step_control_defaults():
    blow = control_for(parse_config("scenario = blowup"))
    assert blow.blowup_grad_threshold == 2.5
    assert blow.dt_min == 1e-8
    assert blow.cfl_diffusive == 0.8
    gen = control_for(parse_config("scenario = generic"))
    assert gen.dt_max == 2e-5
    uni = control_for(parse_config("scenario = uniform"))
    assert uni.dt_max == 1e-3
    cus = control_for(parse_config("scenario = custom"))
    assert cus.dt_max == 1e-4  # plain type default, no preset


def test_explicit_keys_beat_presets():
    gen = control_for(parse_config("scenario = generic\ndt_max = 7e-5"))
    assert gen.dt_max == 7e-5
    blow = control_for(parse_config("scenario = blowup\nblowup_grad_threshold = 9.0"))
    assert blow.blowup_grad_threshold == 9.0
    assert blow.dt_min == 1e-8  # untouched knobs still take the preset


# ---------------------------------------------------------------------------
# CLI


def _write(tmp_path, text, name="case.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_cli_run_writes_artifacts(tmp_path):
    cfg = _write(tmp_path, "scenario = uniform\nn_points = 16\nt_final = 0.05\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out), "--quiet"]) == 0
    with open(out / "summary.json", encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["status"] == "completed"
    assert summary["config"]["scenario"] == "uniform"
    with open(out / "diagnostics.csv", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    assert tuple(header) == ROW_FIELDS
    assert (out / "envelopes.csv").exists()


def test_cli_run_prints_summary_json(tmp_path, capsys):
    cfg = _write(tmp_path, "scenario = uniform\nn_points = 16\nt_final = 0.05\n")
    assert main(["run", cfg]) == 0
    out = capsys.readouterr().out
    # a progress line precedes the document unless --quiet is given
    summary = json.loads(out[out.index("{"):])
    assert summary["status"] == "completed"
    assert summary["terminal"]["t"] == pytest.approx(0.05)


def test_cli_run_reports_detected_blowup_as_success(tmp_path):
    cfg = _write(tmp_path, "scenario = blowup\nn_points = 64\nt_final = 1.0\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out), "--quiet"]) == 0
    with open(out / "summary.json", encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["status"] == "blowup_detected"
    assert 0.0 < summary["t_end"] < 1.0


def test_cli_run_scheme_failure_exits_one(tmp_path, capsys):
    # uniform omega decays like 1/(1+t), so a floor of 0.9 trips quickly
    cfg = _write(
        tmp_path,
        "scenario = custom\nn_points = 16\nt_final = 0.5\nomega_floor = 0.9\n",
    )
    assert main(["run", cfg]) == 1
    out = capsys.readouterr().out
    summary = json.loads(out[out.index("{"):])
    assert summary["status"] == "scheme_failure"
    assert summary["t_end"] < 0.2


def test_cli_toy_run_uses_toy_schema(tmp_path):
    cfg = _write(tmp_path, "scenario = toy\nn_points = 32\nt_final = 0.02\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out), "--quiet"]) == 0
    with open(out / "diagnostics.csv", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    assert tuple(header) == TOY_ROW_FIELDS
    assert not (out / "envelopes.csv").exists()


def test_cli_sweep_writes_member_tree(tmp_path):
    cfg = _write(
        tmp_path,
        "scenario = uniform\nn_points = 16\nt_final = 0.05\n"
        "sweep_parameter = dt_max\nsweep_values = 1e-3, 5e-4\n",
    )
    out = tmp_path / "sweep"
    assert main(["sweep", cfg, "--output-dir", str(out), "--quiet"]) == 0
    with open(out / "sweep_summary.json", encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["sweep_parameter"] == "dt_max"
    assert len(summary["members"]) == 2
    for member in summary["members"]:
        assert member["status"] == "completed"
        assert os.path.isfile(out / member["name"] / "summary.json")
    cross = summary["cross_member"]
    assert "residuals_by_decreasing_dt" in cross


def test_cli_single_run_config_rejected_by_sweep_and_vice_versa(tmp_path):
    single = _write(tmp_path, "scenario = uniform\nn_points = 16\nt_final = 0.05\n")
    assert main(["sweep", single, "--quiet"]) == 2
    swept = _write(
        tmp_path,
        "sweep_parameter = dt_max\nsweep_values = 1e-3, 5e-4\n",
        name="swept.cfg",
    )
    assert main(["run", swept, "--quiet"]) == 2


def test_cli_config_errors_exit_two(tmp_path, capsys):
    bad = _write(tmp_path, "t_final = never\n")
    assert main(["run", bad]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2
    cfg = _write(tmp_path, "scenario = uniform\n", name="ok.cfg")
    assert main(["sweep", cfg, "--workers", "0"]) == 2


def test_cli_check_oracles(capsys):
    assert main(["check-oracles"]) == 0
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if ln.startswith("[")]
    assert lines and all(ln.startswith("[ok  ]") for ln in lines)
    assert "oracle checks passed" in out


def test_cli_schema(capsys):
    assert main(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert schema["diagnostics_csv"] == list(ROW_FIELDS)
    assert schema["toy_diagnostics_csv"] == list(TOY_ROW_FIELDS)
    assert "envelopes_csv" in schema
    assert "run_summary_json" in schema
    assert "sweep_summary_json" in schema


def test_cli_version(capsys):
    from komega1d import __version__

    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_run_summary_closed_form_spot_check():
    # the uniform preset's closed form, driven end to end through the
    # config surface:  omega(0.05) = 1/1.05, and the guaranteed-existence
    # bound for initial energy 4*pi (two unit constants on the torus)
    cfg = parse_config("scenario = uniform\nn_points = 16\nt_final = 0.05")
    summary = run_scenario(cfg)
    assert summary["terminal"]["omega_max"] == pytest.approx(1 / 1.05, rel=1e-9)
    assert summary["terminal"]["omega_min"] == pytest.approx(1 / 1.05, rel=1e-9)
    assert summary["lifespan_lower_bound"] == pytest.approx(
        1e-2 / (4 * math.pi) ** 2, rel=1e-12
    )
