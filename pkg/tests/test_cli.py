import json

import numpy as np
import pytest

from hereditary.commands import cmd_identify, cmd_predict, cmd_rve, cmd_spectrum
from hereditary.core.operator import sls_spectrum
from hereditary.errors import AssemblyError, ConfigError, DimensionError, OracleError
from hereditary.main import run
from hereditary.run_config import RunConfig, load_run_config, parse_run_config, with_overrides
from hereditary.utils.files import read_csv, read_model, write_csv

LAMINATE = {
    "oracle": "rve",
    "geometry": "laminate",
    "layers": [{"modulus": 2.0, "kernel": {"type": "exp", "k": 1.0, "lambda": 1.0}}, {"modulus": 1.0}],
    "fractions": [0.5, 0.5],
}


def _config(data, out, **changes) -> RunConfig:
    data = {**data, "output_dir": str(out), **changes}
    return RunConfig.model_validate(data)


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_config_errors_name_the_field(sls_config):
    bad_sweep = {**sls_config, "basis": {"m": 3, "sweep": [4]}}
    with pytest.raises(ConfigError, match="basis.sweep"):
        parse_run_config(json.dumps(bad_sweep))
    with pytest.raises(ConfigError, match="N_list"):
        parse_run_config(json.dumps({**sls_config, "reduction": {"N_list": [9]}}))
    with pytest.raises(ConfigError, match="colour"):
        parse_run_config(json.dumps({**sls_config, "colour": "blue"}))
    with pytest.raises(ConfigError, match="Simpson"):
        parse_run_config(json.dumps({**sls_config, "space": {"T": 1.0, "n": 201, "lambda0": 1.0}}))


def test_load_run_config(sls_config, write_config, tmp_path):
    config = load_run_config(write_config(sls_config))
    assert config.M == 7
    assert config.oracle.lam == 1.0
    assert config.basis.sweep == [5, 7]
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.json")


def test_overrides(sls_config, tmp_path):
    config = _config(sls_config, tmp_path)
    assert with_overrides(config, output_dir="elsewhere").output_dir == "elsewhere"
    with pytest.raises(ConfigError, match="RVE"):
        with_overrides(config, paper_scale=True)

    rve = _config({**sls_config, "oracle": {"oracle": "rve"}, "reduction": None}, tmp_path)
    scaled = with_overrides(rve, seed=9, paper_scale=True)
    assert scaled.oracle.grains_per_side == 4 and scaled.oracle.elems_per_grain_side == 2
    assert scaled.space.T == 5.0 and scaled.basis.m == 20
    assert scaled.oracle.seed == 9


def test_spectrum_closed_form(sls_config, tmp_path):
    sls_config["oracle"]["closed_form"] = True
    out = tmp_path / "a"
    tables = cmd_spectrum(_config(sls_config, out))
    assert "spectrum.csv" in tables and "sls_spectrum.csv" in tables

    rows = read_csv(out / "spectrum.csv")
    assert rows.shape == (6, 4)
    np.testing.assert_array_equal(rows[:, 0], [5, 5, 5, 7, 7, 7])
    config = _config(sls_config, out)
    exact = sls_spectrum(config.oracle.params(config.space), 3).s
    np.testing.assert_allclose(rows[:3, 3], exact, rtol=1e-14)
    assert np.all(rows[:, 2] <= rows[:, 3] + 1e-12)
    assert np.all(rows[3:, 2] >= rows[:3, 2] - 1e-12)

    report = _report(out)
    assert report["command"] == "spectrum"
    assert report["notes"]["hs_norm"] == pytest.approx(0.5 * np.exp(-0.5))
    assert report["notes"]["hyperbolic_first"] is False

    other = tmp_path / "b"
    cmd_spectrum(_config(sls_config, other))
    assert (other / "spectrum.csv").read_bytes() == (out / "spectrum.csv").read_bytes()


def test_sampled_spectrum_agrees_with_closed_form(sls_config, tmp_path):
    cmd_spectrum(_config(sls_config, tmp_path / "sampled"))
    sls_config["oracle"]["closed_form"] = True
    cmd_spectrum(_config(sls_config, tmp_path / "closed"))
    sampled = read_csv(tmp_path / "sampled" / "spectrum.csv")
    closed = read_csv(tmp_path / "closed" / "spectrum.csv")
    np.testing.assert_allclose(sampled[:, 2], closed[:, 2], rtol=5e-3)


def test_identify_writes_models(sls_config, tmp_path):
    tables = cmd_identify(_config(sls_config, tmp_path))
    for N in (1, 2, 7):
        assert f"model_N{N}.json" in tables
        assert (tmp_path / f"fourier_N{N}.json").exists()
    assert read_csv(tmp_path / "spectrum_identify.csv").shape == (7, 2)

    rm = read_model(tmp_path / "model_N2.json")
    assert rm.N == 2 and rm.M == 7 and rm.kind == "optimal"
    assert rm.modulus == pytest.approx(2.0)

    report = _report(tmp_path)
    assert [r["N"] for r in report["error_reports"]] == [1, 2, 7]
    first = report["error_reports"][0]
    assert first["bound"] is not None and first["exact_rank_error"] is not None
    assert report["error_reports"][-1]["rank_error"] == 0.0
    assert report["notes"]["oracle_evaluations"] >= 7
    assert report["spectrum"]["identify"]["M"] == 7


def test_predict_convergence_study(sls_config, tmp_path):
    sls_config["oracle"]["closed_form"] = True
    sls_config["reduction"]["N_list"] = [1, 2, 3]
    sls_config["tests"] = {"step": True, "parabolic": True}
    tables = cmd_predict(_config(sls_config, tmp_path))
    assert {"convergence_step.csv", "convergence_parabolic.csv"} <= set(tables)

    rows = read_csv(tmp_path / "convergence_step.csv")
    np.testing.assert_array_equal(rows[:, 0], [1, 2, 3])
    np.testing.assert_array_equal(rows[:, 1], [3, 5, 7])
    assert np.all(rows[:, 2] <= rows[:, 3])

    report = _report(tmp_path)
    assert set(report["slopes"]) == {"step", "parabolic"}
    assert len(report["convergence"]["step"]["gibbs_last_tau"]) == 3


def test_predict_with_model(sls_config, tmp_path):
    cmd_identify(_config(sls_config, tmp_path / "identify"))
    out = tmp_path / "predict"
    tables = cmd_predict(_config(sls_config, out), model_path=str(tmp_path / "identify" / "model_N7.json"))
    assert {"prediction_step.csv", "history_step.csv"} <= set(tables)

    prediction = read_csv(out / "prediction_step.csv")
    assert prediction.shape == (201, 4)
    t, strain = prediction[:, 0], prediction[:, 1]
    np.testing.assert_array_equal(strain, np.where(t >= 0.5 - 1e-12, 1.0, 0.0))

    report = _report(out)
    assert report["notes"]["model"]["N"] == 7
    assert report["convergence"]["step"]["error_H_outside_boundary_layer"] <= report["convergence"]["step"]["error_H"]

    coarse = {**sls_config, "space": {"T": 1.0, "n": 100, "lambda0": 1.0}}
    with pytest.raises(DimensionError):
        cmd_predict(_config(coarse, tmp_path / "coarse"), model_path=str(tmp_path / "identify" / "model_N7.json"))


def test_zero_program_gives_zero_outputs(sls_config, tmp_path):
    cmd_identify(_config(sls_config, tmp_path / "identify"))
    program = tmp_path / "zero.csv"
    t = np.linspace(0.0, 1.0, 201)
    write_csv(program, ["t", "strain"], [t, np.zeros_like(t)])
    sls_config["tests"] = {"step": False, "program_file": str(program)}
    out = tmp_path / "predict"
    cmd_predict(_config(sls_config, out), model_path=str(tmp_path / "identify" / "model_N2.json"))
    assert np.all(read_csv(out / "prediction_zero.csv")[:, 1:] == 0.0)
    assert np.all(read_csv(out / "history_zero.csv")[:, 1:] == 0.0)


def test_program_file_on_wrong_grid(sls_config, tmp_path):
    program = tmp_path / "short.csv"
    t = np.linspace(0.0, 1.0, 11)
    write_csv(program, ["t", "strain"], [t, t])
    sls_config["tests"] = {"step": False, "program_file": str(program)}
    with pytest.raises(DimensionError):
        cmd_predict(_config(sls_config, tmp_path))


def test_rve_command_on_laminate(sls_config, tmp_path):
    config = _config({**sls_config, "oracle": LAMINATE, "basis": {"m": 2}, "reduction": {"N_list": [1, 5]}}, tmp_path)
    tables = cmd_rve(config)
    for j in (-2, -1, 0, 1, 2):
        rows = read_csv(tmp_path / f"response_j{j}.csv")
        assert rows.shape == (201, 3)
    assert "model_N5.json" in tables
    assert not (tmp_path / "eta_histogram.csv").exists()
    report = _report(tmp_path)
    assert len(report["notes"]["digest"]) == 64
    assert report["notes"]["points"] == 2


def test_rve_command_needs_rve_oracle(sls_config, tmp_path):
    with pytest.raises(ConfigError):
        cmd_rve(_config(sls_config, tmp_path))


def test_rve_cube_outputs_are_seeded(sls_config, tmp_path):
    cube = {"oracle": "rve", "grains_per_side": 2, "elems_per_grain_side": 1, "seed": 4}
    base = {**sls_config, "space": {"T": 1.0, "n": 20, "lambda0": 1.0}, "oracle": cube, "basis": {"m": 1}, "reduction": None}
    cmd_rve(_config(base, tmp_path / "a"))
    cmd_rve(_config(base, tmp_path / "b"))
    for name in ("eta_histogram.csv", "tau_histogram.csv", "response_j1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert read_csv(tmp_path / "a" / "eta_histogram.csv")[:, 2].sum() == 8 * 3

    reseeded = with_overrides(_config(base, tmp_path / "c"), seed=5)
    cmd_rve(reseeded)
    assert _report(tmp_path / "c")["notes"]["digest"] != _report(tmp_path / "a")["notes"]["digest"]


def test_run_exit_codes(sls_config, write_config, tmp_path):
    assert run(["spectrum", "--config", str(tmp_path / "missing.json")]) == 2
    path = write_config(sls_config)
    assert run(["rve", "--config", str(path), "--out", str(tmp_path / "rve")]) == 2
    assert run(["spectrum", "--config", str(path), "--out", str(tmp_path / "ok"), "--log-level", "WARNING"]) == 0
    assert (tmp_path / "ok" / "spectrum.csv").exists()


@pytest.mark.parametrize("error, code", [
    (OracleError("solver diverged", basis_index=1), 3),
    (AssemblyError("singular stiffness"), 4),
    (RuntimeError("unexpected"), 1),
])
def test_run_maps_errors_to_exit_codes(sls_config, write_config, tmp_path, mocker, error, code):
    mocker.patch("hereditary.main.cmd_identify", side_effect=error)
    assert run(["identify", "--config", str(write_config(sls_config)), "--out", str(tmp_path)]) == code
