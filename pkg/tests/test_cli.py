import json
import shutil
import subprocess
from fractions import Fraction

import numpy as np
import pytest

from casimir_response import __version__
from casimir_response.cli import THREADS_ENV, main
from casimir_response.reporting import csv_body, read_csv

from conftest import REFERENCE, SCENARIOS

REF = str(SCENARIOS / "reference_bubble.json")


def run(*argv):
    return main([str(a) for a in argv])


def load_json(path):
    return json.loads(path.read_text())


def write_scenario(tmp_path, name="s.json", **changes):
    data = json.loads(json.dumps(REFERENCE))
    data.update(changes)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


# ---------------------------------------------------------------- cheap subcommands


def test_gnm_table(tmp_path, capsys):
    assert run("gnm", "--n-max", 2, "--out", tmp_path) == 0
    header, names, data = read_csv(tmp_path / "gnm.csv")
    assert names == ["n", "m", "kernel_num", "kernel_den", "value_at_epsilon"]
    assert len(data) == 9
    kernels = {(int(n), int(m)): Fraction(int(a), int(b)) for n, m, a, b, _ in data}
    assert kernels[(0, 0)] == Fraction(1, 105)
    assert kernels[(0, 1)] == kernels[(1, 0)] == Fraction(1, 189)
    assert kernels[(0, 2)] == kernels[(1, 1)] == Fraction(13, 3465)
    assert "G[0,0] = 1/105" in capsys.readouterr().out


def test_gnm_single_row(tmp_path):
    assert run("gnm", "--n-max", 0, "--epsilon", 1.5, "--out", tmp_path) == 0
    _, _, data = read_csv(tmp_path / "gnm.csv")
    assert data.shape == (1, 5)
    assert data[0, 4] == pytest.approx(1.5**3 / 105 / (2 * np.pi) ** 3, rel=1e-15)


@pytest.mark.parametrize("argv", [["gnm", "--n-max", "-1"], ["gnm"], ["nonsense"], ["estimate", "--rmax", "1"], []])
def test_usage_errors_exit_2(argv, tmp_path):
    assert run(*argv, *(["--out", tmp_path] if argv[:1] == ["gnm"] else [])) == 2


def test_bad_epsilon_is_config_error(tmp_path):
    assert run("gnm", "--n-max", 1, "--epsilon", 0.5, "--out", tmp_path) == 3


def test_estimate(tmp_path):
    assert run("estimate", "--rmax", 1, "--tmax", 1, "--kc", 1, "--volume", 2, "--out", tmp_path) == 0
    out = load_json(tmp_path / "estimate.json")
    assert out["energy_bound"] == 1.0 and out["per_mode_bound"] == 0.5
    assert out["note"] == "order-of-magnitude bound"
    assert run("estimate", "--rmax", 2, "--tmax", 1, "--kc", 1, "--out", tmp_path / "b") == 0
    out = load_json(tmp_path / "b" / "estimate.json")
    assert out["energy_bound"] == 64.0 and "per_mode_bound" not in out


def test_console_script_exit_codes(tmp_path):
    exe = shutil.which("casimir-response")
    if exe is None:
        pytest.skip("package not installed as a script")
    ok = subprocess.run([exe, "gnm", "--n-max", "1", "--out", str(tmp_path)], capture_output=True, text=True)
    assert ok.returncode == 0 and "1/105" in ok.stdout
    assert subprocess.run([exe, "gnm", "--n-max", "x"], capture_output=True).returncode == 2
    version = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert __version__ in version.stdout


# ---------------------------------------------------------------- scenario handling


def test_missing_file_and_unknown_keys(tmp_path, capsys):
    assert run("potential", tmp_path / "nope.json", "--out", tmp_path / "o") == 3
    bad = json.loads((SCENARIOS / "potential_zero_source.json").read_text())
    bad["colour"] = "blue"
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(bad))
    assert run("potential", path, "--out", tmp_path / "strict") == 3
    assert not (tmp_path / "strict").exists()
    assert run("potential", path, "--lax", "--out", tmp_path / "lax") == 0
    assert "error" in capsys.readouterr().err


def test_missing_probe_is_config_error(tmp_path):
    assert run("potential", REF, "--out", tmp_path) == 3


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "zero")
    assert run("gnm", "--n-max", 0, "--out", tmp_path) == 2
    monkeypatch.setenv(THREADS_ENV, "0")
    assert run("gnm", "--n-max", 0, "--out", tmp_path) == 2
    monkeypatch.setenv(THREADS_ENV, "2")
    assert run("gnm", "--n-max", 0, "--out", tmp_path) == 0
    assert run("gnm", "--n-max", 0, "--threads", 0, "--out", tmp_path) == 2


# ---------------------------------------------------------------- velocity and potential


def test_velocity_classifications(tmp_path):
    expected = {
        "velocity_incompressible.json": "Localized",
        "velocity_uniform_radial.json": "Divergent",
        "velocity_rigid.json": "RigidFirstOrderNull",
    }
    for name, label in expected.items():
        out = tmp_path / name
        assert run("velocity", SCENARIOS / name, "--out", out) == 0
        assert load_json(out / "velocity.json")["classification"] == label
        header, names, data = read_csv(out / "velocity.csv")
        assert names == ["k", "abs_ft", "err"] and data.shape[0] > 4
    assert run("velocity", REF, "--out", tmp_path / "none") == 3


def test_potential_outputs(tmp_path):
    assert run("potential", SCENARIOS / "potential_zero_source.json", "--out", tmp_path / "z") == 0
    _, names, data = read_csv(tmp_path / "z" / "potential.csv")
    assert names == ["r", "phi", "residual"]
    assert np.all(data[:, 1] == 0.0)
    assert load_json(tmp_path / "z" / "potential.json")["far_field_decay"]["status"] == "trivial solution"

    assert run("potential", SCENARIOS / "potential_wall_source.json", "--out", tmp_path / "w") == 0
    info = load_json(tmp_path / "w" / "potential.json")
    assert info["max_abs_phi"] > 0 and info["residual_norm"] < 1e-10
    assert "truncated" in info["boundary"]


# ---------------------------------------------------------------- failures leave no partial output


def test_coverage_failure_writes_nothing(tmp_path, capsys):
    path = write_scenario(tmp_path, cutoff_k=0.03)
    out = tmp_path / "cov"
    assert run("spectrum", path, "--n-omega", 8, "--out", out) == 5
    assert not out.exists()
    assert "CoverageError" in capsys.readouterr().err


# ---------------------------------------------------------------- spectrum runs


@pytest.fixture(scope="module")
def spectrum_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("spectrum")
    assert run("spectrum", REF, "--n-omega", 40, "--out", base / "summed") == 0
    assert run("spectrum", REF, "--n-omega", 40, "--kernel", "per-polarization", "--stamp", "--out", base / "pp") == 0
    return base


def test_spectrum_files_and_headers(spectrum_runs):
    out = spectrum_runs / "summed"
    manifest = load_json(out / "manifest.json")
    assert manifest["subcommand"] == "spectrum" and manifest["tool_version"] == __version__
    assert sorted(manifest["outputs"]) == ["energy_breakdown.csv", "modes.csv", "spectrum.csv", "summary.json"]
    for name in manifest["outputs"]:
        assert (out / name).is_file()
    header, names, data = read_csv(out / "spectrum.csv")
    assert header["tool"] == f"casimir-response {__version__}"
    assert header["scenario_hash"] == manifest["scenario_hash"]
    assert "omega [1/length]" in header["units"]
    assert names == ["omega", "e", "err"] and data.shape == (40, 3)
    assert "generated" not in header
    summary = load_json(out / "summary.json")
    assert abs(summary["energy_relative_difference"]) < 0.02
    assert np.array(summary["E_nm"]).shape == (3, 3)


def test_per_polarization_is_half(spectrum_runs):
    _, _, summed = read_csv(spectrum_runs / "summed" / "modes.csv")
    header, _, pp = read_csv(spectrum_runs / "pp" / "modes.csv")
    assert header["kernel"] == "per-polarization"
    assert np.allclose(pp[:, 0], summed[:, 0], rtol=0, atol=0)
    assert np.allclose(pp[:, 1], 0.5 * summed[:, 1], rtol=1e-12, atol=0)


def test_stamp_only_changes_header(spectrum_runs):
    a = (spectrum_runs / "summed" / "energy_breakdown.csv").read_text()
    b = (spectrum_runs / "pp" / "energy_breakdown.csv").read_text()
    assert "# generated:" in b and "# generated:" not in a
    assert csv_body(a) == csv_body(b)
    assert [l for l in b.splitlines() if not l.startswith("# generated:")] == a.splitlines()


def test_energy_subcommand_and_table_export(tmp_path, spectrum_runs):
    path = write_scenario(tmp_path, profile=dict(REFERENCE["profile"], T=5.0), cutoff_k=2.0)
    assert run("energy", path, "--export-table", "--out", tmp_path / "e") == 0
    info = load_json(tmp_path / "e" / "energy.json")
    assert info["total_energy_series"] == pytest.approx(info["total_energy_quadrature"], rel=0.02)
    header, names, data = read_csv(tmp_path / "e" / "table.csv")
    assert names == ["q", "omega", "re", "im", "err_estimate"]
    assert "time_scale" in header
    assert np.all(data[:, 4] >= 0)


def test_scaling_subcommand(tmp_path):
    path = write_scenario(tmp_path, profile=dict(REFERENCE["profile"], T=5.0), cutoff_k=2.0)
    assert run("scaling", path, "--scale", 2, "--halvings", 2, "--out", tmp_path / "s") == 0
    info = load_json(tmp_path / "s" / "scaling.json")
    assert info["scale_covariance"]["ratio_times_s"] == pytest.approx(1.0, rel=1e-10)
    assert len(info["low_momentum"]["k"]) == 3
    _, names, _ = read_csv(tmp_path / "s" / "low_momentum.csv")
    assert names == ["k", "ratio"]


def test_figures_are_opt_in(tmp_path):
    pytest.importorskip("matplotlib")
    assert run("potential", SCENARIOS / "potential_wall_source.json", "--figures", "--out", tmp_path / "f") == 0
    png = tmp_path / "f" / "potential.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert "potential.png" in load_json(tmp_path / "f" / "manifest.json")["outputs"]
    assert run("velocity", SCENARIOS / "velocity_uniform_radial.json", "--figures", "--out", tmp_path / "v") == 0
    assert (tmp_path / "v" / "velocity.png").is_file()
    assert run("potential", SCENARIOS / "potential_wall_source.json", "--out", tmp_path / "nf") == 0
    assert not list((tmp_path / "nf").glob("*.png"))
