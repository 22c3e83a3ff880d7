import json
import subprocess
import sys

import pytest

from saddlecenter import cli


def run(tmp_path, *args):
    code = cli.main(["--out-dir", str(tmp_path), *args])
    return code


def report(tmp_path, name):
    return json.loads((tmp_path / f"{name}.json").read_text())


def test_normalize_argv():
    assert cli.normalize_argv(["--energies", "-0.01,0,0.01", "--k", "-1", "--seed", "3"]) == \
        ["--energies=-0.01,0,0.01", "--k=-1", "--seed", "3"]
    assert cli.normalize_argv(["--energy", "-1e-3"]) == ["--energy=-1e-3"]
    # a following option is left alone
    assert cli.normalize_argv(["--k", "--model"]) == ["--k", "--model"]


def test_model_info_ham1(tmp_path, capsys):
    assert run(tmp_path, "model", "info", "--model", "ham1", "--k=-1") == 0
    rep = report(tmp_path, "model_info")
    assert set(rep) == {"build", "command", "ok", "config", "result", "wall_time_s"}
    assert rep["build"].startswith("0.1.0")
    res = rep["result"]
    assert res["critical_energy"] == 0.0 and res["equilibrium"] == [0.0, 0.0, 0.0, 0.0]
    assert res["kind"] == "saddle_center"
    assert res["alpha"] == pytest.approx(1.0) and res["omega"] == pytest.approx(1.0)


def test_model_info_ham2(tmp_path):
    assert run(tmp_path, "model", "info", "--model", "ham2", "--b=0.5") == 0
    res = report(tmp_path, "model_info")["result"]
    assert res["equilibrium"] == [0.0, 1.0, 0.0, 0.0]
    assert res["critical_energy"] == pytest.approx(1 / 6, abs=1e-15)


@pytest.mark.parametrize("argv", [
    ["model", "info", "--model", "ham9"],
    ["model", "nope"],
    ["teleport", "info"],
    ["orbit", "p2", "--delta0", "0.1"],
    ["orbit", "p2", "--energy", "0.01", "--energies", "0.01,0.02"],
    ["orbit", "p2", "--energy", "abc"],
    ["orbit", "p3", "--model", "ham1", "--k", "2"],
    ["certify", "plane", "--model", "ham1"],
])
def test_usage_errors(tmp_path, argv, capsys):
    assert run(tmp_path, *argv) == 2
    assert "usage error" in capsys.readouterr().err


def test_numerical_failure_writes_report(tmp_path, capsys):
    assert run(tmp_path, "orbit", "p2", "--model", "ham1", "--energy", "5") == 1
    rep = report(tmp_path, "orbit_p2")
    assert rep["ok"] is False and "OrbitError" in rep["result"]["error"]


def test_orbit_p2_report(tmp_path):
    assert run(tmp_path, "orbit", "p2", "--model", "ham1", "--k=-1", "--energy", "0.01") == 0
    orb = report(tmp_path, "orbit_p2")["result"]["orbits"][0]
    assert orb["cz"]["index"] == 2 and not orb["cz"]["degenerate_flag"]
    assert orb["stability"] == "hyperbolic" and orb["residual"] < 1e-9
    with open(orb["csv"]) as fh:
        assert fh.readline().startswith("t,")


def test_certify_convexity(tmp_path):
    assert run(tmp_path, "certify", "convexity", "--model", "ham1", "--exclusion", "0.05",
               "--samples", "2000") == 0
    assert report(tmp_path, "certify_convexity")["result"]["min_eigenvalue"] > 0


def test_certify_liouville(tmp_path):
    assert run(tmp_path, "certify", "liouville", "--alpha", "1", "--omega", "1",
               "--delta0", "0.05", "--energies", "1e-4", "--samples", "2000") == 0
    res = report(tmp_path, "certify_liouville")["result"]
    assert all(l["min_dKY"] > 0 for e in res["stage_one"] for l in e["levels"])


def test_config_file_and_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nseed = 7\n\n[model]\nmodel = ham2\nb = 0.5\n")
    cfg = cli.resolve_config(["--config", str(ini), "model", "info"])
    assert (cfg.model, cfg.model_params, cfg.seed) == ("ham2", {"b": 0.5}, 7)
    cfg = cli.resolve_config(["--config", str(ini), "--seed", "1", "model", "info", "--b", "1"])
    assert (cfg.model_params, cfg.seed) == ({"b": 1.0}, 1)
    ini.write_text("[model.info]\nmodle = ham2\n")
    with pytest.raises(cli.UsageError):
        cli.resolve_config(["--config", str(ini), "model", "info"])
    assert cli.main(["--config", str(ini), "model", "info"]) == 2


def test_default_models_and_energies():
    assert cli.resolve_config(["orbit", "p2"]).model == "ham1"
    assert cli.resolve_config(["certify", "plane"]).model == "normal_form"
    assert cli.resolve_config(["orbit", "p2", "--alpha", "2"]).model == "normal_form"
    assert cli.resolve_config(["plot", "hill"]).energies == (-0.01, 0.0, 0.01)
    assert cli.resolve_config(["plot", "hill", "--energies", "-0.02,0.02"]).energies == (-0.02, 0.02)


@pytest.mark.parametrize("figure", ["hill", "qp_projection", "sphere", "plane3d", "foliation_slice"])
def test_plots_are_deterministic(tmp_path, figure):
    args = ["plot", figure, "--resolution", "128"] if figure == "hill" else ["plot", figure]
    assert run(tmp_path, *args) == 0
    svgs = sorted(tmp_path.glob("*.svg"))
    assert svgs
    first = {p.name: p.read_bytes() for p in svgs}
    rep1 = report(tmp_path, f"plot_{figure}")
    assert run(tmp_path, *args) == 0
    assert {p.name: p.read_bytes() for p in sorted(tmp_path.glob("*.svg"))} == first
    rep2 = report(tmp_path, f"plot_{figure}")
    rep1.pop("wall_time_s"), rep2.pop("wall_time_s")
    assert rep1 == rep2


def test_orbit_csv_is_deterministic(tmp_path):
    args = ["orbit", "p2", "--model", "ham1", "--energy", "0.01"]
    assert run(tmp_path, *args) == 0
    csvs = {p.name: p.read_bytes() for p in tmp_path.glob("*.csv")}
    assert csvs
    assert run(tmp_path, *args) == 0
    assert {p.name: p.read_bytes() for p in tmp_path.glob("*.csv")} == csvs


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "saddlecenter", "--out-dir", str(tmp_path),
                          "model", "info"], capture_output=True, text=True, timeout=120)
    assert out.returncode == 0 and (tmp_path / "model_info.json").exists()
