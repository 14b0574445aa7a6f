import csv
import json

import numpy as np
import pytest

from leedissip import cli
from leedissip.config import RunConfig, format_config


def light(**sections):
    cfg = (RunConfig()
           .replace("grid", n_modes=256)
           .replace("kernels", n_E=301)
           .replace("sector", n_points=500)
           .replace("master", n_modes=16, t_max=20.0, n_out=20)
           .replace("langevin", n_trajectories=200, t_max=30.0))
    for name, changes in sections.items():
        cfg = cfg.replace(name, **changes)
    return cfg


@pytest.fixture
def run(tmp_path):
    def _run(command, cfg, out="out", *extra):
        path = tmp_path / "run.ini"
        path.write_text(format_config(cfg))
        code = cli.main([command, "--config", str(path), "--out", str(tmp_path / out), "-q",
                         *extra])
        return code, tmp_path / out
    return _run


def read_csv(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    rows = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return header, rows[0], np.array(rows[1:], dtype=float)


def test_malformed_config_exit_2_and_no_outputs(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nlambda0 = abc\n")
    assert cli.main(["pole", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_runtime_configuration_error_writes_nothing(run):
    # dt*|a| guard trips before any file is written
    code, out = run("langevin", light(langevin=dict(dt=0.05)))
    assert code == 2 and not out.exists()


def test_pole_free_theory(run):
    code, out = run("pole", light(model=dict(lambda0=0.0)))
    assert code == 0
    pole = json.loads((out / "pole.json").read_text())["pole"]
    assert pole["Gamma"] == 0.0 and pole["Z_V"] == 1.0


def test_pole_json_fields_and_meta(run):
    cfg = light()
    code, out = run("pole", cfg)
    doc = json.loads((out / "pole.json").read_text())
    assert set(doc["pole"]) >= {"m_V", "Gamma", "gamma_friction", "Z_V", "lambda_ren", "C0", "C1"}
    assert doc["meta"]["config_sha256"] == cfg.digest()
    assert doc["meta"]["seed"] == 42 and doc["meta"]["tool"].startswith("leedissip")


def test_kernels_csv(run):
    cfg = light()
    code, out = run("kernels", cfg)
    assert code == 0
    header, cols, data = read_csv(out / "kernels.csv")
    assert header[1] == f"# config_sha256 {cfg.digest()}"
    assert cols == ["E", "D", "B", "A"]
    E, B, A = data[:, 0], data[:, 2], data[:, 3]
    assert np.array_equal(E, -E[::-1])
    assert np.array_equal(A, np.sign(E) * B)
    assert np.all(B[E <= 11.0] == 0)
    text = (out / "kernels.csv").read_text()
    assert "\r" not in text and text.endswith("\n")
    assert all(len(v.split("e")[0].replace("-", "").replace(".", "")) == 17
               for v in text.splitlines()[4].split(","))


def test_sector_width_matches_pole(run):
    code, out = run("sector", light())
    assert code == 0
    summary = json.loads((out / "sector.json").read_text())
    assert abs(summary["Gamma_fit"] / summary["Gamma_pole"] - 1) < 0.05
    _, cols, data = read_csv(out / "survival.csv")
    assert cols == ["t", "re_c", "im_c", "abs_c2"] and data[0, 3] == 1.0


def test_sector_stable_regime(run):
    code, out = run("sector", light(model=dict(m_V0=10.4)))
    summary = json.loads((out / "sector.json").read_text())
    assert code == 0 and summary["regime"] == "stable"
    assert abs(summary["m_V_sector"] - summary["m_V_pole"]) < 1e-4


def test_master_unitary_purity(run):
    code, out = run("master", light(master=dict(kappa=0.0)))
    assert code == 0
    summary = json.loads((out / "master.json").read_text())
    assert summary["max_purity_defect"] < 1e-8
    _, cols, data = read_csv(out / "master.csv")
    assert cols[:3] == ["t", "trace", "S"] and np.all(np.abs(data[:, 1] - 1) < 1e-10)


def test_master_decoherence_summary(run):
    code, out = run("master", light(master=dict(initial="superposition")))
    summary = json.loads((out / "master.json").read_text())
    assert code == 0
    assert summary["max_trace_defect"] < 1e-10 and summary["max_entropy_drop"] <= 1e-12
    assert summary["coherence_decay_rate"] > 0


def test_master_step_too_large(run):
    code, out = run("master", light(master=dict(dt=1.0)))
    assert code == 2 and not out.exists()


def test_langevin_stationary_variance(run):
    cfg = light(langevin=dict(n_trajectories=1000, t_max=None, dt=0.008, stride=50))
    code, out = run("langevin", cfg)
    assert code == 0
    s = json.loads((out / "langevin.json").read_text())
    assert abs(s["stationary_mean_square"] - 0.5) < 3 * s["stationary_stderr"]
    _, cols, _ = read_csv(out / "langevin.csv")
    assert cols[:4] == ["t", "re_mean", "im_mean", "mean_abs2"]


def test_seed_flag_overrides(run):
    code, out = run("langevin", light(), "out", "--seed", "9", "--threads", "2")
    header, _, _ = read_csv(out / "langevin.csv")
    assert code == 0 and header[2] == "# seed 9"


def test_reruns_byte_identical_and_no_clobber(run, tmp_path):
    cfg = light()
    run("kernels", cfg, "a")
    first = (tmp_path / "a" / "kernels.csv").read_bytes()
    ini = (tmp_path / "run.ini").read_bytes()
    assert run("kernels", cfg, "a")[0] == 0
    assert (tmp_path / "a" / "kernels.csv").read_bytes() == first
    assert (tmp_path / "run.ini").read_bytes() == ini
    changed = cfg.replace("model", lambda0=0.3)
    assert run("kernels", changed, "a")[0] == 2
    assert (tmp_path / "a" / "kernels.csv").read_bytes() == first
    assert run("kernels", changed, "a", "--force")[0] == 0
    assert (tmp_path / "a" / "kernels.csv").read_bytes() != first


def test_verify_free_theory_gates_decay_checks(run):
    code, out = run("verify", light(model=dict(lambda0=0.0)))
    report = json.loads((out / "report.json").read_text())
    assert code == 0 and report["all_passed"]
    skipped = {c["id"] for c in report["criteria"] if c["skipped"]}
    assert skipped == {2, 7, 8, 10}
    assert all("stable regime" in c["detail"] for c in report["criteria"] if c["skipped"])


def test_verify_step_size_failure(run):
    code, out = run("verify", light(model=dict(lambda0=0.0), master=dict(dt=1.0)))
    report = json.loads((out / "report.json").read_text())
    failed = {c["id"] for c in report["criteria"] if not c["passed"]}
    assert code == 1 and failed == {4, 5}
    assert "step bound" in report["criteria"][3]["detail"]


def test_verify_twice_identical(run, tmp_path):
    cfg = light(model=dict(lambda0=0.0))
    run("verify", cfg, "v1")
    run("verify", cfg, "v2")
    for name in ("report.json", "criteria.csv"):
        assert (tmp_path / "v1" / name).read_bytes() == (tmp_path / "v2" / name).read_bytes()
