import shutil
from pathlib import Path

import numpy as np
import pytest

from kuramoto_rc.cli import linear_fit, load_config, main, read_table

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
[experiment]
task = lorenz
seed = 1

[reservoir]
N = 120
K = 20.68
F = 37.545
c = 1.159

[readout]
variant = v3
epsilon = 1e-5

[schedule]
h_theta = 0.01
n_wipe = 200
n_train = 1500
n_test = 100

[sweep]
F = 10, 30
K = 0, 20
tasks = nmse_short, rotation
rotation_steps = 300
score_time = 1.0

[analysis]
steps = 1500
lyapunov_horizon = 2.0
"""


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(SMALL)
    return p


def _data(path):
    return [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]


def test_run_outputs(small_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_cfg), "--out", str(out)]) == 0
    for name in ("prediction.csv", "r.csv", "weights.txt", "summary.csv", "final_train_state.csv", "config.ini"):
        assert (out / name).exists(), name
    assert (out / "config.ini").read_text() == SMALL
    head = (out / "prediction.csv").read_text().splitlines()[:3]
    assert head[0].startswith("# kuramoto_rc") and head[1] == "# seed = 1" and head[2].startswith("# config_sha256 = ")
    cols, data = read_table(out / "prediction.csv")
    assert cols == ["t", "u1", "u2", "u3", "uhat1", "uhat2", "uhat3"]
    assert data.shape == (100, 7)
    assert "NMSE = " in capsys.readouterr().out


def test_run_is_byte_identical(small_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(small_cfg), "--out", str(a)]) == 0
    assert main(["run", "--config", str(small_cfg), "--out", str(b)]) == 0
    for name in ("prediction.csv", "r.csv", "weights.txt", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_override(small_cfg, tmp_path):
    assert main(["run", "--config", str(small_cfg), "--out", str(tmp_path / "s"), "--seed", "7"]) == 0
    assert "# seed = 7" in (tmp_path / "s" / "summary.csv").read_text()


def test_missing_key_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text(SMALL.replace("c = 1.159\n", ""))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
    assert "[reservoir] c" in capsys.readouterr().err


def test_bad_values_exit_2(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text(SMALL.replace("N = 120", "N = lots"))
    assert main(["run", "--config", str(p)]) == 2
    p.write_text(SMALL.replace("task = lorenz", "task = weather"))
    assert main(["run", "--config", str(p)]) == 2
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 2
    assert main(["frobnicate"]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    p = tmp_path / "sing.ini"
    # no regularisation and more features than samples: the Gram matrix is singular
    p.write_text(SMALL.replace("epsilon = 1e-5", "epsilon = 0").replace("n_train = 1500", "n_train = 50"))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "condition" in capsys.readouterr().err


def test_sweep_and_resume(small_cfg, tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(small_cfg), "--out", str(out)]) == 0
    rows = _data(out / "sweep.csv")
    assert len(rows) == 5 and rows[0].startswith("F,K,c,nmse_short,rho_max")
    first = (out / "sweep.csv").read_bytes()
    # simulate an interrupted run: drop one point and the assembled file
    victim = sorted((out / "points").iterdir())[1]
    victim.unlink()
    (out / "sweep.csv").unlink()
    assert main(["sweep", "--config", str(small_cfg), "--out", str(out), "--resume"]) == 0
    assert (out / "sweep.csv").read_bytes() == first


def test_sweep_flags_zero_coupling(tmp_path):
    p = tmp_path / "sw.ini"
    text = (CONFIGS / "lorenz.ini").read_text() + "\n[sweep]\nF = 20, 40\nK = 0\ntasks = nmse_short\n"
    p.write_text(text)
    assert main(["sweep", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    cols, *rows = [r.split(",") for r in _data(tmp_path / "o" / "sweep.csv")]
    i = cols.index("nmse_short")
    assert all(float(r[i]) >= 0.1 for r in rows)


def test_analyze(small_cfg, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_cfg), "--out", str(out)]) == 0
    assert main(["analyze", str(out)]) == 0
    cols, pairs = read_table(out / "return_map.csv")
    assert cols == ["r_n", "r_n1"]
    assert len(pairs) and np.all((pairs > 0) & (pairs < 1))
    cols, lam = read_table(out / "lyapunov.csv")
    assert lam.shape == (3, 2)
    cols, rot = read_table(out / "rotation.csv")
    assert rot.shape == (120, 2)


def test_analyze_unknown_and_missing(tmp_path, small_cfg):
    out = tmp_path / "run"
    assert main(["run", "--config", str(small_cfg), "--out", str(out)]) == 0
    assert main(["analyze", str(out), "--analyses", "spectrogram"]) == 2
    shutil.rmtree(out)
    assert main(["analyze", str(out)]) == 2


def test_scaling_single_n(tmp_path):
    assert main(["scaling", "--N", "200", "--steps", "20", "--repeats", "1", "--no-reference", "--out", str(tmp_path)]) == 0
    assert len(_data(tmp_path / "scaling.csv")) == 2
    assert not (tmp_path / "scaling_fit.csv").exists()


def test_scaling_rejects_unsorted(tmp_path):
    assert main(["scaling", "--N", "400,200", "--out", str(tmp_path)]) == 2


def test_linear_fit_exact():
    a, b, r2 = linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert (a, b) == pytest.approx((1, 2)) and r2 == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["lorenz", "lorenz_climate", "rossler", "mackey_glass", "ks", "narma10", "sweep"])
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / f"{name}.ini")
    assert cfg.task in ("lorenz", "rossler", "mackey_glass", "ks", "narma10")


def test_narma_config_runs(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "narma10.ini"), "--out", str(tmp_path)]) == 0
    cols, vals = read_table(tmp_path / "prediction.csv")
    assert vals.shape == (2000, 3)
