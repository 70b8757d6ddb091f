import math
import os
import subprocess

import numpy as np
import pytest

import optimice


def test_builtins():
    assert optimice.branin([math.pi, 2.275]) == pytest.approx(0.397887, abs=1e-6)
    assert optimice.rosenbrock([1.0, 1.0, 1.0]) == 0.0


def test_emulator_interpolates():
    x = optimice.lhd(12, 2, seed=3)
    y = np.sin(5 * x[:, 0]) + x[:, 1] ** 2
    model = optimice.Emulator.fit(x, y, seed=1)
    mean, var = model.predict(x)
    assert np.max(np.abs(mean - y)) < 1e-6
    assert np.all(var < 1e-6 * model.process_variance)
    assert model.length_scales.shape == (2,)


def test_optimize_builtin_is_deterministic():
    a = optimice.optimize("branin", iterations=2, batch_size=3, initial_design_size=8, seed=4)
    b = optimice.optimize("branin", iterations=2, batch_size=3, initial_design_size=8, seed=4)
    assert a["csv"] == b["csv"]
    assert len(a["y"]) == 14
    assert a["provenance"][8] == "UCB"
    assert a["provenance"][9] == "MICE"
    assert all(r >= -1e-9 for r in a["simple_regret"])


def test_optimize_python_callable():
    def f(x):
        return -((x[0] - 0.3) ** 2)

    t = optimice.optimize(f, space=[("x", 0.0, 1.0)], iterations=2, batch_size=2, initial_design_size=4, seed=1)
    assert len(t["y"]) == 8
    assert t["f_star"] is None


def test_screen_linear():
    before = optimice.evaluation_count()
    res = optimice.screen("linear", r=4, seed=2)
    assert np.allclose(res["mu_star"], [2.0, 3.0], atol=1e-12)
    assert res["classes"] == ["linear", "linear"]
    assert optimice.evaluation_count() - before == 12


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        optimice.optimize("nope")
    with pytest.raises(RuntimeError):
        optimice.optimize(lambda x: float("nan"), space=[("x", 0.0, 1.0)], iterations=1, batch_size=1,
                          initial_design_size=3)


def test_sweep_from_tool_model(tmp_path):
    tool = os.environ.get("OPTIMICE_TOOL")
    if not tool:
        pytest.skip("command-line tool not available")
    cfg = tmp_path / "run.cfg"
    cfg.write_text("objective = branin\niterations = 1\nbatch_size = 2\ninitial_design_size = 8\n")
    subprocess.run([tool, "optimize", "--config", str(cfg), "--out", str(tmp_path / "o")], check=True,
                   capture_output=True)
    before = optimice.prediction_count()
    curves = optimice.sweep(str(tmp_path / "o" / "model.txt"), n=20)
    assert [c["name"] for c in curves] == ["x1", "x2"]
    assert optimice.prediction_count() - before == 40
    assert curves[0]["x"][0] == -5.0 and curves[0]["x"][-1] == 10.0
