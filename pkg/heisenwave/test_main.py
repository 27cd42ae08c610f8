"""
End-to-end runs through the command-line entry point on small grids.
"""
import json

import pandas as pd
import pytest

from heisenwave.main import build_parser, main
from Runtime.error_handling import EXIT_CONFIGURATION, EXIT_OK, EXIT_VERDICT_FAILED

SMALL_RUN = {
    "model": {"n": 1, "b": 2.0, "m": 0.0, "alpha": 1.0},
    "spectral": {"max_degree": 3, "node_count": 8, "lambda_min": 0.05, "lambda_max": 8.0, "calibrate": False},
    "physical": {"half_widths": [5.0, 5.0, 6.0], "counts": [16, 16, 16]},
    "decay": {"t_max": 50.0, "samples": 12},
}


def _config(tmp_path, **sections):
    payload = json.loads(json.dumps(SMALL_RUN))
    for name, values in sections.items():
        payload.setdefault(name, {}).update(values)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def _summary(out):
    return json.loads((out / "summary.json").read_text(encoding="utf-8"))


def test_parser_knows_every_experiment():
    args = build_parser().parse_args(["fit-decay", "--seed", "3"])
    assert args.experiment == "fit-decay"
    assert args.seed == 3
    with pytest.raises(SystemExit):
        build_parser().parse_args(["explode"])


def test_synthetic_fit_decay(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, decay={"synthetic_rate": 1.0})
    assert main(["fit-decay", "--config", str(config), "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out / "decay_synthetic.csv")
    assert list(frame.columns) == ["t", "measured", "envelope", "ratio"]
    summary = _summary(out)
    assert summary["passed"] is True
    assert summary["checks"][0]["fitted_slope"] == pytest.approx(-1.0, abs=1e-9)
    assert set(summary["artifacts"]) == {"decay_synthetic.csv"}


def test_simulate_linear_resting_data(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, data={"family": "gaussian", "u1_scale": 0.0})
    assert main(["simulate-linear", "--config", str(config), "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out / "linear_norms.csv")
    assert len(frame) == 12
    assert {"L2_low", "L2_high"} <= set(frame.columns)
    assert _summary(out)["checks"][0]["check"] == "modewise_energy"


def test_bad_configuration_exits_2(tmp_path, capsys):
    config = _config(tmp_path, model={"b": 1.0, "m": 1.0})
    assert main(["simulate-linear", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_CONFIGURATION
    assert "b^2 > 4m" in capsys.readouterr().err
    assert not (tmp_path / "out" / "summary.json").exists()


def test_missing_configuration_exits_2(tmp_path, capsys):
    assert main(["verify", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIGURATION
    assert capsys.readouterr().err.strip()


def test_reruns_are_byte_identical(tmp_path):
    config = _config(tmp_path, decay={"synthetic_rate": 0.5})
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert main(["fit-decay", "--config", str(config), "--out", str(out), "--seed", "9"]) == EXIT_OK
    for name in ("summary.json", "decay_synthetic.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


@pytest.mark.slow
def test_roundtrip_run(tmp_path):
    out = tmp_path / "out"
    code = main(["roundtrip", "--config", str(_config(tmp_path)), "--out", str(out)])
    summary = _summary(out)
    assert code == (EXIT_OK if summary["passed"] else EXIT_VERDICT_FAILED)
    assert len(pd.read_csv(out / "roundtrip.csv")) == 3


@pytest.mark.slow
def test_verify_run(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, verify={"sample_count": 64})
    code = main(["verify", "--config", str(config), "--out", str(out)])
    summary = _summary(out)
    assert code == (EXIT_OK if summary["passed"] else EXIT_VERDICT_FAILED)
    assert {"checks.json", "checks.csv"} <= set(summary["artifacts"])
    assert summary["check_count"] == len(json.loads((out / "checks.json").read_text(encoding="utf-8")))


FIXED_POINT_RUN = {"p": 2.0, "epsilon": 1e-3, "horizon": 4.0, "time_nodes": 9,
                   "reduced_half_widths": [4.0, 4.0, 4.0], "reduced_counts": [9, 9, 9]}


@pytest.mark.slow
def test_simulate_nonlinear_run(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, fixed_point={"theorem": "T12", **FIXED_POINT_RUN})
    code = main(["simulate-nonlinear", "--config", str(config), "--out", str(out)])
    summary = _summary(out)
    assert code == (EXIT_OK if summary["passed"] else EXIT_VERDICT_FAILED)
    assert list(pd.read_csv(out / "convergence.csv").columns) == ["iter", "x_diff", "ratio"]
    assert summary["p_window"] == "2 <= p <= 2"
    assert summary["convergence"]["converged"] is True
    assert summary["convergence"]["quadrature_delta"] < 0.05
    assert {"trajectory_norms.csv", "source_norms.csv"} <= set(summary["artifacts"])
    assert list(pd.read_csv(out / "source_norms.csv").columns) == ["t", "lp_p", "l2p_p"]


@pytest.mark.slow
def test_simulate_coupled_run(tmp_path):
    out = tmp_path / "out"
    config = _config(tmp_path, model={"m": 0.2}, fixed_point=FIXED_POINT_RUN)
    code = main(["simulate-coupled", "--config", str(config), "--out", str(out)])
    summary = _summary(out)
    assert code == (EXIT_OK if summary["passed"] else EXIT_VERDICT_FAILED)
    assert summary["theorem"] == "T51"
    assert summary["convergence"]["converged"] is True
    symmetric = next(item for item in summary["checks"] if item["check"] == "symmetric_specialization")
    assert symmetric["verdict"] is True
    assert symmetric["coupled_iters"] == symmetric["single_iters"]
    assert {"convergence.csv", "trajectory_u_norms.csv", "trajectory_v_norms.csv"} <= set(summary["artifacts"])


def test_t14_without_mass_exits_2(tmp_path, capsys):
    config = _config(tmp_path, fixed_point={"theorem": "T14", **FIXED_POINT_RUN, "p": 1.5})
    code = main(["simulate-nonlinear", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIGURATION
    assert "m > 0" in capsys.readouterr().err
