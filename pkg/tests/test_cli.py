import json

import numpy as np
import pytest
import yaml

from torsion_flow import __version__
from torsion_flow.cli import main
from torsion_flow.flow import FlowKind, FlowState
from torsion_flow.lie_algebra import StructureConstants
from torsion_flow.reporting import (
    TRAJECTORY_COLUMNS,
    read_csv,
    trajectory_frame,
    write_trajectory,
)
from torsion_flow.solver import integrate, preset


def first_line(result):
    return result.output.splitlines()[0]


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_presets_table(runner):
    result = runner.invoke(main, ["presets"])
    assert result.exit_code == 0
    for name in ("pdq", "prequant", "heisenberg", "rossi", "su2", "sl2_hyperbolic"):
        assert name in result.output


def test_classify_su2(runner):
    result = runner.invoke(main, ["classify", "--preset", "su2"])
    assert result.exit_code == 0
    assert first_line(result) == "SU2, unimodular, fixed point (0,1), Attracting"


def test_classify_heisenberg(runner):
    result = runner.invoke(main, ["classify", "--preset", "heisenberg"])
    assert result.exit_code == 0
    assert first_line(result) == "Heisenberg, fixed points: all"


def test_classify_from_json_constants(runner, tmp_path):
    path = tmp_path / "e11.json"
    path.write_text(json.dumps({"structure_constants": {"c3_12": -1.0}}))
    result = runner.invoke(main, ["classify", "-i", str(path)])
    assert result.exit_code == 0
    assert first_line(result) == "E(1,1), no torsion-free J"


def test_classify_from_yaml_raw_constants(runner, tmp_path):
    su2 = StructureConstants.from_entries({(1, 2, 3): 1.0, (2, 1, 3): -1.0, (3, 1, 2): 1.0})
    path = tmp_path / "su2.yaml"
    path.write_text(yaml.safe_dump({"raw_constants": {"constants": su2.tensor.tolist(), "theta": [1.0, 0.0, 0.0]}}))
    result = runner.invoke(main, ["classify", "-i", str(path)])
    assert result.exit_code == 0
    assert first_line(result).startswith("SU2, unimodular")


def test_classify_preset_with_parameter(runner):
    result = runner.invoke(main, ["classify", "--preset", "prequant", "--K", "-1"])
    assert result.exit_code == 0
    assert first_line(result) == "SL~(2,R), unimodular, fixed point (0,1), Repelling"


@pytest.mark.parametrize(
    "args",
    [
        ["classify", "--preset", "torus"],
        ["classify"],
        ["classify", "--preset", "prequant", "--K", "0"],
        ["classify", "-i", "missing.json"],
    ],
)
def test_input_errors_exit_1(runner, args):
    result = runner.invoke(main, args)
    assert result.exit_code == 1


def test_jacobi_violation_exits_1(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"structure_constants": {"c2_23": 1.0, "c3_12": 1.0}}))
    result = runner.invoke(main, ["classify", "-i", str(path)])
    assert result.exit_code == 1
    assert "Jacobi" in result.output


def test_simulate_degenerate_circle_bundle(runner, tmp_path):
    out = tmp_path / "pdq.csv"
    result = runner.invoke(main, ["simulate", "--preset", "pdq", "--K", "1", "-o", str(out)])
    assert result.exit_code == 0
    frame, comments = read_csv(out)
    assert list(frame.columns) == TRAJECTORY_COLUMNS
    assert comments[-1].startswith("event: domain_exit field=B")
    assert frame["t"].iloc[-1] == pytest.approx(0.5, abs=1e-2)
    assert frame["phi"].isna().all()


def test_simulate_heisenberg_is_constant(runner, tmp_path):
    out = tmp_path / "h.csv"
    result = runner.invoke(main, ["simulate", "--preset", "heisenberg", "--c0", "2", "-o", str(out)])
    assert result.exit_code == 0
    frame, comments = read_csv(out)
    assert len(frame) == 200
    assert np.all(frame["c"] == 2.0)
    assert np.all(frame["W"] == 0.0)
    assert comments == ["event: completed time=1"]


def test_simulate_rossi_reaches_standard_structure(runner, tmp_path):
    out = tmp_path / "rossi.csv"
    args = ["simulate", "--preset", "rossi:0.5", "--kind", "normalized", "--t-end", "50", "-o", str(out)]
    result = runner.invoke(main, args)
    assert result.exit_code == 0
    frame, _ = read_csv(out)
    assert abs(frame["a"].iloc[-1]) < 1e-6
    assert abs(frame["c"].iloc[-1] - 1.0) < 1e-6


def test_csv_round_trip_is_exact(tmp_path):
    nd, _ = preset("su2")
    trajectory = integrate(FlowKind.COUPLED_F, nd, FlowState(0.1, 2.0, 1.0, phi=0.0), 0.1)
    out = tmp_path / "f.csv"
    write_trajectory(trajectory, out)
    frame, _ = read_csv(out)
    expected = trajectory_frame(trajectory)
    for column in ("t", "a", "c", "B", "phi", "torsion_re", "torsion_im", "W", "E_H"):
        assert np.array_equal(frame[column].to_numpy(), expected[column].to_numpy())


def test_portrait_grid(runner, tmp_path):
    out = tmp_path / "portrait.csv"
    args = ["portrait", "--preset", "sl2_hyperbolic", "--a-range=-2:2", "--c-range=0:2", "--grid", "20x20", "-o", str(out)]
    result = runner.invoke(main, args)
    assert result.exit_code == 0
    frame, _ = read_csv(out)
    assert len(frame) == 400
    assert (frame["c"] > 0).all()


def test_portrait_rejects_negative_c(runner):
    result = runner.invoke(main, ["portrait", "--preset", "su2", "--c-range=-1:2"])
    assert result.exit_code == 1


def test_entropy_summary(runner, tmp_path):
    out = tmp_path / "entropy.csv"
    result = runner.invoke(main, ["entropy", "--preset", "su2", "--t-end", "0.2", "-o", str(out)])
    assert result.exit_code == 0
    assert "monotone: yes, max_violation < 1e-8" in result.output
    assert "constraint conserved: yes" in result.output
    frame, comments = read_csv(out)
    assert (frame["derivative"] < 0).all()
    assert any("matched_weighting: Unweighted" in c for c in comments)


def test_entropy_heisenberg_zero_derivatives(runner, tmp_path):
    out = tmp_path / "flat.csv"
    result = runner.invoke(main, ["entropy", "--preset", "heisenberg", "--t-end", "0.5", "-o", str(out)])
    assert result.exit_code == 0
    frame, _ = read_csv(out)
    assert (frame["derivative"] == 0.0).all()


def test_verify_passes(runner):
    result = runner.invoke(main, ["verify", "--cases", "5"])
    assert result.exit_code == 0
    assert "all suites pass" in result.output


def test_verify_corrupted_exits_3(runner, tmp_path):
    out = tmp_path / "replay.json"
    result = runner.invoke(main, ["verify", "--cases", "5", "--corrupt", "-o", str(out)])
    assert result.exit_code == 3
    assert "# replay:" in result.output
    failures = json.loads(out.read_text())
    assert failures and all(f["suite"] == "frame invariance" for f in failures)
