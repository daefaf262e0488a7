import json
import math

import pytest

from app.main import build_parser, main
from app.utils.output import format_number


def _read_csv(path):
    lines = path.read_text().splitlines()
    metadata = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    return metadata, body[0].split(","), [[float(v) for v in row.split(",")] for row in body[1:]]


def test_steady_without_drive(tmp_path):
    """Omega = 0 leaves the pair in the ground state"""
    out = tmp_path / "steady.json"
    assert main(["steady", "--omega", "0", "--r", "1", "-o", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["metadata"]["project"] == "qjump"
    assert payload["result"]["dicke_populations"]["g"] == pytest.approx(1.0)
    assert payload["result"]["analytic_populations"]["g"] == pytest.approx(1.0)


def test_steady_closed_form_side_by_side(tmp_path):
    """Numeric and closed-form populations agree for independent atoms"""
    out = tmp_path / "steady.json"
    assert main(["steady", "--omega", "0.3", "--no-coupling", "-o", str(out)]) == 0
    result = json.loads(out.read_text())["result"]
    assert result["dicke_populations"]["e"] == pytest.approx(0.3 ** 4 / 1.18 ** 2)
    assert result["max_abs_difference"] < 1e-10


def test_steady_unequal_drive(tmp_path, capsys):
    """Unequal drives write the numeric state; an explicit closed-form request fails"""
    out = tmp_path / "steady.json"
    assert main(["steady", "--omega", "0.3", "--omega2", "0.1", "-o", str(out)]) == 0
    result = json.loads(out.read_text())["result"]
    assert "analytic_populations" not in result
    assert sum(result["dicke_populations"][label] for label in "gsae") == pytest.approx(1.0)

    manifest = tmp_path / "run.json"
    manifest.write_text(json.dumps({"analytic": True}))
    args = ["steady", "--config", str(manifest), "--omega", "0.3", "--omega2", "0.1", "-o", str(out)]
    assert main(args) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "ClosedFormNotApplicable"


def test_invalid_configuration_exit_code(tmp_path, capsys):
    """Out-of-range values and unknown presets exit with 2"""
    assert main(["steady", "--r", "-1"]) == 2
    assert "r_over_lambda0" in capsys.readouterr().err
    assert main(["steady", "--r", "1e-7", "--no-coupling"]) == 2
    assert "r_over_lambda0" in capsys.readouterr().err
    assert main(["pattern", "--preset", "fig9"]) == 2
    manifest = tmp_path / "run.json"
    manifest.write_text(json.dumps({"omega_over_A": 0.3, "bogus": 1}))
    assert main(["steady", "--config", str(manifest)]) == 2


def test_flags_override_manifest(tmp_path):
    """Flags win over the JSON manifest, which wins over the preset"""
    manifest = tmp_path / "run.json"
    manifest.write_text(json.dumps({"omega_over_A": 0.5, "r_over_lambda0": 2.0}))
    out = tmp_path / "steady.json"
    assert main(["steady", "--preset", "fig4", "--config", str(manifest), "--omega", "0.2", "-o", str(out)]) == 0
    config = json.loads(out.read_text())["metadata"]["config"]
    assert config["omega_over_A"] == 0.2
    assert config["r_over_lambda0"] == 2.0
    assert config["include_coupling"] is False


def test_pattern_csv(tmp_path):
    """Header, metadata, pole rows and closed-form column"""
    out = tmp_path / "pattern.csv"
    assert main(["pattern", "--preset", "fig4", "--n-theta", "5", "--n-phi", "16", "--closed-form", "-o", str(out)]) == 0
    metadata, header, rows = _read_csv(out)
    assert any(line.startswith("# version:") for line in metadata)
    assert header == ["theta", "phi", "intensity", "closed_form"]
    assert len(rows) == 5 * 16
    assert rows[0][0] == 0.0 and rows[16][0] == pytest.approx(math.pi / 4)
    assert all(abs(row[2]) < 1e-20 for row in rows[:16])
    assert all(row[2] == pytest.approx(row[3], rel=1e-10, abs=1e-20) for row in rows)


def test_g2_csv(tmp_path):
    """Ring output with the exact maximal-bunching value in the metadata"""
    out = tmp_path / "g2.csv"
    assert main(["g2", "--preset", "fig5", "--n-phi", "720", "-o", str(out)]) == 0
    metadata, header, rows = _read_csv(out)
    assert header == ["phi", "g2"]
    assert len(rows) == 720
    peak = next(line for line in metadata if line.startswith("# maximal_bunching:"))
    assert json.loads(peak.split(": ", 1)[1])["g2"] == pytest.approx(42.975, abs=0.01)
    assert max(row[1] for row in rows) > 1.0
    assert min(row[1] for row in rows) == pytest.approx((1 - 1 / 2.18) ** 2, abs=1e-3)


def test_trajectory_jsonl_is_reproducible(tmp_path):
    """Seeded reruns write byte-identical files"""
    args = ["trajectory", "--omega", "0.3", "--r", "1", "-N", "5", "--t-final", "2", "--seed", "7"]
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(args + ["-o", str(first)]) == 0
    assert main(args + ["-o", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = [json.loads(line) for line in first.read_text().splitlines()]
    assert "metadata" in lines[0] and "summary" in lines[-1]
    assert "output" not in lines[0]["metadata"]["config"]
    assert [line["index"] for line in lines[1:-1]] == list(range(5))


def test_trajectory_ground_state_has_no_jumps(tmp_path):
    """Undriven ground state gives empty jump lists"""
    out = tmp_path / "t.jsonl"
    assert main(["trajectory", "--omega", "0", "--initial", "11", "-N", "3", "--t-final", "1", "-o", str(out)]) == 0
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert all(line["jumps"] == [] for line in lines[1:-1])
    assert lines[-1]["summary"]["total_jumps"] == 0


def test_validate_negative_control(tmp_path):
    """Flipping the sign of C breaks the quadrature identity"""
    out = tmp_path / "report.json"
    code = main(["validate", "--corrupt-coupling", "-N", "50", "--dt", "1e-2", "--t-final", "1", "-o", str(out)])
    assert code == 1
    report = json.loads(out.read_text())["result"]
    checks = {check["name"]: check for check in report["checks"]}
    assert len(checks) == 8
    assert checks["quadrature_identity"]["passed"] is False
    assert checks["steady_state_closed_form"]["passed"] is True


def test_hidden_flag_not_in_help():
    """The negative-control flag is not advertised"""
    help_text = build_parser()._subparsers._group_actions[0].choices["validate"].format_help()
    assert "--corrupt-coupling" not in help_text


def test_number_format_round_trips():
    """17 significant digits reproduce the double exactly"""
    for value in (math.pi, 1 / 3, 42.97530864197531, 1e-300):
        assert float(format_number(value)) == value
    assert format_number(float("nan")) == "nan"
