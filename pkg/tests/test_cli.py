import hashlib
import json

import pytest

from builders import SCENARIOS
from fedsat.cli import main

GOLDS = str(SCENARIOS / "golds_reference.json")
BEDCS = str(SCENARIOS / "bedcs_reference.json")
GAP = str(SCENARIOS / "gap_federation.json")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestSimulate:
    def test_bedcs_fails(self, capsys, tmp_path):
        code, out, err = run(capsys, "simulate", BEDCS, "--out", tmp_path)
        assert code == 1
        report = json.loads(out)
        assert report["exit_code"] == 1 and report["compliance_summary"]["fail"] > 0
        assert "min_dcp_coverage_fraction" in err

    def test_golds_passes(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", GOLDS, "--out", tmp_path)
        assert code == 0
        report = json.loads(out)
        assert report["compliance_summary"]["fail"] == 0
        assert report["scenario_digest"] == hashlib.sha256(open(GOLDS, "rb").read()).hexdigest()
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert set(metrics["report"]["per_dcp"]) == {d["id"] for d in json.load(open(GOLDS))["dcps"]}
        assert (tmp_path / "windows.csv").read_text().startswith("satellite_id,target_id,kind,start_s,end_s\n")

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "simulate", tmp_path / "nope.json", "--out", tmp_path)
        assert code == 2
        assert "error" in err

    def test_invalid_scenario_reports_rule(self, capsys, tmp_path):
        doc = json.load(open(GAP))
        doc["satellites"][0]["elements"]["eccentricity"] = 1.5
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        code, _, err = run(capsys, "simulate", p, "--out", tmp_path)
        assert code == 2
        assert "LEO-1: eccentricity_range" in err

    def test_csv_format_and_overrides(self, capsys, tmp_path):
        code, out, _ = run(capsys, "simulate", GAP, "--out", tmp_path, "--format", "csv",
                           "--step-s", "20", "--horizon-s", "7200")
        report = json.loads(out)
        assert report["overrides"]["step_s"] == 20.0 and report["overrides"]["horizon_s"] == 7200.0
        assert report["metrics_json_path"] is None
        assert (tmp_path / "per_dcp.csv").exists() and (tmp_path / "per_satellite.csv").exists()
        assert code in (0, 1)

    def test_byte_identical_outputs(self, capsys, tmp_path):
        for d in ("a", "b"):
            assert run(capsys, "simulate", GOLDS, "--out", tmp_path / d)[0] == 0
        for name in ("windows.csv", "metrics.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestAdmit:
    def test_three_watt(self, capsys):
        code, out, _ = run(capsys, "admit", GAP, SCENARIOS / "candidate_3w.json")
        assert code == 1
        assert "max_peak_power_w" in [r["rule"] for r in json.loads(out)["failed_rules"]]

    def test_duplicate(self, capsys):
        assert run(capsys, "admit", GAP, SCENARIOS / "candidate_duplicate.json")[0] == 2

    def test_gap_closer(self, capsys):
        code, out, _ = run(capsys, "admit", GAP, SCENARIOS / "candidate_gap_closer.json")
        assert code == 0
        assert json.loads(out)["accepted"] is True


class TestCompare:
    def test_identical(self, capsys):
        code, out, _ = run(capsys, "compare", GAP, GAP)
        assert code == 0
        for row in json.loads(out)["per_dcp"]:
            assert row["coverage_delta"] == 0.0
            assert row["max_revisit_delta_s"] == 0.0

    def test_golds_dominates_bedcs(self, capsys):
        code, out, _ = run(capsys, "compare", BEDCS, GOLDS)
        assert code == 0
        rows = json.loads(out)["per_dcp"]
        assert len(rows) == 10
        assert all(r["coverage_delta"] >= 0.0 for r in rows)

    def test_unparsable(self, capsys, tmp_path):
        p = tmp_path / "junk.json"
        p.write_text("{ not json")
        assert run(capsys, "compare", GAP, p)[0] == 2


class TestFault:
    def test_unknown_id(self, capsys):
        assert run(capsys, "fault", GAP, "NOPE", "0")[0] == 2

    def test_sole_satellite(self, capsys):
        assert run(capsys, "fault", GAP, "LEO-1", "100")[0] == 1

    def test_recoverable(self, capsys):
        code, out, _ = run(capsys, "fault", SCENARIOS / "fault_recoverable.json", "GEO-MAIN", "100")
        assert code == 0
        result = json.loads(out)
        assert result["compliant_after"] is True
        assert result["search_cost"] == 8

    def test_off_grid_time(self, capsys):
        assert run(capsys, "fault", GAP, "LEO-1", "5")[0] == 2


class TestValidateRetire:
    def test_validate_ok(self, capsys):
        code, out, _ = run(capsys, "validate", GOLDS)
        assert code == 0 and json.loads(out) == {"valid": True, "violations": []}

    def test_validate_reports_violations(self, capsys, tmp_path):
        doc = json.load(open(GAP))
        doc["ground_stations"] = []
        p = tmp_path / "s.json"
        p.write_text(json.dumps(doc))
        code, out, _ = run(capsys, "validate", p)
        assert code == 2
        assert {"subject": "scenario", "rule": "at_least_one_ground_station"} in json.loads(out)["violations"]

    def test_retire(self, capsys):
        code, out, _ = run(capsys, "retire", SCENARIOS / "fault_recoverable.json")
        result = json.loads(out)
        assert result["removed_id"] in {"GEO-MAIN", "GEO-HOSTED"}
        assert code == (0 if result["still_compliant"] else 1)

    def test_retire_single_satellite(self, capsys):
        assert run(capsys, "retire", GAP)[0] == 2


def test_no_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
