import csv
import json

import numpy as np
import pytest

from wdvv_submanifolds.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, dumps, main

from conftest import FIXTURES

GOLDEN = str(FIXTURES / "wdvv_a3.json")
PERTURBED = str(FIXTURES / "wdvv_a3_perturbed.json")
CIRCLE = str(FIXTURES / "circle.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def checks(report):
    return {c["name"]: c for c in report["checks"]}


class TestExitCodes:
    def test_pass(self, capsys):
        code, out, _ = run(capsys, "check-wdvv", GOLDEN)
        rep = json.loads(out)
        assert code == EXIT_OK and rep["pass"]
        assert checks(rep)["wdvv"]["exact_value"] == "0"

    def test_fail(self, capsys):
        code, out, _ = run(capsys, "check-wdvv", PERTURBED)
        rep = json.loads(out)
        assert code == EXIT_FAIL and not rep["pass"]
        assert checks(rep)["wdvv"]["exact_value"] == "51/2500"

    def test_tolerance_override(self, capsys):
        code, _, _ = run(capsys, "check-wdvv", PERTURBED, "--tol-exact", "0.1")
        assert code == EXIT_OK

    @pytest.mark.parametrize("argv", [
        ["check-wdvv", "/no/such/file.json"],
        ["check-wdvv", GOLDEN, "--point", "1,2"],
        ["check-wdvv", GOLDEN, "--point", "0.5,0,0"],
        ["check-wdvv", CIRCLE],
        ["flows", GOLDEN, "--pair", "1,7"],
        ["flows", GOLDEN, "--points", "8"],
        ["no-such-command", GOLDEN],
    ])
    def test_input_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == EXIT_INPUT
        if argv[0] != "no-such-command":
            assert out == ""
            payload = json.loads(err)
            assert payload["schema"] == 1 and payload["error"]["message"]

    def test_malformed_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "check-wdvv", str(bad))
        assert code == EXIT_INPUT and "error" in json.loads(err)


class TestReports:
    def test_fingerprint_and_header(self, capsys):
        _, out, _ = run(capsys, "check-gcr", GOLDEN, "--grid", "3")
        rep = json.loads(out)
        assert list(rep)[:7] == ["schema", "command", "spec_fingerprint", "arithmetic", "n", "l", "checks"]
        assert rep["command"] == "check-gcr" and len(rep["spec_fingerprint"]) == 64
        assert set(checks(rep)) == {"gauss", "ricci", "codazzi"}

    def test_single_point(self, capsys):
        _, out, _ = run(capsys, "check-wdvv", PERTURBED, "--point", "1/3,-2/5,3/7")
        assert checks(json.loads(out))["wdvv"]["exact_value"] == "76/5625"

    def test_float_mode(self, capsys):
        code, out, _ = run(capsys, "check-wdvv", GOLDEN, "--float", "--grid", "3")
        rep = json.loads(out)
        assert code == EXIT_OK and rep["arithmetic"] == "float"
        assert "exact_value" not in checks(rep)["wdvv"]

    def test_timings_are_opt_in(self, capsys):
        _, out, _ = run(capsys, "check-wdvv", GOLDEN, "--grid", "2")
        assert "wall_clock_s" not in out
        _, out, _ = run(capsys, "check-wdvv", GOLDEN, "--grid", "2", "--timings")
        assert all("wall_clock_s" in c for c in json.loads(out)["checks"])

    def test_reduction_scale(self, capsys):
        code, out, _ = run(capsys, "check-reduction", PERTURBED, "--grid", "2", "--c=-1/3")
        rep = json.loads(out)
        assert code == EXIT_OK and rep["c"] == "-1/3"

    def test_algebra_reports_operators(self, capsys):
        _, out, _ = run(capsys, "algebra", GOLDEN, "--point", "1/2,0,1")
        rep = json.loads(out)
        assert len(rep["weingarten_operators"]) == 3
        # e_1 is the unit: c[k][1][j] = delta
        assert [row[0] for row in rep["structure_constants"][0]] == ["1", "0", "0"]

    def test_dumps_is_stable(self):
        assert dumps({"b": 1.0, "a": [0.1, 2]}) == dumps({"b": 1.0, "a": [0.1, 2]})
        assert '"b": 1.0' in dumps({"b": 1.0})


class TestCsvOutputs:
    def test_circle_reconstruction_radius(self, capsys, tmp_path):
        path = tmp_path / "circle.csv"
        code, out, _ = run(capsys, "reconstruct", CIRCLE, "--out", str(path), "--frames")
        assert code == EXIT_OK
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 33
        r = np.array([[float(row["r1"]), float(row["r2"])] for row in rows])
        assert np.max(np.abs(np.hypot(r[:, 0], r[:, 1] - 1.0) - 1.0)) < 1e-6
        assert "T1_1" in rows[0] and "n1_2" in rows[0]

    def test_flow_series(self, capsys, tmp_path):
        path = tmp_path / "flows.csv"
        code, out, _ = run(capsys, "flows", GOLDEN, "--pair", "1,2", "--steps", "3",
                           "--points", "32", "--out", str(path))
        assert code == EXIT_OK
        rep = json.loads(out)
        assert set(checks(rep)) == {"commutator_1_2"}
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["flow", "step", "t", "max_norm", "l2_norm"]
        assert len(rows) == 1 + 2 * 4

    def test_lax_holonomy_single_loop(self, capsys):
        code, out, _ = run(capsys, "lax-holonomy", GOLDEN, "--grid", "2", "--params", "1,-1",
                           "--point", "3/10,-1/5,1/4", "--substeps", "16")
        rep = json.loads(out)
        assert code == EXIT_OK
        assert len(rep["table"]) == 4
        assert checks(rep)["holonomy"]["value"] < 1e-8
