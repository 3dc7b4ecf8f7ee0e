import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest

from longrun.cli import EXIT_DATA, EXIT_OK, EXIT_REJECT, EXIT_USAGE, main, read_dataset
from longrun.estimation import MeanEstimatorSpec
from longrun.lrt import TestReport, run_test


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write_csv(path, xs, ys, header="x,y"):
    lines = [header] + [f"{float(x)!r},{float(y)!r}" for x, y in zip(xs, ys)]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def alternating(tmp_path):
    return write_csv(tmp_path / "alt.csv", [0.0, 1.0, 2.0, 3.0], [1.0, 10.0, -1.0, -10.0])


@pytest.fixture
def clustered(tmp_path):
    x = np.linspace(0, 1, 40)
    y = np.random.default_rng(1).normal(size=40) * np.where(x < 0.5, 0.01, 10.0)
    return write_csv(tmp_path / "clustered.csv", x, y)


class TestTestCommand:
    def test_fail_to_reject(self, alternating):
        code, out, _ = run(["test", "--input", str(alternating), "--estimator", "constant"])
        assert code == EXIT_OK
        assert "longest run L_n          1" in out
        assert "fail to reject H0" in out

    def test_reject_exit_code(self, clustered):
        code, out, _ = run(["test", "--input", str(clustered), "--estimator", "constant"])
        assert code == EXIT_REJECT
        assert "reject H0" in out

    def test_tied_residuals(self, tmp_path):
        path = write_csv(tmp_path / "tied.csv", [0, 1, 2, 3], [0, 10, 0, 10])
        code, out, _ = run(["test", "--input", str(path), "--estimator", "constant", "--format", "json"])
        d = json.loads(out)
        assert code == EXIT_OK
        assert d["statistic"] == 2
        assert d["p_value_exact"] == {"numerator": "2", "denominator": "3"}

    def test_too_small(self, tmp_path):
        path = write_csv(tmp_path / "three.csv", [0, 1, 2], [1, 2, 3])
        code, _, err = run(["test", "--input", str(path), "--estimator", "ols"])
        assert code == EXIT_DATA
        assert "sample too small (minimum 4)" in err

    def test_missing_file(self, tmp_path):
        code, _, err = run(["test", "--input", str(tmp_path / "nope.csv")])
        assert code == EXIT_DATA
        assert "cannot read" in err

    @pytest.mark.parametrize(
        "body, fragment",
        [
            ("x,y\n0,1\n1,2\n2\n3,4\n", "line 4"),
            ("x,y\n0,1\n1,abc\n2,3\n3,4\n", "line 3: non-numeric"),
            ("a,b\n0,1\n", "line 1: expected header"),
            ("x,y\n0,1\n1,inf\n2,3\n3,4\n", "line 3: non-finite"),
            ("", "empty input"),
        ],
    )
    def test_malformed(self, tmp_path, body, fragment):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        code, _, err = run(["test", "--input", str(path), "--estimator", "ols"])
        assert code == EXIT_DATA
        assert fragment in err

    def test_unsorted_rows_are_reordered(self, tmp_path):
        path = write_csv(tmp_path / "u.csv", [3, 0, 2, 1, 4], [9.0, 1.0, 4.0, -2.0, 0.5])
        warnings = []
        data = read_dataset(path, warn=warnings.append)
        np.testing.assert_array_equal(data.x, [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(data.y, [1.0, -2.0, 4.0, 9.0, 0.5])
        assert any("reordered" in w for w in warnings)
        code, _, err = run(["test", "--input", str(path), "--estimator", "ols"])
        assert code == EXIT_OK
        assert "reordered" in err

    def test_duplicate_x_note(self, tmp_path):
        path = write_csv(tmp_path / "d.csv", [0, 1, 1, 2], [1.0, 2.0, 3.0, 4.0])
        _, _, err = run(["test", "--input", str(path), "--estimator", "ols"])
        assert "repeated x" in err

    def test_known_needs_model(self, alternating):
        code, _, err = run(["test", "--input", str(alternating), "--estimator", "known"])
        assert code == EXIT_USAGE
        assert "--model" in err

    def test_known_with_model(self, alternating):
        code, out, _ = run(["test", "--input", str(alternating), "--estimator", "known", "--model", "1", "--format", "json"])
        assert code in (EXIT_OK, EXIT_REJECT)
        assert json.loads(out)["estimator"]["kind"] == "known"

    def test_bandwidth_only_with_kernel(self, alternating):
        code, _, _ = run(["test", "--input", str(alternating), "--estimator", "ols", "--bandwidth", "0.2"])
        assert code == EXIT_USAGE

    def test_small_bandwidth_is_data_error(self, clustered):
        code, _, err = run(["test", "--input", str(clustered), "--bandwidth", "1e-6"])
        assert code == EXIT_DATA
        assert "larger bandwidth" in err

    @pytest.mark.parametrize(
        "argv",
        [[], ["test"], ["test", "--input", "f.csv", "--level", "1.5"], ["dist", "--n", "x"], ["frobnicate"], ["dist", "--n", "10", "--wat"]],
    )
    def test_usage_errors(self, argv):
        code, _, err = run(argv)
        assert code == EXIT_USAGE
        assert "usage error" in err

    def test_json_matches_report(self, clustered):
        code, out, _ = run(["test", "--input", str(clustered), "--estimator", "ols", "--format", "json"])
        data = read_dataset(clustered)
        report = run_test(data, MeanEstimatorSpec("ols"), 0.05)
        assert json.loads(out) == report.to_dict()
        assert TestReport.from_dict(json.loads(out)) == report

    def test_human_shows_exact_rational(self, clustered, monkeypatch):
        monkeypatch.setenv("NO_COLOR", "1")
        _, out, _ = run(["test", "--input", str(clustered), "--estimator", "ols"])
        report = run_test(read_dataset(clustered), MeanEstimatorSpec("ols"), 0.05)
        a = report.attained_level
        assert f"{a.numerator}/{a.denominator}" in out
        assert "\033[" not in out

    def test_csv_format(self, clustered):
        _, out, _ = run(["test", "--input", str(clustered), "--estimator", "ols", "--format", "csv"])
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        assert Fraction(rows[0]["p_value_exact"]) <= Fraction(rows[0]["attained_level_exact"])

    def test_output_file(self, clustered, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(["test", "--input", str(clustered), "--format", "json", "--output", str(target)])
        assert code == EXIT_REJECT
        assert out == ""
        assert json.loads(target.read_text())["reject"] is True


class TestDistCommand:
    def test_n4(self):
        code, out, _ = run(["dist", "--n", "4", "--format", "json"])
        assert code == EXIT_OK
        d = json.loads(out)
        row = d["distribution"][1]
        assert Fraction(int(row["cdf_numerator"]), int(row["cdf_denominator"])) == Fraction(1, 3)
        assert d["distribution"][-1]["cdf"] == 1.0

    def test_n4_human(self):
        _, out, _ = run(["dist", "--n", "4"])
        assert "1/3" in out

    def test_n2(self):
        _, out, _ = run(["dist", "--n", "2", "--format", "json"])
        rows = json.loads(out)["distribution"]
        assert [r["cdf"] for r in rows] == [0.0, 1.0, 1.0]

    def test_n50_levels(self):
        _, out, _ = run(["dist", "--n", "50", "--level", "0.05", "0.10", "--format", "json"])
        crit = json.loads(out)["critical_values"]
        assert [c["critical_value"] for c in crit] == [8, 7]
        assert [round(100 * c["attained_level"], 1) for c in crit] == [4.1, 9.8]

    def test_n100_nearest(self):
        _, out, _ = run(["dist", "--n", "100", "--level", "0.05", "0.10", "--convention", "nearest", "--format", "csv"])
        tail = out.split("\n\n")[1]
        crit = list(csv.DictReader(io.StringIO(tail)))
        assert [round(100 * float(c["attained_level"]), 1) for c in crit] == [5.8, 12.5]

    def test_degenerate_level_flagged(self):
        _, out, _ = run(["dist", "--n", "4", "--level", "0.05"])
        assert "degenerate" in out

    @pytest.mark.parametrize("n", ["1", "0", "10001"])
    def test_n_out_of_range(self, n):
        code, _, _ = run(["dist", "--n", n])
        assert code == EXIT_USAGE


class TestSimulateCommand:
    def test_single_replicate(self):
        code, out, _ = run(["simulate", "--model", "2", "--n", "50", "--c", "1", "--level", "0.05", "--reps", "1", "--seed", "42"])
        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        assert float(rows[0]["rejection_rate"]) in (0.0, 1.0)
        assert float(rows[0]["std_err"]) == 0.0

    def test_compare_paper(self):
        argv = ["simulate", "--model", "1", "--n", "50", "--c", "0", "--level", "0.05", "--reps", "20", "--compare-paper", "--format", "json"]
        _, out, _ = run(argv)
        (row,) = json.loads(out)
        assert row["paper_reference_value"] is not None
        assert row["deviation_pp"] == pytest.approx(100 * (row["rejection_rate"] - row["paper_reference_value"]), abs=1e-3)
        assert row["flag"] in ("", "DEVIATES")

    def test_same_seed_same_bytes(self):
        argv = ["simulate", "--model", "3", "--n", "50", "--c", "0.5", "1", "--level", "0.1", "--reps", "15", "--seed", "7"]
        assert run(argv)[1] == run(argv)[1]

    def test_n_out_of_range(self):
        code, _, err = run(["simulate", "--n", "5", "--reps", "1"])
        assert code == EXIT_USAGE
        assert "--n" in err

    def test_human_format(self):
        _, out, _ = run(["simulate", "--model", "1", "--n", "50", "--c", "1", "--level", "0.05", "--reps", "4", "--format", "human", "--compare-paper"])
        assert "4 replicates per cell" in out
        assert "publ." in out.splitlines()[0]
