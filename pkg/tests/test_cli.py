import csv
import math
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from richkde import lagrange_weights, optimal_bandwidth, spread_bandwidths
from richkde.cli import (
    EXIT_INPUT,
    EXIT_IO,
    EXIT_NUMERIC,
    InputFormatError,
    main,
    parse_axis,
    parse_distribution,
    parse_grid,
    parse_report,
    read_sample,
    read_sweep,
)

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def point_file(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("0.0\n")
    return path


class TestGridSpec:
    def test_inclusive_decimal(self):
        axis = parse_axis("-3:0.1:3")
        assert len(axis) == 61
        assert axis[0] == -3.0 and axis[-1] == 3.0 and axis[30] == 0.0
        assert axis[1] == -2.9

    def test_single_point_forms(self):
        assert parse_axis("0:0:1") == [0.0]
        assert parse_axis("1.5") == [1.5]

    def test_product(self):
        grid = parse_grid("0:1:1,5:1:6")
        assert grid.points.tolist() == [[0, 5], [0, 6], [1, 5], [1, 6]]

    def test_single_axis_repeated(self):
        assert parse_grid("0:1:1", 2).m == 4

    @pytest.mark.parametrize("spec", ["a:1:2", "0:1", "2:1:0", "0:-1:2", "nan"])
    def test_malformed(self, spec):
        with pytest.raises(InputFormatError):
            parse_grid(spec)

    def test_axis_count_mismatch(self):
        with pytest.raises(InputFormatError):
            parse_grid("0:1:1,0:1:1", 3)


class TestParsers:
    def test_mixture(self):
        dist = parse_distribution("mixture:0.5/-1/1;0.5/1/1", 1)
        assert dist.describe() == parse_distribution(dist.describe(), 1).describe()
        assert dist.density([[0.0]])[0] == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-15)

    def test_unknown_distribution(self):
        with pytest.raises(InputFormatError):
            parse_distribution("uniform", 1)

    def test_read_sample_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("x,y\n1,2\n3,4\n")
        assert read_sample(path, header=True).data.tolist() == [[1, 2], [3, 4]]

    def test_read_sample_line_number(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(InputFormatError, match="line 2"):
            read_sample(path)


class TestEval:
    def test_single_point(self, point_file, capsys):
        code, out, _ = run(["eval", "--input", point_file, "--h", 1.0, "--grid", "0:0:1"], capsys)
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["x_1", "density"]
        assert round(float(rows[1][1]), 6) == 0.398942

    def test_r1_matches_explicit_bandwidth(self, capsys):
        sample = DATA / "golden_sample.csv"
        h = optimal_bandwidth(1000, 1, 1)
        _, by_r, _ = run(["eval", "--input", sample, "--r", 1, "--grid=-3:0.5:3"], capsys)
        _, by_h, _ = run(["eval", "--input", sample, "--bandwidths", repr(h), "--grid=-3:0.5:3"], capsys)
        assert by_r == by_h

    def test_golden_r2(self, tmp_path, capsys):
        out = tmp_path / "eval.csv"
        code, _, _ = run(["eval", "--input", DATA / "golden_sample.csv", "--r", 2,
                          "--grid=-3:0.1:3", "--output", out], capsys)
        assert code == 0
        got = np.array(read_rows(out)[1:], dtype=float)
        want = np.array(read_rows(DATA / "golden_eval_r2.csv")[1:], dtype=float)
        assert_allclose(got[:, 0], want[:, 0], rtol=0, atol=0)
        assert_allclose(got[:, 1], want[:, 1], rtol=1e-12)

    def test_golden_shape(self):
        # extrapolated curve near the standard normal peak, roughly symmetric
        vals = np.array(read_rows(DATA / "golden_eval_r2.csv")[1:], dtype=float)
        peak = vals[np.argmax(vals[:, 1])]
        assert abs(peak[0]) <= 0.3
        assert 0.35 < peak[1] < 0.45
        assert vals[0, 1] < 0.02 and vals[-1, 1] < 0.02

    def test_golden_sample_regenerates(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        run(["sample", "--n", 1000, "--seed", 42, "--output", out], capsys)
        assert out.read_bytes() == (DATA / "golden_sample.csv").read_bytes()

    def test_two_dimensional(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        path.write_text("0,0\n1,1\n")
        code, out, _ = run(["eval", "--input", path, "--h", 1.0, "--grid", "0:1:1"], capsys)
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["x_1", "x_2", "density"]
        assert len(rows) == 5

    def test_clamp(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        path.write_text("-2\n2\n")
        args = ["eval", "--input", path, "--bandwidths", "0.2,0.6", "--grid=-4:0.25:4"]
        _, raw, _ = run(args, capsys)
        _, clamped, _ = run(args + ["--clamp"], capsys)
        raw_vals = [float(r[1]) for r in list(csv.reader(raw.splitlines()))[1:]]
        clamped_vals = [float(r[1]) for r in list(csv.reader(clamped.splitlines()))[1:]]
        assert min(raw_vals) < 0
        assert min(clamped_vals) >= 0

    def test_malformed_csv_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("0.1\nabc\n")
        code, _, err = run(["eval", "--input", path, "--h", 1, "--grid", "0"], capsys)
        assert code == EXIT_INPUT
        assert "line 2" in err

    def test_bad_grid_exit_2(self, point_file, capsys):
        code, _, _ = run(["eval", "--input", point_file, "--h", 1, "--grid", "0:x:1"], capsys)
        assert code == EXIT_INPUT

    def test_missing_input_exit_4(self, tmp_path, capsys):
        code, _, _ = run(["eval", "--input", tmp_path / "nope.csv", "--h", 1, "--grid", "0"], capsys)
        assert code == EXIT_IO

    def test_unwritable_output_exit_4(self, point_file, tmp_path, capsys):
        code, _, _ = run(["eval", "--input", point_file, "--h", 1, "--grid", "0",
                          "--output", tmp_path / "missing" / "out.csv"], capsys)
        assert code == EXIT_IO

    def test_close_bandwidths_exit_3(self, point_file, capsys):
        code, _, err = run(["eval", "--input", point_file, "--bandwidths", "1,1.0000001", "--grid", "0"], capsys)
        assert code == EXIT_NUMERIC
        assert "ill-conditioned" in err

    def test_conflicting_flags_exit_2(self, point_file, capsys):
        assert run(["eval", "--input", point_file, "--h", 1, "--r", 2, "--grid", "0"], capsys)[0] == EXIT_INPUT


class TestWeights:
    def test_two_bandwidths(self, capsys):
        code, out, _ = run(["weights", "--bandwidths", "1,2"], capsys)
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["i", "h", "c", "constraint_residual"]
        assert round(float(rows[1][2]), 6) == 1.333333
        assert round(float(rows[2][2]), 6) == -0.333333
        assert all(abs(float(r[3])) <= 1e-15 for r in rows[1:3])
        assert rows[3][0] == "max_abs_weight"

    def test_single(self, capsys):
        _, out, _ = run(["weights", "--bandwidths", "1"], capsys)
        assert list(csv.reader(out.splitlines()))[1][2] == "1.0"

    def test_close_pair_exit_3(self, capsys):
        code, _, err = run(["weights", "--bandwidths", "1,1.0000001"], capsys)
        assert code == EXIT_NUMERIC
        assert "ill-conditioned" in err

    def test_from_n_d(self, capsys):
        _, out, _ = run(["weights", "--n", 1000, "--d", 1, "--r", 3], capsys)
        rows = list(csv.reader(out.splitlines()))[1:4]
        bw = spread_bandwidths(optimal_bandwidth(1000, 1, 3), 3)
        assert [float(r[1]) for r in rows] == list(bw.values)
        assert [float(r[2]) for r in rows] == lagrange_weights(bw).tolist()

    def test_needs_bandwidths_or_n_d(self, capsys):
        assert run(["weights", "--n", 10], capsys)[0] == EXIT_INPUT


class TestBenchmark:
    def test_report_round_trip_and_rerun(self, tmp_path, capsys):
        args = ["benchmark", "--n-list", "100,200,400,800", "--trials", 20, "--seed", 3, "--grid", "0"]
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert run(args + ["--output", a], capsys)[0] == 0
        assert run(args + ["--output", b], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        rep = parse_report(a.read_text())
        assert rep["config"]["seed"] == "3"
        assert [row["n"] for row in rep["table"]] == [100, 200, 400, 800]
        assert rep["table"][0]["h_star"] == optimal_bandwidth(100, 1, 1)
        written = [line.split(" = ")[1] for line in a.read_text().splitlines() if line.startswith("table.0")]
        assert written[0].split(",")[2] == repr(rep["table"][0]["mse"])

    def test_rates(self, tmp_path, capsys):
        r1, r2 = tmp_path / "r1.txt", tmp_path / "r2.txt"
        base = ["benchmark", "--d", 1, "--n-list", "250,500,1000,2000,4000,8000",
                "--trials", 200, "--seed", 42, "--grid", "0"]
        run(base + ["--r", 1, "--output", r1], capsys)
        run(base + ["--r", 2, "--output", r2], capsys)
        rep1, rep2 = parse_report(r1.read_text()), parse_report(r2.read_text())
        assert -0.95 <= rep1["slope"] <= -0.65
        assert rep2["table"][-1]["mse"] < rep1["table"][-1]["mse"]

    def test_short_n_list_exit_3(self, capsys):
        assert run(["benchmark", "--n-list", "100,200", "--trials", 3], capsys)[0] == EXIT_NUMERIC


class TestSweep:
    def test_csv_layout(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, _, _ = run(["sweep", "--n", 300, "--h-range", "0.1,0.6,4", "--trials", 10,
                          "--seed", 5, "--output", out], capsys)
        assert code == 0
        rows = read_rows(out)
        assert rows[0] == ["h1", "h2", "mse"]
        cells, single = read_sweep(out)
        assert len(cells) == 16 and len(single) == 4
        for (a, b), mse in cells.items():
            assert (mse is None) == (a == b)
        best = min(m for m in cells.values() if m is not None)
        assert best <= min(single.values())

    def test_constrained_feasibility(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        run(["sweep", "--n", 1000, "--h-range", "0.1,0.8,10", "--trials", 20, "--seed", 42,
             "--grid", "0", "--mode", "constrained", "--output", out], capsys)
        cells, _ = read_sweep(out)
        assert sum(m is not None for m in cells.values()) >= 80

    def test_explicit_lists(self, capsys):
        code, out, _ = run(["sweep", "--n", 100, "--h1-list", "0.2,0.3", "--h2-list", "0.5",
                            "--trials", 4, "--grid", "0"], capsys)
        assert code == 0
        assert len(out.splitlines()) == 1 + 2 + 3

    def test_needs_range(self, capsys):
        assert run(["sweep", "--trials", 4], capsys)[0] == EXIT_INPUT
