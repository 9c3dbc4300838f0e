import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from richkde import EvaluationGrid, InvalidArgumentError, Sample, gaussian_kernel, kde_evaluate, kde_evaluate_grid
from richkde.kernel_core import kde_evaluate_multi

from oracles import trapezoid

SQRT_2PI = math.sqrt(2 * math.pi)


class TestGaussianKernel:
    def test_origin_1d(self):
        assert gaussian_kernel([0.0], 1) == pytest.approx(0.3989422804, abs=1e-10)

    def test_origin_2d(self):
        assert gaussian_kernel([0.0, 0.0], 2) == pytest.approx(0.1591549431, abs=1e-10)

    def test_unit_1d(self):
        assert gaussian_kernel([1.0], 1) == pytest.approx(math.exp(-0.5) / SQRT_2PI, rel=1e-15)
        assert gaussian_kernel([1.0], 1) == pytest.approx(0.2419707245, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            gaussian_kernel([0.0, 1.0], 1)

    def test_far_tail_is_zero(self):
        assert gaussian_kernel([40.0], 1) == 0.0

    @given(st.floats(-30, 30), st.floats(-30, 30))
    def test_maximal_at_origin(self, a, b):
        assert 0 < gaussian_kernel([a, b], 2) <= gaussian_kernel([0, 0], 2) or (a * a + b * b) / 2 > 700


class TestKdeEvaluate:
    def test_single_point_at_query(self, backend):
        assert kde_evaluate(Sample([0.7]), 1.0, [0.7], backend=backend) == pytest.approx(1 / SQRT_2PI, rel=1e-15)

    def test_single_point_2d(self, backend):
        val = kde_evaluate(Sample([[1.0, -2.0]]), 2.0, [1.0, -2.0], backend=backend)
        assert val == pytest.approx(1 / (4 * 2 * math.pi), rel=1e-15)

    def test_two_points(self, backend):
        val = kde_evaluate(Sample([-1.0, 1.0]), 1.0, [0.0], backend=backend)
        assert val == pytest.approx(math.exp(-0.5) / SQRT_2PI, rel=1e-15)

    @pytest.mark.parametrize("h", [0.0, -1.0, float("nan")])
    def test_bad_bandwidth(self, h):
        with pytest.raises(InvalidArgumentError):
            kde_evaluate(Sample([0.0]), h, [0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            kde_evaluate(Sample([[0.0, 1.0]]), 1.0, [0.0])

    def test_sample_rejects_nonfinite(self):
        with pytest.raises(InvalidArgumentError):
            Sample([0.0, np.inf])

    def test_sample_is_immutable(self):
        s = Sample([1.0, 2.0])
        with pytest.raises(ValueError):
            s.data[0, 0] = 5.0


class TestKdeGrid:
    def test_one_point_grid(self, backend):
        s = Sample(np.linspace(-1, 1, 7))
        grid = kde_evaluate_grid(s, 0.4, [[0.3]], backend=backend)
        assert grid.shape == (1,)
        assert grid[0] == kde_evaluate(s, 0.4, [0.3], backend=backend)

    def test_elementwise_equals_pointwise(self, backend):
        rng = np.random.default_rng(3)
        s = Sample(rng.normal(size=(300, 2)))
        pts = rng.normal(size=(11, 2))
        grid = kde_evaluate_grid(s, 0.5, pts, backend=backend)
        for k, x in enumerate(pts):
            assert grid[k] == kde_evaluate(s, 0.5, x, backend=backend)

    def test_empty_grid(self):
        with pytest.raises(InvalidArgumentError):
            EvaluationGrid(np.zeros((0, 1)))

    def test_symmetric(self, backend):
        out = kde_evaluate_grid(Sample([-0.8, 0.8]), 0.6, [[-1.3], [1.3]], backend=backend)
        assert out[0] == pytest.approx(out[1], rel=1e-15)

    def test_multi_matches_single(self, backend):
        s = Sample(np.random.default_rng(1).normal(size=200))
        pts = np.linspace(-2, 2, 5)
        multi = kde_evaluate_multi(s, [0.2, 0.5, 0.9], pts, backend=backend)
        for k, h in enumerate([0.2, 0.5, 0.9]):
            assert_allclose(multi[:, k], kde_evaluate_grid(s, h, pts, backend=backend), rtol=0, atol=0)


class TestProperties:
    def test_normalization(self, backend):
        data = np.random.default_rng(5).normal(size=50)
        h = 0.3
        xs = np.arange(data.min() - 8 * h, data.max() + 8 * h + h / 40, h / 20)
        vals = kde_evaluate_grid(Sample(data), h, xs, backend=backend)
        assert abs(trapezoid(vals, xs) - 1.0) < 1e-3

    def test_permutation_invariance(self, backend):
        rng = np.random.default_rng(11)
        data = rng.normal(size=(500, 2))
        pts = rng.normal(size=(6, 2))
        a = kde_evaluate_grid(Sample(data), 0.4, pts, backend=backend)
        b = kde_evaluate_grid(Sample(data[rng.permutation(500)]), 0.4, pts, backend=backend)
        assert_allclose(a, b, rtol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 10.0), st.integers(1, 3))
    def test_scaling(self, s, d):
        rng = np.random.default_rng(d)
        data = rng.normal(size=(40, d))
        x = rng.normal(size=d)
        base = kde_evaluate(Sample(data), 0.7, x)
        scaled = kde_evaluate(Sample(s * data), 0.7 * s, s * x)
        assert scaled == pytest.approx(s ** (-d) * base, rel=1e-12)

    def test_monotone_locality(self, backend):
        dist = np.linspace(0, 6, 61)
        vals = kde_evaluate_grid(Sample([0.0]), 0.5, dist, backend=backend)
        assert np.all(np.diff(vals) < 0)
