import math

import numpy as np
import pytest
from scipy import stats

from extremal_arrays import (
    InvalidParameterError,
    UnsupportedLawError,
    abs_sup_quantile,
    brownian_kernel,
    constant_kernel,
    constant_scale,
    default_n_points,
    fbm_kernel,
    make_poisson_stream,
    model_b_scale,
    simulate_brown_resnick,
    simulate_penrose_kabluchko,
    sup_quantile,
)
from extremal_arrays.rng import make_rng


def gumbel_cdf(x):
    return np.exp(-np.exp(-x))


class TestPoissonStream:
    def test_first_point_is_gumbel(self):
        rng = make_rng(1)
        first = np.array([make_poisson_stream("gumbel", 1, rng=rng).points[0] for _ in range(20_000)])
        assert stats.kstest(first, gumbel_cdf).statistic <= 0.01

    def test_first_point_is_gumbel_in_bulk(self):
        # the first point is -ln E_1 whatever the stream length
        rng = make_rng(2)
        first = -np.log(rng.standard_exponential(100_000))
        assert stats.kstest(first, gumbel_cdf).statistic <= 0.01
        assert make_poisson_stream("gumbel", 5, rng=make_rng(3)).points[0] == pytest.approx(
            -math.log(make_rng(3).standard_exponential(5)[0])
        )

    def test_strictly_decreasing(self):
        rng = make_rng(4)
        for _ in range(200):
            pts = make_poisson_stream("gumbel", 50, rng=rng).points
            assert np.all(np.diff(pts) < 0)

    def test_lebesgue_mean_count(self):
        rng = make_rng(5)
        counts = [make_poisson_stream("lebesgue", window=1.0, rng=rng).count for _ in range(10_000)]
        assert abs(np.mean(counts) - 2.0) <= 0.05

    def test_lebesgue_points_inside_window(self):
        s = make_poisson_stream("lebesgue", window=3.0, rng=make_rng(6))
        assert np.all(np.abs(s.points) <= 3.0)

    @pytest.mark.parametrize(
        "kwargs",
        [{"intensity": "gumbel", "size": 0}, {"intensity": "lebesgue", "window": 0.0}, {"intensity": "other", "size": 3}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            make_poisson_stream(**kwargs)


class TestQuantiles:
    def test_sup_quantile_single_point(self):
        # P{Z - 1/2 > q} = 1e-4 for Z ~ N(0, 1)
        assert sup_quantile([1.0]) == pytest.approx(stats.norm.isf(1e-4) - 0.5, rel=1e-9)

    def test_abs_sup_quantile_single_point(self):
        assert abs_sup_quantile([4.0]) == pytest.approx(2.0 * stats.norm.isf(5e-5), rel=1e-9)

    def test_zero_variance(self):
        assert sup_quantile([0.0, 0.0]) == 0.0
        assert abs_sup_quantile([0.0]) == 0.0

    def test_default_points_capped(self):
        assert default_n_points(1.0) == 30
        assert default_n_points(100.0) == 10_000


class TestBrownResnick:
    def test_single_point_is_gumbel(self):
        s = simulate_brown_resnick(constant_kernel(0.0, variance=1.0), [0.0], 100_000, rng=make_rng(7))
        assert stats.kstest(s.values[:, 0], gumbel_cdf).statistic <= 0.01
        assert s.flag_rate < 1e-3

    def test_variance_function_does_not_matter(self):
        grid = [1.0, 2.0]
        a = simulate_brown_resnick(brownian_kernel(), grid, 30_000, rng=make_rng(8)).values
        b = simulate_brown_resnick(brownian_kernel(offset=2.0), grid, 30_000, rng=make_rng(9)).values
        for j in range(2):
            assert stats.ks_2samp(a[:, j], b[:, j]).pvalue > 0.01

    def test_degenerate_kernel_gives_equal_coordinates(self):
        s = simulate_brown_resnick(constant_kernel(0.0, variance=0.0), [0.0, 1.0], 1000, rng=make_rng(10))
        assert np.array_equal(s.values[:, 0], s.values[:, 1])

    def test_max_stability(self):
        grid = [0.5, 1.0, 1.5]
        m = 3
        s = simulate_brown_resnick(brownian_kernel(), grid, 3 * 20_000, rng=make_rng(11)).values
        pooled = s.reshape(m, -1, len(grid)).max(axis=0) - math.log(m)
        ref = simulate_brown_resnick(brownian_kernel(), grid, 20_000, rng=make_rng(12)).values
        for j in range(len(grid)):
            assert stats.ks_2samp(pooled[:, j], ref[:, j]).pvalue > 0.01

    def test_flag_rate_at_defaults(self):
        s = simulate_brown_resnick(fbm_kernel(0.5), np.linspace(0.1, 2.0, 8), 20_000, rng=make_rng(13))
        assert s.flag_rate < 1e-3

    def test_tiny_truncation_is_flagged(self):
        s = simulate_brown_resnick(brownian_kernel(), [1.0, 2.0], 2000, n_points=1, rng=make_rng(14))
        assert s.flag_rate > 0.5

    def test_thread_count_does_not_change_output(self):
        a = simulate_brown_resnick(brownian_kernel(), [1.0, 2.0], 10_000, rng=make_rng(15)).values
        b = simulate_brown_resnick(brownian_kernel(), [1.0, 2.0], 10_000, rng=make_rng(15), threads=4).values
        assert a.tobytes() == b.tobytes()

    def test_invalid_arguments(self):
        with pytest.raises(InvalidParameterError):
            simulate_brown_resnick(brownian_kernel(), [1.0], 10, n_points=0, rng=make_rng(16))
        with pytest.raises(InvalidParameterError):
            simulate_brown_resnick(brownian_kernel(), [], 10, rng=make_rng(16))


class TestPenroseKabluchko:
    def test_single_point_survival(self):
        s = simulate_penrose_kabluchko(constant_kernel(0.0, variance=1.0), [0.0], 100_000, rng=make_rng(17))
        assert stats.kstest(s.values[:, 0], lambda x: 1 - np.exp(-2 * x)).statistic <= 0.01
        assert s.flag_rate < 1e-3

    def test_constant_scale_rescales(self):
        grid = [0.5, 1.0]
        one = simulate_penrose_kabluchko(brownian_kernel(), grid, 30_000, rng=make_rng(18)).values
        two = simulate_penrose_kabluchko(brownian_kernel(), grid, 30_000, scale=constant_scale(2.0), rng=make_rng(19)).values
        for j in range(2):
            assert stats.ks_2samp(one[:, j], two[:, j] / 2.0).pvalue > 0.001
            # with S = c the marginal survival is exp(-2 x / c)
            assert stats.kstest(two[:, j], lambda x: 1 - np.exp(-x)).pvalue > 0.01

    def test_degenerate_kernel_gives_equal_coordinates(self):
        s = simulate_penrose_kabluchko(constant_kernel(0.0, variance=1.0), [0.0, 1.0], 1000, rng=make_rng(20))
        assert np.array_equal(s.values[:, 0], s.values[:, 1])

    def test_min_stability_for_unit_scale(self):
        grid = [0.5, 1.0, 1.5]
        m = 3
        s = simulate_penrose_kabluchko(brownian_kernel(), grid, 3 * 20_000, rng=make_rng(21)).values
        pooled = m * s.reshape(m, -1, len(grid)).min(axis=0)
        ref = simulate_penrose_kabluchko(brownian_kernel(), grid, 20_000, rng=make_rng(22)).values
        for j in range(len(grid)):
            assert stats.ks_2samp(pooled[:, j], ref[:, j]).pvalue > 0.01

    def test_flag_rate_at_defaults(self):
        s = simulate_penrose_kabluchko(fbm_kernel(0.5), np.linspace(0.1, 2.0, 8), 20_000, rng=make_rng(23))
        assert s.flag_rate < 1e-3

    def test_bounded_random_scale(self):
        s = simulate_penrose_kabluchko(
            brownian_kernel(), [1.0, 2.0], 5000, scale=model_b_scale(1.0, kappa=0.5), rng=make_rng(24)
        )
        assert s.meta["kappa"] == 0.5
        assert np.all(s.values >= 0)

    def test_unbounded_scale_rejected(self):
        with pytest.raises(UnsupportedLawError):
            simulate_penrose_kabluchko(brownian_kernel(), [1.0], 10, scale=model_b_scale(1.0), rng=make_rng(25))

    def test_unbounded_scale_with_override_needs_window(self):
        with pytest.raises(InvalidParameterError):
            simulate_penrose_kabluchko(
                brownian_kernel(), [1.0], 10, scale=model_b_scale(1.0), rng=make_rng(26), allow_unbounded_scale=True
            )
