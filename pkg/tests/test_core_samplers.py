import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from extremal_arrays import (
    EllipticalSpec,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidVariogramError,
    NotPositiveDefiniteError,
    UnsupportedLawError,
    beta_radial,
    brownian_kernel,
    chi_law,
    constant_kernel,
    constant_scale,
    custom_scale,
    kh_law,
    marginal_radial,
    matrix_kernel,
    model_a_scale,
    model_b_scale,
    point_mass,
    power_tail_law,
    sample_beta,
    sample_elliptical,
    sample_spherical_process,
    sample_unit_sphere,
    scaled_chi,
    variogram_to_covariance,
)
from extremal_arrays.core_samplers import covariance_from_variogram, lift_radial, psd_factor
from extremal_arrays.rng import make_rng

N = 100_000


def rng(stream=0):
    return make_rng(2024, stream)


class TestSphere:
    def test_one_dimensional_sphere_is_a_fair_sign(self):
        u = sample_unit_sphere(1, rng(), N)
        assert set(np.unique(u)) == {-1.0, 1.0}
        assert abs((u > 0).mean() - 0.5) < 3 * 0.5 / math.sqrt(N)

    def test_three_dimensional_mean_is_zero(self):
        u = sample_unit_sphere(3, rng(), N)
        se = np.sqrt(1 / 3 / N)
        assert np.all(np.abs(u.mean(axis=0)) < 3 * se)

    def test_second_moment_is_one_over_k(self):
        u = sample_unit_sphere(4, rng(), N)
        assert abs((u[:, 0] ** 2).mean() - 0.25) < 0.01

    def test_zero_dimension_rejected(self):
        with pytest.raises(InvalidDimensionError):
            sample_unit_sphere(0, rng())

    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_draws_have_unit_norm(self, k, seed):
        u = sample_unit_sphere(k, make_rng(seed), 50)
        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, rtol=0, atol=1e-14)


class TestBeta:
    @pytest.mark.parametrize("a,b,mean", [(1, 1, 0.5), (0.5, 0.5, 0.5), (0.5, 1.5, 0.25)])
    def test_means(self, a, b, mean):
        assert abs(sample_beta(a, b, rng(), N).mean() - mean) < 0.01

    def test_uniform_case_passes_ks(self):
        assert stats.kstest(sample_beta(1, 1, rng(), N), "uniform").pvalue > 0.01

    @pytest.mark.parametrize("a,b", [(0, 1), (1, -1)])
    def test_nonpositive_shapes_rejected(self, a, b):
        with pytest.raises(InvalidParameterError):
            sample_beta(a, b, rng())


class TestMarginalRadial:
    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_chi_margins_are_chi(self, m):
        law = marginal_radial(chi_law(5), m)
        assert stats.kstest(law.sample(rng(m), N), stats.chi(m).cdf).pvalue > 0.01

    def test_one_step_recursion_matches_beta_half(self):
        # R_{k-1}^2 = R_k^2 B((k-1)/2, 1/2), drawn independently of the package sampler
        k = 4
        g = rng(1)
        direct = np.sqrt(g.chisquare(k, N) * g.beta((k - 1) / 2, 0.5, N))
        law = marginal_radial(chi_law(k), k - 1)
        assert stats.ks_2samp(direct, law.sample(rng(2), N)).pvalue > 0.01

    def test_point_mass_margin_is_arcsine(self):
        law = marginal_radial(point_mass(1.0, dim=2), 1)
        r2 = law.sample(rng(), N) ** 2
        assert stats.kstest(r2, stats.beta(0.5, 0.5).cdf).pvalue > 0.01

    def test_two_steps_equal_one_step(self):
        base = beta_radial(2.0, 1.5, dim=5)
        two = marginal_radial(marginal_radial(base, 3), 2)
        one = marginal_radial(base, 2)
        assert stats.ks_2samp(two.sample(rng(3), N), one.sample(rng(4), N)).pvalue > 0.01

    def test_mixture_cdf_matches_sampler(self):
        law = marginal_radial(beta_radial(2.0, 1.5, dim=4), 2)
        assert stats.kstest(law.sample(rng(5), N), law.cdf).pvalue > 0.01

    def test_target_dimension_must_be_smaller(self):
        with pytest.raises(InvalidDimensionError):
            marginal_radial(chi_law(3), 3)


class TestKHLaw:
    def test_uniform_square_radius_gives_uniform(self):
        # density 2r on (0,1): E 1/R = 2 and the size-biased law is U(0,1)
        law = beta_radial(1.0, 1.0)
        assert law.mean_inverse == pytest.approx(2.0)
        kh = kh_law(law)
        z = np.linspace(0.05, 0.95, 10)
        np.testing.assert_allclose(kh.cdf(z), z, atol=1e-12)

    def test_point_mass_is_fixed(self):
        kh = kh_law(point_mass(2.5))
        assert kh.family == "point_mass" and kh.params["c"] == 2.5

    def test_chi_drops_one_degree_of_freedom(self):
        kh = kh_law(chi_law(4))
        z = np.linspace(0.1, 4, 20)
        np.testing.assert_allclose(kh.cdf(z), stats.chi(3).cdf(z), atol=1e-12)

    def test_numeric_table_against_direct_integration(self):
        from scipy import integrate

        law = scaled_chi(model_b_scale(1.0, kappa=0.5), 3)
        kh = kh_law(law)
        norm = integrate.quad(lambda r: law.pdf(np.array(r)) / r, 0, np.inf, limit=200)[0]
        for z in (0.5, 1.0, 2.0, 3.0):
            num = integrate.quad(lambda r: law.pdf(np.array(r)) / r, 0, z, limit=200)[0]
            assert kh.cdf(z) == pytest.approx(num / norm, abs=1e-6)

    def test_infinite_mean_inverse_rejected(self):
        with pytest.raises(UnsupportedLawError):
            kh_law(power_tail_law(1.0))


class TestRadialFamilies:
    @pytest.mark.parametrize(
        "law",
        [chi_law(3), beta_radial(1.5, 2.0), power_tail_law(1.5), scaled_chi(model_b_scale(1.0, 0.3), 2)],
        ids=["chi", "beta", "power_tail", "scaled_chi"],
    )
    def test_quantile_inverts_cdf(self, law):
        p = np.linspace(0.05, 0.95, 19)
        np.testing.assert_allclose(law.cdf(law.quantile(p)), p, atol=1e-6)

    @pytest.mark.parametrize(
        "law",
        [chi_law(2), beta_radial(0.7, 1.2), power_tail_law(0.8), scaled_chi(model_a_scale(0.0, 0.5, 2.0), 2)],
        ids=["chi", "beta", "power_tail", "scaled_chi_model_a"],
    )
    def test_sampler_matches_cdf(self, law):
        assert stats.kstest(law.sample(rng(7), 50_000), law.cdf).pvalue > 0.01

    def test_lift_adds_a_dimension(self):
        lifted = lift_radial(chi_law(2))
        assert lifted.params["k"] == 3

    def test_power_tail_upper_tail(self):
        law = power_tail_law(2.5)
        assert law.tail_above(0.1) == pytest.approx(0.1**2.5)


class TestElliptical:
    def test_identity_chi_gives_standard_normals(self):
        x = sample_elliptical(EllipticalSpec(np.eye(3), chi_law(3)), N, rng())
        for j in range(3):
            assert stats.kstest(x[:, j], "norm").pvalue > 0.01

    def test_degenerate_sigma_rejected(self):
        spec = EllipticalSpec(np.ones((2, 2)), chi_law(2))
        with pytest.raises(NotPositiveDefiniteError):
            sample_elliptical(spec, 10, rng())

    def test_gaussian_correlation(self):
        s = np.array([[1.0, 0.5], [0.5, 1.0]])
        x = sample_elliptical(EllipticalSpec(s, chi_law(2)), N, rng())
        assert abs(np.corrcoef(x.T)[0, 1] - 0.5) < 0.02

    def test_coordinates_share_a_marginal(self):
        s = np.array([[1.0, 0.3, -0.2], [0.3, 1.0, 0.4], [-0.2, 0.4, 1.0]])
        x = sample_elliptical(EllipticalSpec(s, beta_radial(1.0, 2.0)), N, rng())
        assert stats.ks_2samp(x[:, 0], x[:, 2]).pvalue > 0.01
        assert stats.ks_2samp(x[:, 1], x[:, 2]).pvalue > 0.01

    def test_same_seed_same_bytes(self):
        spec = EllipticalSpec(np.eye(2), beta_radial(1.0, 1.0))
        a = sample_elliptical(spec, 1000, make_rng(5, 3))
        b = sample_elliptical(spec, 1000, make_rng(5, 3))
        assert a.tobytes() == b.tobytes()


class TestVariogram:
    def test_brownian_example(self):
        c = variogram_to_covariance(brownian_kernel(), [1.0, 2.0])
        np.testing.assert_allclose(c, [[1, 1], [1, 2]])

    def test_zero_variogram_gives_ones(self):
        c = variogram_to_covariance(constant_kernel(0.0, variance=1.0), [0.0, 1.0, 2.0])
        np.testing.assert_allclose(c, np.ones((3, 3)))

    def test_two_off_diagonal_gives_identity(self):
        c = variogram_to_covariance(constant_kernel(2.0, variance=1.0), [0.0, 1.0, 2.0])
        np.testing.assert_allclose(c, np.eye(3))

    def test_non_psd_rejected(self):
        with pytest.raises(InvalidVariogramError):
            variogram_to_covariance(constant_kernel(5.0, variance=1.0), [0.0, 1.0, 2.0])

    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_round_trip_from_covariance(self, k, seed):
        g = np.random.default_rng(seed)
        a = g.normal(size=(k, k))
        c = a @ a.T + 0.1 * np.eye(k)
        d = np.diag(c)
        gamma = d[:, None] + d[None, :] - 2 * c
        np.testing.assert_allclose(covariance_from_variogram(gamma, d), c, atol=1e-12)
        kern = matrix_kernel(gamma, d)
        np.testing.assert_allclose(variogram_to_covariance(kern, np.arange(k, dtype=float)), c, atol=1e-12)

    def test_semidefinite_factor_is_exact(self):
        c = np.ones((3, 3))
        L, info = psd_factor(c)
        np.testing.assert_allclose(L @ L.T, c, atol=1e-14)
        assert info["method"] == "semidefinite"


class TestSphericalProcess:
    def test_unit_scale_gives_gaussian_marginals(self):
        x = sample_spherical_process(brownian_kernel(variance=1.0), constant_scale(1.0), [0.0, 0.5, 1.0], N, rng())
        for j in range(3):
            assert stats.kstest(x[:, j], "norm").pvalue > 0.01

    def test_model_a_scale_is_symmetric(self):
        x = sample_spherical_process(
            constant_kernel(0.0, variance=1.0), model_a_scale(0.0, 0.5, 2.0), [0.0], N, rng()
        )[:, 0]
        assert abs(x.mean()) < 3 * x.std() / math.sqrt(N)

    def test_variance_equals_scale_second_moment(self):
        s = model_b_scale(1.0, kappa=0.2)
        x = sample_spherical_process(constant_kernel(0.0, variance=1.0), s, [0.0], N, rng())[:, 0]
        assert x.var() == pytest.approx(s.second_moment, rel=0.02)

    def test_path_mode_uses_path_sampler(self):
        def paths(g, n, grid):
            return np.tile(1.0 + np.asarray(grid), (n, 1))

        s = custom_scale(lambda g, size: np.ones(size), path_sampler=paths)
        x = sample_spherical_process(brownian_kernel(variance=1.0), s, [0.0, 1.0], N, rng(), mode="path")
        assert x[:, 1].std() == pytest.approx(2.0, rel=0.02)

    def test_non_unit_variance_rejected(self):
        with pytest.raises(InvalidParameterError):
            sample_spherical_process(brownian_kernel(), constant_scale(1.0), [1.0, 2.0], 10, rng())
