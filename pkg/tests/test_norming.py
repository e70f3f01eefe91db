import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from extremal_arrays import (
    InvalidParameterError,
    NoSolutionError,
    UnsupportedLawError,
    beta_radial,
    chi_law,
    davis_resnick_check,
    gumbel_norming,
    laplace_marginal,
    marginal_from_radial,
    min_norming,
    model_a_constants,
    model_a_expansion_quantile,
    model_b_constants,
    normal_marginal,
    point_mass,
    power_tail_law,
    uniform_marginal,
    weibull_norming,
)
from extremal_arrays.norming import MarginalLaw


class TestMinNorming:
    def test_normal_thousand(self):
        a = min_norming(normal_marginal(), 1000).a_n
        # independent root: P{0 < X <= q} = 1/n  <=>  q = Phi^{-1}(1/2 + 1/n)
        assert a == pytest.approx(1.0 / stats.norm.ppf(0.5 + 1e-3), rel=1e-9)
        assert abs(a - 1000 / math.sqrt(2 * math.pi)) < 0.5

    def test_normal_ratio_tends_to_one(self):
        ratios = [min_norming(normal_marginal(), n).a_n * math.sqrt(2 * math.pi) / n for n in (10, 100, 1000, 10_000)]
        assert all(abs(r - 1) > abs(s - 1) for r, s in zip(ratios, ratios[1:]))
        assert abs(ratios[-1] - 1) < 1e-6

    @pytest.mark.parametrize("n", [2, 3, 10, 1234])
    def test_uniform_is_exact(self, n):
        assert min_norming(uniform_marginal(), n).a_n == pytest.approx(n / 2, rel=1e-10)

    def test_half_mass_never_reaches_one_half_for_n_two(self):
        # P{0 < X <= q} < 1/2 for every finite q of an unbounded law
        with pytest.raises(NoSolutionError):
            min_norming(normal_marginal(), 2)

    def test_c_n_is_twice_a_squared(self):
        p = min_norming(normal_marginal(), 500)
        assert p.c_n == pytest.approx(2 * p.a_n**2)

    def test_atom_at_zero_has_no_solution(self):
        atom = MarginalLaw(
            cdf=lambda x: np.where(np.asarray(x) >= 0, 0.75, 0.25),
            sf=lambda x: np.where(np.asarray(x) >= 0, 0.25, 0.75),
            half_mass=lambda x: np.where(np.asarray(x) > 0, 0.25, 0.0),
        )
        with pytest.raises(NoSolutionError):
            min_norming(atom, 10)

    def test_regular_variation_at_zero(self):
        # n (G(t/a_n) - G(s/a_n)) -> t - s for the normal (index 1)
        s, t = 0.5, 2.0
        errs = []
        for n in (100, 1000, 10_000):
            a = min_norming(normal_marginal(), n).a_n
            val = n * (stats.norm.cdf(t / a) - stats.norm.cdf(s / a))
            errs.append(abs(val - (t - s)) / (t - s))
        assert errs[0] > errs[1] > errs[2]


class TestGumbelNorming:
    def test_normal_hundred(self):
        p = gumbel_norming(normal_marginal(), 100)
        assert p.b_n == pytest.approx(stats.norm.isf(0.01), rel=1e-10)
        assert p.b_n == pytest.approx(2.3263, abs=1e-4)
        assert p.a_n == pytest.approx(0.4299, abs=1e-4)
        assert p.c_n == pytest.approx(2 * p.b_n / p.a_n)

    @given(st.floats(3, 1e12))
    @settings(max_examples=60, deadline=None)
    def test_tail_mass_is_one_over_n(self, n):
        p = gumbel_norming(normal_marginal(), n)
        assert n * float(stats.norm.sf(p.b_n)) == pytest.approx(1.0, abs=1e-8)

    def test_laplace_tail_mass(self):
        G = laplace_marginal(2.0)
        p = gumbel_norming(G, 1e6)
        assert 1e6 * float(G.sf(p.b_n)) == pytest.approx(1.0, abs=1e-8)
        assert p.a_n == pytest.approx(2.0)

    def test_gumbel_domain_limit(self):
        G = normal_marginal()
        errs = []
        for n in (1e2, 1e4, 1e6):
            p = gumbel_norming(G, n)
            x = np.array([-1.0, 0.0, 1.0])
            val = n * stats.norm.sf(p.a_n * x + p.b_n)
            errs.append(np.max(np.abs(val - np.exp(-x))))
        assert errs[0] > errs[1] > errs[2]

    def test_missing_w_rejected(self):
        with pytest.raises(UnsupportedLawError):
            gumbel_norming(uniform_marginal(), 10)

    def test_small_n_rejected(self):
        with pytest.raises(InvalidParameterError):
            gumbel_norming(normal_marginal(), 1)

    def test_radial_marginal_matches_normal(self):
        # chi_2 radius in dimension 2 is Gaussian, so the marginal is N(0,1)
        G = marginal_from_radial(chi_law(2), 2)
        p = gumbel_norming(G, 1000)
        assert p.b_n == pytest.approx(stats.norm.isf(1e-3), rel=1e-9)


class TestWeibullNorming:
    @pytest.mark.parametrize("n", [2, 10, 1000])
    def test_uniform_radius(self, n):
        assert weibull_norming(power_tail_law(1.0), n).a_n == pytest.approx(1 / n, rel=1e-9)

    @pytest.mark.parametrize("alpha,n", [(2.0, 1e4), (0.5, 100), (3.0, 1e6)])
    def test_power_tail(self, alpha, n):
        assert weibull_norming(power_tail_law(alpha), n).a_n == pytest.approx(n ** (-1 / alpha), rel=1e-9)

    def test_alpha_two_example(self):
        p = weibull_norming(power_tail_law(2.0), 10_000)
        assert p.a_n == pytest.approx(0.01, rel=1e-9)
        assert p.c_n == pytest.approx(200.0, rel=1e-9)

    def test_beta_radius_against_quantile(self):
        law = beta_radial(1.0, 2.0)
        a = weibull_norming(law, 500).a_n
        assert a == pytest.approx(1 - math.sqrt(stats.beta(1.0, 2.0).ppf(1 - 1 / 500)), rel=1e-8)

    def test_uniform_marginal(self):
        # 1 - G(1 - s) = s/2 on (-1, 1)
        assert weibull_norming(uniform_marginal(), 100).a_n == pytest.approx(0.02, rel=1e-9)

    def test_endpoint_must_be_one(self):
        with pytest.raises(UnsupportedLawError):
            weibull_norming(point_mass(2.0), 10)

    def test_atom_at_endpoint_has_no_solution(self):
        with pytest.raises(NoSolutionError):
            weibull_norming(point_mass(1.0), 10)


class TestModelA:
    def test_quadratic_half(self):
        c = model_a_constants(1.0, 0.0, 0.5, 2.0, 1000)
        assert c.A == 1.0 and c.B == 1.0
        assert c.b_n == pytest.approx(math.log(1000))

    def test_linear_one(self):
        c = model_a_constants(1.0, 0.0, 1.0, 1.0, 1000)
        assert c.A == pytest.approx(1.0)
        assert c.B == pytest.approx(1.5)

    @pytest.mark.parametrize("p1,L1", [(2.0, 0.5), (1.0, 1.0), (3.0, 0.7)])
    @pytest.mark.parametrize("n", [1e6, 1e9])
    def test_ratio_over_log_n(self, p1, L1, n):
        # b_n w(b_n) = B (2 p1/(2+p1)) b_n**(2 p1/(2+p1)) = (2 p1/(2+p1)) ln n for the closed forms
        c = model_a_constants(1.0, 0.0, L1, p1, n)
        assert c.ratio / math.log(n) == pytest.approx(2 * p1 / (2 + p1), rel=1e-12)

    def test_expansion_quantile_close_to_closed_form(self):
        n = 1e6
        closed = model_a_constants(1.0, 0.0, 0.5, 2.0, n).b_n
        expanded = model_a_expansion_quantile(n, 1.0, 0.0, 0.5, 2.0)
        assert abs(expanded / closed - 1) < 0.05

    @pytest.mark.parametrize("args", [(0.0, 0.0, 1.0, 1.0), (1.0, 0.0, -1.0, 1.0), (1.0, 0.0, 1.0, 0.0)])
    def test_nonpositive_parameters_rejected(self, args):
        with pytest.raises(InvalidParameterError):
            model_a_constants(*args, 100)


class TestModelB:
    def test_e_squared(self):
        p = model_b_constants(math.e**2)
        assert p.b_n == pytest.approx(2.0)
        assert p.a_n == pytest.approx(0.5)

    @given(st.floats(2, 1e300))
    def test_product_is_one(self, n):
        p = model_b_constants(n)
        assert p.a_n * p.b_n == pytest.approx(1.0, rel=1e-14)

    def test_unit_scale_matches_gaussian_to_first_order(self):
        gaps = [abs(model_b_constants(n).b_n / gumbel_norming(normal_marginal(), n).b_n - 1) for n in (1e4, 1e8, 1e16, 1e64)]
        assert gaps[0] > gaps[1] > gaps[2] > gaps[3]
        assert gaps[-1] < 0.02

    def test_exact_variant_delegates(self):
        assert model_b_constants(100, normal_marginal()).b_n == gumbel_norming(normal_marginal(), 100).b_n


class TestDavisResnick:
    def test_normal_ratio_is_tiny(self):
        r = davis_resnick_check(normal_marginal(), 1.0, 2.0, [5.0])
        assert r[0] < 1e-4

    def test_exponential_tail_closed_form(self):
        x = np.array([1.0, 2.0, 5.0, 10.0])
        r = davis_resnick_check(laplace_marginal(1.0), 1.0, 2.0, x)
        np.testing.assert_allclose(r, x * np.exp(-x), rtol=1e-10)

    def test_tau_one_rejected(self):
        with pytest.raises(InvalidParameterError):
            davis_resnick_check(normal_marginal(), 0.0, 1.0, [1.0])

    def test_deterministic(self):
        a = davis_resnick_check(normal_marginal(), 1.0, 1.5, [1.0, 2.0, 3.0])
        b = davis_resnick_check(normal_marginal(), 1.0, 1.5, [1.0, 2.0, 3.0])
        assert a.tobytes() == b.tobytes()


class TestMarginalFromRadial:
    def test_symmetric_about_zero(self):
        G = marginal_from_radial(beta_radial(1.0, 2.0), 3)
        assert float(G.cdf(0.0)) == pytest.approx(0.5, abs=1e-12)

    def test_matches_monte_carlo(self):
        law = beta_radial(1.5, 1.0)
        G = marginal_from_radial(law, 3)
        g = np.random.default_rng(11)
        u = g.standard_normal((50_000, 3))
        x = law.sample(g, 50_000) * u[:, 0] / np.linalg.norm(u, axis=1)
        assert stats.kstest(x, G.cdf).pvalue > 0.01

    def test_uniform_disc_marginal_closed_form(self):
        # R = sqrt(U) in dimension 2 is uniform on the disc: G has density (2/pi) sqrt(1 - x^2)
        G = marginal_from_radial(beta_radial(1.0, 1.0), 2)
        x = np.array([-0.7, -0.2, 0.3, 0.9])
        exact = 0.5 + (x * np.sqrt(1 - x**2) + np.arcsin(x)) / math.pi
        np.testing.assert_allclose(G.cdf(x), exact, atol=1e-8)
