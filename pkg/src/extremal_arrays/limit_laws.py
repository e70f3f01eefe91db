"""Numerical evaluation of the limiting laws of normalised array extremes.

Every exponent below has the form ``int P{y in I(Z)} dy`` (or ``d(y**beta)``)
where ``I(Z)`` is a union or intersection of intervals determined by a random
vector ``Z``. For each Monte Carlo draw of ``Z`` the Lebesgue measure of
``I(Z)`` is computed exactly, so the only error left is Monte Carlo error
(reported via 32 batch means). The Hüsler–Reiss law additionally truncates
the ``y`` range at analytic bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import special, stats

from .core_samplers import (
    RadialLaw,
    ScaleLaw,
    chi_law,
    covariance_from_variogram,
    kh_law,
    marginal_radial,
    psd_factor,
    scaled_chi,
)
from .errors import (
    DomainError,
    InvalidParameterError,
    InvalidVariogramError,
    TooLargeError,
    UnsupportedLawError,
)
from .rng import as_generator

__all__ = [
    "LimitEstimate",
    "HRSpec",
    "DEFAULT_MC_PATHS",
    "BATCHES",
    "HR_EPSILON",
    "HR_NODES",
    "default_theta",
    "g_gamma_cdf",
    "min_limit_survival",
    "min_limit_survival_ie",
    "degenerate_min_survival",
    "hr_limit_cdf",
    "hr_bivariate_closed_form",
    "weibull_limit_cdf",
    "pk_limit_survival",
]

DEFAULT_MC_PATHS = 1 << 17
BATCHES = 32
HR_EPSILON = 1e-6
HR_NODES = 256
IE_MAX_DIM = 6


@dataclass(frozen=True)
class LimitEstimate:
    """Value of a limit law at one point with its error budget."""

    value: float
    mc_std_err: float
    quad_trunc_bound: float
    node_count: int
    mc_paths: int

    @property
    def combined_error(self) -> float:
        return 3.0 * self.mc_std_err + self.quad_trunc_bound


# ---------------------------------------------------------------------------
# shared helpers


def _check_limit_variogram(gamma) -> np.ndarray:
    """Variogram check for limit laws: zero off-diagonals are allowed here."""
    g = np.atleast_2d(np.asarray(gamma, dtype=float))
    if g.shape[0] != g.shape[1]:
        raise InvalidVariogramError("variogram must be square")
    if not np.allclose(g, g.T, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise InvalidVariogramError("variogram must be symmetric")
    if np.any(np.diag(g) != 0) or np.any(g < 0) or not np.all(np.isfinite(g)):
        raise InvalidVariogramError("variogram needs a zero diagonal and finite nonnegative entries")
    g = (g + g.T) / 2.0
    if g.shape[0] > 1:
        m = (g[1:, :1] + g[:1, 1:] - g[1:, 1:]) / 2.0
        w = np.linalg.eigvalsh(m)
        if w[0] < -1e-10 * max(w[-1], 1.0):
            raise InvalidVariogramError(f"not a variogram: anchored matrix has eigenvalue {w[0]:.3e}")
    return g


def default_theta(gamma) -> np.ndarray:
    """``theta_i = max_j gamma_ij``, falling back to ``gamma_i1 + max gamma`` if that is not admissible.

    The fallback is always admissible: it is the anchored covariance plus a
    multiple of ``11'``. Zero variograms get ``theta = 1``.
    """
    g = np.asarray(gamma, dtype=float)
    top = float(g.max()) if g.size else 0.0
    if top == 0.0:
        return np.ones(g.shape[0])
    theta = g.max(axis=1)
    w = np.linalg.eigvalsh(covariance_from_variogram(g, theta))
    if w[0] >= -1e-10 * max(w[-1], 1.0) and np.all(theta > 0):
        return theta
    return g[:, 0] + top


def _theta_factor(gamma: np.ndarray, theta) -> tuple[np.ndarray, np.ndarray]:
    theta = default_theta(gamma) if theta is None else np.asarray(theta, dtype=float)
    if theta.shape != (gamma.shape[0],) or np.any(theta <= 0):
        raise InvalidParameterError("theta must be a positive vector of length k")
    B, _ = psd_factor(covariance_from_variogram(gamma, theta))
    return theta, B


def _elliptical_bank(B: np.ndarray, radial: RadialLaw | None, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` draws of ``R B U``; ``radial=None`` means the Gaussian radius (chi with dimension = columns)."""
    m = B.shape[1]
    g = rng.standard_normal((n, m))
    if radial is not None and not (radial.family == "chi" and radial.params["k"] == m):
        r = radial.sample(rng, n)
        g *= (r / np.sqrt(np.einsum("ij,ij->i", g, g)))[:, None]
    return g @ B.T


def _points(x, k: int) -> tuple[np.ndarray, bool]:
    """Scalars and 1-D input are one point; 2-D input is one point per row."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim < 2
    arr = arr.reshape(1, -1) if single else arr
    if arr.ndim != 2 or arr.shape[1] != k:
        raise InvalidParameterError(f"points must have {k} coordinates")
    return arr, single


def _batch_se(samples: np.ndarray) -> float:
    n = samples.size
    if n < BATCHES:
        return float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    usable = n - n % BATCHES
    means = samples[:usable].reshape(BATCHES, -1).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(BATCHES))


def _finish(results: list[LimitEstimate], single: bool):
    return results[0] if single else results


@numba.njit(cache=True)
def _union_length(lo, hi, out):
    n, k = lo.shape
    order = np.empty(k, dtype=np.int64)
    for s in range(n):
        order[:] = np.argsort(lo[s])
        total = 0.0
        cur_lo = 0.0
        cur_hi = -np.inf
        for t in range(k):
            a = lo[s, order[t]]
            b = hi[s, order[t]]
            if not b > a:
                continue
            if a > cur_hi:
                if cur_hi > cur_lo:
                    total += cur_hi - cur_lo
                cur_lo = a
                cur_hi = b
            elif b > cur_hi:
                cur_hi = b
        if cur_hi > cur_lo:
            total += cur_hi - cur_lo
        out[s] = total


def _union(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    out = np.empty(lo.shape[0])
    _union_length(np.ascontiguousarray(lo), np.ascontiguousarray(hi), out)
    return out


def _signed_power(v: np.ndarray, p: float) -> np.ndarray:
    return np.sign(v) * np.abs(v) ** p


def _estimate_exp_neg(per_sample_sum: np.ndarray, exact_part: float, mc_se: float | None = None) -> tuple[float, float]:
    mean = float(per_sample_sum.mean()) + exact_part
    se = _batch_se(per_sample_sum) if mc_se is None else mc_se
    value = math.exp(-mean)
    return value, value * se


# ---------------------------------------------------------------------------
# minima limits


def g_gamma_cdf(gamma_index: float, x):
    """``1 - exp(-2 x**gamma)`` for ``x >= 0``."""
    if not 0 < gamma_index <= 1:
        raise InvalidParameterError("index must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be nonnegative")
    return -np.expm1(-2.0 * x**gamma_index)


def degenerate_min_survival(gamma_index: float, x) -> float:
    """Survival of the minima limit when all coordinates coincide (zero variogram).

    Every coordinate equals one ``G_gamma`` variable, so the survival is
    ``1 - G_gamma(max_i x_i)``.
    """
    return float(1.0 - g_gamma_cdf(gamma_index, np.max(np.asarray(x, dtype=float))))


def _check_index(gamma_index: float) -> None:
    if not 0 < gamma_index <= 1:
        raise InvalidParameterError("index must lie in (0, 1]")


def min_limit_survival(
    gamma,
    gamma_index: float,
    x,
    *,
    radial_next: RadialLaw | None = None,
    theta=None,
    mc_paths: int = DEFAULT_MC_PATHS,
    rng: np.random.Generator | int | None = None,
):
    """``P{L > x}`` for the minima limit in its single-integral form.

    ``Z`` is elliptical with shape ``(theta 1' + 1 theta' - Gamma)/2`` and the
    size-biased radius of ``radial_next`` (the ``(k+1)``-dimensional radius of
    the chain; default chi(k+1), giving Gaussian ``Z``). For each draw the set
    ``{y : |sign(y)|y|**(1/gamma) + Z_i| <= x_i for some i}`` is a union of
    ``k`` intervals whose length is computed exactly.
    """
    _check_index(gamma_index)
    g = _check_limit_variogram(gamma)
    k = g.shape[0]
    pts, single = _points(x, k)
    if np.any(pts <= 0):
        raise DomainError("x must be positive")
    radial = None
    if radial_next is not None:
        if radial_next.dim is not None and radial_next.dim != k + 1:
            raise InvalidParameterError("radial_next must be the (k+1)-dimensional radius")
        radial = kh_law(radial_next)
        if radial.dim is None:
            radial = _with_dim(radial, k)
    _, B = _theta_factor(g, theta)
    gen = as_generator(rng)
    z = _elliptical_bank(B, radial, int(mc_paths), gen)
    out = []
    for p in pts:
        lo = _signed_power(-z - p, gamma_index)
        hi = _signed_power(-z + p, gamma_index)
        value, se = _estimate_exp_neg(_union(lo, hi), 0.0)
        out.append(LimitEstimate(value, se, 0.0, 0, int(mc_paths)))
    return _finish(out, single)


def _with_dim(law: RadialLaw, dim: int) -> RadialLaw:
    from dataclasses import replace

    return replace(law, dim=dim)


def _chain_radius(radial_k: RadialLaw, m: int, k: int) -> RadialLaw:
    """Radius ``R_m`` of an ``m``-dimensional margin of ``R_k U``."""
    if m == k:
        return radial_k if radial_k.dim == k else _with_dim(radial_k, k)
    if radial_k.family == "chi" and radial_k.params["k"] == k:
        return chi_law(m, dim=m)
    if radial_k.family == "scaled_chi" and radial_k.params["k"] == k:
        return _with_dim(scaled_chi(radial_k.params["scale"], m), m)
    return marginal_radial(radial_k, m, k)


def min_limit_survival_ie(
    gamma,
    gamma_index: float,
    x,
    *,
    radial: RadialLaw | None = None,
    anchor: str = "min",
    mc_paths: int = DEFAULT_MC_PATHS,
    rng: np.random.Generator | int | None = None,
):
    """``P{L > x}`` through inclusion–exclusion over index sets ``K``.

    Singletons contribute ``2 x_j**gamma``. For ``|K| = m >= 2`` with anchor
    ``j`` (the smallest index of ``K`` by default, ``anchor='max'`` for the
    largest) the term is the expected length of
    ``[-x_j**gamma, x_j**gamma]`` intersected with the intervals of
    ``Z^{K;j}``, an elliptical vector with shape
    ``(gamma_ij + gamma_lj - gamma_il)/2`` and the size-biased radius
    ``KH_{m-1}`` of the chain ``H_m`` (default: Gaussian chain).
    """
    _check_index(gamma_index)
    g = _check_limit_variogram(gamma)
    k = g.shape[0]
    if k > IE_MAX_DIM:
        raise TooLargeError(f"inclusion-exclusion is limited to k <= {IE_MAX_DIM}")
    if anchor not in ("min", "max"):
        raise InvalidParameterError("anchor must be 'min' or 'max'")
    pts, single = _points(x, k)
    if np.any(pts <= 0):
        raise DomainError("x must be positive")
    radial_k = chi_law(k, dim=k) if radial is None else radial
    gaussian = radial_k.family == "chi" and radial_k.params["k"] == k
    gen = as_generator(rng)
    n = int(mc_paths)
    xg = pts**gamma_index

    exponent = -2.0 * xg.sum(axis=1)
    variance = np.zeros(len(pts))
    for m in range(2, k + 1):
        kh = None if gaussian else kh_law(_chain_radius(radial_k, m, k))
        for K in itertools.combinations(range(k), m):
            j = K[0] if anchor == "min" else K[-1]
            rest = [i for i in K if i != j]
            shape = (g[rest, j][:, None] + g[j, rest][None, :] - g[np.ix_(rest, rest)]) / 2.0
            L, _ = psd_factor(shape, error=InvalidVariogramError)
            z = _elliptical_bank(L, kh, n, gen)
            sign = (-1.0) ** m
            for pi, p in enumerate(pts):
                lo = np.maximum(_signed_power(-z - p[rest], gamma_index).max(axis=1), -xg[pi, j])
                hi = np.minimum(_signed_power(-z + p[rest], gamma_index).min(axis=1), xg[pi, j])
                length = np.maximum(hi - lo, 0.0)
                exponent[pi] += sign * length.mean()
                variance[pi] += _batch_se(length) ** 2
    out = []
    for pi in range(len(pts)):
        value = math.exp(exponent[pi])
        out.append(LimitEstimate(value, value * math.sqrt(variance[pi]), 0.0, 0, n if k > 1 else 0))
    return _finish(out, single)


# ---------------------------------------------------------------------------
# Hüsler–Reiss


@dataclass(frozen=True, eq=False)
class HRSpec:
    """Variogram ``gamma`` and variance vector ``theta`` of the Gaussian vector in the HR exponent."""

    gamma: np.ndarray
    theta: np.ndarray | None = None

    def __post_init__(self):
        g = _check_limit_variogram(self.gamma)
        theta, B = _theta_factor(g, self.theta)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "_factor", B)

    @property
    def k(self) -> int:
        return self.gamma.shape[0]

    @property
    def factor(self) -> np.ndarray:
        return self._factor


def _hr_tail_bound(y: float, x: np.ndarray, theta: np.ndarray) -> float:
    """Exact ``sum_i int_{-inf}^y P{Z_i > x_i - u + theta_i/2} e^{-u} du``."""
    s = np.sqrt(theta)
    a = np.exp(-x + stats.norm.logcdf((y - x + theta / 2.0) / s))
    b = np.exp(-y + stats.norm.logcdf((y - x - theta / 2.0) / s))
    return float(np.sum(a - b))


def _hr_window(x: np.ndarray, theta: np.ndarray, eps: float) -> tuple[float, float]:
    y_hi = -math.log(eps / 2.0)
    lo = float(np.min(x - theta / 2.0)) - 1.0
    step = 1.0
    while _hr_tail_bound(lo, x, theta) > eps / 2.0:
        lo -= step
        step *= 2.0
    hi = lo + step
    while _hr_tail_bound(hi, x, theta) <= eps / 2.0 and hi < y_hi:
        hi += step
    for _ in range(80):
        mid = (lo + hi) / 2.0
        if _hr_tail_bound(mid, x, theta) <= eps / 2.0:
            lo = mid
        else:
            hi = mid
    return min(lo, y_hi), y_hi


def _weighted_window_integral(m: np.ndarray, log_w: np.ndarray, y_lo: float, y_hi: float) -> np.ndarray:
    """``exp(log_w) * int_{y_lo}^{y_hi} 1{m > -y} e^{-y} dy`` elementwise, in log space."""
    top = np.minimum(m, -y_lo)
    inside = m > -y_hi
    gap = np.where(inside, -y_hi - top, -1.0)
    with np.errstate(divide="ignore"):
        log_val = top + np.log(-np.expm1(gap))
    return np.where(inside, np.exp(log_val + log_w), 0.0)


_GLH_X, _GLH_W = np.polynomial.legendre.leggauss(HR_NODES)


def hr_limit_cdf(
    spec: HRSpec,
    x,
    *,
    method: str = "exact",
    mc_paths: int = DEFAULT_MC_PATHS,
    eps: float = HR_EPSILON,
    rng: np.random.Generator | int | None = None,
):
    """``Q_Gamma(x) = exp(-int P{exists i: Z_i > x_i - y + theta_i/2} e^{-y} dy)``.

    The ``y`` range is cut to ``[y_lo, -ln(eps/2)]`` where both tails are
    bounded by ``eps/2`` analytically. For ``k = 1`` the integrand is the
    exact normal survival, integrated by 256-node Gauss–Legendre. For
    ``k >= 2`` each Gaussian draw contributes
    ``int_window 1{M > -y} e^{-y} dy`` with ``M = max_i(Z_i - x_i - theta_i/2)``,
    computed in closed form (``method='exact'``). That estimator draws ``Z``
    from the mixture of its exponential tilts weighted by ``exp(-x_i)`` and
    reweights, so each draw is bounded by ``sum_i exp(-x_i)`` however large
    ``theta`` is. Otherwise the window is integrated
    by Gauss–Legendre against the empirical law of ``M``
    (``method='quadrature'``).
    """
    if method not in ("exact", "quadrature"):
        raise InvalidParameterError("method must be 'exact' or 'quadrature'")
    pts, single = _points(x, spec.k)
    theta = spec.theta
    gen = as_generator(rng)
    n = int(mc_paths)
    z = None if spec.k == 1 else _elliptical_bank(spec.factor, None, n, gen)
    if z is not None and method == "exact":
        cov = spec.factor @ spec.factor.T
        u = gen.random(n)
    out = []
    for p in pts:
        y_lo, y_hi = _hr_window(p, theta, eps)
        half = (y_hi - y_lo) / 2.0
        nodes = y_lo + half * (_GLH_X + 1.0)
        weights = half * _GLH_W
        if spec.k == 1:
            prob = stats.norm.sf((p[0] - nodes + theta[0] / 2.0) / math.sqrt(theta[0]))
            integral = float(np.dot(weights, prob * np.exp(-nodes)))
            out.append(LimitEstimate(math.exp(-integral), 0.0, eps, HR_NODES, 0))
            continue
        if method == "exact":
            # Z drawn from the mixture of exponential tilts exp(Z_i - theta_i/2) weighted by exp(-x_i),
            # so that each draw contributes at most sum_i exp(-x_i)
            log_w = -p - special.logsumexp(-p)
            pick = np.minimum(np.searchsorted(np.cumsum(np.exp(log_w)), u, side="right"), spec.k - 1)
            zt = z + cov[:, pick].T
            a = zt - p - theta / 2.0
            m = np.max(a, axis=1)
            log_lr = special.logsumexp(-p) - special.logsumexp(a, axis=1)
            value, se = _estimate_exp_neg(_weighted_window_integral(m, log_lr, y_lo, y_hi), 0.0)
            node_count = 0
        else:
            m = np.max(z - p - theta / 2.0, axis=1)
            ms = np.sort(m)
            prob = 1.0 - np.searchsorted(ms, -nodes, side="right") / n
            integral = float(np.dot(weights, prob * np.exp(-nodes)))
            per_batch = []
            usable = n - n % BATCHES
            for chunk in m[:usable].reshape(BATCHES, -1):
                cs = np.sort(chunk)
                pb = 1.0 - np.searchsorted(cs, -nodes, side="right") / cs.size
                per_batch.append(float(np.dot(weights, pb * np.exp(-nodes))))
            se_int = float(np.std(per_batch, ddof=1) / math.sqrt(BATCHES))
            value = math.exp(-integral)
            se = value * se_int
            node_count = HR_NODES
        out.append(LimitEstimate(value, se, eps, node_count, n))
    return _finish(out, single)


def hr_bivariate_closed_form(gamma12: float, x1, x2):
    """Bivariate Hüsler–Reiss distribution function with ``lambda = sqrt(gamma12)/2``."""
    if not gamma12 > 0:
        raise InvalidParameterError("gamma12 must be positive")
    lam = math.sqrt(gamma12) / 2.0
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        t1 = np.where(np.isposinf(x1), 0.0, np.exp(-x1) * special.ndtr(lam + (x2 - x1) / (2.0 * lam)))
        t2 = np.where(np.isposinf(x2), 0.0, np.exp(-x2) * special.ndtr(lam + (x1 - x2) / (2.0 * lam)))
    out = np.exp(-(t1 + t2))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Weibull-type limit


@numba.njit(cache=True)
def _weibull_union(z, c, power, out):
    """Per draw: measure in ``u = s**power`` of ``{s >= 0 : s^2 - sqrt(2) z_i s + c_i < 0 for some i}``."""
    n, k = z.shape
    lo = np.empty(k)
    hi = np.empty(k)
    r2 = math.sqrt(2.0)
    for s in range(n):
        cnt = 0
        for i in range(k):
            b = r2 * z[s, i]
            disc = b * b - 4.0 * c[i]
            if disc <= 0.0:
                continue
            root = math.sqrt(disc)
            a = (b - root) / 2.0
            e = (b + root) / 2.0
            if e <= 0.0:
                continue
            if a < 0.0:
                a = 0.0
            lo[cnt] = a**power
            hi[cnt] = e**power
            cnt += 1
        total = 0.0
        if cnt > 0:
            order = np.argsort(lo[:cnt])
            cur_lo = lo[order[0]]
            cur_hi = hi[order[0]]
            for t in range(1, cnt):
                a = lo[order[t]]
                e = hi[order[t]]
                if a > cur_hi:
                    total += cur_hi - cur_lo
                    cur_lo = a
                    cur_hi = e
                elif e > cur_hi:
                    cur_hi = e
            total += cur_hi - cur_lo
        out[s] = total


def weibull_limit_cdf(
    gamma,
    alpha: float,
    x,
    *,
    theta=None,
    residual: str = "consistent",
    mc_paths: int = DEFAULT_MC_PATHS,
    rng: np.random.Generator | int | None = None,
):
    """``exp(-int_0^inf P{exists i: sqrt(2y) Z_i > x_i + y + theta_i/2} d y**beta)``, ``beta = alpha + (k-1)/2``.

    ``Z = R B U`` with ``alpha`` the Weibull index of the ``k``-dimensional
    radius. With ``residual='consistent'`` (default) ``R**2 ~ Beta(k/2, alpha - 1/2)``:
    the residual radius after conditioning on one extra coordinate, whose
    radius has index ``alpha - 1/2``. This choice gives Weibull marginals
    ``Psi_beta`` for every ``theta``; ``alpha = 1/2`` gives ``R = 1``.
    ``residual='printed'`` uses ``R**2 ~ Beta(k/2, alpha)``, which does not.

    In ``s = sqrt(y)`` each coordinate gives the interval between the roots
    of ``s**2 - sqrt(2) Z_i s + x_i + theta_i/2``; the union is measured
    exactly after mapping to ``u = s**(2 beta)``.
    """
    if not alpha > 0:
        raise InvalidParameterError("alpha must be positive")
    if residual not in ("consistent", "printed"):
        raise InvalidParameterError("residual must be 'consistent' or 'printed'")
    shape_b = alpha - 0.5 if residual == "consistent" else alpha
    if shape_b < 0:
        raise UnsupportedLawError("the consistent residual law needs alpha >= 1/2")
    g = _check_limit_variogram(gamma)
    k = g.shape[0]
    pts, single = _points(x, k)
    if np.any(pts >= 0):
        raise DomainError("every coordinate of x must be negative")
    theta, B = _theta_factor(g, theta)
    beta = alpha + (k - 1) / 2.0
    gen = as_generator(rng)
    n = int(mc_paths)
    gauss = gen.standard_normal((n, k))
    r = np.sqrt(gen.beta(k / 2.0, shape_b, size=n)) if shape_b > 0 else np.ones(n)
    z = np.ascontiguousarray((gauss * (r / np.linalg.norm(gauss, axis=1))[:, None]) @ B.T)
    out = []
    for p in pts:
        per = np.empty(n)
        _weibull_union(z, np.ascontiguousarray(p + theta / 2.0), 2.0 * beta, per)
        value, se = _estimate_exp_neg(per, 0.0)
        out.append(LimitEstimate(value, se, 0.0, 0, n))
    return _finish(out, single)


# ---------------------------------------------------------------------------
# Penrose–Kabluchko


def pk_limit_survival(
    gamma,
    scale: ScaleLaw,
    x,
    *,
    grid=None,
    theta=None,
    mc_paths: int = DEFAULT_MC_PATHS,
    rng: np.random.Generator | int | None = None,
):
    """``P{zeta(t_j) > x_j for all j} = exp(-int P{exists i: S_i |y + Z_i| <= x_i} dy)``.

    ``S`` is a scalar scale variable shared by all coordinates, or a scale
    path on ``grid`` when the law has a path sampler. Each draw contributes the
    exact length of the union of ``[-Z_i - x_i/S_i, -Z_i + x_i/S_i]``.
    """
    if not scale.lower_bound > 0 and not math.isfinite(scale.mean_inverse):
        raise UnsupportedLawError("scale law needs a positive lower bound or a finite negative moment")
    g = _check_limit_variogram(gamma)
    k = g.shape[0]
    pts, single = _points(x, k)
    if np.any(pts <= 0):
        raise DomainError("x must be positive")
    _, B = _theta_factor(g, theta)
    gen = as_generator(rng)
    n = int(mc_paths)
    z = _elliptical_bank(B, None, n, gen)
    if scale.path_sampler is not None and grid is not None and not scale.is_constant:
        s = np.asarray(scale.path_sampler(gen, n, np.asarray(grid, dtype=float)), dtype=float)
    else:
        s = np.broadcast_to(scale.sample(gen, n)[:, None], (n, k))
    out = []
    for p in pts:
        half = p / s
        value, se = _estimate_exp_neg(_union(-z - half, -z + half), 0.0)
        out.append(LimitEstimate(value, se, 0.0, 0, n))
    return _finish(out, single)
