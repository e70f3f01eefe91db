"""Sampling primitives for elliptical vectors and spherical processes.

An elliptical vector is ``X = R * A @ U`` with ``U`` uniform on the unit
sphere, ``R > 0`` an independent radius and ``A @ A.T`` a correlation matrix.
Radii are described by :class:`RadialLaw`; scale mixtures ``S * Y`` of
Gaussian processes use :class:`ScaleLaw`.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np
from scipy import special, stats
from scipy.interpolate import PchipInterpolator

from .errors import (
    InvalidDimensionError,
    InvalidParameterError,
    InvalidVariogramError,
    NotPositiveDefiniteError,
    UnsupportedLawError,
)

__all__ = [
    "RadialLaw",
    "ScaleLaw",
    "EllipticalSpec",
    "GaussianKernel",
    "chi_law",
    "point_mass",
    "beta_radial",
    "power_law",
    "power_tail_law",
    "scaled_chi",
    "model_a_scale",
    "model_b_scale",
    "constant_scale",
    "custom_scale",
    "brownian_kernel",
    "fbm_kernel",
    "constant_kernel",
    "matrix_kernel",
    "sample_unit_sphere",
    "sample_beta",
    "marginal_radial",
    "kh_law",
    "sample_elliptical",
    "variogram_to_covariance",
    "psd_factor",
    "sample_spherical_process",
]

PSD_RTOL = 1e-10
KH_TABLE_NODES = 4096

_GL_X, _GL_W = np.polynomial.legendre.leggauss(512)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# scale laws


@dataclass(frozen=True, eq=False)
class ScaleLaw:
    """Law of a positive scale variable ``S`` (or of a scale path ``S(t)``).

    ``sampler(rng, size)`` draws i.i.d. scalars. ``path_sampler(rng, n, grid)``,
    when present, returns an ``(n, len(grid))`` array of scale paths.
    """

    kind: str
    params: dict[str, Any]
    sampler: Callable[[np.random.Generator, Any], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray] | None = None
    quantile: Callable[[np.ndarray], np.ndarray] | None = None
    pdf: Callable[[np.ndarray], np.ndarray] | None = None
    lower_bound: float = 0.0
    mean_inverse: float = math.nan
    second_moment: float = math.nan
    rv_index_at_zero: float | None = None
    path_sampler: Callable[[np.random.Generator, int, np.ndarray], np.ndarray] | None = None

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.asarray(self.sampler(rng, size), dtype=float)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (self.kind == "model_b" and self.params["gamma"] == 0)

    def to_json(self) -> dict[str, Any]:
        if self.kind == "custom":
            raise UnsupportedLawError("custom scale laws are not serializable")
        params = {k: v for k, v in self.params.items() if not (self.kind != "constant" and k in ("c", "C1"))}
        return {"kind": self.kind, **params}


def model_a_scale(alpha1: float, L1: float, p1: float) -> ScaleLaw:
    """Weibullian scale with ``P{S > x} ~ C1 x**alpha1 exp(-L1 x**p1)``.

    Realised as the generalized gamma law with density proportional to
    ``x**(alpha1 + p1 - 1) exp(-L1 x**p1)``; ``C1`` is then fixed by
    normalisation and reported in ``params``.
    """
    if not (L1 > 0 and p1 > 0):
        raise InvalidParameterError("Model A needs L1 > 0 and p1 > 0")
    if alpha1 + p1 <= 0:
        raise InvalidParameterError("Model A generalized-gamma realisation needs alpha1 + p1 > 0")
    shape = (alpha1 + p1) / p1
    scale = L1 ** (-1.0 / p1)
    dist = stats.gengamma(a=shape, c=p1, scale=scale)
    C1 = L1 ** (shape - 1.0) / special.gamma(shape)
    second = scale**2 * special.gamma(shape + 2.0 / p1) / special.gamma(shape)
    if shape > 1.0 / p1:
        mean_inv = special.gamma(shape - 1.0 / p1) / special.gamma(shape) / scale
    else:
        mean_inv = math.inf
    return ScaleLaw(
        kind="model_a",
        params={"alpha1": alpha1, "L1": L1, "p1": p1, "C1": C1},
        sampler=lambda rng, size: dist.rvs(size=size, random_state=rng),
        cdf=dist.cdf,
        quantile=dist.ppf,
        pdf=dist.pdf,
        lower_bound=0.0,
        mean_inverse=mean_inv,
        second_moment=second,
        rv_index_at_zero=alpha1 + p1,
    )


def model_b_scale(gamma: float, kappa: float = 0.0, b: float = 1.0) -> ScaleLaw:
    """Scale with upper endpoint 1: ``S = 1 - (1 - kappa) V``, ``V ~ Beta(gamma, b)``.

    ``P{S > 1 - x/u} / P{S > 1 - 1/u} -> x**gamma``; ``gamma = 0`` is ``S = 1``.
    """
    if gamma < 0:
        raise InvalidParameterError("Model B needs gamma >= 0")
    if not 0.0 <= kappa < 1.0:
        raise InvalidParameterError("Model B lower bound must lie in [0, 1)")
    if gamma == 0:
        return replace(constant_scale(1.0), kind="model_b", params={"gamma": 0.0, "kappa": kappa, "b": b, "c": 1.0})
    width = 1.0 - kappa
    v = stats.beta(gamma, b)

    def cdf(s):
        s = np.asarray(s, dtype=float)
        return v.sf(np.clip((1.0 - s) / width, 0.0, 1.0))

    def quantile(p):
        return 1.0 - width * v.isf(np.asarray(p, dtype=float))

    def pdf(s):
        s = np.asarray(s, dtype=float)
        return v.pdf((1.0 - s) / width) / width

    second = 1.0 - 2 * width * v.mean() + width**2 * (v.var() + v.mean() ** 2)
    if kappa > 0:
        mean_inv = float(np.dot(_GL_W / 2, 1.0 / quantile((_GL_X + 1) / 2)))
    else:
        # density of S near 0 is positive when b == 1 -> E 1/S = inf
        mean_inv = math.inf if b <= 1 else math.nan
    return ScaleLaw(
        kind="model_b",
        params={"gamma": gamma, "kappa": kappa, "b": b},
        sampler=lambda rng, size: 1.0 - width * rng.beta(gamma, b, size=size),
        cdf=cdf,
        quantile=quantile,
        pdf=pdf,
        lower_bound=kappa,
        mean_inverse=mean_inv,
        second_moment=second,
        rv_index_at_zero=math.inf if kappa > 0 else float(b),
    )


def constant_scale(c: float = 1.0) -> ScaleLaw:
    if c <= 0:
        raise InvalidParameterError("constant scale must be positive")

    def sampler(rng, size):
        return np.full(size, float(c))

    def path_sampler(rng, n, grid):
        return np.full((n, len(grid)), float(c))

    return ScaleLaw(
        kind="constant",
        params={"c": c},
        sampler=sampler,
        cdf=lambda s: (np.asarray(s, dtype=float) >= c).astype(float),
        quantile=lambda p: np.full(np.shape(p), float(c)),
        lower_bound=float(c),
        mean_inverse=1.0 / c,
        second_moment=float(c) ** 2,
        rv_index_at_zero=math.inf,
        path_sampler=path_sampler,
    )


def custom_scale(
    sampler: Callable,
    *,
    cdf: Callable | None = None,
    quantile: Callable | None = None,
    lower_bound: float = 0.0,
    mean_inverse: float = math.nan,
    second_moment: float = math.nan,
    path_sampler: Callable | None = None,
) -> ScaleLaw:
    """User-supplied scale variable or scale path sampler."""
    return ScaleLaw(
        kind="custom",
        params={},
        sampler=sampler,
        cdf=cdf,
        quantile=quantile,
        lower_bound=lower_bound,
        mean_inverse=mean_inverse,
        second_moment=second_moment,
        path_sampler=path_sampler,
    )


# ---------------------------------------------------------------------------
# radial laws


@dataclass(frozen=True, eq=False)
class RadialLaw:
    """Law of a positive radius ``R`` plus the tail metadata used downstream.

    ``mda`` is ``None``, ``("gumbel", w)`` with ``w`` a scaling function or
    ``("weibull", alpha)``. ``dim`` is the dimension of the spherical vector
    the radius belongs to, when that is meaningful.
    """

    family: str
    params: dict[str, Any]
    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.random.Generator, Any], np.ndarray]
    pdf: Callable[[np.ndarray], np.ndarray] | None = None
    rv_index_at_zero: float | None = None
    mda: tuple | None = None
    upper_endpoint: float = math.inf
    mean_inverse: float = math.nan
    upper_tail: Callable[[np.ndarray], np.ndarray] | None = None
    dim: int | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.asarray(self.sampler(rng, size), dtype=float)

    def sf(self, r):
        return 1.0 - self.cdf(r)

    def tail_above(self, s):
        """``P{R > omega - s}`` for a finite upper endpoint ``omega``."""
        if self.upper_tail is not None:
            return self.upper_tail(np.asarray(s, dtype=float))
        return 1.0 - self.cdf(self.upper_endpoint - np.asarray(s, dtype=float))

    @property
    def is_gaussian(self) -> bool:
        return self.family == "chi" and self.dim == self.params.get("k")

    def to_json(self) -> dict[str, Any]:
        if self.family == "scaled_chi":
            return {"family": "scaled_chi", "k": self.params["k"], "scale": self.params["scale"].to_json()}
        if self.family not in ("chi", "point_mass", "beta_radial", "power_tail"):
            raise UnsupportedLawError(f"radial family {self.family!r} is not serializable")
        return {"family": self.family, **self.params}


def _identity_w(x):
    return np.asarray(x, dtype=float)


def _chi_mean_inverse(k: float) -> float:
    if k <= 1:
        return math.inf
    return math.exp(special.gammaln((k - 1) / 2) - special.gammaln(k / 2)) / math.sqrt(2.0)


def chi_law(k: int, dim: int | None = None) -> RadialLaw:
    """``R`` with ``R**2 ~ chi2(k)``: the Gaussian radius in dimension ``k``."""
    if k < 1:
        raise InvalidDimensionError("chi law needs k >= 1")
    dist = stats.chi(k)
    return RadialLaw(
        family="chi",
        params={"k": int(k)},
        cdf=dist.cdf,
        quantile=dist.ppf,
        sampler=lambda rng, size: np.sqrt(rng.chisquare(k, size=size)),
        pdf=dist.pdf,
        rv_index_at_zero=float(k),
        mda=("gumbel", _identity_w),
        upper_endpoint=math.inf,
        mean_inverse=_chi_mean_inverse(k),
        dim=int(k) if dim is None else dim,
    )


def point_mass(c: float, dim: int | None = None) -> RadialLaw:
    if c <= 0:
        raise InvalidParameterError("point mass location must be positive")
    c = float(c)
    return RadialLaw(
        family="point_mass",
        params={"c": c},
        cdf=lambda r: (np.asarray(r, dtype=float) >= c).astype(float),
        quantile=lambda p: np.full(np.shape(p), c),
        sampler=lambda rng, size: np.full(size, c),
        rv_index_at_zero=math.inf,
        mda=None,
        upper_endpoint=c,
        mean_inverse=1.0 / c,
        upper_tail=lambda s: (np.asarray(s) > 0).astype(float),
        dim=dim,
    )


def beta_radial(a: float, b: float, dim: int | None = None) -> RadialLaw:
    """``R = sqrt(B)`` with ``B ~ Beta(a, b)``; supported on (0, 1).

    ``P{R <= r} ~ const r**(2a)`` at 0 and ``P{R > 1 - s} ~ const s**b`` at 1,
    so the law is in the Weibull max-domain with index ``b``.
    """
    if a <= 0 or b <= 0:
        raise InvalidParameterError("beta radial needs a, b > 0")
    beta = stats.beta(a, b)

    def cdf(r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        return beta.cdf(r * r)

    def pdf(r):
        r = np.asarray(r, dtype=float)
        inside = (r > 0) & (r < 1)
        out = np.zeros_like(r)
        out[inside] = 2 * r[inside] * beta.pdf(r[inside] ** 2)
        return out

    def upper_tail(s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        # P{R^2 > (1-s)^2} = P{1 - B < s(2-s)}
        return special.betainc(b, a, s * (2.0 - s))

    if a > 0.5:
        mean_inv = math.exp(special.betaln(a - 0.5, b) - special.betaln(a, b))
    else:
        mean_inv = math.inf
    return RadialLaw(
        family="beta_radial",
        params={"a": float(a), "b": float(b)},
        cdf=cdf,
        quantile=lambda p: np.sqrt(beta.ppf(p)),
        sampler=lambda rng, size: np.sqrt(rng.beta(a, b, size=size)),
        pdf=pdf,
        rv_index_at_zero=2.0 * a,
        mda=("weibull", float(b)),
        upper_endpoint=1.0,
        mean_inverse=mean_inv,
        upper_tail=upper_tail,
        dim=dim,
    )


def power_law(index: float, dim: int | None = None) -> RadialLaw:
    """``P{R <= r} = r**index`` on (0, 1)."""
    return beta_radial(index / 2.0, 1.0, dim=dim)


def power_tail_law(alpha: float, dim: int | None = None) -> RadialLaw:
    """``P{R > 1 - s} = s**alpha`` on (0, 1); Weibull max-domain with index ``alpha``."""
    if alpha <= 0:
        raise InvalidParameterError("power tail index must be positive")

    def cdf(r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        return 1.0 - (1.0 - r) ** alpha

    def pdf(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = (r > 0) & (r < 1)
        out[inside] = alpha * (1.0 - r[inside]) ** (alpha - 1.0)
        return out

    # density alpha > 0 at the origin: E{1/R} diverges
    mean_inv = math.inf
    return RadialLaw(
        family="power_tail",
        params={"alpha": float(alpha)},
        cdf=cdf,
        quantile=lambda p: 1.0 - (1.0 - np.asarray(p, dtype=float)) ** (1.0 / alpha),
        sampler=lambda rng, size: 1.0 - rng.random(size) ** (1.0 / alpha),
        pdf=pdf,
        rv_index_at_zero=1.0,
        mda=("weibull", float(alpha)),
        upper_endpoint=1.0,
        mean_inverse=mean_inv,
        upper_tail=lambda s: np.clip(np.asarray(s, dtype=float), 0.0, 1.0) ** alpha,
        dim=dim,
    )


def _mixture_cdf(inner_cdf: Callable, outer_quantile: Callable) -> Callable:
    """``r -> E[inner_cdf(r, V)]`` with ``V`` integrated on the quantile scale."""
    u = (_GL_X + 1.0) / 2.0
    w = _GL_W / 2.0
    v = np.asarray(outer_quantile(u), dtype=float)

    def cdf(r):
        r = np.asarray(r, dtype=float)
        return np.clip(inner_cdf(r[..., None], v) @ w, 0.0, 1.0)

    return cdf


def _invert_table(cdf: Callable, lo: float, hi: float, nodes: int = KH_TABLE_NODES) -> Callable:
    """Monotone interpolant of the inverse of ``cdf`` on ``[lo, hi]``."""
    lo = max(lo, 1e-300)
    head = np.geomspace(lo, lo + (hi - lo) * 0.05, nodes // 2, endpoint=False)
    tail = np.linspace(lo + (hi - lo) * 0.05, hi, nodes - nodes // 2)
    z = np.concatenate([head, tail])
    p = np.maximum.accumulate(np.asarray(cdf(z), dtype=float))
    keep = np.concatenate([[True], np.diff(p) > 0])
    inv = PchipInterpolator(p[keep], z[keep], extrapolate=True)

    def quantile(q):
        q = np.asarray(q, dtype=float)
        return np.clip(inv(np.clip(q, p[keep][0], p[keep][-1])), 0.0, hi)

    return quantile


def scaled_chi(scale: ScaleLaw, k: int) -> RadialLaw:
    """Radius ``S * chi_k`` of the scale mixture ``S * N(0, I_k)``."""
    if k < 1:
        raise InvalidDimensionError("scaled chi needs k >= 1")
    if scale.quantile is None:
        raise UnsupportedLawError("scaled chi needs a scale law with a quantile function")
    chi = stats.chi(k)
    if scale.is_constant:
        c = scale.params["c"]
        cdf = lambda r: chi.cdf(np.asarray(r, dtype=float) / c)  # noqa: E731
        pdf = lambda r: chi.pdf(np.asarray(r, dtype=float) / c) / c  # noqa: E731
        quantile = lambda p: c * chi.ppf(p)  # noqa: E731
    else:
        cdf = _mixture_cdf(lambda r, s: chi.cdf(r / s), scale.quantile)
        u = (_GL_X + 1.0) / 2.0
        s_nodes = np.asarray(scale.quantile(u), dtype=float)
        w = _GL_W / 2.0

        def pdf(r):
            r = np.asarray(r, dtype=float)
            return (chi.pdf(r[..., None] / s_nodes) / s_nodes) @ w

        hi = float(scale.quantile(1 - 1e-12)) * float(chi.ppf(1 - 1e-12))
        quantile = _invert_table(cdf, 1e-8, hi)
    rv_s = scale.rv_index_at_zero
    rv = float(k) if rv_s is None else min(float(k), rv_s)
    if scale.kind == "model_a":
        from .norming import model_a_w

        pa = scale.params
        w_fn = model_a_w(pa["L1"], pa["p1"])
        mda = ("gumbel", w_fn)
    else:
        mda = ("gumbel", _identity_w) if scale.kind in ("constant", "model_b") else None
    mean_inv = _chi_mean_inverse(k) * scale.mean_inverse if not math.isnan(scale.mean_inverse) else math.nan
    return RadialLaw(
        family="scaled_chi",
        params={"k": int(k), "scale": scale},
        cdf=cdf,
        quantile=quantile,
        sampler=lambda rng, size: scale.sample(rng, size) * np.sqrt(rng.chisquare(k, size=size)),
        pdf=pdf,
        rv_index_at_zero=rv,
        mda=mda,
        upper_endpoint=math.inf,
        mean_inverse=mean_inv,
        dim=int(k),
    )


def lift_radial(law: RadialLaw) -> RadialLaw:
    """Radius ``R_{k+1}`` with ``R_k**2 = R_{k+1}**2 * Beta(k/2, 1/2)``, for closed families."""
    if law.family == "chi":
        return chi_law(law.params["k"] + 1)
    if law.family == "scaled_chi":
        return scaled_chi(law.params["scale"], law.params["k"] + 1)
    raise UnsupportedLawError(f"no (k+1)-dimensional extension known for {law.family!r}")


# ---------------------------------------------------------------------------
# sampling operations


def sample_unit_sphere(k: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) on the unit sphere of R^k by normalising a Gaussian vector."""
    if k < 1:
        raise InvalidDimensionError("sphere dimension must be >= 1")
    n = 1 if size is None else int(size)
    g = rng.standard_normal((n, k))
    norm = np.sqrt(np.einsum("ij,ij->i", g, g))
    while np.any(norm == 0.0):  # pragma: no cover - probability zero
        bad = norm == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), k))
        norm = np.sqrt(np.einsum("ij,ij->i", g, g))
    u = g / norm[:, None]
    return u[0] if size is None else u


def sample_beta(a: float, b: float, rng: np.random.Generator, size=None):
    if not (a > 0 and b > 0):
        raise InvalidParameterError("beta shapes must be positive")
    return rng.beta(a, b, size=size)


def marginal_radial(law: RadialLaw, m: int, k: int | None = None) -> RadialLaw:
    """Radius of the first ``m`` coordinates of ``R_k U``: ``R_m**2 = R_k**2 * Beta(m/2, (k-m)/2)``.

    The sampler always goes through the beta product. The CDF is exact for the
    chi and scaled-chi families and a 512-node mixture integral otherwise.
    """
    k = law.dim if k is None else k
    if k is None:
        raise InvalidDimensionError("the dimension k of the radial law is unknown")
    if not 1 <= m < k:
        raise InvalidDimensionError(f"need 1 <= m < k, got m={m}, k={k}")
    a, b = m / 2.0, (k - m) / 2.0

    def sampler(rng, size):
        r = law.sample(rng, size)
        return np.sqrt(r * r * rng.beta(a, b, size=size))

    if law.family == "chi":
        base = chi_law(m)
        cdf, quantile, pdf = base.cdf, base.quantile, base.pdf
    elif law.family == "scaled_chi":
        base = scaled_chi(law.params["scale"], m)
        cdf, quantile, pdf = base.cdf, base.quantile, base.pdf
    else:
        bdist = stats.beta(a, b)
        cdf = _mixture_cdf(lambda r, v: bdist.cdf(np.minimum((r / v) ** 2, 1.0)), law.quantile)
        u = (_GL_X + 1.0) / 2.0
        v_nodes = np.asarray(law.quantile(u), dtype=float)
        w = _GL_W / 2.0

        def pdf(r):
            r = np.asarray(r, dtype=float)[..., None]
            x = (r / v_nodes) ** 2
            dens = np.where(x < 1.0, bdist.pdf(np.minimum(x, 1.0)) * 2 * r / v_nodes**2, 0.0)
            return dens @ w

        hi = law.upper_endpoint if math.isfinite(law.upper_endpoint) else float(law.quantile(1 - 1e-12))
        quantile = _invert_table(cdf, 1e-10 * hi, hi)

    if m >= 2:
        mi = law.mean_inverse * math.exp(special.betaln(a - 0.5, b) - special.betaln(a, b))
    else:
        mi = math.inf
    rv = law.rv_index_at_zero
    return RadialLaw(
        family=f"marginal_{law.family}",
        params={"m": m, "k": k, "parent": law},
        cdf=cdf,
        quantile=quantile,
        sampler=sampler,
        pdf=pdf,
        rv_index_at_zero=None if rv is None else min(rv, float(m)),
        mda=law.mda if law.family in ("chi", "scaled_chi") else None,
        upper_endpoint=law.upper_endpoint,
        mean_inverse=mi,
        dim=m,
        meta={"closed_form_cdf": law.family in ("chi", "scaled_chi")},
    )


def _resolve_mean_inverse(law: RadialLaw) -> float:
    mi = law.mean_inverse
    if math.isnan(mi):
        rv = law.rv_index_at_zero
        if rv is not None and rv <= 1.0:
            return math.inf
        return math.nan
    return mi


def kh_law(law: RadialLaw) -> RadialLaw:
    """Law with CDF ``int_0^z r**-1 dH(r) / E{1/R}`` for ``R ~ H`` (the radius one dimension up).

    Closed forms: chi(m+1) -> chi(m), point mass -> itself,
    sqrt Beta(a, b) -> sqrt Beta(a - 1/2, b). Otherwise the CDF is tabulated on
    4096 nodes and inverted by monotone cubic interpolation.
    """
    mi = _resolve_mean_inverse(law)
    if math.isinf(mi):
        raise UnsupportedLawError("E{1/R} is infinite; the size-biased law does not exist")
    dim = None if law.dim is None else law.dim - 1
    if law.family == "chi":
        return chi_law(law.params["k"] - 1, dim=dim)
    if law.family == "point_mass":
        return point_mass(law.params["c"], dim=dim)
    if law.family == "beta_radial":
        return beta_radial(law.params["a"] - 0.5, law.params["b"], dim=dim)
    if law.pdf is None:
        raise UnsupportedLawError(f"no density available for {law.family!r}")
    return _kh_numeric(law, dim)


def _kh_numeric(law: RadialLaw, dim: int | None) -> RadialLaw:
    top = law.upper_endpoint if math.isfinite(law.upper_endpoint) else float(law.quantile(1 - 1e-14))
    bottom = max(float(law.quantile(1e-12)), 1e-12 * top)
    head = np.geomspace(bottom, 0.05 * top, KH_TABLE_NODES // 2, endpoint=False)
    z = np.concatenate([head, np.linspace(0.05 * top, top, KH_TABLE_NODES - KH_TABLE_NODES // 2)])
    lo, hi = z[:-1], z[1:]
    half = (hi - lo) / 2.0
    nodes = (lo + hi)[:, None] / 2.0 + half[:, None] * _GL8_X
    seg = (law.pdf(nodes) / nodes) @ _GL8_W * half
    # mass of r^-1 dH on (0, bottom): H(bottom) * rv/((rv-1) bottom) for a power-law start
    rv = law.rv_index_at_zero if law.rv_index_at_zero is not None else 2.0
    first = float(law.cdf(bottom)) * rv / max(rv - 1.0, 1e-3) / bottom
    cum = np.concatenate([[first], first + np.cumsum(seg)])
    total = cum[-1]
    values = cum / total
    keep = np.concatenate([[True], np.diff(values) > 0])
    zk, vk = z[keep], values[keep]
    fwd = PchipInterpolator(zk, vk, extrapolate=False)
    inv = PchipInterpolator(vk, zk, extrapolate=False)

    def cdf(r):
        r = np.asarray(r, dtype=float)
        out = fwd(np.clip(r, zk[0], zk[-1]))
        out = np.where(r < zk[0], vk[0] * np.clip(r / zk[0], 0, 1) ** max(rv - 1.0, 1e-3), out)
        return np.clip(np.where(r >= zk[-1], 1.0, out), 0.0, 1.0)

    def quantile(p):
        p = np.asarray(p, dtype=float)
        return inv(np.clip(p, vk[0], vk[-1]))

    def sampler(rng, size):
        return quantile(rng.random(size))

    def pdf(r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 0, law.pdf(r) / np.where(r > 0, r, 1.0) / total, 0.0)

    return RadialLaw(
        family="kh_numeric",
        params={"parent": law},
        cdf=cdf,
        quantile=quantile,
        sampler=sampler,
        pdf=pdf,
        rv_index_at_zero=None if law.rv_index_at_zero is None else law.rv_index_at_zero - 1.0,
        mda=None,
        upper_endpoint=law.upper_endpoint,
        mean_inverse=math.nan,
        dim=dim,
        meta={"normaliser": total, "table_nodes": int(zk.size)},
    )


@dataclass(frozen=True, eq=False)
class EllipticalSpec:
    """``X = R A U`` with ``A`` the Cholesky factor of the correlation matrix ``sigma``."""

    sigma: np.ndarray
    radial: RadialLaw

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if s.shape[0] != s.shape[1] or s.shape[0] < 1:
            raise InvalidDimensionError("sigma must be a non-empty square matrix")
        if not np.allclose(s, s.T, atol=1e-12):
            raise NotPositiveDefiniteError("sigma is not symmetric")
        if not np.allclose(np.diag(s), 1.0, atol=1e-12):
            raise InvalidParameterError("sigma must have unit diagonal")
        object.__setattr__(self, "sigma", s)

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    @cached_property
    def factor(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("sigma is not positive definite") from exc


def sample_elliptical(spec: EllipticalSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent rows ``R * A @ U``."""
    a = spec.factor
    r = spec.radial.sample(rng, n)
    u = sample_unit_sphere(spec.k, rng, n)
    return r[:, None] * (u @ a.T)


# ---------------------------------------------------------------------------
# Gaussian kernels and variograms


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    """Variogram ``Gamma(s, t)`` together with a variance function ``sigma2(t)``."""

    variogram: Callable[[np.ndarray, np.ndarray], np.ndarray]
    variance: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    params: dict[str, Any] = field(default_factory=dict)

    def gamma_matrix(self, grid) -> np.ndarray:
        t = np.asarray(grid, dtype=float)
        g = np.asarray(self.variogram(t[:, None], t[None, :]), dtype=float)
        g = (g + g.T) / 2.0
        np.fill_diagonal(g, 0.0)
        return g

    def variances(self, grid) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.variance(np.asarray(grid, dtype=float)), dtype=float), (len(grid),)).copy()

    def to_json(self) -> dict[str, Any]:
        if self.name == "custom":
            raise UnsupportedLawError("custom kernels are not serializable")
        return {"name": self.name, **self.params}


def _variance_fn(variance, default):
    if variance is None:
        return default
    if callable(variance):
        return variance
    v = float(variance)
    return lambda t: np.full(np.shape(t), v)


def brownian_kernel(variance=None, offset: float = 0.0) -> GaussianKernel:
    """``Gamma(s, t) = |s - t|``; default variance ``|t| + offset`` (two-sided Brownian motion)."""
    var = _variance_fn(variance, lambda t: np.abs(t) + offset)
    params = {"offset": offset} if variance is None else {"variance": variance}
    return GaussianKernel(lambda s, t: np.abs(s - t), var, "brownian", params)


def fbm_kernel(hurst: float, variance=None, offset: float = 0.0) -> GaussianKernel:
    if not 0 < hurst <= 1:
        raise InvalidParameterError("Hurst index must lie in (0, 1]")
    h2 = 2.0 * hurst
    var = _variance_fn(variance, lambda t: np.abs(t) ** h2 + offset)
    params = {"hurst": hurst, "offset": offset} if variance is None else {"hurst": hurst, "variance": variance}
    return GaussianKernel(lambda s, t: np.abs(s - t) ** h2, var, "fbm", params)


def constant_kernel(value: float, variance=None) -> GaussianKernel:
    """``Gamma(s, t) = value`` for ``s != t``; default variance ``value / 2`` (independent coordinates)."""
    if value < 0:
        raise InvalidParameterError("constant variogram must be nonnegative")
    var = _variance_fn(variance, lambda t: np.full(np.shape(t), value / 2.0))
    params = {"value": value} if variance is None else {"value": value, "variance": variance}
    return GaussianKernel(lambda s, t: np.where(s == t, 0.0, value), var, "constant", params)


def matrix_kernel(gamma, variance) -> GaussianKernel:
    """Kernel on the index grid ``0, ..., k-1`` given by an explicit variogram matrix."""
    g = np.asarray(gamma, dtype=float)
    v = np.broadcast_to(np.asarray(variance, dtype=float), (g.shape[0],)).copy()

    def vg(s, t):
        return g[np.asarray(s, dtype=int), np.asarray(t, dtype=int)]

    def var(t):
        return v[np.asarray(t, dtype=int)]

    return GaussianKernel(vg, var, "matrix", {"gamma": g.tolist(), "variance": v.tolist()})


def _check_psd(c: np.ndarray, error=InvalidVariogramError) -> float:
    w = np.linalg.eigvalsh(c)
    top = max(float(w[-1]), 0.0)
    if w[0] < -PSD_RTOL * top or (top == 0.0 and w[0] < 0.0):
        raise error(f"matrix is not positive semi-definite (smallest eigenvalue {w[0]:.3e})")
    return float(w[0])


def psd_factor(cov, *, error=InvalidVariogramError) -> tuple[np.ndarray, dict[str, Any]]:
    """Lower-triangular ``L`` with ``L @ L.T = cov`` for a PSD ``cov``.

    Plain Cholesky when it succeeds. Otherwise a semidefinite column Cholesky
    that zeroes columns whose pivot is below ``1e-10 * lambda_max``, so rank
    deficient covariances (identical coordinates, zero variance) are
    reproduced exactly instead of being jittered.
    """
    c = np.asarray(cov, dtype=float)
    c = (c + c.T) / 2.0
    min_eig = _check_psd(c, error)
    info = {"method": "cholesky", "min_eigenvalue": min_eig}
    try:
        return np.linalg.cholesky(c), info
    except np.linalg.LinAlgError:
        pass
    n = c.shape[0]
    tol = PSD_RTOL * max(float(np.abs(c).max()), np.finfo(float).tiny)
    L = np.zeros_like(c)
    for j in range(n):
        d = c[j, j] - L[j, :j] @ L[j, :j]
        if d > tol:
            L[j, j] = math.sqrt(d)
            L[j + 1 :, j] = (c[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    info["method"] = "semidefinite"
    return L, info


def covariance_from_variogram(gamma, theta) -> np.ndarray:
    """``(theta 1' + 1 theta' - Gamma) / 2``."""
    g = np.asarray(gamma, dtype=float)
    th = np.broadcast_to(np.asarray(theta, dtype=float), (g.shape[0],))
    return (th[:, None] + th[None, :] - g) / 2.0


def variogram_to_covariance(kernel: GaussianKernel, grid) -> np.ndarray:
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or np.unique(t).size != t.size:
        raise InvalidParameterError("grid points must be distinct")
    var = kernel.variances(t)
    if np.any(var < 0):
        raise InvalidParameterError("variance function must be nonnegative on the grid")
    c = covariance_from_variogram(kernel.gamma_matrix(t), var)
    _check_psd(c)
    return c


def sample_spherical_process(
    kernel: GaussianKernel,
    scale: ScaleLaw,
    grid,
    n: int,
    rng: np.random.Generator,
    mode: str = "scalar",
) -> np.ndarray:
    """``n`` paths ``X(t_j) = S * Y(t_j)`` (``mode='scalar'``) or ``S(t_j) * Y(t_j)`` (``mode='path'``)."""
    t = np.asarray(grid, dtype=float)
    var = kernel.variances(t)
    if not np.allclose(var, 1.0, atol=1e-9):
        raise InvalidParameterError("spherical processes are built on a unit-variance Gaussian kernel")
    L, _ = psd_factor(variogram_to_covariance(kernel, t))
    y = rng.standard_normal((n, t.size)) @ L.T
    if mode == "scalar":
        s = scale.sample(rng, n)[:, None]
    elif mode == "path":
        if scale.path_sampler is None:
            raise InvalidParameterError("path mode needs a scale law with a path sampler")
        s = np.asarray(scale.path_sampler(rng, n, t), dtype=float)
    else:
        raise InvalidParameterError(f"unknown mode {mode!r}")
    return s * y
