"""Norming constants for minima and maxima of elliptical arrays.

All solvers are deterministic bracketed root finds (``scipy.optimize.brentq``)
on the marginal law ``G`` of ``X_11 = R_k U_1``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize, special, stats

from .core_samplers import RadialLaw
from .errors import (
    DomainError,
    InvalidParameterError,
    NoSolutionError,
    UnsupportedLawError,
)

__all__ = [
    "MarginalLaw",
    "NormingPair",
    "ModelAConstants",
    "normal_marginal",
    "uniform_marginal",
    "laplace_marginal",
    "marginal_from_radial",
    "min_norming",
    "gumbel_norming",
    "weibull_norming",
    "model_a_w",
    "model_a_constants",
    "model_a_tail_expansion",
    "model_a_expansion_quantile",
    "model_b_constants",
    "davis_resnick_check",
]

_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_PANELS = 32  # 32 panels x 16 nodes = 512 nodes per evaluation


@dataclass(frozen=True, eq=False)
class MarginalLaw:
    """Law ``G`` of ``R_k U_1``, symmetric about 0.

    ``half_mass(x) = P{0 < X <= x}`` and ``sf`` are kept separately from
    ``cdf`` so that neither the origin nor the far tail suffer cancellation.
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    sf: Callable[[np.ndarray], np.ndarray]
    half_mass: Callable[[np.ndarray], np.ndarray]
    w: Callable[[np.ndarray], np.ndarray] | None = None
    weibull_index: float | None = None
    upper_endpoint: float = math.inf
    upper_tail: Callable[[np.ndarray], np.ndarray] | None = None
    source: str = "analytic"
    name: str = "custom"
    meta: dict[str, Any] = field(default_factory=dict)

    def tail_above(self, s):
        if self.upper_tail is not None:
            return self.upper_tail(np.asarray(s, dtype=float))
        return self.sf(self.upper_endpoint - np.asarray(s, dtype=float))

    def quantile(self, p: float) -> float:
        """Generalised inverse of ``G`` at a scalar level ``p``."""
        if not 0.0 < p < 1.0:
            raise InvalidParameterError("quantile level must lie in (0, 1)")
        if p == 0.5:
            return 0.0
        if p > 0.5:
            return _solve_upper(self, 1.0 - p)
        return -_solve_upper(self, p)


@dataclass(frozen=True)
class NormingPair:
    a_n: float
    b_n: float
    n: float
    c_n: float
    rule: str

    def normalize(self, values):
        """Apply the affine normalisation matching ``rule``."""
        v = np.asarray(values, dtype=float)
        if self.rule == "minima":
            return self.a_n * v
        if self.rule == "weibull":
            return (v - self.b_n) / self.a_n
        return (v - self.b_n) / self.a_n


def normal_marginal(scale: float = 1.0) -> MarginalLaw:
    s = float(scale)
    return MarginalLaw(
        cdf=lambda x: stats.norm.cdf(np.asarray(x) / s),
        sf=lambda x: stats.norm.sf(np.asarray(x) / s),
        half_mass=lambda x: 0.5 * special.erf(np.asarray(x) / (s * math.sqrt(2.0))),
        w=lambda x: np.asarray(x, dtype=float) / s**2,
        name="normal",
        meta={"scale": s},
    )


def uniform_marginal() -> MarginalLaw:
    """Uniform on (-1, 1)."""
    return MarginalLaw(
        cdf=lambda x: np.clip((np.asarray(x, dtype=float) + 1.0) / 2.0, 0.0, 1.0),
        sf=lambda x: np.clip((1.0 - np.asarray(x, dtype=float)) / 2.0, 0.0, 1.0),
        half_mass=lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0) / 2.0,
        weibull_index=1.0,
        upper_endpoint=1.0,
        upper_tail=lambda s: np.clip(np.asarray(s, dtype=float), 0.0, 2.0) / 2.0,
        name="uniform",
    )


def laplace_marginal(scale: float = 1.0) -> MarginalLaw:
    """Laplace law; ``1 - G(x) = exp(-x/scale)/2`` and ``w = 1/scale``."""
    d = stats.laplace(scale=scale)
    return MarginalLaw(
        cdf=d.cdf,
        sf=d.sf,
        half_mass=lambda x: -0.5 * np.expm1(-np.abs(np.asarray(x, dtype=float)) / scale) * np.sign(x),
        w=lambda x: np.full(np.shape(x), 1.0 / scale),
        name="laplace",
        meta={"scale": scale},
    )


def _panel_nodes(lo, hi) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on ``[lo, hi]`` (one row per interval), panels geometric away from lo."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))[:, None]
    width = np.atleast_1d(np.asarray(hi, dtype=float))[:, None] - lo
    rel = np.concatenate([[0.0], np.geomspace(1e-9, 1.0, _PANELS)])
    edges = lo + width * rel
    a, b = edges[:, :-1], edges[:, 1:]
    half = (b - a) / 2.0
    nodes = ((a + b) / 2.0)[..., None] + half[..., None] * _GL16_X
    weights = half[..., None] * _GL16_W
    m = lo.shape[0]
    return nodes.reshape(m, -1), weights.reshape(m, -1)


_CHUNK = 1024


def marginal_from_radial(radial: RadialLaw, k: int | None = None) -> MarginalLaw:
    """Law of ``R_k U_1`` for a radius ``R_k`` of a ``k``-dimensional spherical vector.

    Gaussian radii give the normal law exactly; otherwise ``G`` is integrated
    against the radial density on 512 composite Gauss-Legendre nodes.
    """
    k = radial.dim if k is None else k
    if k is None or k < 1:
        raise InvalidParameterError("dimension of the radial law is required")
    mda = radial.mda
    w = mda[1] if mda is not None and mda[0] == "gumbel" else None
    widx = mda[1] + (k - 1) / 2.0 if mda is not None and mda[0] == "weibull" else None

    if radial.family == "chi" and radial.params["k"] == k:
        return normal_marginal()
    if radial.family == "scaled_chi" and radial.params["k"] == k and radial.params["scale"].is_constant:
        return normal_marginal(radial.params["scale"].params["c"])

    omega = radial.upper_endpoint
    if k == 1:
        return MarginalLaw(
            cdf=lambda x: 0.5 + np.sign(x) * radial.cdf(np.abs(np.asarray(x, dtype=float))) / 2.0,
            sf=lambda x: np.where(
                np.asarray(x) >= 0, radial.sf(np.abs(np.asarray(x, dtype=float))) / 2.0,
                1.0 - radial.sf(np.abs(np.asarray(x, dtype=float))) / 2.0,
            ),
            half_mass=lambda x: np.sign(x) * radial.cdf(np.abs(np.asarray(x, dtype=float))) / 2.0,
            w=w,
            weibull_index=widx,
            upper_endpoint=omega,
            upper_tail=(lambda s: radial.tail_above(s) / 2.0) if math.isfinite(omega) else None,
            source="radial",
            name=f"marginal({radial.family})",
        )
    if radial.pdf is None:
        raise UnsupportedLawError("radial law needs a density to build its marginal")
    if math.isfinite(omega):
        r_top = omega
    else:
        r_top = float(radial.quantile(1.0 - 1e-15))
    half_dof = (k - 1) / 2.0

    def _upper(x):
        return np.full_like(x, omega) if math.isfinite(omega) else np.maximum(r_top, 2.0 * x)

    def _integral(x, kind):
        # kind 'sf': P{X > x}; kind 'half': P{0 < X <= x} beyond the mass of R <= x
        out = np.zeros_like(x)
        hi = _upper(x)
        live = np.nonzero(x < hi)[0]
        for start in range(0, live.size, _CHUNK):
            idx = live[start : start + _CHUNK]
            r, wt = _panel_nodes(x[idx], hi[idx])
            ratio2 = np.clip((x[idx, None] / r) ** 2, 0.0, 1.0)
            if kind == "sf":
                inner = special.betainc(half_dof, 0.5, 1.0 - ratio2)
            else:
                inner = special.betainc(0.5, half_dof, ratio2)
            out[idx] = 0.5 * np.sum(wt * inner * radial.pdf(r), axis=1)
        return out

    def sf_pos(x):
        x = np.asarray(x, dtype=float)
        return _integral(x, "sf")

    def half_pos(x):
        x = np.asarray(x, dtype=float)
        base = 0.5 * np.asarray(radial.cdf(np.minimum(x, _upper(x))), dtype=float)
        return base + _integral(x, "half")

    def half(x):
        x = np.asarray(x, dtype=float)
        v = np.sign(x) * half_pos(np.abs(np.atleast_1d(x))).reshape(x.shape)
        return float(v) if x.ndim == 0 else v

    def sf_any(x):
        x = np.asarray(x, dtype=float)
        tail = sf_pos(np.abs(np.atleast_1d(x))).reshape(x.shape)
        v = np.where(x >= 0, tail, 1.0 - tail)
        return float(v) if x.ndim == 0 else v

    def cdf(x):
        return 1.0 - sf_any(x)

    return MarginalLaw(
        cdf=cdf,
        sf=sf_any,
        half_mass=half,
        w=w,
        weibull_index=widx,
        upper_endpoint=omega,
        source="radial",
        name=f"marginal({radial.family})",
    )


def _bracket_root(f: Callable[[float], float], x0: float, *, grow: float = 2.0, limit: int = 2000):
    """Find ``lo < hi`` with ``f(lo) < 0 <= f(hi)`` for an increasing ``f`` on (0, inf)."""
    hi = x0
    for _ in range(limit):
        if f(hi) >= 0:
            break
        hi *= grow
        if not math.isfinite(hi):
            raise NoSolutionError("no sign change found while expanding the bracket")
    else:
        raise NoSolutionError("no sign change found while expanding the bracket")
    lo = hi
    for _ in range(limit):
        lo /= grow
        if lo == 0.0:
            raise NoSolutionError("target is not crossed away from 0 (atom or flat law at 0)")
        if f(lo) < 0:
            return lo, hi
        hi = lo
    raise NoSolutionError("could not bracket the root near 0")


def _checked_root(f, lo, hi, target_scale: float) -> float:
    x = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(x)) > 1e-6 * target_scale:
        raise NoSolutionError("the distribution function jumps over the target level")
    return x


def _solve_upper(G: MarginalLaw, p_tail: float) -> float:
    """``x > 0`` with ``P{X > x} = p_tail`` (``p_tail < 1/2``)."""
    if math.isfinite(G.upper_endpoint):
        s = _solve_tail_gap(G.tail_above, p_tail, G.upper_endpoint)
        return G.upper_endpoint - s
    log_target = math.log(p_tail)

    def f(x):
        v = float(G.sf(x))
        return log_target - (math.log(v) if v > 0 else -math.inf)

    lo, hi = _bracket_root(f, 1.0)
    return _checked_root(f, lo, hi, 1.0)


def _solve_tail_gap(tail: Callable, p: float, span: float) -> float:
    """``s`` with ``tail(s) = p`` where ``tail`` increases from 0."""
    log_p = math.log(p)

    def f(s):
        v = float(tail(s))
        return (math.log(v) if v > 0 else -math.inf) - log_p

    if f(span) < 0:
        raise NoSolutionError("tail mass never reaches the target")
    lo, hi = _bracket_root(f, span / 2.0)
    return _checked_root(f, lo, hi, 1.0)


def min_norming(G: MarginalLaw, n: float) -> NormingPair:
    """``a_n`` with ``P{0 < X_11 <= 1/a_n} = 1/n`` and ``c_n = 2 a_n**2``."""
    if n < 2:
        raise InvalidParameterError("block size must be >= 2")
    target = 1.0 / n
    if not math.isfinite(G.upper_endpoint) and target >= 0.5:
        raise NoSolutionError("P{0 < X <= q} stays below 1/n for every finite q")

    def f(q):
        return float(G.half_mass(q)) - target

    lo, hi = _bracket_root(f, 1.0)
    q = _checked_root(f, lo, hi, target)
    a = 1.0 / q
    return NormingPair(a_n=a, b_n=0.0, n=n, c_n=2.0 * a * a, rule="minima")


def gumbel_norming(G: MarginalLaw, n: float) -> NormingPair:
    """``b_n = G^{-1}(1 - 1/n)``, ``a_n = 1/w(b_n)``, ``c_n = 2 b_n / a_n``."""
    if G.w is None:
        raise UnsupportedLawError("the marginal law has no Gumbel scaling function w")
    if n < 2:
        raise InvalidParameterError("block size must be >= 2")
    b = 0.0 if n == 2 else _solve_upper(G, 1.0 / n)
    wb = float(G.w(b))
    if not wb > 0:
        raise NoSolutionError(f"scaling function is not positive at b_n={b}")
    a = 1.0 / wb
    return NormingPair(a_n=a, b_n=b, n=n, c_n=2.0 * b / a, rule="gumbel")


def weibull_norming(law: MarginalLaw | RadialLaw, n: float) -> NormingPair:
    """``a_n = 1 - F^{-1}(1 - 1/n)`` for a law with upper endpoint 1; ``c_n = 2/a_n``."""
    if n < 2:
        raise InvalidParameterError("block size must be >= 2")
    if law.upper_endpoint != 1.0:
        raise UnsupportedLawError("Weibull norming needs upper endpoint 1")
    span = 1.0 if isinstance(law, RadialLaw) else 2.0
    a = _solve_tail_gap(law.tail_above, 1.0 / n, span)
    return NormingPair(a_n=a, b_n=1.0, n=n, c_n=2.0 / a, rule="weibull")


def model_a_w(L1: float, p1: float) -> Callable[[np.ndarray], np.ndarray]:
    """Scaling function of ``S * N(0,1)`` for a Weibullian ``S``."""
    A = (p1 * L1) ** (1.0 / (2.0 + p1))
    B = L1 * A ** (-p1) + A * A / 2.0
    coef = B * 2.0 * p1 / (2.0 + p1)
    expo = (p1 - 2.0) / (2.0 + p1)

    def w(x):
        return coef * np.asarray(x, dtype=float) ** expo

    return w


@dataclass(frozen=True, eq=False)
class ModelAConstants:
    A: float
    B: float
    b_n: float
    a_n: float
    ratio: float
    w: Callable[[np.ndarray], np.ndarray]


def _check_model_a(C1, L1, p1):
    if not (C1 > 0 and L1 > 0 and p1 > 0):
        raise InvalidParameterError("Model A needs C1, L1, p1 > 0")


def model_a_constants(C1: float, alpha1: float, L1: float, p1: float, n: float) -> ModelAConstants:
    """First-order constants for maxima of ``S * Y`` with Weibullian ``S``.

    ``A = (p1 L1)**(1/(2+p1))``, ``B = L1 A**-p1 + A**2/2``,
    ``b_n = (ln n / B)**((2+p1)/(2 p1))`` and ``a_n = 1/w(b_n)``.
    """
    _check_model_a(C1, L1, p1)
    if n <= 1:
        raise InvalidParameterError("block size must exceed 1")
    A = (p1 * L1) ** (1.0 / (2.0 + p1))
    B = L1 * A ** (-p1) + A * A / 2.0
    w = model_a_w(L1, p1)
    b = (math.log(n) / B) ** ((2.0 + p1) / (2.0 * p1))
    a = 1.0 / float(w(b))
    return ModelAConstants(A=A, B=B, b_n=b, a_n=a, ratio=b / a, w=w)


def model_a_tail_expansion(x, C1: float, alpha1: float, L1: float, p1: float):
    """Leading-order tail ``P{S Y > x}`` for Weibullian ``S`` and standard normal ``Y``."""
    _check_model_a(C1, L1, p1)
    x = np.asarray(x, dtype=float)
    A = (p1 * L1) ** (1.0 / (2.0 + p1))
    B = L1 * A ** (-p1) + A * A / 2.0
    power = (alpha1 * (p1 - 1.0) + p1) / (2.0 + p1)
    return C1 / math.sqrt(2.0 + p1) * A ** (-alpha1) * x**power * np.exp(-B * x ** (2.0 * p1 / (2.0 + p1)))


def model_a_expansion_quantile(n: float, C1: float, alpha1: float, L1: float, p1: float) -> float:
    """Solve ``model_a_tail_expansion(b) = 1/n`` for ``b``."""
    log_target = -math.log(n)
    A = (p1 * L1) ** (1.0 / (2.0 + p1))
    B = L1 * A ** (-p1) + A * A / 2.0
    power = (alpha1 * (p1 - 1.0) + p1) / (2.0 + p1)
    const = math.log(C1 / math.sqrt(2.0 + p1)) - alpha1 * math.log(A)

    def f(x):
        return log_target - (const + power * math.log(x) - B * x ** (2.0 * p1 / (2.0 + p1)))

    guess = (math.log(n) / B) ** ((2.0 + p1) / (2.0 * p1))
    grid = np.geomspace(guess / 4.0, guess * 4.0, 400)
    vals = np.array([f(g) for g in grid])
    idx = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if idx.size == 0:
        raise NoSolutionError("tail expansion does not reach 1/n near the first-order guess")
    i = idx[-1]
    return optimize.brentq(f, grid[i], grid[i + 1], rtol=1e-14)


def model_b_constants(n: float, G: MarginalLaw | None = None) -> NormingPair:
    """``b_n = sqrt(2 ln n)``, ``a_n = 1/b_n`` (first order); exact constants when ``G`` is given."""
    if n < 2:
        raise InvalidParameterError("block size must be >= 2")
    if G is not None:
        return gumbel_norming(G, n)
    b = math.sqrt(2.0 * math.log(n))
    return NormingPair(a_n=1.0 / b, b_n=b, n=n, c_n=2.0 * b * b, rule="gumbel")


def davis_resnick_check(G: MarginalLaw, mu: float, tau: float, xs) -> np.ndarray:
    """``(x w(x))**mu (1 - G(tau x)) / (1 - G(x))`` on a grid of ``x``."""
    if not tau > 1:
        raise InvalidParameterError("tau must exceed 1")
    if G.w is None:
        raise UnsupportedLawError("the marginal law has no scaling function w")
    x = np.asarray(xs, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise InvalidParameterError("x-grid must be increasing")
    denom = np.asarray(G.sf(x), dtype=float)
    if np.any(denom <= 0):
        raise DomainError("x-grid reaches beyond the upper endpoint of G")
    return (x * np.asarray(G.w(x), dtype=float)) ** mu * np.asarray(G.sf(tau * x), dtype=float) / denom
