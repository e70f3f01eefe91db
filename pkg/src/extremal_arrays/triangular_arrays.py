"""Covariance schedules and block extremes of elliptical triangular arrays.

Row ``n`` of the array holds ``n`` i.i.d. vectors ``R_k A_n U`` with
``A_n A_n' = Sigma_n = 11' - Gamma / c_n``. Block minima of absolute values
or block maxima are normalised with the constants from :mod:`.norming`.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numba
import numpy as np

from .core_samplers import RadialLaw, ScaleLaw, chi_law, scaled_chi
from .errors import (
    InvalidParameterError,
    InvalidVariogramError,
    ScheduleTooEarlyError,
)
from .norming import (
    MarginalLaw,
    NormingPair,
    gumbel_norming,
    marginal_from_radial,
    min_norming,
    weibull_norming,
)
from .rng import as_generator

__all__ = [
    "ArraySpec",
    "BlockExtremes",
    "validate_variogram",
    "sigma_from_gamma",
    "simulate_block_extremes",
    "rv_index_at_zero",
    "marginal_index_at_zero",
    "MAX_FLOATS_PER_CHUNK",
]

MAX_FLOATS_PER_CHUNK = 1_000_000
CLIP_EIGENVALUE = 1e-10
_RULES = {"min": ("minima",), "max": ("gumbel", "weibull")}


def _check_gamma_structure(gamma) -> np.ndarray:
    g = np.atleast_2d(np.asarray(gamma, dtype=float))
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidVariogramError("variogram must be a square matrix")
    if not np.all(np.isfinite(g)):
        raise InvalidVariogramError("variogram entries must be finite")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise InvalidVariogramError("variogram must be symmetric")
    if np.any(np.diag(g) != 0):
        raise InvalidVariogramError("variogram must have a zero diagonal")
    off = g[~np.eye(g.shape[0], dtype=bool)]
    if np.any(off <= 0):
        raise InvalidVariogramError("off-diagonal variogram entries must be positive")
    return (g + g.T) / 2.0


def validate_variogram(gamma) -> np.ndarray:
    """Return ``gamma`` as an array after checking it is a valid variogram matrix.

    Validity means ``(g_i1 + g_j1 - g_ij) / 2`` (``i, j >= 2``) is PSD, i.e.
    some Gaussian vector has these incremental variances.
    """
    g = _check_gamma_structure(gamma)
    if g.shape[0] > 1:
        m = (g[1:, :1] + g[:1, 1:] - g[1:, 1:]) / 2.0
        w = np.linalg.eigvalsh(m)
        if w[0] < -1e-10 * max(w[-1], 1.0):
            raise InvalidVariogramError(f"not a variogram: anchored matrix has eigenvalue {w[0]:.3e}")
    return g


def sigma_from_gamma(gamma, c_n: float, *, clip: bool = False) -> np.ndarray:
    """Correlation matrix ``11' - Gamma / c_n``.

    Raises :class:`ScheduleTooEarlyError` when the result is not positive
    definite. With ``clip=True`` eigenvalues are floored at ``1e-10`` and the
    matrix rescaled to unit diagonal instead, with a warning.
    """
    if not c_n > 0:
        raise InvalidParameterError("c_n must be positive")
    g = _check_gamma_structure(gamma)
    sigma = 1.0 - g / c_n
    if np.any(sigma <= -1.0) or np.any(sigma > 1.0):
        raise InvalidParameterError(f"c_n={c_n} puts correlations outside (-1, 1)")
    try:
        np.linalg.cholesky(sigma)
        return sigma
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(sigma)
    if not clip:
        raise ScheduleTooEarlyError(f"Sigma_n is not positive definite at c_n={c_n}", float(w[0]))
    warnings.warn(f"clipping eigenvalue {w[0]:.3e} of Sigma_n to {CLIP_EIGENVALUE}", RuntimeWarning, stacklevel=2)
    s = (v * np.maximum(w, CLIP_EIGENVALUE)) @ v.T
    d = np.sqrt(np.diag(s))
    return s / np.outer(d, d)


@dataclass(frozen=True, eq=False)
class ArraySpec:
    """Specification of an elliptical triangular array.

    Give either ``gamma`` (the schedule ``Sigma_n = 11' - gamma / c_n`` is
    used) or a fixed correlation matrix ``sigma``. A ``scale`` law turns the
    radius into ``S * chi_k``.
    """

    k: int
    radial: RadialLaw | None = None
    gamma: np.ndarray | None = None
    sigma: np.ndarray | None = None
    scale: ScaleLaw | None = None
    mode: str = "max"
    cn_rule: str = "gumbel"
    clip: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError("k must be >= 1")
        if self.mode not in _RULES:
            raise InvalidParameterError(f"mode must be 'min' or 'max', got {self.mode!r}")
        if self.cn_rule not in _RULES[self.mode]:
            raise InvalidParameterError(f"c_n rule {self.cn_rule!r} does not fit mode {self.mode!r}")
        if (self.gamma is None) == (self.sigma is None) and self.k > 1:
            raise InvalidParameterError("give exactly one of gamma or sigma")
        if self.radial is None:
            radial = scaled_chi(self.scale, self.k) if self.scale is not None else chi_law(self.k)
            object.__setattr__(self, "radial", radial)
        elif self.scale is not None:
            raise InvalidParameterError("give a radial law or a scale law, not both")
        if self.gamma is not None:
            g = validate_variogram(self.gamma)
            if g.shape[0] != self.k:
                raise InvalidParameterError("gamma has the wrong dimension")
            object.__setattr__(self, "gamma", g)
        if self.sigma is not None:
            s = np.atleast_2d(np.asarray(self.sigma, dtype=float))
            if s.shape != (self.k, self.k) or not np.allclose(np.diag(s), 1.0):
                raise InvalidParameterError("sigma must be a k x k correlation matrix")
            object.__setattr__(self, "sigma", s)
        if self.mode == "min":
            idx = self.radial.rv_index_at_zero
            if idx is not None and not idx > 0:
                raise InvalidParameterError("minima need a radius regularly varying at 0 with positive index")

    @property
    def marginal(self) -> MarginalLaw:
        return marginal_from_radial(self.radial, self.k)

    def norming(self, n: float) -> NormingPair:
        if self.cn_rule == "minima":
            return min_norming(self.marginal, n)
        if self.cn_rule == "gumbel":
            return gumbel_norming(self.marginal, n)
        return weibull_norming(self.marginal, n)

    def sigma_n(self, c_n: float) -> np.ndarray:
        if self.sigma is not None:
            return self.sigma
        if self.k == 1:
            return np.ones((1, 1))
        return sigma_from_gamma(self.gamma, c_n, clip=self.clip)


@dataclass(frozen=True, eq=False)
class BlockExtremes:
    values: np.ndarray
    norming: NormingPair
    sigma: np.ndarray
    min_eigenvalue: float
    meta: dict[str, Any] = field(default_factory=dict)


@numba.njit(nogil=True, cache=True)
def _gauss_kernel(rng, L, n, reps, is_min, out):
    k = L.shape[0]
    g = np.empty(k)
    for r in range(reps):
        for j in range(k):
            out[r, j] = np.inf if is_min else -np.inf
        for _ in range(n):
            for j in range(k):
                g[j] = rng.standard_normal()
            for j in range(k):
                v = 0.0
                for m in range(j + 1):
                    v += L[j, m] * g[m]
                if is_min:
                    v = abs(v)
                    if v < out[r, j]:
                        out[r, j] = v
                elif v > out[r, j]:
                    out[r, j] = v


@numba.njit(nogil=True, cache=True)
def _radial_kernel(rng, L, radii, n, reps, is_min, out):
    k = L.shape[0]
    g = np.empty(k)
    idx = 0
    for r in range(reps):
        for j in range(k):
            out[r, j] = np.inf if is_min else -np.inf
        for _ in range(n):
            norm2 = 0.0
            for j in range(k):
                g[j] = rng.standard_normal()
                norm2 += g[j] * g[j]
            scale = radii[idx] / math.sqrt(norm2)
            idx += 1
            for j in range(k):
                v = 0.0
                for m in range(j + 1):
                    v += L[j, m] * g[m]
                v *= scale
                if is_min:
                    v = abs(v)
                    if v < out[r, j]:
                        out[r, j] = v
                elif v > out[r, j]:
                    out[r, j] = v


def _chunk_bounds(n: int, reps: int) -> list[tuple[int, int]]:
    size = max(1, MAX_FLOATS_PER_CHUNK // max(n, 1))
    return [(s, min(s + size, reps)) for s in range(0, reps, size)]


def simulate_block_extremes(
    spec: ArraySpec,
    n: int,
    reps: int,
    rng: np.random.Generator | int | None = None,
    norming: NormingPair | None = None,
    threads: int = 1,
) -> BlockExtremes:
    """Normalised componentwise block extremes, one row per replication.

    Replications are split into fixed chunks of at most ``1e6`` radii, each
    with its own child generator, so results do not depend on ``threads``.
    """
    n, reps = int(n), int(reps)
    if n < 1 or reps < 1:
        raise InvalidParameterError("n and reps must be >= 1")
    rng = as_generator(rng)
    if norming is None:
        if n == 1:
            norming = NormingPair(a_n=1.0, b_n=0.0, n=1, c_n=math.inf, rule="identity")
        else:
            norming = spec.norming(n)
    if spec.sigma is None and spec.k > 1 and not math.isfinite(norming.c_n):
        raise InvalidParameterError("the variogram schedule needs a finite c_n")
    sigma = spec.sigma_n(norming.c_n)
    L = np.ascontiguousarray(np.linalg.cholesky(sigma))
    min_eig = float(np.linalg.eigvalsh(sigma)[0])
    is_min = spec.mode == "min"
    gaussian = spec.radial.family == "chi" and spec.radial.params["k"] == spec.k
    chunks = _chunk_bounds(n, reps)
    children = rng.spawn(len(chunks))
    raw = np.empty((reps, spec.k))

    def run(i: int) -> None:
        lo, hi = chunks[i]
        out = raw[lo:hi]
        child = children[i]
        if gaussian:
            _gauss_kernel(child, L, n, hi - lo, is_min, out)
        else:
            radii = spec.radial.sample(child, (hi - lo) * n)
            _radial_kernel(child, L, radii, n, hi - lo, is_min, out)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(chunks))))
    else:
        for i in range(len(chunks)):
            run(i)

    if norming.rule == "minima":
        values = norming.a_n * raw
    else:
        values = (raw - norming.b_n) / norming.a_n
    meta = {
        "n": n,
        "reps": reps,
        "a_n": norming.a_n,
        "b_n": norming.b_n,
        "c_n": norming.c_n,
        "rule": norming.rule,
        "min_eigenvalue": min_eig,
        "clipped": bool(spec.clip and spec.sigma is None and min_eig <= CLIP_EIGENVALUE * 1.01),
        "chunks": len(chunks),
        "gaussian_fast_path": gaussian,
    }
    return BlockExtremes(values=values, norming=norming, sigma=sigma, min_eigenvalue=min_eig, meta=meta)


def _loglog_slope(sorted_small: np.ndarray, total: int) -> float:
    m = sorted_small.size
    x = np.log(sorted_small)
    y = np.log(np.arange(1, m + 1) / total)
    x0 = x - x.mean()
    return float(np.dot(x0, y - y.mean()) / np.dot(x0, x0))


def rv_index_at_zero(
    samples,
    fit_fraction: float = 0.05,
    n_boot: int = 200,
    rng: np.random.Generator | int | None = None,
) -> tuple[float, float]:
    """Index of regular variation at 0 from the lower tail of a positive sample.

    Least-squares slope of ``log ECDF`` against ``log x`` over the lowest
    ``fit_fraction`` of the sample, with a bootstrap standard error.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 1000:
        raise InvalidParameterError("need at least 1000 samples")
    if not 0 < fit_fraction <= 0.2:
        raise InvalidParameterError("fit fraction must lie in (0, 0.2]")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise InvalidParameterError("samples must be positive and finite")
    m = max(int(fit_fraction * x.size), 10)

    def estimate(v):
        return _loglog_slope(np.sort(np.partition(v, m - 1)[:m]), v.size)

    est = estimate(x)
    gen = as_generator(rng)
    boots = [estimate(x[gen.integers(0, x.size, x.size)]) for _ in range(n_boot)]
    se = float(np.std(boots, ddof=1)) if n_boot > 1 else math.nan
    return est, se


def marginal_index_at_zero(
    spec: ArraySpec, rng: np.random.Generator | int | None = None, pilot: int = 100_000
) -> float:
    """Index ``min(gamma, 1)`` of ``|X_11|`` at 0: analytic when known, else a pilot fit."""
    idx = spec.radial.rv_index_at_zero
    if idx is not None:
        return min(float(idx), 1.0)
    gen = as_generator(rng)
    r = spec.radial.sample(gen, pilot)
    g = gen.standard_normal((pilot, spec.k))
    x = np.abs(r * g[:, 0] / np.linalg.norm(g, axis=1))
    est, _ = rv_index_at_zero(x[x > 0], rng=gen)
    if not est > 0:
        raise InvalidParameterError("estimated index at zero is not positive")
    return min(est, 1.0)
