"""Truncated Poisson-cascade simulation of Brown–Resnick and Penrose–Kabluchko processes on a grid."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numba
import numpy as np
from scipy import optimize, special

from .core_samplers import GaussianKernel, ScaleLaw, constant_scale, psd_factor, variogram_to_covariance
from .errors import InvalidParameterError, UnsupportedLawError
from .rng import as_generator

__all__ = [
    "PoissonStream",
    "ProcessSample",
    "make_poisson_stream",
    "sup_quantile",
    "abs_sup_quantile",
    "default_n_points",
    "default_window",
    "simulate_brown_resnick",
    "simulate_penrose_kabluchko",
    "FLAG_LEVEL",
    "MAX_DEFAULT_POINTS",
]

FLAG_LEVEL = 1e-4  # q is the 1 - FLAG_LEVEL quantile of the relevant grid supremum
MAX_DEFAULT_POINTS = 10_000
PATHS_PER_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class PoissonStream:
    """Points of a Poisson process: decreasing for the Gumbel intensity, unordered on a Lebesgue window."""

    intensity: str
    points: np.ndarray
    window: float | None = None

    @property
    def count(self) -> int:
        return int(self.points.size)


def make_poisson_stream(
    intensity: str,
    size: int | None = None,
    window: float | None = None,
    rng: np.random.Generator | int | None = None,
) -> PoissonStream:
    """``'gumbel'``: the ``size`` largest points of intensity ``e^{-x} dx``, as ``-ln(E_1 + ... + E_i)``.
    ``'lebesgue'``: all points of unit intensity on ``[-window, window]``.
    """
    gen = as_generator(rng)
    if intensity == "gumbel":
        if size is None or size < 1:
            raise InvalidParameterError("Gumbel stream needs size >= 1")
        return PoissonStream("gumbel", -np.log(np.cumsum(gen.standard_exponential(int(size)))))
    if intensity == "lebesgue":
        if window is None or not window > 0:
            raise InvalidParameterError("Lebesgue stream needs a positive window")
        count = gen.poisson(2.0 * window)
        return PoissonStream("lebesgue", gen.uniform(-window, window, count), float(window))
    raise InvalidParameterError(f"unknown intensity {intensity!r}")


@dataclass(frozen=True, eq=False)
class ProcessSample:
    """Simulated paths (one row per path) with per-grid-point truncation flags."""

    grid: np.ndarray
    values: np.ndarray
    flags: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def flag_rate(self) -> float:
        """Fraction of paths with at least one flagged grid point."""
        return float(self.flags.any(axis=1).mean())


def _solve_decreasing(f, level: float, start: float) -> float:
    lo, hi = start, start + 1.0
    while f(hi) > level:
        hi += 2.0 * (hi - lo)
    while f(lo) <= level:
        lo -= 2.0 * (hi - lo)
    return optimize.brentq(lambda q: f(q) - level, lo, hi, xtol=1e-12)


def sup_quantile(variances, level: float = FLAG_LEVEL) -> float:
    """Upper bound on the ``1 - level`` quantile of ``max_j (Z_j - sigma_j**2/2)``, by the union bound."""
    v = np.asarray(variances, dtype=float)
    pos = v[v > 0]
    has_zero = bool(np.any(v <= 0))

    def tail(q):
        t = float(np.sum(special.ndtr(-(q + pos / 2.0) / np.sqrt(pos)))) if pos.size else 0.0
        return t + (1.0 if (has_zero and q < 0) else 0.0)

    if pos.size == 0:
        return 0.0
    q = _solve_decreasing(tail, level, 0.0)
    return max(q, 0.0) if has_zero else q


def abs_sup_quantile(variances, level: float = FLAG_LEVEL) -> float:
    """Upper bound on the ``1 - level`` quantile of ``max_j |Z_j|``, by the union bound."""
    s = np.sqrt(np.asarray(variances, dtype=float))
    s = s[s > 0]
    if s.size == 0:
        return 0.0
    return _solve_decreasing(lambda q: float(np.sum(2.0 * special.ndtr(-q / s))), level, 0.0)


def default_n_points(q: float) -> int:
    """``min(1e4, 10 * ceil(e**q))`` atoms, where ``q`` bounds the grid supremum of ``Z - sigma**2/2``."""
    return int(min(MAX_DEFAULT_POINTS, 10 * math.ceil(math.exp(min(q, 50.0)))))


def default_window(x_max: float, kappa: float, q: float) -> float:
    """``x_max / kappa + q + 2`` with ``q`` bounding the grid supremum of ``|Z|``."""
    return x_max / kappa + q + 2.0


@numba.njit(nogil=True, cache=True)
def _br_kernel(rng, L, half_var, n_points, q, out, flags):
    paths, k = out.shape
    g = np.empty(k)
    for p in range(paths):
        for j in range(k):
            out[p, j] = -np.inf
        total = 0.0
        ups = 0.0
        for _ in range(n_points):
            total += rng.standard_exponential()
            ups = -math.log(total)
            for j in range(k):
                g[j] = rng.standard_normal()
            for j in range(k):
                v = ups - half_var[j]
                for m in range(j + 1):
                    v += L[j, m] * g[m]
                if v > out[p, j]:
                    out[p, j] = v
        for j in range(k):
            flags[p, j] = ups + q > out[p, j]


@numba.njit(nogil=True, cache=True)
def _pk_kernel(rng, L, counts, atoms, scales, out):
    paths, k = out.shape
    g = np.empty(k)
    idx = 0
    for p in range(paths):
        for j in range(k):
            out[p, j] = np.inf
        for _ in range(counts[p]):
            for j in range(k):
                g[j] = rng.standard_normal()
            for j in range(k):
                v = atoms[idx]
                for m in range(j + 1):
                    v += L[j, m] * g[m]
                v = abs(v) * scales[idx, j]
                if v < out[p, j]:
                    out[p, j] = v
            idx += 1


def _run_chunks(n_paths: int, rng: np.random.Generator, threads: int, work) -> None:
    bounds = [(s, min(s + PATHS_PER_CHUNK, n_paths)) for s in range(0, n_paths, PATHS_PER_CHUNK)]
    children = rng.spawn(len(bounds))
    jobs = [(lo, hi, child) for (lo, hi), child in zip(bounds, children)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda job: work(*job), jobs))
    else:
        for job in jobs:
            work(*job)


def _grid_factor(kernel: GaussianKernel, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidParameterError("grid must be a non-empty 1-D sequence")
    cov = variogram_to_covariance(kernel, t)
    L, _ = psd_factor(cov)
    return t, np.ascontiguousarray(L), kernel.variances(t)


def simulate_brown_resnick(
    kernel: GaussianKernel,
    grid,
    n_paths: int,
    n_points: int | None = None,
    rng: np.random.Generator | int | None = None,
    threads: int = 1,
) -> ProcessSample:
    """``beta(t_j) = max_{i <= n_points} (Upsilon_i + Z_i(t_j) - sigma**2(t_j)/2)``.

    A grid point is flagged when ``Upsilon_{n_points} + q`` exceeds the
    simulated maximum, ``q`` being the union-bound ``1 - 1e-4`` quantile of
    the grid supremum of ``Z - sigma**2/2``: a dropped atom could then still
    matter.
    """
    t, L, var = _grid_factor(kernel, grid)
    q = sup_quantile(var)
    n_points = default_n_points(q) if n_points is None else int(n_points)
    if n_points < 1 or n_paths < 1:
        raise InvalidParameterError("n_points and n_paths must be >= 1")
    gen = as_generator(rng)
    values = np.empty((int(n_paths), t.size))
    flags = np.empty((int(n_paths), t.size), dtype=np.bool_)
    half_var = np.ascontiguousarray(var / 2.0)

    def work(lo, hi, child):
        _br_kernel(child, L, half_var, n_points, q, values[lo:hi], flags[lo:hi])

    _run_chunks(int(n_paths), gen, threads, work)
    meta = {"n_points": n_points, "q": q, "kernel": kernel.name}
    return ProcessSample(t, values, flags, meta)


def simulate_penrose_kabluchko(
    kernel: GaussianKernel,
    grid,
    n_paths: int,
    scale: ScaleLaw | None = None,
    window: float | None = None,
    x_max: float = 5.0,
    rng: np.random.Generator | int | None = None,
    threads: int = 1,
    allow_unbounded_scale: bool = False,
) -> ProcessSample:
    """``zeta(t_j) = min_i S_i(t_j) |Upsilon_i + Z_i(t_j)|`` over unit-rate Poisson points on ``[-W, W]``.

    A grid point is flagged unless ``kappa (W - q)`` exceeds the simulated
    minimum, ``kappa`` being the scale lower bound and ``q`` the union-bound
    ``1 - 1e-4`` quantile of the grid supremum of ``|Z|``: points outside
    the window could not then have reached below it. Scalar scale laws give
    each atom one scale shared by the grid; laws with a path sampler give a
    scale path per atom.
    """
    scale = constant_scale(1.0) if scale is None else scale
    kappa = scale.params["c"] if scale.is_constant else scale.lower_bound
    if not kappa > 0:
        if not allow_unbounded_scale:
            raise UnsupportedLawError("scale law needs a positive lower bound")
        if window is None:
            raise InvalidParameterError("an explicit window is required for unbounded scales")
        kappa = 0.0
    t, L, var = _grid_factor(kernel, grid)
    q = abs_sup_quantile(var)
    window = default_window(x_max, kappa, q) if window is None else float(window)
    if not window > 0:
        raise InvalidParameterError("window must be positive")
    gen = as_generator(rng)
    n_paths = int(n_paths)
    values = np.empty((n_paths, t.size))
    k = t.size

    def work(lo, hi, child):
        counts = child.poisson(2.0 * window, hi - lo)
        total = int(counts.sum())
        atoms = child.uniform(-window, window, total)
        if scale.is_constant:
            scales = np.full((total, k), float(scale.params["c"]))
        elif scale.path_sampler is not None:
            scales = np.ascontiguousarray(scale.path_sampler(child, total, t), dtype=float)
        else:
            scales = np.repeat(scale.sample(child, total)[:, None], k, axis=1)
        _pk_kernel(child, L, counts.astype(np.int64), atoms, scales, values[lo:hi])

    _run_chunks(n_paths, gen, threads, work)
    flags = ~(kappa * (window - q) > values)
    meta = {"window": window, "q": q, "kappa": kappa, "kernel": kernel.name, "scale": scale.kind}
    return ProcessSample(t, values, flags, meta)
