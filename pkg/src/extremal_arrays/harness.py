"""Statistical checks and convergence experiments.

Empirical distribution functions, KS and DKW machinery, and experiments that
compare simulated extremes with evaluations of their limit laws.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from . import __version__
from .core_samplers import GaussianKernel, ScaleLaw, constant_scale, lift_radial
from .errors import ConfigError, ExtremalArraysError, InvalidParameterError
from .extremal_processes import simulate_brown_resnick, simulate_penrose_kabluchko
from .limit_laws import (
    HRSpec,
    hr_bivariate_closed_form,
    hr_limit_cdf,
    min_limit_survival,
    pk_limit_survival,
    weibull_limit_cdf,
)
from .rng import make_rng
from .serialization import array_spec_from_json, kernel_from_json, scale_from_json
from .triangular_arrays import ArraySpec, marginal_index_at_zero, simulate_block_extremes

__all__ = [
    "ecdf",
    "ks_distance",
    "dkw_radius",
    "joint_ecdf",
    "joint_survival",
    "quantile_grid",
    "ExperimentConfig",
    "ReportRow",
    "ConvergenceReport",
    "parse_config",
    "run_convergence_experiment",
    "KINDS",
    "DEFAULT_LEVELS",
    "CSV_SCHEMA_VERSION",
]

KINDS = (
    "min-convergence",
    "max-gumbel-convergence",
    "max-weibull-convergence",
    "br-fdd-check",
    "pk-fdd-check",
    "independence-check",
)
DEFAULT_LEVELS = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_ALLOWANCE = 0.01
CSV_SCHEMA_VERSION = 1
_ARRAY_KINDS = {
    "min-convergence": ("min", "minima"),
    "max-gumbel-convergence": ("max", "gumbel"),
    "max-weibull-convergence": ("max", "weibull"),
    "independence-check": ("min", "minima"),
}


# ---------------------------------------------------------------------------
# empirical distribution functions


def _nonempty(samples) -> np.ndarray:
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise InvalidParameterError("need at least one sample")
    return s


def ecdf(samples, grid) -> np.ndarray:
    """Right-continuous empirical CDF of ``samples`` at each grid point."""
    s = np.sort(_nonempty(samples).ravel())
    return np.searchsorted(s, np.asarray(grid, dtype=float), side="right") / s.size


def ks_distance(samples, cdf) -> float:
    """Sup distance between the empirical CDF and ``cdf``, taken over the jump points."""
    return float(stats.kstest(_nonempty(samples).ravel(), cdf).statistic)


def dkw_radius(reps: int, alpha: float = 0.01) -> float:
    """Radius ``sqrt(ln(2/alpha) / (2 reps))`` of the DKW confidence band."""
    if reps < 1:
        raise InvalidParameterError("reps must be >= 1")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * reps))


def joint_ecdf(samples, points) -> np.ndarray:
    """Fraction of rows of ``samples`` that are componentwise ``<=`` each point."""
    s = np.atleast_2d(_nonempty(samples))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.array([np.mean(np.all(s <= p, axis=1)) for p in pts])


def joint_survival(samples, points) -> np.ndarray:
    """Fraction of rows of ``samples`` that are componentwise ``>`` each point."""
    s = np.atleast_2d(_nonempty(samples))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.array([np.mean(np.all(s > p, axis=1)) for p in pts])


def quantile_grid(marginal_quantiles, k: int) -> np.ndarray:
    """Product grid with the same marginal points on each of ``k`` axes."""
    q = np.asarray(marginal_quantiles, dtype=float)
    return np.array(list(itertools.product(q, repeat=k)))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True, eq=False)
class ProcessConfig:
    kernel: GaussianKernel
    grid: np.ndarray
    scale: ScaleLaw | None = None
    x_max: float = 5.0


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated experiment description (see the JSON schema in the README)."""

    kind: str
    n_schedule: tuple
    reps: int
    seed: int = 0
    array: ArraySpec | None = None
    process: ProcessConfig | None = None
    levels: tuple = DEFAULT_LEVELS
    x_grid: np.ndarray | None = None
    limit_mc_paths: int = 1 << 17
    limit_evaluator: str = "auto"
    allowance: float = DEFAULT_ALLOWANCE
    threads: int = 1
    output_dir: str | None = None
    raw: dict[str, Any] = field(default_factory=dict)


def _require(obj: dict, name: str, path: str):
    if name not in obj:
        raise ConfigError("E_MISSING", f"{path}{name}", "required field is missing")
    return obj[name]


def parse_config(text: str | dict) -> ExperimentConfig:
    """Parse and validate an experiment config; errors carry a code and a field path."""
    if isinstance(text, dict):
        obj = text
    else:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("E_JSON", "<root>", f"malformed JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("E_TYPE", "<root>", "config must be a JSON object")
    kind = _require(obj, "kind", "")
    if kind not in KINDS:
        raise ConfigError("E_UNKNOWN_KIND", "kind", f"unknown experiment kind {kind!r}")
    reps = _require(obj, "reps", "")
    if not isinstance(reps, int) or isinstance(reps, bool):
        raise ConfigError("E_TYPE", "reps", "reps must be an integer")
    if reps < 1000:
        raise ConfigError("E_INVARIANT", "reps", "reps ≥ 1000 is required")

    process_kind = kind in ("br-fdd-check", "pk-fdd-check")
    if process_kind:
        schedule = obj.get("n_schedule", [None])
    else:
        schedule = _require(obj, "n_schedule", "")
    if not isinstance(schedule, list) or not schedule:
        raise ConfigError("E_TYPE", "n_schedule", "n_schedule must be a non-empty list")
    if schedule != [None]:
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in schedule):
            raise ConfigError("E_TYPE", "n_schedule", "entries must be positive numbers")
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ConfigError("E_SCHEMA", "n_schedule", "n_schedule must be strictly increasing")
        if not process_kind and any(int(v) != v or v < 1 for v in schedule):
            raise ConfigError("E_TYPE", "n_schedule", "block sizes must be positive integers")

    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("E_TYPE", "seed", "seed must be a nonnegative integer")
    levels = obj.get("levels", list(DEFAULT_LEVELS))
    if not levels or any(not 0 < p < 1 for p in levels):
        raise ConfigError("E_INVARIANT", "levels", "levels must lie in (0, 1)")
    limit = obj.get("limit", {})
    evaluator = limit.get("evaluator", "auto")
    if evaluator not in ("auto", "closed_form", "monte_carlo"):
        raise ConfigError("E_SCHEMA", "limit.evaluator", "must be auto, closed_form or monte_carlo")
    allowance = float(obj.get("allowance", DEFAULT_ALLOWANCE))
    if allowance < 0:
        raise ConfigError("E_INVARIANT", "allowance", "allowance must be nonnegative")

    array = process = None
    if process_kind:
        p = _require(obj, "process", "")
        try:
            kernel = kernel_from_json(_require(p, "kernel", "process."))
            grid = np.asarray(_require(p, "grid", "process."), dtype=float)
            scale = scale_from_json(p["scale"]) if "scale" in p else None
        except ConfigError:
            raise
        except (ExtremalArraysError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError("E_SPEC", "process", str(exc)) from exc
        if kind == "br-fdd-check" and scale is not None:
            raise ConfigError("E_MISMATCH", "process.scale", "Brown-Resnick paths take no scale law")
        process = ProcessConfig(kernel, grid, scale, float(p.get("x_max", 5.0)))
    else:
        a = _require(obj, "array", "")
        mode, rule = _ARRAY_KINDS[kind]
        if a.get("mode", mode) != mode:
            raise ConfigError("E_MISMATCH", "array.mode", f"{kind} needs mode {mode!r}")
        if a.get("cn_rule", rule) != rule:
            raise ConfigError("E_MISMATCH", "array.cn_rule", f"{kind} needs the {rule!r} rule")
        if kind == "independence-check" and "sigma" not in a:
            raise ConfigError("E_MISMATCH", "array.sigma", "independence checks use a fixed sigma")
        if kind != "independence-check" and "gamma" not in a and int(a.get("k", 1)) > 1:
            raise ConfigError("E_MISMATCH", "array.gamma", "convergence experiments need a variogram")
        try:
            array = array_spec_from_json({**a, "mode": mode, "cn_rule": rule})
        except (ExtremalArraysError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError("E_SPEC", "array", str(exc)) from exc
        if kind == "max-weibull-convergence" and (array.radial.mda is None or array.radial.mda[0] != "weibull"):
            raise ConfigError("E_MISMATCH", "array.radial", "Weibull experiments need a radius in a Weibull domain")

    x_grid = obj.get("x_grid")
    if x_grid is not None:
        x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    out = obj.get("output", {})
    return ExperimentConfig(
        kind=kind,
        n_schedule=tuple(schedule),
        reps=reps,
        seed=seed,
        array=array,
        process=process,
        levels=tuple(float(p) for p in levels),
        x_grid=x_grid,
        limit_mc_paths=int(limit.get("mc_paths", 1 << 17)),
        limit_evaluator=evaluator,
        allowance=allowance,
        threads=int(obj.get("threads", 1)),
        output_dir=out.get("dir"),
        raw=obj,
    )


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class ReportRow:
    n: float | None
    sup_distance: float
    dkw_radius: float
    limit_error: float
    tolerance: float
    passed: bool
    extra: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "sup_distance": self.sup_distance,
            "dkw_radius": self.dkw_radius,
            "limit_error": self.limit_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            **self.extra,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    kind: str
    rows: tuple[ReportRow, ...]
    trend_ok: bool
    verdict: bool
    meta: dict[str, Any] = field(default_factory=dict)

    CSV_COLUMNS = ("n", "sup_distance", "dkw_radius", "limit_error", "tolerance", "passed")

    def csv_lines(self) -> list[str]:
        lines = [",".join(self.CSV_COLUMNS)]
        for r in self.rows:
            n = "" if r.n is None else repr(r.n)
            lines.append(f"{n},{r.sup_distance!r},{r.dkw_radius!r},{r.limit_error!r},{r.tolerance!r},{int(r.passed)}")
        return lines

    def to_json(self) -> str:
        body = {
            "kind": self.kind,
            "verdict": "pass" if self.verdict else "fail",
            "trend_ok": self.trend_ok,
            "rows": [r.as_dict() for r in self.rows],
            "meta": self.meta,
        }
        return json.dumps(body, indent=2, sort_keys=True)


def _gumbel_q(levels):
    return -np.log(-np.log(np.asarray(levels)))


def _limit_points(cfg: ExperimentConfig, k: int, marginal_q: np.ndarray) -> np.ndarray:
    return cfg.x_grid if cfg.x_grid is not None else quantile_grid(marginal_q, k)


def _hr_values(gamma: np.ndarray, theta, points: np.ndarray, cfg: ExperimentConfig) -> tuple[np.ndarray, float]:
    k = gamma.shape[0]
    use_closed = cfg.limit_evaluator == "closed_form" or (cfg.limit_evaluator == "auto" and k == 2)
    if use_closed:
        if k != 2:
            raise ConfigError("E_MISMATCH", "limit.evaluator", "closed form exists only for k = 2")
        return np.asarray(hr_bivariate_closed_form(gamma[0, 1], points[:, 0], points[:, 1])), 0.0
    est = hr_limit_cdf(HRSpec(gamma, theta), points, mc_paths=cfg.limit_mc_paths, rng=make_rng(cfg.seed, 10_000))
    return np.array([e.value for e in est]), max(e.combined_error for e in est)


def _row(n, distance: float, reps: int, limit_err: float, allowance: float, extra=None) -> ReportRow:
    dkw = dkw_radius(reps)
    tol = dkw + limit_err + allowance
    return ReportRow(n, float(distance), dkw, float(limit_err), tol, bool(distance <= tol), extra or {})


def run_convergence_experiment(cfg: ExperimentConfig) -> ConvergenceReport:
    """Simulate each entry of the schedule and compare with the matching limit law on a fixed grid."""
    rows: list[ReportRow] = []
    kind = cfg.kind
    meta: dict[str, Any] = {
        "seed": cfg.seed,
        "reps": cfg.reps,
        "levels": list(cfg.levels),
        "allowance": cfg.allowance,
        "dkw_alpha": 0.01,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "versions": {"extremal_arrays": __version__, "numpy": np.__version__},
    }

    if kind in _ARRAY_KINDS:
        spec = cfg.array
        k = spec.k
        if kind in ("min-convergence", "independence-check"):
            gidx = marginal_index_at_zero(spec, rng=make_rng(cfg.seed, 20_000))
            marg_q = (-np.log1p(-np.asarray(cfg.levels)) / 2.0) ** (1.0 / gidx)
            points = _limit_points(cfg, k, marg_q)
            meta["index_at_zero"] = gidx
            if kind == "min-convergence":
                radial_next = None if spec.radial.is_gaussian else lift_radial(spec.radial)
                gamma = spec.gamma if spec.gamma is not None else np.zeros((1, 1))
                est = min_limit_survival(
                    gamma, gidx, points, radial_next=radial_next,
                    mc_paths=cfg.limit_mc_paths, rng=make_rng(cfg.seed, 10_000),
                )
                limit = np.array([e.value for e in est])
                limit_err = max(e.combined_error for e in est)
        elif kind == "max-gumbel-convergence":
            points = _limit_points(cfg, k, _gumbel_q(cfg.levels))
            if k == 1:
                limit, limit_err = np.exp(-np.exp(-points[:, 0])), 0.0
            else:
                limit, limit_err = _hr_values(spec.gamma, None, points, cfg)
        else:
            alpha = float(spec.radial.mda[1])
            beta = alpha + (k - 1) / 2.0
            points = _limit_points(cfg, k, -(-np.log(np.asarray(cfg.levels))) ** (1.0 / beta))
            if k == 1:
                limit, limit_err = np.exp(-np.abs(points[:, 0]) ** beta), 0.0
            else:
                est = weibull_limit_cdf(spec.gamma, alpha, points, mc_paths=cfg.limit_mc_paths, rng=make_rng(cfg.seed, 10_000))
                limit = np.array([e.value for e in est])
                limit_err = max(e.combined_error for e in est)
        meta["grid"] = points.tolist()
        for i, n in enumerate(cfg.n_schedule):
            sim = simulate_block_extremes(spec, int(n), cfg.reps, make_rng(cfg.seed, i), threads=cfg.threads)
            vals = sim.values
            extra = {"a_n": sim.norming.a_n, "b_n": sim.norming.b_n, "c_n": sim.norming.c_n}
            if kind == "independence-check":
                joint = joint_survival(vals, points)
                prod = np.prod([1.0 - ecdf(vals[:, j], points[:, j]) for j in range(k)], axis=0)
                rows.append(_row(int(n), np.max(np.abs(joint - prod)), cfg.reps, 0.0, cfg.allowance, extra))
                continue
            emp = joint_survival(vals, points) if kind == "min-convergence" else joint_ecdf(vals, points)
            rows.append(_row(int(n), np.max(np.abs(emp - limit)), cfg.reps, limit_err, cfg.allowance, extra))
    else:
        proc = cfg.process
        t = proc.grid
        gamma = proc.kernel.gamma_matrix(t)
        var = proc.kernel.variances(t)
        k = t.size
        if kind == "br-fdd-check":
            points = _limit_points(cfg, k, _gumbel_q(cfg.levels))
            theta = var if np.all(var > 0) else None
            limit, limit_err = _hr_values(gamma, theta, points, cfg)
        else:
            scale = proc.scale or constant_scale(1.0)
            marg_q = -np.log1p(-np.asarray(cfg.levels)) / (2.0 * scale.mean_inverse)
            points = _limit_points(cfg, k, marg_q)
            est = pk_limit_survival(gamma, scale, points, grid=t, mc_paths=cfg.limit_mc_paths, rng=make_rng(cfg.seed, 10_000))
            limit = np.array([e.value for e in est])
            limit_err = max(e.combined_error for e in est)
        meta["grid"] = points.tolist()
        for i, n in enumerate(cfg.n_schedule):
            rng = make_rng(cfg.seed, i)
            if kind == "br-fdd-check":
                sample = simulate_brown_resnick(proc.kernel, t, cfg.reps, n_points=None if n is None else int(n), rng=rng, threads=cfg.threads)
                emp = joint_ecdf(sample.values, points)
            else:
                sample = simulate_penrose_kabluchko(
                    proc.kernel, t, cfg.reps, scale=proc.scale, window=n, x_max=proc.x_max, rng=rng, threads=cfg.threads
                )
                emp = joint_survival(sample.values, points)
            extra = {"flag_rate": sample.flag_rate, **{k_: v for k_, v in sample.meta.items() if isinstance(v, (int, float))}}
            rows.append(_row(n, np.max(np.abs(emp - limit)), cfg.reps, limit_err, cfg.allowance, extra))

    # distances below sampling noise cannot show a trend, so one DKW radius of slack is allowed
    trend_ok = rows[-1].sup_distance <= rows[0].sup_distance + rows[-1].dkw_radius
    verdict = rows[-1].passed and trend_ok
    return ConvergenceReport(kind, tuple(rows), trend_ok, verdict, meta)
