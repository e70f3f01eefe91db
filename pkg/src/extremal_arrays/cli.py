"""Command line interface: ``extremal-arrays <subcommand> --config file.json``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .core_samplers import constant_scale
from .errors import ConfigError, ExtremalArraysError
from .harness import parse_config, run_convergence_experiment
from .limit_laws import (
    HRSpec,
    g_gamma_cdf,
    hr_bivariate_closed_form,
    hr_limit_cdf,
    min_limit_survival,
    min_limit_survival_ie,
    pk_limit_survival,
    weibull_limit_cdf,
)
from .norming import (
    gumbel_norming,
    laplace_marginal,
    marginal_from_radial,
    min_norming,
    model_a_constants,
    model_b_constants,
    normal_marginal,
    uniform_marginal,
    weibull_norming,
)
from .rng import make_rng
from .serialization import (
    array_spec_from_json,
    array_spec_to_json,
    kernel_from_json,
    radial_from_json,
    scale_from_json,
)
from .extremal_processes import simulate_brown_resnick, simulate_penrose_kabluchko
from .triangular_arrays import simulate_block_extremes

SUBCOMMANDS = ("norming", "simulate-array", "eval-limit", "simulate-br", "simulate-pk", "convergence")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj: dict[str, Any]) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _marginal(obj: dict[str, Any]):
    family = obj.get("family", "normal")
    if family == "normal":
        return normal_marginal(float(obj.get("scale", 1.0)))
    if family == "uniform":
        return uniform_marginal()
    if family == "laplace":
        return laplace_marginal(float(obj.get("scale", 1.0)))
    if family == "radial":
        radial = radial_from_json(obj["radial"])
        return marginal_from_radial(radial, int(obj.get("k", radial.dim or 1)))
    raise ConfigError("E_SPEC", "marginal.family", f"unknown marginal family {family!r}")


def cmd_norming(cfg: dict[str, Any], seed: int, out: Path, threads: int) -> int:
    rule = cfg.get("rule", "gumbel")
    ns = cfg.get("n", [])
    rows = []
    for n in ns:
        if rule == "model_a":
            c = model_a_constants(cfg["C1"], cfg.get("alpha1", 0.0), cfg["L1"], cfg["p1"], n)
            rows.append([n, c.a_n, c.b_n, 2.0 * c.ratio])
            continue
        if rule == "model_b":
            p = model_b_constants(n, _marginal(cfg["marginal"]) if "marginal" in cfg else None)
        elif rule == "minima":
            p = min_norming(_marginal(cfg.get("marginal", {})), n)
        elif rule == "gumbel":
            p = gumbel_norming(_marginal(cfg.get("marginal", {})), n)
        elif rule == "weibull":
            law = radial_from_json(cfg["radial"]) if "radial" in cfg else _marginal(cfg["marginal"])
            p = weibull_norming(law, n)
        else:
            raise ConfigError("E_SPEC", "rule", f"unknown rule {rule!r}")
        rows.append([n, p.a_n, p.b_n, p.c_n])
    _write_csv(out / "norming.csv", ["n", "a_n", "b_n", "c_n"], rows)
    _write_json(out / "norming.json", {"rule": rule, "seed": seed, "version": __version__})
    return 0


def cmd_simulate_array(cfg: dict[str, Any], seed: int, out: Path, threads: int) -> int:
    spec = array_spec_from_json(cfg["array"])
    res = simulate_block_extremes(spec, int(cfg["n"]), int(cfg["reps"]), make_rng(seed), threads=threads)
    header = ["rep_id"] + [f"x{j + 1}" for j in range(spec.k)]
    _write_csv(out / "simulate-array.csv", header, ([i, *map(repr, row)] for i, row in enumerate(res.values.tolist())))
    meta = {**res.meta, "seed": seed, "spec": array_spec_to_json(spec), "version": __version__}
    _write_json(out / "simulate-array.json", meta)
    return 0


def _eval(cfg: dict[str, Any], seed: int):
    law = cfg["law"]
    p = cfg.get("params", {})
    pts = np.asarray(cfg["points"], dtype=float)
    rng = make_rng(seed)
    paths = int(p.get("mc_paths", 1 << 17))
    if law == "g_gamma":
        vals = g_gamma_cdf(p["gamma_index"], pts.ravel())
        return pts.reshape(-1, 1), [(float(v), 0.0, 0.0) for v in vals]
    if law == "hr2":
        pts = np.atleast_2d(pts)
        vals = hr_bivariate_closed_form(p["gamma12"], pts[:, 0], pts[:, 1])
        return pts, [(float(v), 0.0, 0.0) for v in np.atleast_1d(vals)]
    pts = np.atleast_2d(pts)
    gamma = np.asarray(p["gamma"], dtype=float)
    if law == "min":
        radial = radial_from_json(p["radial_next"]) if "radial_next" in p else None
        est = min_limit_survival(gamma, p.get("gamma_index", 1.0), pts, radial_next=radial, mc_paths=paths, rng=rng)
    elif law == "min_ie":
        radial = radial_from_json(p["radial"]) if "radial" in p else None
        est = min_limit_survival_ie(gamma, p.get("gamma_index", 1.0), pts, radial=radial, mc_paths=paths, rng=rng)
    elif law == "hr":
        est = hr_limit_cdf(HRSpec(gamma, p.get("theta")), pts, mc_paths=paths, rng=rng)
    elif law == "weibull":
        est = weibull_limit_cdf(gamma, p["alpha"], pts, theta=p.get("theta"), mc_paths=paths, rng=rng)
    elif law == "pk":
        scale = scale_from_json(p["scale"]) if "scale" in p else constant_scale(1.0)
        est = pk_limit_survival(gamma, scale, pts, grid=p.get("grid"), mc_paths=paths, rng=rng)
    else:
        raise ConfigError("E_SPEC", "law", f"unknown law {law!r}")
    return pts, [(e.value, e.mc_std_err, e.quad_trunc_bound) for e in est]


def cmd_eval_limit(cfg: dict[str, Any], seed: int, out: Path, threads: int) -> int:
    pts, vals = _eval(cfg, seed)
    rows = [[i, " ".join(map(repr, p.tolist())), *map(repr, v)] for i, (p, v) in enumerate(zip(pts, vals))]
    _write_csv(out / "eval-limit.csv", ["point_id", "point", "value", "mc_std_err", "quad_trunc_bound"], rows)
    _write_json(out / "eval-limit.json", {"law": cfg["law"], "seed": seed, "version": __version__})
    return 0


def _path_rows(sample):
    for pid in range(sample.values.shape[0]):
        for j, t in enumerate(sample.grid):
            yield [pid, repr(float(t)), repr(float(sample.values[pid, j])), int(sample.flags[pid, j])]


def cmd_simulate_br(cfg: dict[str, Any], seed: int, out: Path, threads: int) -> int:
    kernel = kernel_from_json(cfg["kernel"])
    s = simulate_brown_resnick(kernel, cfg["grid"], int(cfg["n_paths"]), cfg.get("n_points"), make_rng(seed), threads)
    _write_csv(out / "simulate-br.csv", ["path_id", "t", "value", "truncation_flag"], _path_rows(s))
    _write_json(out / "simulate-br.json", {**s.meta, "flag_rate": s.flag_rate, "seed": seed, "version": __version__})
    return 0


def cmd_simulate_pk(cfg: dict[str, Any], seed: int, out: Path, threads: int) -> int:
    kernel = kernel_from_json(cfg["kernel"])
    scale = scale_from_json(cfg["scale"]) if "scale" in cfg else None
    s = simulate_penrose_kabluchko(
        kernel, cfg["grid"], int(cfg["n_paths"]), scale=scale, window=cfg.get("window"),
        x_max=float(cfg.get("x_max", 5.0)), rng=make_rng(seed), threads=threads,
    )
    _write_csv(out / "simulate-pk.csv", ["path_id", "t", "value", "truncation_flag"], _path_rows(s))
    _write_json(out / "simulate-pk.json", {**s.meta, "flag_rate": s.flag_rate, "seed": seed, "version": __version__})
    return 0


def cmd_convergence(cfg: dict[str, Any], seed: int, out: Path, threads: int) -> int:
    exp = parse_config({**cfg, "seed": seed, "threads": threads})
    report = run_convergence_experiment(exp)
    (out / "convergence.csv").write_text("\n".join(report.csv_lines()) + "\n")
    (out / "convergence.json").write_text(report.to_json() + "\n")
    return 0 if report.verdict else 1


COMMANDS = {
    "norming": cmd_norming,
    "simulate-array": cmd_simulate_array,
    "eval-limit": cmd_eval_limit,
    "simulate-br": cmd_simulate_br,
    "simulate-pk": cmd_simulate_pk,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extremal-arrays", description="Extremes of elliptical triangular arrays.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, seed, out, args.threads)
    except ConfigError as exc:
        print(f"config error {exc}", file=sys.stderr)
        return 2
    except (ExtremalArraysError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
