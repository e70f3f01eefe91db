"""JSON round-trips for laws, kernels and array specifications."""

from __future__ import annotations

from typing import Any

import numpy as np

from .core_samplers import (
    GaussianKernel,
    RadialLaw,
    ScaleLaw,
    beta_radial,
    brownian_kernel,
    chi_law,
    constant_kernel,
    constant_scale,
    fbm_kernel,
    matrix_kernel,
    model_a_scale,
    model_b_scale,
    point_mass,
    power_tail_law,
    scaled_chi,
)
from .errors import InvalidParameterError
from .triangular_arrays import ArraySpec

__all__ = [
    "scale_from_json",
    "radial_from_json",
    "kernel_from_json",
    "array_spec_from_json",
    "array_spec_to_json",
]


def _take(obj: dict[str, Any], *names: str, optional: tuple[str, ...] = ()) -> dict[str, Any]:
    missing = [n for n in names if n not in obj]
    if missing:
        raise InvalidParameterError(f"missing field(s): {', '.join(missing)}")
    out = {n: obj[n] for n in names}
    out.update({n: obj[n] for n in optional if n in obj})
    return out


def scale_from_json(obj: dict[str, Any]) -> ScaleLaw:
    kind = obj.get("kind")
    if kind == "constant":
        return constant_scale(float(obj.get("c", 1.0)))
    if kind == "model_a":
        return model_a_scale(**_take(obj, "alpha1", "L1", "p1"))
    if kind == "model_b":
        return model_b_scale(**_take(obj, "gamma", optional=("kappa", "b")))
    raise InvalidParameterError(f"unknown scale kind {kind!r}")


def radial_from_json(obj: dict[str, Any]) -> RadialLaw:
    family = obj.get("family")
    if family == "chi":
        return chi_law(int(obj["k"]))
    if family == "point_mass":
        return point_mass(float(obj["c"]))
    if family == "beta_radial":
        return beta_radial(float(obj["a"]), float(obj["b"]))
    if family == "power_tail":
        return power_tail_law(float(obj["alpha"]))
    if family == "scaled_chi":
        return scaled_chi(scale_from_json(obj["scale"]), int(obj["k"]))
    raise InvalidParameterError(f"unknown radial family {family!r}")


def kernel_from_json(obj: dict[str, Any]) -> GaussianKernel:
    name = obj.get("name")
    variance = obj.get("variance")
    if name == "brownian":
        return brownian_kernel(variance=variance, offset=float(obj.get("offset", 0.0)))
    if name == "fbm":
        return fbm_kernel(float(obj["hurst"]), variance=variance, offset=float(obj.get("offset", 0.0)))
    if name == "constant":
        return constant_kernel(float(obj["value"]), variance=variance)
    if name == "matrix":
        return matrix_kernel(obj["gamma"], obj["variance"])
    raise InvalidParameterError(f"unknown kernel {name!r}")


def array_spec_from_json(obj: dict[str, Any]) -> ArraySpec:
    """Build an :class:`ArraySpec`; the radius defaults to chi(k) (a Gaussian array)."""
    k = int(obj["k"])
    radial = radial_from_json(obj["radial"]) if "radial" in obj else None
    scale = scale_from_json(obj["scale"]) if "scale" in obj else None
    gamma = np.asarray(obj["gamma"], dtype=float) if "gamma" in obj else None
    sigma = np.asarray(obj["sigma"], dtype=float) if "sigma" in obj else None
    return ArraySpec(
        k=k,
        radial=radial,
        gamma=gamma,
        sigma=sigma,
        scale=scale,
        mode=obj.get("mode", "max"),
        cn_rule=obj.get("cn_rule", "minima" if obj.get("mode") == "min" else "gumbel"),
        clip=bool(obj.get("clip", False)),
    )


def array_spec_to_json(spec: ArraySpec) -> dict[str, Any]:
    out: dict[str, Any] = {"k": spec.k, "mode": spec.mode, "cn_rule": spec.cn_rule}
    if spec.scale is not None:
        out["scale"] = spec.scale.to_json()
    else:
        out["radial"] = spec.radial.to_json()
    if spec.gamma is not None:
        out["gamma"] = spec.gamma.tolist()
    if spec.sigma is not None:
        out["sigma"] = spec.sigma.tolist()
    if spec.clip:
        out["clip"] = True
    return out
