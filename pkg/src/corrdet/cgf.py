"""Noise models for the non-Gaussian interference component.

Each model carries a closed-form cumulant generating function C(v),
its derivative, and the open interval on which C is finite.  All
evaluation functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

LN2 = math.log(2.0)

# Relative margin kept away from a finite CGF pole.  Evaluation closer
# than this is rejected so that optimizers see a clean feasibility edge
# instead of huge finite values.
POLE_MARGIN = 1e-9


class DomainError(ValueError):
    """Evaluation point outside (or too close to the edge of) the CGF domain."""


@dataclass(frozen=True)
class Gaussian:
    """Zero-mean Gaussian interference with variance ``var_z``."""

    var_z: float

    def __post_init__(self):
        if not self.var_z > 0:
            raise ValueError("var_z must be > 0")


@dataclass(frozen=True)
class Laplacian:
    """Two-sided exponential with rate ``q``: density (q/2) exp(-q|z|)."""

    q: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("q must be > 0")


@dataclass(frozen=True)
class BinarySymmetric:
    """Equiprobable two-point interference on {-z0, +z0}."""

    z0: float

    def __post_init__(self):
        if not self.z0 > 0:
            raise ValueError("z0 must be > 0")


@dataclass(frozen=True)
class Uniform:
    """Uniform interference on [-z0, +z0]."""

    z0: float

    def __post_init__(self):
        if not self.z0 > 0:
            raise ValueError("z0 must be > 0")


@dataclass(frozen=True)
class MixtureBinaryLaplace:
    """Mixture of the two-point and Laplacian densities.

    Weight ``delta`` on the binary component must lie strictly inside
    (0, 1); the degenerate endpoints reduce to the pure models.
    """

    delta: float
    z0: float
    q: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not self.z0 > 0:
            raise ValueError("z0 must be > 0")
        if not self.q > 0:
            raise ValueError("q must be > 0")


NoiseModel = Union[Gaussian, Laplacian, BinarySymmetric, Uniform, MixtureBinaryLaplace]

_CONFIG_NAMES = {
    Gaussian: "gaussian",
    Laplacian: "laplacian",
    BinarySymmetric: "binary_symmetric",
    Uniform: "uniform",
    MixtureBinaryLaplace: "mixture_binary_laplace",
}


def cgf_domain(model: NoiseModel) -> tuple[float, float]:
    """Open interval of v on which C(v) is finite."""
    if isinstance(model, (Laplacian, MixtureBinaryLaplace)):
        return (-model.q, model.q)
    return (-math.inf, math.inf)


def _pole(model: NoiseModel) -> float:
    """Half-width of the usable domain (inf for entire-function CGFs)."""
    if isinstance(model, (Laplacian, MixtureBinaryLaplace)):
        return model.q * (1.0 - POLE_MARGIN)
    return math.inf


def _check_domain(model: NoiseModel, v: np.ndarray) -> None:
    edge = _pole(model)
    if edge < math.inf and np.any(np.abs(v) >= edge):
        raise DomainError(
            f"|v| must stay below {edge!r} (pole margin {POLE_MARGIN}) for {model!r}"
        )


def _log_cosh(x: np.ndarray) -> np.ndarray:
    # |x| + log((1 + e^{-2|x|}) / 2): overflow-free for any x.
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - LN2


def _log_sinh_over_x(x: np.ndarray) -> np.ndarray:
    # log(sinh(x)/x), even in x, with the removable singularity at 0.
    ax = np.abs(x)
    small = ax < 1e-4
    xs = np.where(small, 1.0, ax)
    big = xs + np.log1p(-np.exp(-2.0 * xs)) - LN2 - np.log(xs)
    x2 = ax * ax
    series = x2 / 6.0 - x2 * x2 / 180.0
    return np.where(small, series, big)


def cgf_eval(model: NoiseModel, v):
    """C(v) = ln E exp(vZ), via the model's closed form."""
    arr = np.asarray(v, dtype=float)
    _check_domain(model, arr)
    if isinstance(model, Gaussian):
        out = 0.5 * model.var_z * arr * arr
    elif isinstance(model, Laplacian):
        out = -np.log1p(-(arr / model.q) ** 2)
    elif isinstance(model, BinarySymmetric):
        out = _log_cosh(model.z0 * arr)
    elif isinstance(model, Uniform):
        out = _log_sinh_over_x(model.z0 * arr)
    elif isinstance(model, MixtureBinaryLaplace):
        out = _mixture_eval(model, arr)
    else:
        raise TypeError(f"unknown noise model {model!r}")
    return float(out) if np.ndim(v) == 0 else out


def cgf_deriv(model: NoiseModel, v):
    """dC/dv in closed form (odd function; 0 at the origin)."""
    arr = np.asarray(v, dtype=float)
    _check_domain(model, arr)
    if isinstance(model, Gaussian):
        out = model.var_z * arr
    elif isinstance(model, Laplacian):
        out = 2.0 * arr / (model.q ** 2 - arr * arr)
    elif isinstance(model, BinarySymmetric):
        out = model.z0 * np.tanh(model.z0 * arr)
    elif isinstance(model, Uniform):
        out = _uniform_deriv(model.z0, arr)
    elif isinstance(model, MixtureBinaryLaplace):
        out = _mixture_deriv(model, arr)
    else:
        raise TypeError(f"unknown noise model {model!r}")
    return float(out) if np.ndim(v) == 0 else out


def _uniform_deriv(z0: float, v: np.ndarray) -> np.ndarray:
    # z0*coth(z0 v) - 1/v, with the odd series z0^2 v/3 - z0^4 v^3/45 near 0.
    x = z0 * v
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    big = z0 / np.tanh(xs) - 1.0 / np.where(small, 1.0, v)
    series = z0 * (x / 3.0 - x ** 3 / 45.0)
    return np.where(small, series, big)


def _mixture_parts(model: MixtureBinaryLaplace, v: np.ndarray):
    # Both parts scaled by e^{-|x|} so the binary term never overflows.
    x = model.z0 * v
    ax = np.abs(x)
    em = np.exp(-ax)
    em2 = np.exp(-2.0 * ax)
    lap = 1.0 / (1.0 - (v / model.q) ** 2)
    den = model.delta * 0.5 * (1.0 + em2) + (1.0 - model.delta) * lap * em
    return x, ax, em, em2, lap, den


def _mixture_eval(model: MixtureBinaryLaplace, v: np.ndarray) -> np.ndarray:
    _, ax, _, _, _, den = _mixture_parts(model, v)
    return ax + np.log(den)


def _mixture_deriv(model: MixtureBinaryLaplace, v: np.ndarray) -> np.ndarray:
    x, _, em, em2, _, den = _mixture_parts(model, v)
    q2 = model.q ** 2
    lap_d = 2.0 * v * q2 / (q2 - v * v) ** 2
    num = model.delta * model.z0 * np.sign(x) * 0.5 * (1.0 - em2) + (
        1.0 - model.delta
    ) * lap_d * em
    return num / den


def mgf_complex(model: NoiseModel, w):
    """E exp(wZ) for complex w with |Re w| inside the CGF domain.

    Used by the extended-detector transforms, where the characteristic
    direction enters as an imaginary offset of the exponential tilt.
    """
    arr = np.asarray(w, dtype=complex)
    _check_domain(model, arr.real)
    if isinstance(model, Gaussian):
        out = np.exp(0.5 * model.var_z * arr * arr)
    elif isinstance(model, Laplacian):
        out = 1.0 / (1.0 - (arr / model.q) ** 2)
    elif isinstance(model, BinarySymmetric):
        out = np.cosh(model.z0 * arr)
    elif isinstance(model, Uniform):
        x = model.z0 * arr
        tiny = np.abs(x) < 1e-8
        xs = np.where(tiny, 1.0, x)
        out = np.where(tiny, 1.0 + x * x / 6.0, np.sinh(xs) / xs)
    elif isinstance(model, MixtureBinaryLaplace):
        out = model.delta * np.cosh(model.z0 * arr) + (1.0 - model.delta) / (
            1.0 - (arr / model.q) ** 2
        )
    else:
        raise TypeError(f"unknown noise model {model!r}")
    return complex(out) if np.ndim(w) == 0 else out


def model_from_config(cfg: dict) -> NoiseModel:
    """Build a model from a JSON-style dict, e.g. {"type": "gaussian", "var_z": 2.0}."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ValueError("model config must be an object with a 'type' field")
    kind = cfg["type"]
    fields = {k: v for k, v in cfg.items() if k != "type"}
    for cls, name in _CONFIG_NAMES.items():
        if kind == name:
            try:
                return cls(**fields)
            except TypeError as exc:
                raise ValueError(f"bad fields for model '{kind}': {exc}") from exc
    raise ValueError(f"unknown model type '{kind}'")


def model_to_config(model: NoiseModel) -> dict:
    name = _CONFIG_NAMES[type(model)]
    cfg = {"type": name}
    for field in model.__dataclass_fields__:
        cfg[field] = getattr(model, field)
    return cfg
