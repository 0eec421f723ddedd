"""Stationary (invariant) density, scale/speed densities, and the
information integral behind the estimator's asymptotic variance.

The invariant density on the barrier interval is the Kolmogorov stationary
solution

    pi(x) proportional to exp( (2 / sigma^2) * integral_a^x f(y, theta) dy ),

normalized by composite Simpson quadrature.  For a mean-reverting drift this
puts the mass where the drift pushes the state, which is what long-run
simulated histograms show.  The scale density carries the opposite sign in
the exponent, so pi is proportional to 1/scale.

For one-sided models the support is truncated at a point where the
remaining tail mass is below 1e-10 of the total; a drift that fails to push
the state down is reported as non-integrable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _sciint

from .errors import ModelError
from .model import (
    MEAN_REVERSION_TO_ONE,
    POWER,
    SHIFTED_COVARIATE,
    DriftSpec,
    ModelConfig,
    eval_drift_array,
    eval_drift_dtheta_array,
)

DEFAULT_INTERVALS = 4096
_REFINE_REL_TOL = 1e-10
_TAIL_MASS = 1e-10
_MAX_REFINES = 6
_MAX_SUPPORT_DOUBLINGS = 40


@dataclass(frozen=True)
class DensityGrid:
    """Normalized density values on a uniform quadrature grid.

    ``weights`` are composite Simpson weights summing to (hi - lo);
    ``values`` integrate to 1 against them.
    """

    lo: float
    hi: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        for name in ("nodes", "weights", "values"):
            arr = np.array(getattr(self, name), dtype=float, order="C")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def integrate(self, gvals: np.ndarray | None = None) -> float:
        """Quadrature of g against the density (g = 1 when omitted)."""
        if gvals is None:
            return float(np.dot(self.weights, self.values))
        return float(np.dot(self.weights, self.values * np.asarray(gvals)))


def _simpson_weights(lo: float, hi: float, intervals: int) -> tuple[np.ndarray, np.ndarray]:
    if intervals < 2 or intervals % 2:
        raise ModelError("Simpson rule needs an even number of intervals >= 2")
    nodes = np.linspace(lo, hi, intervals + 1)
    w = np.ones(intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (hi - lo) / intervals / 3.0
    return nodes, w


def _drift_primitive(drift: DriftSpec, a: float, xs: np.ndarray, theta: float) -> np.ndarray:
    """integral_a^x f(y, theta) dy at each grid node.

    Analytic for the built-in kinds; cumulative Simpson on the uniform grid
    otherwise (the resolution refinement loop controls its accuracy).
    """
    xs = np.asarray(xs, dtype=float)
    if drift.kind == POWER:
        g1 = drift.gamma + 1.0
        return -theta * (xs**g1 - a**g1) / g1
    if drift.kind == MEAN_REVERSION_TO_ONE:
        return theta * ((xs - 0.5 * xs**2) - (a - 0.5 * a**2))
    if drift.kind == SHIFTED_COVARIATE:
        return (drift.covariate + theta) * (xs - a)
    fvals = eval_drift_array(drift, xs, theta)
    return _sciint.cumulative_simpson(fvals, x=xs, initial=0.0)


def _require_positive_sigma(config: ModelConfig) -> None:
    if config.sigma <= 0.0:
        raise ModelError("stationary quantities require sigma > 0")


def scale_density(config: ModelConfig, theta: float, x: float) -> float:
    """Scale density exp(-(2/sigma^2) * integral_a^x f(y, theta) dy).

    For custom drifts the integral is computed by adaptive quadrature.
    """
    _require_positive_sigma(config)
    a, b = config.barriers.a, config.barriers.b
    if x < a or (b is not None and x > b):
        raise ModelError(f"x={x!r} outside the barrier interval")
    if config.drift.kind == "custom":
        integral, _ = _sciint.quad(lambda y: config.drift.f(y, theta), a, x)
    else:
        integral = float(_drift_primitive(config.drift, a, np.array([x]), theta)[0])
    return math.exp(-2.0 / config.sigma**2 * integral)


def speed_density(config: ModelConfig, theta: float, x: float) -> float:
    """Speed density 2 / (sigma^2 * scale_density)."""
    return 2.0 / (config.sigma**2 * scale_density(config, theta, x))


def _upper_limit(config: ModelConfig, theta: float) -> float:
    """Truncation point for a one-sided support: doubled until the upper
    half of the trial interval carries less than 1e-10 of the mass."""
    a = config.barriers.a
    theta_scale = max(abs(theta), 1e-2)
    span = max(20.0 * config.sigma / math.sqrt(2.0 * theta_scale), 1.0)
    probe_intervals = 512
    for _ in range(_MAX_SUPPORT_DOUBLINGS):
        hi = a + span
        nodes, w = _simpson_weights(a, hi, probe_intervals)
        log_pi = 2.0 / config.sigma**2 * _drift_primitive(config.drift, a, nodes, theta)
        log_pi -= np.max(log_pi)
        mass = w * np.exp(log_pi)
        total = float(np.sum(mass))
        tail = float(np.sum(mass[nodes >= a + 0.5 * span]))
        grows_outward = log_pi[-1] >= log_pi[len(log_pi) // 2]
        if total > 0 and not grows_outward and tail < _TAIL_MASS * total:
            return hi
        span *= 2.0
    raise ModelError(
        "one-sided invariant density is not integrable: the drift does not "
        "push the state toward the barrier"
    )


def invariant_density(
    config: ModelConfig, theta: float, intervals: int = DEFAULT_INTERVALS
) -> DensityGrid:
    """Normalized invariant density on the barrier interval.

    The quadrature resolution is doubled until the normalizing constant is
    stable to 1e-10 relative, starting from ``intervals`` Simpson panels.
    """
    _require_positive_sigma(config)
    a = config.barriers.a
    if config.barriers.is_two_sided:
        hi = config.barriers.b
    else:
        hi = _upper_limit(config, theta)

    prev_z = None
    k = intervals
    for _ in range(_MAX_REFINES + 1):
        nodes, w = _simpson_weights(a, hi, k)
        log_pi = 2.0 / config.sigma**2 * _drift_primitive(config.drift, a, nodes, theta)
        log_pi -= np.max(log_pi)
        unnorm = np.exp(log_pi)
        z = float(np.dot(w, unnorm))
        if not math.isfinite(z) or z <= 0.0:
            raise ModelError("invariant density normalization failed")
        if prev_z is not None and abs(z - prev_z) <= _REFINE_REL_TOL * abs(z):
            break
        prev_z = z
        k *= 2
    return DensityGrid(lo=a, hi=hi, nodes=nodes, weights=w, values=unnorm / z)


def _grid_eval(g: Callable[[float], float], nodes: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(g(nodes), dtype=float)
        if out.shape == nodes.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([g(float(v)) for v in nodes], dtype=float)


def stationary_average(
    config: ModelConfig,
    theta: float,
    g: Callable[[float], float],
    grid: DensityGrid | None = None,
) -> float:
    """Stationary expectation of g by quadrature against the invariant
    density (a precomputed grid can be supplied to amortize the setup)."""
    if grid is None:
        grid = invariant_density(config, theta)
    return grid.integrate(_grid_eval(g, grid.nodes))


def information(
    config: ModelConfig, theta: float, grid: DensityGrid | None = None
) -> float:
    """Stationary expectation of the squared drift sensitivity,
    E[(df/dtheta)^2], the information-like constant in the asymptotic
    variance sigma^2 / information.

    Raises :class:`ModelError` when the value is numerically zero, which
    means the parameter does not move the drift anywhere the state lives.
    """
    if grid is None:
        grid = invariant_density(config, theta)
    sens = eval_drift_dtheta_array(config.drift, grid.nodes, theta)
    value = grid.integrate(sens * sens)
    if not math.isfinite(value) or value <= 1e-14:
        raise ModelError(
            f"degenerate model: information integral is {value!r}"
        )
    return value
