"""Least-squares drift estimation from discretely observed reflected paths.

The contrast is the average squared discretized drift residual

    (1/(n h^2)) * sum_k | dX_k - f(X_k, theta) h - dL_k + dR_k |^2,

whose minimizer over the parameter domain is the estimator.  For the power
drift the minimizer has a closed form; otherwise a golden-section search on
the compactified domain is used.  Asymptotic standard errors come from
sqrt(nh) * (theta_hat - theta0) -> N(0, sigma^2 / information).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.special import ndtri

from . import stationary
from .errors import DataError, ModelError
from .model import (
    POWER,
    DriftSpec,
    ModelConfig,
    SamplingPlan,
    eval_drift_array,
)
from .simulate import SamplePath, TwoFactorPath

CLOSED_FORM = "closed_form"
GOLDEN_SECTION = "golden_section"

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0
_DOMAIN_SHRINK = 1e-9
_BRACKET_REL_TOL = 1e-10


@dataclass(frozen=True)
class EstimateResult:
    """Point estimate with optimizer diagnostics and, when attached,
    asymptotic standard error and confidence interval."""

    theta_hat: float
    method: str
    contrast_at_min: float
    iterations: int
    boundary_hit: bool = False
    stderr: float | None = None
    ci: tuple[float, float] | None = None
    level: float | None = None


def _residuals(path: SamplePath, spec: DriftSpec, theta: float) -> np.ndarray:
    dx = np.diff(path.x)
    dl = np.diff(path.l)
    dr = np.diff(path.r)
    f = eval_drift_array(spec, path.x[:-1], theta)
    return dx - f * path.h - dl + dr


def contrast(path: SamplePath, spec: DriftSpec, theta: float) -> float:
    """Average squared drift residual; the upper-regulator term vanishes
    automatically on one-sided paths."""
    n = path.n
    if n < 1:
        raise DataError("contrast needs at least one increment")
    if not math.isfinite(theta):
        raise ModelError(f"theta must be finite, got {theta!r}")
    res = _residuals(path, spec, theta)
    return float(np.dot(res, res) / (n * path.h * path.h))


def nlse_closed_form_power(path: SamplePath, gamma: float) -> float:
    """Closed-form least-squares estimate for the power drift
    f(x, theta) = -theta * x**gamma."""
    if not 0.0 < gamma <= 1.0:
        raise ModelError("gamma must lie in (0, 1]")
    x_left = path.x[:-1]
    xg = x_left**gamma
    denom = float(np.sum(xg * xg)) * path.h
    if not denom > 0.0:
        raise DataError("degenerate path: sum of x**(2*gamma) vanishes")
    num = float(np.dot(xg, np.diff(path.x) - np.diff(path.l) + np.diff(path.r)))
    return -num / denom


@dataclass(frozen=True)
class ScalarMinimum:
    x: float
    fx: float
    iterations: int
    boundary_hit: bool


def minimize_unimodal(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = _BRACKET_REL_TOL,
) -> ScalarMinimum:
    """Golden-section search on [lo, hi] followed by one parabolic
    refinement step.

    The search shrinks the bracket to ``rel_tol * (hi - lo)``.  A flat
    objective yields the bracket midpoint; a minimum pinned against either
    end of the interval sets ``boundary_hit``.
    """
    if not lo < hi:
        raise ModelError("minimize_unimodal needs lo < hi")
    span = hi - lo
    tol = rel_tol * span
    a, b = lo, hi
    c = a + _INV_PHI2 * span
    d = a + _INV_PHI * span
    yc = fn(c)
    yd = fn(d)
    _check_objective(yc, c)
    _check_objective(yd, d)
    iterations = 0
    ties = 0
    while b - a > tol:
        if yc == yd:
            ties += 1
        if yc < yd:
            b, d, yd = d, c, yc
            c = a + _INV_PHI2 * (b - a)
            yc = fn(c)
            _check_objective(yc, c)
        else:
            a, c, yc = c, d, yd
            d = a + _INV_PHI * (b - a)
            yd = fn(d)
            _check_objective(yd, d)
        iterations += 1
    if iterations > 0 and ties == iterations:
        # objective flat to machine precision everywhere it was probed
        xm = 0.5 * (lo + hi)
        return ScalarMinimum(x=xm, fx=fn(xm), iterations=iterations,
                             boundary_hit=False)

    xm = 0.5 * (a + b)
    ym = fn(xm)
    # One parabolic step through widely spaced points.  Near the minimum the
    # objective is flat to machine precision over a region wider than the
    # final bracket, so the fit must reach outside it; for an exactly
    # quadratic objective the vertex is then recovered to full precision.
    # The candidate is kept only when it does not worsen the objective.
    delta = max(1e-4 * span, 10.0 * tol)
    x1 = max(lo, xm - delta)
    x2 = min(hi, xm + delta)
    if x1 < xm < x2:
        y1, y2 = fn(x1), fn(x2)
        den = (xm - x1) * (ym - y2) - (xm - x2) * (ym - y1)
        if den != 0.0 and math.isfinite(den):
            x_par = xm - 0.5 * (
                (xm - x1) ** 2 * (ym - y2) - (xm - x2) ** 2 * (ym - y1)
            ) / den
            if lo <= x_par <= hi and math.isfinite(x_par):
                y_par = fn(x_par)
                if math.isfinite(y_par) and y_par <= ym + 8.0 * sys.float_info.epsilon * max(
                    1.0, abs(ym)
                ):
                    xm, ym = x_par, min(y_par, ym)
    boundary = xm - lo <= 2.0 * tol or hi - xm <= 2.0 * tol
    return ScalarMinimum(x=xm, fx=ym, iterations=iterations, boundary_hit=boundary)


def _check_objective(value: float, at: float) -> None:
    if not math.isfinite(value):
        raise DataError(f"objective is not finite at theta={at!r}")


def nlse_optimize(
    path: SamplePath, spec: DriftSpec, theta_domain: tuple[float, float]
) -> EstimateResult:
    """Minimize the contrast over the compactified parameter domain by
    golden-section search.  For drifts linear in theta the result matches
    the closed form to optimizer precision."""
    lo, hi = theta_domain
    if not lo < hi:
        raise ModelError("theta domain must satisfy lo < hi")
    eps = _DOMAIN_SHRINK * (hi - lo)
    found = minimize_unimodal(
        lambda th: contrast(path, spec, th), lo + eps, hi - eps
    )
    return EstimateResult(
        theta_hat=found.x,
        method=GOLDEN_SECTION,
        contrast_at_min=found.fx,
        iterations=found.iterations,
        boundary_hit=found.boundary_hit,
    )


def estimate_power_closed_form(
    path: SamplePath,
    gamma: float,
    theta_domain: tuple[float, float] | None = None,
) -> EstimateResult:
    """Closed-form power-drift estimate packaged with diagnostics.  When a
    parameter domain is given the estimate is clamped to it and flagged if
    it lands on the boundary."""
    theta = nlse_closed_form_power(path, gamma)
    boundary = False
    if theta_domain is not None:
        lo, hi = theta_domain
        clamped = min(max(theta, lo), hi)
        boundary = clamped != theta
        theta = clamped
    spec = DriftSpec.power(gamma)
    return EstimateResult(
        theta_hat=theta,
        method=CLOSED_FORM,
        contrast_at_min=contrast(path, spec, theta),
        iterations=0,
        boundary_hit=boundary,
    )


def asymptotic_stderr(theta_hat: float, config: ModelConfig, plan: SamplingPlan) -> float:
    """Standard error sqrt(sigma^2 / (n h * information(theta_hat)))."""
    info = stationary.information(config, theta_hat)
    return math.sqrt(config.sigma**2 / (plan.n * plan.h * info))


def confidence_interval(
    theta_hat: float, stderr: float, level: float = 0.95
) -> tuple[float, float]:
    """Two-sided normal confidence interval around the estimate."""
    if not 0.0 < level < 1.0:
        raise ModelError(f"level must lie in (0, 1), got {level!r}")
    z = float(ndtri(0.5 * (1.0 + level)))
    return theta_hat - z * stderr, theta_hat + z * stderr


def attach_stderr(
    result: EstimateResult,
    config: ModelConfig,
    plan: SamplingPlan,
    level: float = 0.95,
) -> EstimateResult:
    """Return a copy of ``result`` with stderr and confidence interval."""
    se = asymptotic_stderr(result.theta_hat, config, plan)
    return replace(
        result,
        stderr=se,
        ci=confidence_interval(result.theta_hat, se, level),
        level=level,
    )


def estimate_nlse(
    path: SamplePath,
    config: ModelConfig,
    plan: SamplingPlan,
    level: float = 0.95,
    method: str = "auto",
) -> EstimateResult:
    """End-to-end estimate: closed form for the power drift (golden-section
    otherwise), with asymptotic standard error and confidence interval."""
    if method == "auto":
        method = CLOSED_FORM if config.drift.kind == POWER else GOLDEN_SECTION
    if method == CLOSED_FORM:
        if config.drift.kind != POWER:
            raise ModelError("closed form is only available for the power drift")
        result = estimate_power_closed_form(path, config.drift.gamma, config.theta_domain)
    elif method == GOLDEN_SECTION:
        result = nlse_optimize(path, config.drift, config.theta_domain)
    else:
        raise ModelError(f"unknown estimation method {method!r}")
    return attach_stderr(result, config, plan, level)


def estimate_two_factor(
    tf: TwoFactorPath, sigma: float, level: float = 0.95
) -> tuple[EstimateResult, EstimateResult]:
    """Closed-form least-squares estimates for the two-factor system.

    The log-price equation gives
    theta1_hat = (1/(n h)) * sum(dY - R h - dL1 + dU1); the short-rate
    equation gives
    theta2_hat = sum((1-R)(dR - dL2)) / (sum((1-R)^2) h).

    Standard errors use information constants 1 (log price) and the path
    average of (1-R)^2 (short rate), the ergodic plug-in for its stationary
    expectation.
    """
    if sigma < 0.0:
        raise ModelError("sigma must be >= 0")
    n, h = tf.n, tf.h
    r_left = tf.rshort.x[:-1]

    dy = np.diff(tf.y.x)
    dl1 = np.diff(tf.y.l)
    du1 = np.diff(tf.y.r)
    theta1 = float(np.sum(dy - r_left * h - dl1 + du1)) / (n * h)

    drs = np.diff(tf.rshort.x)
    dl2 = np.diff(tf.rshort.l)
    one_minus_r = 1.0 - r_left
    denom = float(np.sum(one_minus_r**2)) * h
    if not denom > 0.0:
        raise DataError("degenerate short-rate path: sum of (1-R)^2 vanishes")
    theta2 = float(np.dot(one_minus_r, drs - dl2)) / denom

    res1 = dy - (r_left + theta1) * h - dl1 + du1
    res2 = drs - theta2 * one_minus_r * h - dl2
    psi1 = float(np.dot(res1, res1)) / (n * h * h)
    psi2 = float(np.dot(res2, res2)) / (n * h * h)

    info2 = float(np.mean(one_minus_r**2))
    se1 = math.sqrt(sigma**2 / (n * h))
    se2 = math.sqrt(sigma**2 / (n * h * info2)) if info2 > 0 else float("inf")

    r1 = EstimateResult(
        theta_hat=theta1, method=CLOSED_FORM, contrast_at_min=psi1, iterations=0,
        stderr=se1, ci=confidence_interval(theta1, se1, level), level=level,
    )
    r2 = EstimateResult(
        theta_hat=theta2, method=CLOSED_FORM, contrast_at_min=psi2, iterations=0,
        stderr=se2, ci=confidence_interval(theta2, se2, level), level=level,
    )
    return r1, r2


def realized_volatility(path: SamplePath) -> float:
    """Diagnostic plug-in estimate of sigma^2 from the regulator-corrected
    quadratic variation; not used by the estimators (sigma is an input)."""
    dev = np.diff(path.x) - np.diff(path.l) + np.diff(path.r)
    return float(np.dot(dev, dev) / (path.n * path.h))
