"""Drift specifications, barrier geometry, parameter domains, and
sampling-regime diagnostics.

All types are immutable after construction and all operations are pure, so
everything here is safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ModelError

DriftFn = Callable[[float, float], float]

POWER = "power"
MEAN_REVERSION_TO_ONE = "mean_reversion_to_one"
SHIFTED_COVARIATE = "shifted_covariate"
CUSTOM = "custom"

_BUILTIN_KINDS = (POWER, MEAN_REVERSION_TO_ONE, SHIFTED_COVARIATE)


def _require_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ModelError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class DriftSpec:
    """Drift f(x, theta) with its first and second theta-derivatives.

    Built-in kinds evaluate elementwise on numpy arrays as well as scalars.
    ``lipschitz_bound`` is a declared constant K with
    |f(x,theta) - f(y,theta)| <= K |x - y| on the barrier interval; for the
    power drift with exponent < 1 the bound is only valid away from zero
    (see :meth:`power`).
    """

    kind: str
    f: DriftFn
    df_dtheta: DriftFn
    d2f_dtheta2: DriftFn
    lipschitz_bound: float
    gamma: float | None = None
    covariate: float | None = None

    def __post_init__(self) -> None:
        if not (self.lipschitz_bound > 0 and math.isfinite(self.lipschitz_bound)):
            raise ModelError("lipschitz_bound must be a positive finite number")
        if self.kind == POWER and (
            self.gamma is None or not 0.0 < self.gamma <= 1.0
        ):
            raise ModelError("power drift requires gamma in (0, 1]")

    @staticmethod
    def power(gamma: float, *, theta_max: float = 5.0, x_min: float = 0.01) -> "DriftSpec":
        """Pull toward zero: f(x, theta) = -theta * x**gamma, x >= 0.

        The declared Lipschitz bound is theta_max * gamma * x_min**(gamma-1),
        valid for |theta| <= theta_max on [x_min, inf).  For gamma < 1 the
        drift is not Lipschitz at x = 0; simulation and estimation never rely
        on the bound at runtime.
        """
        if not 0.0 < gamma <= 1.0:
            raise ModelError("gamma must lie in (0, 1]")
        if theta_max <= 0 or x_min <= 0:
            raise ModelError("theta_max and x_min must be positive")
        bound = theta_max * gamma * x_min ** (gamma - 1.0)
        return DriftSpec(
            kind=POWER,
            f=lambda x, theta: -theta * np.power(x, gamma),
            df_dtheta=lambda x, theta: -np.power(x, gamma) + 0.0 * theta,
            d2f_dtheta2=lambda x, theta: 0.0 * (x + theta),
            lipschitz_bound=bound,
            gamma=gamma,
        )

    @staticmethod
    def mean_reversion_to_one(*, theta_max: float = 5.0) -> "DriftSpec":
        """f(x, theta) = theta * (1 - x); Lipschitz constant theta_max."""
        if theta_max <= 0:
            raise ModelError("theta_max must be positive")
        return DriftSpec(
            kind=MEAN_REVERSION_TO_ONE,
            f=lambda x, theta: theta * (1.0 - x),
            df_dtheta=lambda x, theta: 1.0 - x + 0.0 * theta,
            d2f_dtheta2=lambda x, theta: 0.0 * (x + theta),
            lipschitz_bound=theta_max,
        )

    @staticmethod
    def shifted_covariate(covariate: float) -> "DriftSpec":
        """f(x, theta) = c + theta for a fixed exogenous covariate c.

        Constant in x, so any positive Lipschitz constant is valid.
        """
        _require_finite(covariate=covariate)
        c = float(covariate)
        return DriftSpec(
            kind=SHIFTED_COVARIATE,
            f=lambda x, theta: c + theta + 0.0 * x,
            df_dtheta=lambda x, theta: 1.0 + 0.0 * (x + theta),
            d2f_dtheta2=lambda x, theta: 0.0 * (x + theta),
            lipschitz_bound=1.0,
            covariate=c,
        )

    @staticmethod
    def custom(
        f: DriftFn,
        df_dtheta: DriftFn,
        d2f_dtheta2: DriftFn,
        lipschitz_bound: float,
    ) -> "DriftSpec":
        """User-supplied drift.  Derivatives must be provided explicitly;
        there is no automatic differentiation."""
        return DriftSpec(
            kind=CUSTOM,
            f=f,
            df_dtheta=df_dtheta,
            d2f_dtheta2=d2f_dtheta2,
            lipschitz_bound=lipschitz_bound,
        )


TWO_SIDED = "two_sided"
ONE_SIDED_LOWER = "one_sided_lower"


@dataclass(frozen=True)
class BarrierConfig:
    """Reflecting barrier geometry: a lower barrier a >= 0 and, for the
    two-sided case, an upper barrier b with a < b < inf."""

    a: float
    b: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and self.a >= 0.0):
            raise ModelError(f"lower barrier must satisfy a >= 0, got {self.a!r}")
        if self.b is not None and not (math.isfinite(self.b) and self.b > self.a):
            raise ModelError(
                f"upper barrier must satisfy a < b < inf, got b={self.b!r}"
            )

    @staticmethod
    def two_sided(a: float, b: float) -> "BarrierConfig":
        return BarrierConfig(a=float(a), b=float(b))

    @staticmethod
    def one_sided_lower(a: float) -> "BarrierConfig":
        return BarrierConfig(a=float(a), b=None)

    @property
    def kind(self) -> str:
        return TWO_SIDED if self.b is not None else ONE_SIDED_LOWER

    @property
    def is_two_sided(self) -> bool:
        return self.b is not None

    def contains(self, x: float, tol: float = 0.0) -> bool:
        if x < self.a - tol:
            return False
        return self.b is None or x <= self.b + tol


@dataclass(frozen=True)
class ModelConfig:
    """Full model: drift, diffusion coefficient, barriers, parameter domain,
    and initial state.

    ``sigma == 0`` is accepted here so that noiseless diagnostic runs can be
    constructed programmatically; the configuration-file loader rejects it.
    """

    drift: DriftSpec
    sigma: float
    barriers: BarrierConfig
    theta_domain: tuple[float, float]
    x0: float

    def __post_init__(self) -> None:
        _require_finite(sigma=self.sigma, x0=self.x0)
        if self.sigma < 0:
            raise ModelError(f"sigma must be >= 0, got {self.sigma!r}")
        lo, hi = self.theta_domain
        _require_finite(theta_lo=lo, theta_hi=hi)
        if not lo < hi:
            raise ModelError(f"theta domain must satisfy lo < hi, got ({lo}, {hi})")
        if not self.barriers.contains(self.x0):
            raise ModelError(
                f"x0={self.x0!r} lies outside the barrier set "
                f"[{self.barriers.a}, {self.barriers.b if self.barriers.is_two_sided else 'inf'}]"
            )


@dataclass(frozen=True)
class SamplingPlan:
    """Observation scheme: n increments at step size h, with the regime
    exponent alpha in (0, 1/2) used only for diagnostics."""

    n: int
    h: float
    alpha: float = 0.25

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ModelError(f"n must be an integer >= 2, got {self.n!r}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise ModelError(f"h must be positive and finite, got {self.h!r}")
        if not 0.0 < self.alpha < 0.5:
            raise ModelError(f"alpha must lie in (0, 0.5), got {self.alpha!r}")

    @property
    def horizon(self) -> float:
        """Total observed time span n*h."""
        return self.n * self.h


@dataclass(frozen=True)
class RegimeDiagnostics:
    """Advisory figures for the sampling regime.

    The underlying requirements are asymptotic (h -> 0, nh -> inf,
    n*h**(1+2*alpha) -> 0), so a finite plan is never rejected; short spans
    and coarse steps are only flagged.
    """

    h: float
    nh: float
    bias_measure: float
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.warnings


def validate_regime(plan: SamplingPlan) -> RegimeDiagnostics:
    """Compute (h, nh, n*h**(1+2*alpha)) and advisory warning flags."""
    nh = plan.n * plan.h
    bias_measure = plan.n * plan.h ** (1.0 + 2.0 * plan.alpha)
    warnings = []
    if nh < 10.0:
        warnings.append(
            f"nh = {nh:g} < 10: short time span, weak ergodic averaging"
        )
    if bias_measure > 1.0:
        warnings.append(
            f"n*h**(1+2*alpha) = {bias_measure:g} > 1: discretization bias regime"
        )
    return RegimeDiagnostics(
        h=plan.h, nh=nh, bias_measure=bias_measure, warnings=tuple(warnings)
    )


def eval_drift(spec: DriftSpec, x: float, theta: float) -> float:
    """Evaluate f(x, theta).  Deterministic; non-finite inputs are rejected."""
    _require_finite(x=x, theta=theta)
    return float(spec.f(x, theta))


def eval_drift_dtheta(spec: DriftSpec, x: float, theta: float) -> float:
    """Evaluate the first theta-derivative of the drift at (x, theta)."""
    _require_finite(x=x, theta=theta)
    return float(spec.df_dtheta(x, theta))


def eval_drift_dtheta2(spec: DriftSpec, x: float, theta: float) -> float:
    """Evaluate the second theta-derivative of the drift at (x, theta)."""
    _require_finite(x=x, theta=theta)
    return float(spec.d2f_dtheta2(x, theta))


def eval_drift_array(spec: DriftSpec, x: np.ndarray, theta: float) -> np.ndarray:
    """Vectorised drift evaluation with a scalar-loop fallback for custom
    drifts whose callables do not accept arrays."""
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(spec.f(x, theta), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([spec.f(float(v), theta) for v in x], dtype=float)


def eval_drift_dtheta_array(spec: DriftSpec, x: np.ndarray, theta: float) -> np.ndarray:
    """Vectorised first theta-derivative with scalar-loop fallback."""
    x = np.asarray(x, dtype=float)
    try:
        out = np.asarray(spec.df_dtheta(x, theta), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([spec.df_dtheta(float(v), theta) for v in x], dtype=float)


def validate_drift_derivatives(
    spec: DriftSpec,
    x_probes: Sequence[float],
    theta_probes: Sequence[float],
    rel_tol: float = 1e-6,
    eps_first: float = 1e-5,
    eps_second: float = 1e-3,
) -> tuple[float, float]:
    """Check stored theta-derivatives against central finite differences.

    Returns the worst relative discrepancies (first, second) over the probe
    grid and raises :class:`ModelError` if either exceeds ``rel_tol``.  The
    second-difference stencil uses a wider eps because the 1e-5 step puts
    roundoff of order machine-eps/eps**2 above the tolerance.
    """
    worst1 = 0.0
    worst2 = 0.0
    for x in x_probes:
        for th in theta_probes:
            f_p = spec.f(x, th + eps_first)
            f_m = spec.f(x, th - eps_first)
            fd1 = (f_p - f_m) / (2.0 * eps_first)
            a1 = spec.df_dtheta(x, th)
            err1 = abs(a1 - fd1) / max(1.0, abs(a1), abs(fd1))
            worst1 = max(worst1, err1)

            f_p2 = spec.f(x, th + eps_second)
            f_m2 = spec.f(x, th - eps_second)
            fd2 = (f_p2 - 2.0 * spec.f(x, th) + f_m2) / (eps_second * eps_second)
            a2 = spec.d2f_dtheta2(x, th)
            err2 = abs(a2 - fd2) / max(1.0, abs(a2), abs(fd2))
            worst2 = max(worst2, err2)
    if worst1 > rel_tol or worst2 > rel_tol:
        raise ModelError(
            f"drift derivatives disagree with finite differences: "
            f"first {worst1:.3e}, second {worst2:.3e}, tolerance {rel_tol:.1e}"
        )
    return worst1, worst2
