"""Discretely observed reflected sample paths.

Paths follow the reflected dynamics
``dX = f(X, theta) dt + sigma dW + dL - dR`` between a lower barrier ``a``
and, in the two-sided case, an upper barrier ``b``.  Each observation
interval of length ``h`` is integrated with ``substeps`` fine Euler steps.
The default scheme samples the running minimum of each fine step exactly
(conditioned on the Gaussian endpoint) so the lower reflection acts at the
within-step minimum; upper-barrier overshoot is clipped per fine step.  A
plain projection scheme is available for comparison.

Regulator values are accumulated exactly across fine steps and recorded at
observation times, giving the data set {X_tk, L_tk, R_tk} that the
estimators consume.  Everything is deterministic given the stream seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable

import numpy as np

from . import _kernels, rng
from .errors import DataError, ModelError
from .model import (
    MEAN_REVERSION_TO_ONE,
    POWER,
    SHIFTED_COVARIATE,
    BarrierConfig,
    ModelConfig,
    SamplingPlan,
)

LEPINGLE = "lepingle"
PROJECTION = "projection"

_KIND_CODES = {
    POWER: _kernels.DRIFT_POWER,
    MEAN_REVERSION_TO_ONE: _kernels.DRIFT_MEAN_REVERSION_TO_ONE,
    SHIFTED_COVARIATE: _kernels.DRIFT_SHIFTED_COVARIATE,
}


@dataclass(frozen=True)
class SimOptions:
    """Integration scheme, fine steps per observation interval, and the
    64-bit stream seed."""

    scheme: str = LEPINGLE
    substeps: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in (LEPINGLE, PROJECTION):
            raise ModelError(f"unknown scheme {self.scheme!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ModelError(f"substeps must be an integer >= 1, got {self.substeps!r}")


@dataclass(frozen=True)
class SamplePath:
    """Discrete observations of the state and its regulators.

    ``l`` and ``r`` hold the cumulative lower/upper regulator values at the
    observation times (``r`` is identically zero for one-sided paths).
    ``hit_lower``/``hit_upper`` flag, per observation interval, whether any
    fine step touched the corresponding barrier; they are not serialized.
    """

    h: float
    times: np.ndarray
    x: np.ndarray
    l: np.ndarray
    r: np.ndarray
    barriers: BarrierConfig
    hit_lower: np.ndarray | None = None
    hit_upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        # private copies, frozen so the path is immutable after construction
        for name in ("times", "x", "l", "r"):
            arr = np.array(getattr(self, name), dtype=float, order="C")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("hit_lower", "hit_upper"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=bool, order="C")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if len(self.x) < 2:
            raise DataError("a path needs at least two observations")
        if not (len(self.times) == len(self.x) == len(self.l) == len(self.r)):
            raise DataError("path arrays must have equal lengths")

    @property
    def n(self) -> int:
        """Number of increments."""
        return len(self.x) - 1

    def validate(self, tol: float = 1e-12) -> None:
        """Check barrier containment, regulator monotonicity, and (when hit
        flags are present) discrete complementary slackness."""
        a, b = self.barriers.a, self.barriers.b
        if np.min(self.x) < a - tol:
            raise DataError(f"state drops below the lower barrier {a}")
        if b is not None and np.max(self.x) > b + tol:
            raise DataError(f"state exceeds the upper barrier {b}")
        for name, reg in (("l", self.l), ("r", self.r)):
            if reg[0] != 0.0:
                raise DataError(f"regulator {name} must start at 0")
            if np.any(np.diff(reg) < 0.0):
                raise DataError(f"regulator {name} must be non-decreasing")
        if not self.barriers.is_two_sided and np.any(self.r != 0.0):
            raise DataError("one-sided paths cannot carry an upper regulator")
        if self.hit_lower is not None and np.any(
            (np.diff(self.l) > 0) & ~self.hit_lower
        ):
            raise DataError("lower regulator increased without touching the barrier")
        if self.hit_upper is not None and np.any(
            (np.diff(self.r) > 0) & ~self.hit_upper
        ):
            raise DataError("upper regulator increased without touching the barrier")


@dataclass(frozen=True)
class TwoFactorPath:
    """Coupled log-price / short-rate observations.

    ``y`` is the two-sided component on [a, b] (lower regulator in ``y.l``,
    upper in ``y.r``); ``rshort`` is the one-sided short rate reflected at 0
    with its regulator in ``rshort.l``.
    """

    y: SamplePath
    rshort: SamplePath

    def __post_init__(self) -> None:
        if self.y.n != self.rshort.n or self.y.h != self.rshort.h:
            raise DataError("two-factor components must share n and h")

    @property
    def h(self) -> float:
        return self.y.h

    @property
    def n(self) -> int:
        return self.y.n

    def validate(self, tol: float = 1e-12) -> None:
        self.y.validate(tol)
        self.rshort.validate(tol)


def sample_min_given_endpoint(s: float, sigma: float, h: float, u: float) -> float:
    """Sample the running minimum of a drifted Brownian fine step conditioned
    on its endpoint increment ``s``, from the uniform draw ``u`` in (0, 1].

    Never above min(0, s); u = 1 gives exactly min(0, s), u -> 0 sends the
    minimum to -inf.
    """
    if not 0.0 < u <= 1.0:
        raise ModelError(f"u must lie in (0, 1], got {u!r}")
    if sigma < 0.0 or h <= 0.0:
        raise ModelError("sigma must be >= 0 and h > 0")
    return 0.5 * (s - math.sqrt(s * s - 2.0 * sigma * sigma * h * math.log(u)))


def step_one_sided_lower(
    x: float, mu: float, sigma: float, h: float, dw: float, u: float, a: float
) -> tuple[float, float]:
    """One reflected fine step above the lower barrier ``a``.

    Returns (next state, lower regulator increment).  The push ``dl`` is
    exactly the amount needed to lift the sampled within-step minimum to
    ``a``, so whenever dl > 0 the reflected sub-path touched the barrier.
    """
    s = mu * h + sigma * dw
    mn = sample_min_given_endpoint(s, sigma, h, u)
    dl = max(0.0, a - x - mn)
    return x + s + dl, dl


def step_two_sided(
    x: float,
    mu: float,
    sigma: float,
    h: float,
    dw: float,
    u: float,
    a: float,
    b: float,
) -> tuple[float, float, float]:
    """One reflected fine step between ``a`` and ``b``: lower reflection via
    the exact within-step minimum, then overshoot above ``b`` clipped into
    the upper regulator increment."""
    x1, dl = step_one_sided_lower(x, mu, sigma, h, dw, u, a)
    dr = max(0.0, x1 - b)
    return x1 - dr, dl, dr


def _python_loop(
    mu_of: Callable[[float], float],
    x0: float,
    sigma: float,
    a: float,
    b: float | None,
    n: int,
    m: int,
    hf: float,
    exact_min: bool,
    normals: np.ndarray,
    uniforms: np.ndarray,
    x_out: np.ndarray,
    l_out: np.ndarray,
    r_out: np.ndarray,
    hit_lo: np.ndarray,
    hit_up: np.ndarray,
) -> None:
    """Reference stepper for arbitrary drift callables; consumes draws in
    the same order as the compiled kernel and matches its arithmetic."""
    sqrt_hf = math.sqrt(hf)
    sig2hf = 2.0 * sigma * sigma * hf
    x = float(x0)
    cl = 0.0
    cr = 0.0
    x_out[0] = x
    l_out[0] = 0.0
    r_out[0] = 0.0
    idx = 0
    for k in range(n):
        touched_lo = False
        touched_up = False
        for _ in range(m):
            mu = mu_of(x)
            s = mu * hf + sigma * sqrt_hf * normals[idx]
            if exact_min:
                mn = 0.5 * (s - math.sqrt(s * s - sig2hf * math.log(uniforms[idx])))
                dl = a - x - mn
            else:
                dl = a - (x + s)
            if dl < 0.0:
                dl = 0.0
            x = x + s + dl
            if dl > 0.0:
                touched_lo = True
                cl += dl
            if b is not None:
                dr = x - b
                if dr > 0.0:
                    touched_up = True
                    cr += dr
                    x = b
            idx += 1
        x_out[k + 1] = x
        l_out[k + 1] = cl
        r_out[k + 1] = cr
        hit_lo[k] = touched_lo
        hit_up[k] = touched_up


def simulate_path(
    config: ModelConfig, theta: float, plan: SamplingPlan, opts: SimOptions
) -> SamplePath:
    """Simulate a discretely observed reflected path at the true parameter
    ``theta``.  Deterministic given ``opts.seed``; built-in drift kinds run
    through the compiled kernel, custom drifts through the Python stepper."""
    lo, hi = config.theta_domain
    if not lo < theta < hi:
        raise ModelError(f"theta={theta!r} lies outside the open domain ({lo}, {hi})")
    n, m = plan.n, opts.substeps
    hf = plan.h / m
    normals, uniforms = rng.path_draws(opts.seed, n * m)
    barriers = config.barriers
    exact_min = opts.scheme == LEPINGLE

    x = np.empty(n + 1)
    l = np.empty(n + 1)
    r = np.empty(n + 1)
    hit_lo = np.empty(n, dtype=bool)
    hit_up = np.empty(n, dtype=bool)

    kind = _KIND_CODES.get(config.drift.kind)
    if kind is None:
        spec = config.drift
        _python_loop(
            lambda xv: float(spec.f(xv, theta)),
            config.x0, config.sigma, barriers.a, barriers.b,
            n, m, hf, exact_min, normals, uniforms,
            x, l, r, hit_lo, hit_up,
        )
    else:
        if kind == _kernels.DRIFT_POWER:
            param = config.drift.gamma
        elif kind == _kernels.DRIFT_SHIFTED_COVARIATE:
            param = config.drift.covariate
        else:
            param = 0.0
        _kernels.integrate_builtin(
            float(config.x0), float(theta), float(config.sigma),
            float(barriers.a), float(barriers.b) if barriers.is_two_sided else 0.0,
            barriers.is_two_sided, n, m, hf,
            kind, float(param), exact_min,
            normals, uniforms, x, l, r, hit_lo, hit_up,
        )

    times = np.arange(n + 1) * plan.h
    path = SamplePath(
        h=plan.h, times=times, x=x, l=l, r=r, barriers=barriers,
        hit_lower=hit_lo, hit_upper=hit_up,
    )
    path.validate()
    return path


def simulate_two_factor(
    y0: float,
    r0: float,
    theta1: float,
    theta2: float,
    sigma: float,
    a: float,
    b: float,
    plan: SamplingPlan,
    opts: SimOptions,
) -> TwoFactorPath:
    """Simulate the coupled system: a short rate reflected at 0 with drift
    theta2*(1 - R), and a log price reflected on [a, b] whose drift
    R + theta1 uses the short rate at each fine-step left endpoint.

    The two Brownian drivers use independent streams derived from
    ``opts.seed``.
    """
    barriers_y = BarrierConfig.two_sided(a, b)
    barriers_r = BarrierConfig.one_sided_lower(0.0)
    if not barriers_y.contains(y0):
        raise ModelError(f"y0={y0!r} must lie in [{a}, {b}]")
    if r0 < 0.0:
        raise ModelError(f"r0={r0!r} must be >= 0")
    if sigma < 0.0 or not math.isfinite(sigma):
        raise ModelError(f"sigma must be >= 0, got {sigma!r}")

    n, m = plan.n, opts.substeps
    hf = plan.h / m
    normals_y, uniforms_y = rng.path_draws(rng.derive_seed(opts.seed, 1), n * m)
    normals_r, uniforms_r = rng.path_draws(rng.derive_seed(opts.seed, 2), n * m)

    y = np.empty(n + 1)
    l1 = np.empty(n + 1)
    u1 = np.empty(n + 1)
    rr = np.empty(n + 1)
    l2 = np.empty(n + 1)
    hit_y_lo = np.empty(n, dtype=bool)
    hit_y_up = np.empty(n, dtype=bool)
    hit_r_lo = np.empty(n, dtype=bool)

    _kernels.integrate_two_factor(
        float(y0), float(r0), float(theta1), float(theta2), float(sigma),
        float(a), float(b), n, m, hf, opts.scheme == LEPINGLE,
        normals_y, uniforms_y, normals_r, uniforms_r,
        y, l1, u1, rr, l2, hit_y_lo, hit_y_up, hit_r_lo,
    )

    times = np.arange(n + 1) * plan.h
    zeros = np.zeros(n + 1)
    tf = TwoFactorPath(
        y=SamplePath(
            h=plan.h, times=times, x=y, l=l1, r=u1, barriers=barriers_y,
            hit_lower=hit_y_lo, hit_upper=hit_y_up,
        ),
        rshort=SamplePath(
            h=plan.h, times=times, x=rr, l=l2, r=zeros, barriers=barriers_r,
            hit_lower=hit_r_lo, hit_upper=np.zeros(n, dtype=bool),
        ),
    )
    tf.validate()
    return tf


# ---------------------------------------------------------------------------
# CSV round-trip (17 significant digits, lossless for doubles)
# ---------------------------------------------------------------------------


def _open_out(dest: str | Path | IO[str]):
    if hasattr(dest, "write"):
        return dest, False
    return open(dest, "w", encoding="utf-8"), True


def _open_in(src: str | Path | IO[str]):
    if hasattr(src, "read"):
        return src, False
    return open(src, "r", encoding="utf-8"), True


def write_path_csv(path: SamplePath, dest: str | Path | IO[str]) -> None:
    """Write ``t,x,l,r`` (two-sided) or ``t,x,l`` (one-sided) rows."""
    fh, owned = _open_out(dest)
    try:
        if path.barriers.is_two_sided:
            fh.write("t,x,l,r\n")
            for t, xv, lv, rv in zip(path.times, path.x, path.l, path.r):
                fh.write(f"{t:.17g},{xv:.17g},{lv:.17g},{rv:.17g}\n")
        else:
            fh.write("t,x,l\n")
            for t, xv, lv in zip(path.times, path.x, path.l):
                fh.write(f"{t:.17g},{xv:.17g},{lv:.17g}\n")
    finally:
        if owned:
            fh.close()


def read_path_csv(src: str | Path | IO[str], barriers: BarrierConfig) -> SamplePath:
    """Read a path written by :func:`write_path_csv`.

    The CSV does not carry barrier geometry, so it must be supplied (for the
    command-line tools it comes from the model configuration file).
    """
    fh, owned = _open_in(src)
    try:
        header = fh.readline().strip()
        if header == "t,x,l,r":
            ncols = 4
        elif header == "t,x,l":
            ncols = 3
        else:
            raise DataError(f"unrecognized path CSV header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    finally:
        if owned:
            fh.close()
    if data.shape[0] < 2 or data.shape[1] != ncols:
        raise DataError("path CSV must have >= 2 rows with the declared columns")
    times = data[:, 0]
    steps = np.diff(times)
    h = steps[0]
    if h <= 0 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise DataError("path CSV requires regularly spaced times")
    r = data[:, 3] if ncols == 4 else np.zeros(len(times))
    path = SamplePath(h=float(h), times=times, x=data[:, 1], l=data[:, 2],
                      r=r, barriers=barriers)
    path.validate()
    return path


def write_two_factor_csv(tf: TwoFactorPath, dest: str | Path | IO[str]) -> None:
    """Write ``t,y,l1,u1,r,l2`` rows."""
    fh, owned = _open_out(dest)
    try:
        fh.write("t,y,l1,u1,r,l2\n")
        for t, yv, l1v, u1v, rv, l2v in zip(
            tf.y.times, tf.y.x, tf.y.l, tf.y.r, tf.rshort.x, tf.rshort.l
        ):
            fh.write(
                f"{t:.17g},{yv:.17g},{l1v:.17g},{u1v:.17g},{rv:.17g},{l2v:.17g}\n"
            )
    finally:
        if owned:
            fh.close()


def read_two_factor_csv(
    src: str | Path | IO[str], a: float, b: float
) -> TwoFactorPath:
    """Read a two-factor path written by :func:`write_two_factor_csv`."""
    fh, owned = _open_in(src)
    try:
        header = fh.readline().strip()
        if header != "t,y,l1,u1,r,l2":
            raise DataError(f"unrecognized two-factor CSV header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    finally:
        if owned:
            fh.close()
    if data.shape[0] < 2 or data.shape[1] != 6:
        raise DataError("two-factor CSV must have >= 2 rows and 6 columns")
    times = data[:, 0]
    steps = np.diff(times)
    h = steps[0]
    if h <= 0 or not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise DataError("two-factor CSV requires regularly spaced times")
    zeros = np.zeros(len(times))
    tf = TwoFactorPath(
        y=SamplePath(h=float(h), times=times, x=data[:, 1], l=data[:, 2],
                     r=data[:, 3], barriers=BarrierConfig.two_sided(a, b)),
        rshort=SamplePath(h=float(h), times=times, x=data[:, 4], l=data[:, 5],
                          r=zeros, barriers=BarrierConfig.one_sided_lower(0.0)),
    )
    tf.validate()
    return tf
