"""Monte Carlo experiment runner: replicate simulate -> estimate sweeps,
bias / standard deviation / MSE summaries, and a normality diagnostic for
the standardized estimates.

Replications are independent pure tasks keyed by (replication index, n);
each derives its own stream seed from the root seed, so results are
identical whether replications run serially or concurrently.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as _scistats

from . import rng
from .errors import DataError, ModelError
from .estimate import (
    EstimateResult,
    estimate_power_closed_form,
    nlse_optimize,
)
from .model import POWER, ModelConfig, SamplingPlan
from .simulate import SamplePath, SimOptions, simulate_path, simulate_two_factor
from .stationary import information

_FAILURE_FRACTION = 0.01


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo experiment: a model with its true parameter, the
    sampling plan template, simulation options (whose seed is the root
    seed), the replication count, and the n values to sweep."""

    model: ModelConfig
    theta0: float
    plan: SamplingPlan
    sim: SimOptions
    replications: int
    n_values: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.replications < 2:
            raise ModelError("replications must be >= 2")
        if not self.n_values:
            raise ModelError("n_values must be non-empty")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))


@dataclass(frozen=True)
class McSummary:
    """Bias, population standard deviation, and mean squared error of the
    replicate estimates at one n.  The population convention makes
    mse = bias**2 + std_dev**2 an identity."""

    n: int
    bias: float
    std_dev: float
    mse: float


@dataclass(frozen=True)
class McRun:
    """Replicate estimates per n, with per-replication failure records."""

    estimates: Mapping[int, np.ndarray]
    rep_indices: Mapping[int, np.ndarray]
    failures: Mapping[int, tuple[tuple[int, str], ...]]

    def summary(self, theta0: float, n: int) -> McSummary:
        return summarize(self.estimates[n], theta0, n=n)

    def summaries(self, theta0: float) -> list[McSummary]:
        return [self.summary(theta0, n) for n in sorted(self.estimates)]


def _default_estimator(cfg: McConfig) -> Callable[[SamplePath], EstimateResult]:
    if cfg.model.drift.kind == POWER:
        gamma = cfg.model.drift.gamma
        domain = cfg.model.theta_domain
        return lambda path: estimate_power_closed_form(path, gamma, domain)
    spec = cfg.model.drift
    domain = cfg.model.theta_domain
    return lambda path: nlse_optimize(path, spec, domain)


def run_mc(
    cfg: McConfig,
    estimator: Callable[[SamplePath], EstimateResult] | None = None,
    workers: int = 1,
) -> McRun:
    """Run the experiment: for each n and replication i, simulate with the
    stream seed derived from (root seed, i, n) and estimate.

    Failed replications (estimation errors or estimates pinned at the
    parameter-domain boundary) are recorded and excluded; more than 1%
    failures at any n aborts the run.  Deterministic given the root seed,
    serially or with ``workers`` threads.
    """
    if estimator is None:
        estimator = _default_estimator(cfg)
    root = cfg.sim.seed
    estimates: dict[int, np.ndarray] = {}
    rep_indices: dict[int, np.ndarray] = {}
    failures: dict[int, tuple[tuple[int, str], ...]] = {}

    for n in cfg.n_values:
        plan_n = replace(cfg.plan, n=n)

        def one(i: int, *, _plan=plan_n, _n=n) -> tuple[int, float | None, str | None]:
            opts = replace(cfg.sim, seed=rng.derive_seed(root, i, _n))
            try:
                path = simulate_path(cfg.model, cfg.theta0, _plan, opts)
                result = estimator(path)
                if result.boundary_hit:
                    return i, None, "estimate pinned at the domain boundary"
                return i, result.theta_hat, None
            except (DataError, ModelError) as exc:
                return i, None, str(exc)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(one, range(cfg.replications)))
        else:
            outcomes = [one(i) for i in range(cfg.replications)]

        good = [(i, th) for i, th, _ in outcomes if th is not None]
        bad = tuple((i, msg) for i, _, msg in outcomes if msg is not None)
        if len(bad) > _FAILURE_FRACTION * cfg.replications:
            raise DataError(
                f"{len(bad)} of {cfg.replications} replications failed at n={n}: "
                f"{bad[0][1]}"
            )
        estimates[n] = np.array([th for _, th in good])
        rep_indices[n] = np.array([i for i, _ in good], dtype=int)
        failures[n] = bad

    return McRun(estimates=estimates, rep_indices=rep_indices, failures=failures)


def summarize(estimates: Sequence[float], theta0: float, n: int = 0) -> McSummary:
    """Bias, population std, and MSE of replicate estimates around the true
    value."""
    values = np.asarray(estimates, dtype=float)
    if values.size < 2:
        raise DataError("summaries need at least two estimates")
    bias = float(np.mean(values) - theta0)
    std = float(np.std(values))
    mse = float(np.mean((values - theta0) ** 2))
    return McSummary(n=n, bias=bias, std_dev=std, mse=mse)


@dataclass(frozen=True)
class NormalityReport:
    """Standardized estimates z = sqrt(n h info) (theta_hat - theta0) / sigma
    with their sample moments and a Kolmogorov-Smirnov test against N(0,1)."""

    z: np.ndarray
    sample_mean: float
    sample_std: float
    ks_statistic: float
    ks_pvalue: float
    level: float
    passed: bool

    def __post_init__(self) -> None:
        arr = np.array(self.z, dtype=float, order="C")
        arr.setflags(write=False)
        object.__setattr__(self, "z", arr)


def normality_diagnostic(
    estimates: Sequence[float],
    theta0: float,
    plan: SamplingPlan,
    config: ModelConfig,
    level: float = 0.01,
) -> NormalityReport:
    """Standardize replicate estimates with the model-based scaling at the
    true parameter and test them against the standard normal limit."""
    if config.sigma <= 0:
        raise ModelError("the normality diagnostic requires sigma > 0")
    values = np.asarray(estimates, dtype=float)
    if values.size < 2:
        raise DataError("the normality diagnostic needs at least two estimates")
    info = information(config, theta0)
    scale = math.sqrt(plan.n * plan.h * info) / config.sigma
    z = scale * (values - theta0)
    ks = _scistats.kstest(z, "norm")
    return NormalityReport(
        z=z,
        sample_mean=float(np.mean(z)),
        sample_std=float(np.std(z, ddof=1)),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        level=level,
        passed=bool(ks.pvalue > level),
    )


@dataclass(frozen=True)
class TwoFactorMcConfig:
    """Monte Carlo sweep for the coupled log-price / short-rate system."""

    y0: float
    r0: float
    theta1: float
    theta2: float
    sigma: float
    a: float
    b: float
    plan: SamplingPlan
    sim: SimOptions
    replications: int
    n_values: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.replications < 2:
            raise ModelError("replications must be >= 2")
        if not self.n_values:
            raise ModelError("n_values must be non-empty")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))


def run_mc_two_factor(
    cfg: TwoFactorMcConfig, workers: int = 1
) -> tuple[McRun, McRun]:
    """Replicate the two-factor simulate -> estimate pipeline; returns one
    run per parameter.  Seeding and failure handling mirror :func:`run_mc`."""
    from .estimate import estimate_two_factor

    root = cfg.sim.seed
    est1: dict[int, np.ndarray] = {}
    est2: dict[int, np.ndarray] = {}
    reps1: dict[int, np.ndarray] = {}
    fails: dict[int, tuple[tuple[int, str], ...]] = {}

    for n in cfg.n_values:
        plan_n = replace(cfg.plan, n=n)

        def one(i: int, *, _plan=plan_n, _n=n):
            opts = replace(cfg.sim, seed=rng.derive_seed(root, i, _n))
            try:
                tf = simulate_two_factor(
                    cfg.y0, cfg.r0, cfg.theta1, cfg.theta2, cfg.sigma,
                    cfg.a, cfg.b, _plan, opts,
                )
                r1, r2 = estimate_two_factor(tf, cfg.sigma)
                return i, r1.theta_hat, r2.theta_hat, None
            except (DataError, ModelError) as exc:
                return i, None, None, str(exc)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(one, range(cfg.replications)))
        else:
            outcomes = [one(i) for i in range(cfg.replications)]

        good = [(i, t1, t2) for i, t1, t2, _ in outcomes if t1 is not None]
        bad = tuple((i, msg) for i, _, _, msg in outcomes if msg is not None)
        if len(bad) > _FAILURE_FRACTION * cfg.replications:
            raise DataError(
                f"{len(bad)} of {cfg.replications} replications failed at n={n}"
            )
        est1[n] = np.array([t1 for _, t1, _ in good])
        est2[n] = np.array([t2 for _, _, t2 in good])
        reps1[n] = np.array([i for i, _, _ in good], dtype=int)
        fails[n] = bad

    run1 = McRun(estimates=est1, rep_indices=reps1, failures=fails)
    run2 = McRun(estimates=est2, rep_indices=reps1, failures=fails)
    return run1, run2
