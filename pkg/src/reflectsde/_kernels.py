"""Compiled fine-step integrators for the built-in drift kinds.

The kernels mirror the pure-Python steppers in :mod:`reflectsde.simulate`
exactly (same draw consumption order, same arithmetic); they exist only to
make Monte Carlo sweeps fast.  If numba is unavailable the same functions
run as plain Python.
"""

from __future__ import annotations

import math

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


DRIFT_POWER = 0
DRIFT_MEAN_REVERSION_TO_ONE = 1
DRIFT_SHIFTED_COVARIATE = 2


@njit(cache=True)
def integrate_builtin(
    x0,
    theta,
    sigma,
    a,
    b,
    two_sided,
    n,
    m,
    hf,
    kind,
    param,
    exact_min,
    normals,
    uniforms,
    x_out,
    l_out,
    r_out,
    hit_lo,
    hit_up,
):
    sqrt_hf = math.sqrt(hf)
    sig2hf = 2.0 * sigma * sigma * hf
    x = x0
    cl = 0.0
    cr = 0.0
    x_out[0] = x0
    l_out[0] = 0.0
    r_out[0] = 0.0
    idx = 0
    for k in range(n):
        touched_lo = False
        touched_up = False
        for _ in range(m):
            if kind == DRIFT_POWER:
                mu = -theta * x ** param
            elif kind == DRIFT_MEAN_REVERSION_TO_ONE:
                mu = theta * (1.0 - x)
            else:
                mu = param + theta
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
            if two_sided:
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


@njit(cache=True)
def integrate_two_factor(
    y0,
    r0,
    theta1,
    theta2,
    sigma,
    a,
    b,
    n,
    m,
    hf,
    exact_min,
    normals_y,
    uniforms_y,
    normals_r,
    uniforms_r,
    y_out,
    l1_out,
    u1_out,
    r_out,
    l2_out,
    hit_y_lo,
    hit_y_up,
    hit_r_lo,
):
    sqrt_hf = math.sqrt(hf)
    sig2hf = 2.0 * sigma * sigma * hf
    y = y0
    r = r0
    cl1 = 0.0
    cu1 = 0.0
    cl2 = 0.0
    y_out[0] = y0
    r_out[0] = r0
    l1_out[0] = 0.0
    u1_out[0] = 0.0
    l2_out[0] = 0.0
    idx = 0
    for k in range(n):
        ty_lo = False
        ty_up = False
        tr_lo = False
        for _ in range(m):
            # Both drifts are frozen at the fine-step left endpoints; the
            # log-price drift uses the current short rate before it moves.
            mu_y = r + theta1
            mu_r = theta2 * (1.0 - r)

            s = mu_y * hf + sigma * sqrt_hf * normals_y[idx]
            if exact_min:
                mn = 0.5 * (s - math.sqrt(s * s - sig2hf * math.log(uniforms_y[idx])))
                dl = a - y - mn
            else:
                dl = a - (y + s)
            if dl < 0.0:
                dl = 0.0
            y = y + s + dl
            if dl > 0.0:
                ty_lo = True
                cl1 += dl
            du = y - b
            if du > 0.0:
                ty_up = True
                cu1 += du
                y = b

            s = mu_r * hf + sigma * sqrt_hf * normals_r[idx]
            if exact_min:
                mn = 0.5 * (s - math.sqrt(s * s - sig2hf * math.log(uniforms_r[idx])))
                dl = -r - mn
            else:
                dl = -(r + s)
            if dl < 0.0:
                dl = 0.0
            r = r + s + dl
            if dl > 0.0:
                tr_lo = True
                cl2 += dl
            idx += 1
        y_out[k + 1] = y
        l1_out[k + 1] = cl1
        u1_out[k + 1] = cu1
        r_out[k + 1] = r
        l2_out[k + 1] = cl2
        hit_y_lo[k] = ty_lo
        hit_y_up[k] = ty_up
        hit_r_lo[k] = tr_lo
