"""Verification instruments: a discrete fractional derivative, log-log
rate fits, and step-halving convergence studies.

These exist to check solver output, not to solve anything themselves.
The discrete derivative is an L2-type scheme: the second derivative is
reconstructed by central differences on cells and integrated exactly
against the weakly singular kernel, so quadratic polynomials are
differentiated exactly and affine functions are annihilated to round-off.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "RateFit",
    "discrete_caputo",
    "rate_fit",
    "self_convergence",
]

ROUNDOFF_FLOOR = 1e-13


def discrete_caputo(series, alpha: float, dt: float) -> np.ndarray:
    """Order-alpha derivative of a uniformly sampled series, 1 < alpha < 2.

    Cell j around node j carries the central second difference of the
    series; the kernel (t_i - s)^(1-alpha) / Gamma(2-alpha) is integrated
    in closed form over each cell.  The first cell absorbs [0, 1.5 dt]
    and the last cell of each row runs up to t_i, so the cells tile
    [0, t_i] exactly.  Output rows 0 and 1 are NaN (scheme startup needs
    two interior neighbours); entries i >= 2 approximate the derivative
    at t_i.
    """
    u = np.asarray(series, dtype=float)
    if u.ndim != 1:
        raise DomainError("series must be one-dimensional")
    if len(u) < 3:
        raise DomainError("series needs at least 3 points")
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    if not (dt > 0.0 and math.isfinite(dt)):
        raise DomainError("dt must be positive and finite")

    M = len(u) - 1
    d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dt ** 2     # nodes 1 .. M-1
    e = 2.0 - alpha
    scale = 1.0 / (e * math.gamma(e))
    # cell edges: a_1 = 0, a_j = (j - 1/2) dt; the row-i last cell ends at t_i
    ts = np.arange(M + 1) * dt
    a_edges = (np.arange(1, M) - 0.5) * dt
    a_edges[0] = 0.0
    out = np.full(M + 1, np.nan)
    for i in range(2, M + 1):
        a = a_edges[:i - 1]
        b = np.empty(i - 1)
        b[:-1] = a_edges[1:i - 1]
        b[-1] = ts[i]
        w = (ts[i] - a) ** e - (ts[i] - b) ** e
        out[i] = scale * float(np.dot(d2[:i - 1], w))
    return out


@dataclass(frozen=True)
class RateFit:
    """Least-squares power law values ~ exp(intercept) * t^exponent."""

    exponent: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int


def rate_fit(times, values, window) -> RateFit:
    """Log-log slope of a positive series over a time window.

    The first two samples are always excluded (startup region of the
    discrete schemes this instrument is pointed at), as is any sample
    below the round-off floor 1e-13.  Fewer than 5 surviving points is a
    domain error.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise DomainError("times and values must be matching vectors")
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise DomainError("window must satisfy t_lo < t_hi")
    keep = np.zeros(len(t), dtype=bool)
    keep[2:] = True
    keep &= (t >= lo) & (t <= hi) & (t > 0.0)
    keep &= np.isfinite(v) & (v >= ROUNDOFF_FLOOR)
    if int(keep.sum()) < 5:
        raise DomainError(
            f"rate fit needs at least 5 usable points in [{lo:g}, {hi:g}], "
            f"got {int(keep.sum())}")
    x = np.log(t[keep])
    y = np.log(v[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return RateFit(exponent=float(slope), intercept=float(intercept),
                   r_squared=float(min(max(r2, 0.0), 1.0)),
                   window=(lo, hi), n_points=int(keep.sum()))


def self_convergence(runner, dts) -> dict:
    """Observed order from final states at successively halved steps.

    runner(dt) must return the final-state coefficient vector.  Each step
    must halve the previous one.  Consecutive levels are differenced in
    the sup norm; each adjacent difference pair yields an observed order
    log2(e_k / e_{k+1}).  Differences at the round-off floor report the
    order as "exact" instead of a number.
    """
    dts = [float(d) for d in dts]
    if len(dts) < 3:
        raise DomainError("need at least 3 step sizes")
    for a, b in zip(dts, dts[1:]):
        if not (b > 0.0 and abs(a / b - 2.0) <= 1e-12):
            raise DomainError(
                f"steps must halve: {a:g} -> {b:g} is not a 2x refinement")
    states = [np.asarray(runner(d), dtype=float) for d in dts]
    floor = ROUNDOFF_FLOOR * max(1.0, float(np.max(np.abs(states[-1]))))
    diffs = [float(np.max(np.abs(s1 - s2)))
             for s1, s2 in zip(states, states[1:])]
    orders = []
    for e1, e2 in zip(diffs, diffs[1:]):
        if e1 <= floor or e2 <= floor:
            orders.append("exact")
        else:
            orders.append(math.log2(e1 / e2))
    return {"dts": tuple(dts), "diffs": tuple(diffs),
            "orders": tuple(orders)}
