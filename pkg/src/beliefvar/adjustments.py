"""Adjusted query means and variances built on the doubling estimates.

Adding the evidence as one or two extra phantom observations biases q1 and
q2 by roughly 1x and 2x the same amount; the adjustments extrapolate that
bias away using beta-like approximations of the higher joint moments of
Q = P(h | e, Theta) and R = P(e | Theta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

from .delta import variance_v1
from .doubling import doubled_moments
from .errors import DegenerateDenominator, DegenerateQuery, NonConvergence
from .inference import Query, marginal_table
from .network import Network

DENOMINATOR_TOL = 1e-14
FIXED_POINT_TOL = 1e-12
MAX_ITER = 100


@dataclass(frozen=True)
class MomentSet:
    mu_q: float
    mu_r: float
    sigma_qq: float
    sigma_rr: float
    sigma_qr: float
    sigma_qqr: float = 0.0
    sigma_qrr: float = 0.0
    sigma_qqrr: float = 0.0

    @classmethod
    def approximate(cls, mu_q, mu_r, sigma_qq, sigma_rr, sigma_qr) -> "MomentSet":
        return cls(mu_q, mu_r, sigma_qq, sigma_rr, sigma_qr,
                   *moment_approximations(mu_q, mu_r, sigma_qq, sigma_rr, sigma_qr))


def _beta_third(sigma_xy, var_x, mu_x):
    den = mu_x * (1.0 - mu_x) + var_x
    if den == 0:
        return 0.0
    return 2.0 * sigma_xy * var_x * (1.0 - 2.0 * mu_x) / den


def moment_approximations(mu_q, mu_r, sigma_qq, sigma_rr, sigma_qr) -> tuple[float, float, float]:
    """(sigma_qqr, sigma_qrr, sigma_qqrr) from the first two moments of (Q, R)."""
    sigma_qqr = _beta_third(sigma_qr, sigma_qq, mu_q)
    sigma_qrr = _beta_third(sigma_qr, sigma_rr, mu_r)
    sigma_qqrr = 2.0 * sigma_qr**2 + sigma_qq * sigma_rr
    return sigma_qqr, sigma_qrr, sigma_qqrr


def sigma_qr_hat(q1: float, q2: float, mu_r: float, sigma_rr: float) -> float:
    """Covariance of Q and R recovered from the shift between q1 and q2."""
    if mu_r == 1.0:
        return 0.0
    den = mu_r**3 * (1.0 - mu_r) + mu_r * (1.0 - 2.0 * mu_r) * sigma_rr - sigma_rr**2
    if abs(den) < DENOMINATOR_TOL:
        warnings.warn(
            f"covariance denominator {den:.3e} too small; using (q2 - q1) * mu_r",
            DegenerateDenominator,
            stacklevel=2,
        )
        return (q2 - q1) * mu_r
    num = (q2 - q1) * mu_r * (mu_r**2 + sigma_rr) * (mu_r * (1.0 - mu_r) + sigma_rr)
    return num / den


def adjusted_means(q1: float, q2: float, mu_r: float, sigma_rr: float) -> tuple[float, float]:
    """(q3, q4): linear extrapolation and the covariance-based correction of q1."""
    q3 = 2.0 * q1 - q2
    q4 = q1 - sigma_qr_hat(q1, q2, mu_r, sigma_rr) / mu_r
    return q3, q4


@dataclass(frozen=True)
class FixedPoint:
    value: float
    iterations: int
    converged: bool
    damped: bool = False


def iterate_fixed_point(
    update: Callable[[float], float],
    start: float,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = MAX_ITER,
) -> FixedPoint:
    """Plain iteration v <- update(v); averages once if it starts to oscillate."""
    v = start
    prev_step = None
    damped = False
    for it in range(1, max_iter + 1):
        nxt = update(v)
        if not math.isfinite(nxt):
            raise DegenerateQuery(f"fixed-point update produced {nxt}")
        step = nxt - v
        if abs(step) < tol:
            return FixedPoint(nxt, it, True, damped)
        if (not damped and prev_step is not None
                and step * prev_step < 0 and abs(step) >= abs(prev_step)):
            nxt = 0.5 * (v + nxt)
            damped = True
        prev_step = step
        v = nxt
    warnings.warn(f"fixed point not reached in {max_iter} iterations", NonConvergence, stacklevel=3)
    return FixedPoint(v, max_iter, False, damped)


def _v3_map(q1, q2, q3, v2):
    d = q2 - q1

    def update(v):
        den = q3 * (1.0 - q3) + v
        if den == 0:
            raise DegenerateQuery("q3 (1 - q3) + v vanished")
        return (v2 + 2.0 * d * d) / (1.0 + 4.0 * d * (1.0 - 2.0 * q3) / den)

    return update


def _v4_map(q2, q4, s_qr, mu_r, sigma_rr, v2):
    r2 = mu_r * mu_r + sigma_rr
    num = r2 * (v2 + (q2 - q4) ** 2) - 2.0 * s_qr * s_qr

    def update(v):
        den = q4 * (1.0 - q4) + v
        if den == 0:
            raise DegenerateQuery("q4 (1 - q4) + v vanished")
        return num / (r2 + 4.0 * mu_r * s_qr * (1.0 - 2.0 * q4) / den)

    return update


def v3_residual(v, q1, q2, q3, v2) -> float:
    return v - _v3_map(q1, q2, q3, v2)(v)


def v4_residual(v, q2, q4, s_qr, mu_r, sigma_rr, v2) -> float:
    return v - _v4_map(q2, q4, s_qr, mu_r, sigma_rr, v2)(v)


def solve_v3(q1, q2, q3, v2) -> FixedPoint:
    if q2 == q1:
        return FixedPoint(v2, 0, True)
    return iterate_fixed_point(_v3_map(q1, q2, q3, v2), v2)


def solve_v4(q2, q4, s_qr, mu_r, sigma_rr, v2) -> FixedPoint:
    if s_qr == 0:
        return FixedPoint(v2 + (q2 - q4) ** 2, 0, True)
    return iterate_fixed_point(_v4_map(q2, q4, s_qr, mu_r, sigma_rr, v2), v2)


def adjusted_variance_v3(q1: float, q2: float, q3: float, v2: float) -> float:
    return solve_v3(q1, q2, q3, v2).value


def adjusted_variance_v4(q2, q4, s_qr, mu_r, sigma_rr, v2) -> float:
    return solve_v4(q2, q4, s_qr, mu_r, sigma_rr, v2).value


@dataclass
class EstimateBundle:
    q1: float
    q2: float
    q3: float
    q4: float
    v1: float
    v2: float
    v3: float
    v4: float
    mu_r: float
    sigma_rr: float
    sigma_qr: float
    iterations: dict = field(default_factory=dict)
    converged: dict = field(default_factory=dict)
    clamped: int = 0

    @property
    def means(self) -> tuple[float, float, float, float]:
        return self.q1, self.q2, self.q3, self.q4

    @property
    def variances(self) -> tuple[float, float, float, float]:
        return self.v1, self.v2, self.v3, self.v4


def _clamp(x, lo, hi=math.inf):
    c = min(max(x, lo), hi)
    return c, c != x


def full_bundle(net: Network, q: Query, with_delta: bool = True) -> EstimateBundle:
    """All four mean and variance approximations for one query."""
    rq = q.resolve(net)
    single = marginal_table(net, None, keep=tuple(rq.hypothesis), evidence=rq.evidence).table
    mu_r = float(single.sum())
    dm = doubled_moments(net, q)
    if rq.constant is not None:
        q1 = rq.constant
    else:
        q1 = float(single[tuple(rq.hypothesis.values())]) / mu_r
    q2, v2 = dm.q2, dm.v2
    sigma_rr = max(dm.r2 - mu_r * mu_r, 0.0)
    if not rq.evidence:
        # R is identically 1; keep rounding from looking like a tiny covariance
        mu_r, sigma_rr = 1.0, 0.0
    v1 = variance_v1(net, q) if with_delta else math.nan

    clamps = 0
    s_qr = sigma_qr_hat(q1, q2, mu_r, sigma_rr)
    q3, c = _clamp(2.0 * q1 - q2, 0.0, 1.0)
    clamps += c
    q4, c = _clamp(q1 - s_qr / mu_r, 0.0, 1.0)
    clamps += c
    fp3 = solve_v3(q1, q2, q3, v2)
    fp4 = solve_v4(q2, q4, s_qr, mu_r, sigma_rr, v2)
    v3, c = _clamp(fp3.value, 0.0)
    clamps += c
    v4, c = _clamp(fp4.value, 0.0)
    clamps += c
    if with_delta:
        v1, c = _clamp(v1, 0.0)
        clamps += c
    return EstimateBundle(
        q1, q2, q3, q4, v1, v2, v3, v4, mu_r, sigma_rr, s_qr,
        iterations={"v3": fp3.iterations, "v4": fp4.iterations},
        converged={"v3": fp3.converged, "v4": fp4.converged},
        clamped=clamps,
    )
