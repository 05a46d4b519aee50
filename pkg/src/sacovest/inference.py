"""Limiting covariance, normal quantiles, confidence intervals and study analytics.

The limiting covariance of the rescaled averaged iterates is
U (U' J U)^{-1} S (U' J U)^{-T} U' with J the restricted Jacobian at the
solution and S the tangent noise covariance; it is supported on the tangent
space, hence rank-deficient, so inference here is directional: scalar
intervals and Wald tests along a user-chosen vector v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDirection,
    InsufficientPoints,
    InvalidReps,
    NonPositiveValue,
    NotOrthonormal,
    OutOfDomain,
)
from .numerics import as_matrix, as_vector, solve_linear


def limiting_sigma(u: np.ndarray, h: np.ndarray, s: np.ndarray) -> np.ndarray:
    """U H^{-1} S H^{-T} U', solved (never explicitly inverted), symmetrized."""
    u = as_matrix(u)
    d, r = u.shape
    if r == 0:
        return np.zeros((d, d))
    h = as_matrix(h, rows=r, cols=r)
    s = as_matrix(s, rows=r, cols=r)
    if np.abs(u.T @ u - np.eye(r)).max() > 1e-6:
        raise NotOrthonormal("basis columns are not orthonormal")
    hinv_s = solve_linear(h, s)
    core = solve_linear(h, hinv_s.T).T          # H^{-1} S H^{-T}
    core = 0.5 * (core + core.T)
    sig = u @ core @ u.T
    return 0.5 * (sig + sig.T)


# Peter Acklam's rational approximation to the inverse normal CDF
# (max absolute error ~1.15e-9 before refinement).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def normal_cdf(z: float) -> float:
    """Phi(z) from the series Phi(z) = 1/2 + phi(z) * sum z^(2k+1) / (1*3*...*(2k+1)).

    All terms share the sign of z, so there is no cancellation; converges
    fast for |z| <= ~8 and degrades gracefully beyond (phi(z) underflows).
    """
    if z == 0.0:
        return 0.5
    if z > 40.0:
        return 1.0
    if z < -40.0:
        return 0.0
    term = z
    total = z
    z2 = z * z
    for k in range(1, 300):
        term *= z2 / (2 * k + 1)
        new_total = total + term
        if new_total == total:
            break
        total = new_total
    phi = math.exp(-0.5 * z2) / math.sqrt(2.0 * math.pi)
    p = 0.5 + phi * total
    return min(max(p, 0.0), 1.0)


def normal_quantile(p: float) -> float:
    """z with Phi(z) = p: rational approximation plus one Newton polish."""
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"quantile needs p in (0, 1), got {p}")
    z = _acklam(p)
    phi = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    if phi > 1e-300:
        z -= (normal_cdf(z) - p) / phi
    return z


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float
    direction: np.ndarray

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def confidence_interval(x_bar: np.ndarray, sigma_hat: np.ndarray, n: int,
                        v: np.ndarray, level: float) -> ConfidenceInterval:
    """Two-sided interval for v'x*: v'xbar +- z * sqrt(v' Sigma v / n)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    v = as_vector(v)
    if not np.any(v):
        raise ValueError("direction v must be nonzero")
    var_v = float(v @ sigma_hat @ v)
    if var_v < -1e-10:
        raise DegenerateDirection(f"v'Sv = {var_v!r} is negative beyond tolerance")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    center = float(v @ x_bar)
    half = z * math.sqrt(max(var_v, 0.0) / n)
    return ConfidenceInterval(lo=center - half, hi=center + half, level=level,
                              direction=np.array(v))


def wald_test(x_bar: np.ndarray, sigma_hat: np.ndarray, n: int, v: np.ndarray,
              null_value: float):
    """(statistic, reject_at): T = sqrt(n)(v'xbar - c)/sqrt(v'Sv); reject when |T| > z."""
    v = as_vector(v)
    var_v = float(v @ sigma_hat @ v)
    if var_v <= 0.0:
        raise DegenerateDirection(f"v'Sv = {var_v!r} must be positive for a Wald test")
    statistic = math.sqrt(n) * (float(v @ x_bar) - null_value) / math.sqrt(var_v)

    def reject_at(level: float) -> bool:
        return abs(statistic) > normal_quantile(1.0 - level / 2.0)

    return statistic, reject_at


def coverage_study(problem, config, reps: int, v: np.ndarray, level: float,
                   threads: int = 1, synthetic: bool = False) -> float:
    """Fraction of per-replication intervals that contain the true v'x*.

    With synthetic=True the averages are drawn exactly from N(x*, Sigma/n)
    and Sigma-hat is the true Sigma, which isolates the interval arithmetic
    from the SA dynamics (an exact-normal oracle for the nominal level).
    """
    if reps < 1:
        raise InvalidReps(f"reps must be >= 1, got {reps}")
    gt = problem.ground_truth()
    truth = float(np.asarray(v, dtype=float) @ gt.x_star)
    hits = 0
    if synthetic:
        from .numerics import RngStream, spd_factor

        u = gt.tangent_basis
        core = solve_linear(gt.jacobian_h, gt.noise_cov_s)
        core = solve_linear(gt.jacobian_h, core.T).T
        factor = u @ spd_factor(0.5 * (core + core.T))   # Sigma = (U L)(U L)'
        for rep in range(reps):
            rng = RngStream(config.seed, stream_id=rep)
            z = rng.standard_normals(factor.shape[1])
            x_bar = gt.x_star + factor @ z / math.sqrt(config.n)
            ci = confidence_interval(x_bar, gt.sigma_limit, config.n, v, level)
            hits += ci.contains(truth)
        return hits / reps

    from .sa_engine import replicate

    for res in replicate(problem, config, reps, threads=threads):
        ci = confidence_interval(res.x_bar, res.sigma_hat, config.n, v, level)
        hits += ci.contains(truth)
    return hits / reps


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float


def rate_fit(points) -> RateFit:
    """Least squares of log(error) on log(n) over (n, error) pairs."""
    pts = list(points)
    if len(pts) < 2:
        raise InsufficientPoints(f"need >= 2 points, got {len(pts)}")
    ns = np.array([p[0] for p in pts], dtype=float)
    errs = np.array([p[1] for p in pts], dtype=float)
    if np.any(ns <= 0) or np.any(errs <= 0):
        raise NonPositiveValue("all n and error values must be positive")
    x = np.log(ns)
    y = np.log(errs)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise NonPositiveValue("all n identical; slope undefined")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateFit(slope=slope, intercept=intercept, r_squared=r2)
