"""Classical standard map: ensembles, Lyapunov exponent, angular correlation.

The map generated by H = p^2/2 + K cos(theta) sum_m delta(t - m) with the
kick applied first is

    p'     = p + K sin(theta)   (folded into [-pi, pi))
    theta' = theta + p'         (mod 2 pi)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import DEFAULT_REGION, TWO_PI, Region, wrap_momentum, wrap_theta
from .series import DecaySeries

CHAOS_THRESHOLD = 0.01


def standard_map_step(theta, p, K: float):
    """One kick-then-drift step; works elementwise on arrays."""
    p_new = wrap_momentum(p + K * np.sin(theta))
    theta_new = wrap_theta(theta + p_new)
    return theta_new, p_new


def tangent_step(theta, dtheta, dp, K: float):
    """Linearized map at ``theta`` (the pre-kick angle) acting on (dtheta, dp)."""
    dp_new = dp + K * np.cos(theta) * dtheta
    return dtheta + dp_new, dp_new


@dataclass(frozen=True, eq=False)
class ClassicalEnsemble:
    theta: np.ndarray
    p: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        th = wrap_theta(np.asarray(self.theta, dtype=float))
        p = wrap_momentum(np.asarray(self.p, dtype=float))
        if th.shape != p.shape or th.ndim != 1:
            raise ValueError("theta and p must be 1-D arrays of equal length")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return self.theta.size

    def step(self, K: float) -> "ClassicalEnsemble":
        th, p = standard_map_step(self.theta, self.p, K)
        return ClassicalEnsemble(th, p, self.seed)

    def history(self, K: float, T: int) -> tuple[np.ndarray, np.ndarray]:
        """Wrapped (theta, p) at t = 0..T, each of shape (T+1, n)."""
        th = np.empty((T + 1, len(self)))
        pp = np.empty_like(th)
        th[0], pp[0] = self.theta, self.p
        for t in range(T):
            th[t + 1], pp[t + 1] = standard_map_step(th[t], pp[t], K)
        return th, pp


def uniform_ensemble(n: int, region: Region = DEFAULT_REGION, seed: int = 0) -> ClassicalEnsemble:
    rng = np.random.default_rng(seed)
    u = rng.uniform(region.theta_min, region.theta_max, n)
    v = rng.uniform(region.p_min, region.p_max, n)
    return ClassicalEnsemble(TWO_PI * u, TWO_PI * v, seed)


@dataclass(frozen=True)
class LyapunovEstimate:
    exponent: float
    stderr: float
    chaotic: bool
    n_traj: int
    steps: int

    def __float__(self):
        return self.exponent


def lyapunov_exponent(K: float, n_traj: int = 100, T: int = 1000, seed: int = 0,
                      renorm_every: int = 10) -> LyapunovEstimate:
    """Largest Lyapunov exponent from the tangent map, averaged over trajectories.

    Initial points are uniform on the whole torus, tangent directions random.
    ``stderr`` is the standard error of the per-trajectory estimates.
    """
    if T < 1 or n_traj < 1:
        raise ValueError("need T >= 1 and n_traj >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, TWO_PI, n_traj)
    p = rng.uniform(-math.pi, math.pi, n_traj)
    ang = rng.uniform(0.0, TWO_PI, n_traj)
    dth, dp = np.cos(ang), np.sin(ang)
    log_growth = np.zeros(n_traj)
    for t in range(1, T + 1):
        dth, dp = tangent_step(theta, dth, dp, K)
        theta, p = standard_map_step(theta, p, K)
        if t % renorm_every == 0 or t == T:
            norm = np.hypot(dth, dp)
            log_growth += np.log(norm)
            dth /= norm
            dp /= norm
    per_traj = log_growth / T
    lam = float(np.mean(per_traj))
    err = float(np.std(per_traj, ddof=1) / math.sqrt(n_traj)) if n_traj > 1 else 0.0
    return LyapunovEstimate(lam, err, lam > CHAOS_THRESHOLD, n_traj, T)


def angular_correlation(ensemble: ClassicalEnsemble, gamma: float, K: float, T: int,
                        fit_window: tuple[float, float] | None = None) -> DecaySeries:
    """C(t) = |<exp(i gamma [theta(t) - theta(0)])>|^2 with the lifted angle."""
    n = len(ensemble)
    if n == 0:
        raise ValueError("empty ensemble")
    theta, p = ensemble.theta.copy(), ensemble.p.copy()
    lifted = np.zeros(n)
    values = np.empty(T + 1)
    stderr = np.empty(T + 1)
    values[0], stderr[0] = 1.0, 0.0
    for t in range(1, T + 1):
        theta, p = standard_map_step(theta, p, K)
        lifted += p
        values[t], stderr[t] = _squared_mean_modulus(np.exp(1j * gamma * lifted))
    series = DecaySeries(np.arange(T + 1, dtype=float), values, stderr, label=f"angular gamma={gamma:g}")
    return series.with_fit(fit_window) if fit_window is not None else series


def _squared_mean_modulus(z: np.ndarray) -> tuple[float, float]:
    """|mean z|^2 and a first-order standard error for it."""
    n = z.size
    m = complex(math.fsum(z.real) / n, math.fsum(z.imag) / n)
    if n < 2:
        return abs(m) ** 2, 0.0
    se = math.sqrt(float(np.var(z.real, ddof=1) + np.var(z.imag, ddof=1)) / n)
    return abs(m) ** 2, 2.0 * abs(m) * se + se * se
