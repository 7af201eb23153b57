"""Glauber diagonal mixtures and their number-basis populations.

A radially symmetric P-function centred at the origin is described by its
density in the action I = |alpha|^2.  The area element d^2 alpha = pi dI is
absorbed: ``RadialWeight.radial(I)`` returns pi*P(I), which integrates to
one over [0, inf).  Populations follow from the Poisson transform

    rho_n = int_0^inf dI radial(I) exp(-I/hbar) (I/hbar)^n / n!
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .errors import NumericalValidityError, TruncationError

TAIL_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class RadialWeight:
    """Radial weight family.

    family = "gaussian": radial(I) = exp(-I/width)/width   (params: width)
    family = "ring":     Gaussian in I around I0, truncated at 0 (params: I0, width)
    family = "tabulated": piecewise-linear radial(I) on ``grid``, zero beyond it
    """

    family: str
    params: dict = field(default_factory=dict)
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.family == "gaussian":
            if self.params["width"] <= 0:
                raise ValueError("gaussian width must be positive")
        elif self.family == "ring":
            if self.params["width"] <= 0 or self.params["I0"] < 0:
                raise ValueError("ring needs I0 >= 0 and width > 0")
        elif self.family == "tabulated":
            g = np.asarray(self.grid, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if g.ndim != 1 or g.shape != v.shape or g.size < 2 or np.any(np.diff(g) <= 0) or g[0] < 0:
                raise ValueError("tabulated weight needs an increasing non-negative grid matching values")
            if np.any(v < 0):
                raise ValueError("radial weight must be non-negative")
            total = float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(g)))
            if total <= 0:
                raise ValueError("tabulated weight integrates to zero")
            object.__setattr__(self, "grid", g)
            object.__setattr__(self, "values", v / total)
        else:
            raise ValueError(f"unknown weight family {self.family!r}")

    def radial(self, I):
        I = np.asarray(I, dtype=float)
        if self.family == "gaussian":
            w = self.params["width"]
            return np.where(I >= 0, np.exp(-I / w) / w, 0.0)
        if self.family == "ring":
            I0, w = self.params["I0"], self.params["width"]
            norm = w * math.sqrt(math.pi / 2) * (1.0 + math.erf(I0 / (math.sqrt(2) * w)))
            return np.where(I >= 0, np.exp(-0.5 * ((I - I0) / w) ** 2) / norm, 0.0)
        return np.interp(I, self.grid, self.values, left=0.0, right=0.0)

    def density(self, I):
        """The P-function itself, normalized as int d^2 alpha P = 1."""
        return self.radial(I) / math.pi

    def support(self) -> tuple[float, float]:
        """Interval outside which the radial density is below ~1e-16 of its scale."""
        if self.family == "gaussian":
            return 0.0, 25.0 * self.params["width"]
        if self.family == "ring":
            I0, w = self.params["I0"], self.params["width"]
            return max(0.0, I0 - 9.0 * w), I0 + 9.0 * w
        return float(self.grid[0]), float(self.grid[-1])

    def breakpoints(self) -> list[float]:
        lo, hi = self.support()
        if self.family == "gaussian":
            w = self.params["width"]
            pts = [0.0, w, 4 * w, 10 * w, hi]
        elif self.family == "ring":
            I0, w = self.params["I0"], self.params["width"]
            pts = [lo] + [I0 + k * w for k in (-3, -1, 0, 1, 3)] + [hi]
        else:
            pts = list(self.grid)
        return sorted({min(max(p, lo), hi) for p in pts})

    def mean_action(self) -> float:
        if self.family == "gaussian":
            return self.params["width"]
        pts = self.breakpoints()
        return math.fsum(
            integrate.quad(lambda x: x * float(self.radial(x)), a, b, limit=200)[0]
            for a, b in zip(pts[:-1], pts[1:])
        )

    def normalization(self) -> float:
        """int radial dI under the module's quadrature (should be 1)."""
        if self.family == "tabulated":
            g, v = self.grid, self.values
            return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(g)))
        pts = self.breakpoints()
        return math.fsum(
            integrate.quad(lambda x: float(self.radial(x)), a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
            for a, b in zip(pts[:-1], pts[1:])
        )


def gaussian_weight(width: float) -> RadialWeight:
    return RadialWeight("gaussian", {"width": float(width)})


def ring_weight(I0: float, width: float) -> RadialWeight:
    return RadialWeight("ring", {"I0": float(I0), "width": float(width)})


def tabulated_weight(grid, values) -> RadialWeight:
    return RadialWeight("tabulated", {}, np.asarray(grid, float), np.asarray(values, float))


def _log_poisson(n, x):
    return special.xlogy(n, x) - x - special.gammaln(n + 1.0)


def default_n_max(weight: RadialWeight, hbar: float) -> int:
    x = weight.support()[1] / hbar
    return int(math.ceil(x + 6.0 * math.sqrt(x) + 10.0))


def _hat_populations(grid: np.ndarray, hbar: float, n: np.ndarray) -> np.ndarray:
    """Populations of each unit hat function on ``grid``; shape (len(n), len(grid)).

    Exact: on a panel the hat is linear in x = I/hbar and
    int x^n e^{-x}/n! dx, int x^{n+1} e^{-x}/n! dx are regularized gamma differences.
    """
    x = grid / hbar
    n = n[:, None].astype(float)
    P0 = special.gammainc(n + 1.0, x[None, :])
    P1 = special.gammainc(n + 2.0, x[None, :]) * (n + 1.0)
    d0 = np.diff(P0, axis=1)  # int_{x_i}^{x_{i+1}} x^n e^-x / n!
    d1 = np.diff(P1, axis=1)  # int x^{n+1} e^-x / n!
    xl, xr = x[:-1][None, :], x[1:][None, :]
    h = xr - xl
    # rising hat on panel i belongs to node i+1, falling hat to node i; dI = hbar dx
    rising = (d1 - xl * d0) / h * hbar
    falling = (xr * d0 - d1) / h * hbar
    out = np.zeros((n.shape[0], grid.size))
    out[:, 1:] += rising
    out[:, :-1] += falling
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _panel_rule(pts, hbar: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [pts[0], pts[-1]].

    Panels never straddle a breakpoint and are no wider than the local width
    sqrt(hbar*I) of the Poisson kernel peaked near I, so every integrand
    exp(-x) x^n / n! times a smooth weight is resolved on each panel.
    """
    nodes, weights = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        left = a
        while left < b:
            h = min(b - left, math.sqrt(hbar * max(left, hbar)))
            nodes.append(left + 0.5 * h * (_GL_X + 1.0))
            weights.append(0.5 * h * _GL_W)
            left += h
    return np.concatenate(nodes), np.concatenate(weights)


def populations_from_weight(weight: RadialWeight, hbar: float, n_max: int | None = None,
                            tail_tolerance: float = TAIL_TOLERANCE) -> np.ndarray:
    """rho_n for n = 0..n_max; raises TruncationError when the tail is too large."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if n_max is None:
        n_max = default_n_max(weight, hbar)
    ns = np.arange(n_max + 1)
    if weight.family == "tabulated":
        rho = _hat_populations(weight.grid, hbar, ns) @ weight.values
    else:
        nodes, wts = _panel_rule(weight.breakpoints(), hbar)
        wr = wts * weight.radial(nodes)
        x = nodes / hbar
        rho = np.empty(n_max + 1)
        for lo in range(0, n_max + 1, 256):
            block = ns[lo:lo + 256, None].astype(float)
            rho[lo:lo + 256] = np.exp(_log_poisson(block, x[None, :])) @ wr
    negative = rho < 0
    if np.any(rho < -1e-14):
        raise NumericalValidityError(f"negative population {rho.min():.3e} beyond quadrature noise")
    rho[negative] = 0.0
    tail = 1.0 - math.fsum(rho)
    if tail > tail_tolerance:
        raise TruncationError(
            f"population tail {tail:.3e} exceeds {tail_tolerance:g} at n_max={n_max}",
            suggested_n_max=max(2 * n_max, default_n_max(weight, hbar)),
        )
    return rho


def thermal_energies(n, omega0: float, hbar: float, anharmonic: bool = True):
    n = np.asarray(n, dtype=float)
    return hbar * omega0 * n + (hbar**2 * n**2 if anharmonic else 0.0)


def thermal_populations(T_temp: float, omega0: float, hbar: float, anharmonic: bool = True,
                        cutoff: float = 1e-16) -> np.ndarray:
    """Normalized exp(-E_n/T) for E_n = hbar*omega0*n + hbar^2*n^2, truncated below ``cutoff``."""
    if T_temp <= 0:
        raise ValueError("temperature must be positive")
    n = np.arange(1 << 20)
    step = 64
    n_top = step
    while True:
        e = thermal_energies(n[:n_top], omega0, hbar, anharmonic) / T_temp
        if e[-1] - e[0] > -math.log(cutoff) + 5 or n_top >= n.size:
            break
        n_top *= 2
    w = np.exp(-(e - e[0]))
    keep = w > cutoff * w[0]
    w = w[: int(np.nonzero(keep)[0][-1]) + 1]
    return w / math.fsum(w)


@dataclass(frozen=True)
class ThermalMatch:
    weight: RadialWeight
    target: np.ndarray
    achieved: np.ndarray
    max_relative_error: float


def thermal_weight(T_temp: float, omega0: float, hbar: float, anharmonic: bool = True,
                   nodes: int = 400, rel_tol: float = 1e-4, floor: float = 1e-6) -> RadialWeight:
    """Tabulated P >= 0 whose populations match the (anharmonic) thermal state.

    Built by non-negative least squares on a grid of hat functions; the
    fit is relative for populations above ``floor``.  In the harmonic limit
    the exact answer is known (a Gaussian P with mean action hbar*nbar) and
    is returned directly.  Raises
    NumericalValidityError if no non-negative P matches within ``rel_tol``
    (thermal states of strongly anharmonic spectra need not be P-representable).
    """
    if not anharmonic:
        if T_temp <= 0:
            raise ValueError("temperature must be positive")
        nbar = 1.0 / math.expm1(hbar * omega0 / T_temp)
        return gaussian_weight(hbar * nbar)
    return match_thermal(T_temp, omega0, hbar, anharmonic, nodes, rel_tol, floor).weight


def match_thermal(T_temp, omega0, hbar, anharmonic=True, nodes=400, rel_tol=1e-4, floor=1e-6) -> ThermalMatch:
    target = thermal_populations(T_temp, omega0, hbar, anharmonic)
    n_top = target.size - 1
    if n_top == 0:
        # only the ground state survives the cutoff: a vanishing-width Gaussian P
        weight = gaussian_weight(hbar * 1e-12)
        achieved = populations_from_weight(weight, hbar)
        return ThermalMatch(weight, target, achieved[:1], float(abs(achieved[0] - 1.0)))
    x_hi = n_top + 12.0 * math.sqrt(n_top) + 20.0
    # dense near the origin, where low populations are decided
    grid = hbar * np.concatenate([[0.0], np.geomspace(1e-3, x_hi, nodes - 1)])
    n_fit = np.arange(int(x_hi + 12 * math.sqrt(x_hi) + 20))
    A = _hat_populations(grid, hbar, n_fit)
    b = np.zeros(n_fit.size)
    b[: target.size] = target
    scale = 1.0 / np.maximum(b, floor)
    norm_row = np.concatenate([0.5 * (np.diff(grid)), [0.0]]) + np.concatenate([[0.0], 0.5 * np.diff(grid)])
    M = np.vstack([A * scale[:, None], 1e4 * norm_row[None, :]])
    rhs = np.concatenate([b * scale, [1e4]])
    try:
        q, _ = optimize.nnls(M, rhs, maxiter=50 * grid.size)
    except RuntimeError as exc:
        raise NumericalValidityError(f"thermal P-function match did not converge: {exc}") from exc
    weight = tabulated_weight(grid, q)
    achieved = populations_from_weight(weight, hbar, n_max=n_fit[-1], tail_tolerance=1e-6)
    mask = target > floor
    rel = np.abs(achieved[: target.size][mask] - target[mask]) / target[mask]
    err = float(rel.max())
    if err > rel_tol:
        raise NumericalValidityError(
            f"thermal P-function match failed: max relative population error {err:.2e} > {rel_tol:g}"
        )
    return ThermalMatch(weight, target, achieved, err)
