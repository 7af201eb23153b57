"""Time series of decaying quantities and exponential-rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import FitDomainError, InsufficientDataError


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of -ln(value) = rate*t + offset.

    ``residual`` is the RMS deviation of ln(value) from the fitted line,
    divided by the total log-decay spanned by the line across the window
    (falls back to the bare RMS when the line is flat).
    """

    rate: float
    offset: float
    rate_stderr: float
    residual: float
    window: tuple[float, float]
    npoints: int


def fit_decay_rate(times, values, window: tuple[float, float] | None = None) -> DecayFit:
    """Fit an exponential decay rate to ``values`` over ``window`` (inclusive)."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is None:
        window = (float(t[0]), float(t[-1]))
    t_min, t_max = window
    mask = (t >= t_min - 1e-12) & (t <= t_max + 1e-12)
    tw, yw = t[mask], y[mask]
    if tw.size < 3:
        raise InsufficientDataError(
            f"fit window [{t_min}, {t_max}] holds {tw.size} points, need at least 3"
        )
    if np.any(~np.isfinite(yw)) or np.any(yw <= 0.0):
        raise FitDomainError(f"non-positive or non-finite values inside fit window [{t_min}, {t_max}]")
    z = -np.log(yw)
    A = np.column_stack([tw, np.ones_like(tw)])
    coef, *_ = np.linalg.lstsq(A, z, rcond=None)
    rate, offset = float(coef[0]), float(coef[1])
    resid = z - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    dof = tw.size - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        sxx = float(np.sum((tw - tw.mean()) ** 2))
        rate_stderr = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    else:
        rate_stderr = 0.0
    span = abs(rate) * (tw[-1] - tw[0])
    residual = float(rms / span) if span > 1e-12 else rms
    return DecayFit(rate, offset, rate_stderr, residual, (float(t_min), float(t_max)), int(tw.size))


@dataclass(frozen=True, eq=False)
class DecaySeries:
    """Time-indexed decay curve with an optional attached exponential fit."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    fit: DecayFit | None = None
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            e = np.asarray(self.stderr, dtype=float)
            if e.shape != v.shape:
                raise ValueError("stderr must match values")
            object.__setattr__(self, "stderr", e)

    def __len__(self):
        return self.values.size

    @property
    def fitted_rate(self) -> float | None:
        return None if self.fit is None else self.fit.rate

    @property
    def fit_window(self):
        return None if self.fit is None else self.fit.window

    @property
    def fit_residual(self):
        return None if self.fit is None else self.fit.residual

    def with_fit(self, window: tuple[float, float]) -> "DecaySeries":
        return replace(self, fit=fit_decay_rate(self.times, self.values, window))

    def plateau(self, last: int = 10) -> float:
        """Mean of the final ``last`` values (long-time saturation estimate)."""
        return float(np.mean(self.values[-last:]))


def floor_limited_window(times, values, floor: float, start: float = 1.0, factor: float = 10.0,
                         span: float | None = None) -> tuple[float, float]:
    """Fit window ending at the last time before ``values`` first drops within ``factor`` of ``floor``.

    ``floor`` is the saturation or statistical level (1/N, 1/(NM), 1/n_samples ...).
    With ``span`` the window is [t_end - span, t_end], otherwise [start, t_end].
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    below = np.nonzero((t >= start) & (y < factor * floor))[0]
    end_idx = (below[0] - 1) if below.size else t.size - 1
    t_end = float(t[end_idx])
    t_start = max(float(t[0]), t_end - span) if span is not None else float(start)
    if t_end - t_start < 2.0 - 1e-12:
        raise InsufficientDataError(
            f"series reaches the floor {floor:.3g} too early for a fit (t_end={t_end:g})"
        )
    return (t_start, t_end)


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares fit of ln(value) = slope*t + intercept; ``residual`` normalized as in DecayFit."""

    slope: float
    intercept: float
    residual: float
    window: tuple[float, float]


def fit_log_growth(times, values, window: tuple[float, float] | None = None) -> GrowthFit:
    """Exponential-growth fit; the mirror image of :func:`fit_decay_rate`."""
    f = fit_decay_rate(times, values, window)
    return GrowthFit(-f.rate, -f.offset, f.residual, f.window)
