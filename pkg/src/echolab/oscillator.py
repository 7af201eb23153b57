"""Driven quartic oscillator in the coherent-state plane.

Classical Hamiltonian H = omega0 |alpha|^2 + |alpha|^4 - (alpha* + alpha) g(t),
so that

    d alpha/dt = -i (omega0 + 2|alpha|^2) alpha + i g(t),

with action I = |alpha|^2 and phase integral phi(t) = int_0^t (omega0 + 2 I) dt.
The drive period is 1.  A kicked drive g0 * sum_m delta(t - m) is integrated
exactly (free rotation at constant I between kicks, alpha -> alpha + i g0 at
every integer time m >= 1); smooth drives use fixed-step RK4 on
(alpha, phi, int I).  Records are taken at integer times, after the kick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalValidityError, UnreliableDerivativeError
from .glauber import RadialWeight, gaussian_weight, ring_weight, thermal_weight
from .series import DecaySeries

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------- drives

@dataclass(frozen=True)
class KickedDrive:
    g0: float
    kind = "kicked"


@dataclass(frozen=True)
class HarmonicDrive:
    """g(t) = sum_j amplitudes[j] * cos(2 pi (j+1) t + phases[j])."""

    amplitudes: tuple[float, ...]
    phases: tuple[float, ...] = ()
    kind = "smooth"

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        phases = tuple(float(p) for p in self.phases) or (0.0,) * len(amps)
        if len(phases) != len(amps):
            raise ValueError("phases must match amplitudes")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", phases)

    def __call__(self, t):
        out = 0.0
        for j, (a, ph) in enumerate(zip(self.amplitudes, self.phases), start=1):
            out = out + a * np.cos(TWO_PI * j * t + ph)
        return out


@dataclass(frozen=True)
class PulseTrainDrive:
    """Unit-period train of Gaussian pulses of area g0 centred on integers m >= 1."""

    g0: float
    width: float = 0.01
    kind = "smooth"

    def __call__(self, t):
        m = np.maximum(np.rint(t), 1.0)
        return self.g0 * np.exp(-0.5 * ((t - m) / self.width) ** 2) / (math.sqrt(TWO_PI) * self.width)


@dataclass(frozen=True)
class OscParams:
    omega0: float
    drive: KickedDrive | HarmonicDrive | PulseTrainDrive = field(default_factory=lambda: KickedDrive(0.0))

    @property
    def kicked(self) -> bool:
        return self.drive.kind == "kicked"

    def with_drive(self, drive) -> "OscParams":
        return OscParams(self.omega0, drive)


# --------------------------------------------------------------------------- states

@dataclass(frozen=True)
class OscState:
    alpha: complex
    phase_integral: float = 0.0
    action_integral: float = 0.0
    t: float = 0.0

    @property
    def action(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def angle(self) -> float:
        # alpha = sqrt(I) exp(-i theta)
        return (-math.atan2(self.alpha.imag, self.alpha.real)) % TWO_PI


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Records at integer times (and at the final time); arrays are (times, ...)."""

    times: np.ndarray
    alpha: np.ndarray
    phase: np.ndarray
    action_integral: np.ndarray

    @property
    def action(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    def state(self, index: int = -1) -> OscState:
        if self.alpha.ndim != 1:
            raise ValueError("state() is only defined for single trajectories")
        return OscState(complex(self.alpha[index]), float(self.phase[index]),
                        float(self.action_integral[index]), float(self.times[index]))


def _record_times(t0: float, t1: float) -> list[float]:
    times = [t0]
    m = math.floor(t0 + 1e-12) + 1
    while m <= t1 + 1e-12:
        times.append(float(m))
        m += 1
    if t1 - times[-1] > 1e-12:
        times.append(t1)
    return times


def _evolve_kicked(alpha, phase, J, times, omega, g0):
    n_rec = len(times)
    A = np.empty((n_rec,) + alpha.shape, dtype=np.complex128)
    P = np.empty((n_rec,) + alpha.shape)
    Q = np.empty((n_rec,) + alpha.shape)
    A[0], P[0], Q[0] = alpha, phase, J
    for i in range(1, n_rec):
        s = times[i] - times[i - 1]
        I = alpha.real**2 + alpha.imag**2
        w = omega + 2.0 * I
        phase = phase + w * s
        J = J + I * s
        alpha = alpha * np.exp(-1j * w * s)
        if abs(times[i] - round(times[i])) < 1e-12:
            alpha = alpha + 1j * g0
        A[i], P[i], Q[i] = alpha, phase, J
    return A, P, Q


def _rk4_rhs(alpha, t, omega, drive):
    I = alpha.real**2 + alpha.imag**2
    return -1j * (omega + 2.0 * I) * alpha + 1j * drive(t), omega + 2.0 * I, I


def _evolve_smooth(alpha, phase, J, times, omega, drive, dt):
    n_rec = len(times)
    A = np.empty((n_rec,) + alpha.shape, dtype=np.complex128)
    P = np.empty((n_rec,) + alpha.shape)
    Q = np.empty((n_rec,) + alpha.shape)
    A[0], P[0], Q[0] = alpha, phase, J
    t = times[0]
    for i in range(1, n_rec):
        nsteps = max(1, int(math.ceil((times[i] - t) / dt - 1e-9)))
        h = (times[i] - t) / nsteps
        for _ in range(nsteps):
            a1, p1, q1 = _rk4_rhs(alpha, t, omega, drive)
            a2, p2, q2 = _rk4_rhs(alpha + 0.5 * h * a1, t + 0.5 * h, omega, drive)
            a3, p3, q3 = _rk4_rhs(alpha + 0.5 * h * a2, t + 0.5 * h, omega, drive)
            a4, p4, q4 = _rk4_rhs(alpha + h * a3, t + h, omega, drive)
            alpha = alpha + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
            phase = phase + h / 6.0 * (p1 + 2 * p2 + 2 * p3 + p4)
            J = J + h / 6.0 * (q1 + 2 * q2 + 2 * q3 + q4)
            t += h
        t = times[i]
        A[i], P[i], Q[i] = alpha, phase, J
    return A, P, Q


def evolve_ensemble(alpha0, params: OscParams, T: float, dt: float = 0.01, *,
                    t0: float = 0.0, phase0=0.0, action_integral0=0.0,
                    omega_shift=0.0) -> Trajectory:
    """Evolve an array of initial points from t0 to t0 + T.

    ``omega_shift`` (scalar or per-trajectory) is added to omega0, which is
    how the semiclassical samples get their frequency offset -2|delta|^2.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    alpha = np.asarray(alpha0, dtype=np.complex128)
    phase = np.broadcast_to(np.asarray(phase0, dtype=float), alpha.shape).copy()
    J = np.broadcast_to(np.asarray(action_integral0, dtype=float), alpha.shape).copy()
    omega = params.omega0 + np.asarray(omega_shift, dtype=float)
    times = _record_times(t0, t0 + T)
    if params.kicked:
        A, P, Q = _evolve_kicked(alpha, phase, J, times, omega, params.drive.g0)
    else:
        A, P, Q = _evolve_smooth(alpha, phase, J, times, omega, params.drive, dt)
    return Trajectory(np.asarray(times), A, P, Q)


def evolve_classical(state: OscState, params: OscParams, T: float, dt: float = 0.01) -> Trajectory:
    return evolve_ensemble(np.asarray(state.alpha), params, T, dt, t0=state.t,
                           phase0=state.phase_integral, action_integral0=state.action_integral)


# --------------------------------------------------------------------------- mixtures

@dataclass(frozen=True)
class CoherentMixture:
    """Isotropic mixture around ``center`` with a radial weight in |alpha - center|^2."""

    center: complex
    weight: RadialWeight
    n_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("mixture needs at least one sample")

    def sample(self) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(key=self.seed))
        n = self.n_samples
        if self.weight.family == "gaussian":
            s = math.sqrt(self.weight.params["width"] / 2.0)
            return self.center + s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        radius2 = _sample_radial(self.weight, rng, n)
        angle = rng.uniform(0.0, TWO_PI, n)
        return self.center + np.sqrt(radius2) * np.exp(1j * angle)


def _sample_radial(weight: RadialWeight, rng, n: int) -> np.ndarray:
    if weight.family == "ring":
        I0, w = weight.params["I0"], weight.params["width"]
        out = rng.normal(I0, w, n)
        bad = out < 0
        while np.any(bad):
            out[bad] = rng.normal(I0, w, int(bad.sum()))
            bad = out < 0
        return out
    # inverse CDF of the piecewise-linear tabulated density
    g, v = weight.grid, weight.values
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(g))])
    u = rng.uniform(0.0, cdf[-1], n)
    k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, g.size - 2)
    h = g[k + 1] - g[k]
    slope = (v[k + 1] - v[k]) / h
    r = u - cdf[k]
    # solve v_k x + slope x^2 / 2 = r on the panel
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = np.where(
            np.abs(slope) > 1e-300,
            (-v[k] + np.sqrt(np.maximum(v[k] ** 2 + 2.0 * slope * r, 0.0))) / slope,
            r / np.where(v[k] > 0, v[k], 1.0),
        )
    return g[k] + np.clip(quad, 0.0, h)


def gaussian_mixture(center: complex, width: float, n_samples: int = 10_000, seed: int = 0) -> CoherentMixture:
    """Density (1/(pi*width)) exp(-|alpha - center|^2 / width)."""
    return CoherentMixture(complex(center), gaussian_weight(width), n_samples, seed)


def ring_mixture(center: complex, I0: float, width: float, n_samples: int = 10_000, seed: int = 0) -> CoherentMixture:
    return CoherentMixture(complex(center), ring_weight(I0, width), n_samples, seed)


def thermal_mixture(T_temp: float, omega0: float, hbar: float, n_samples: int = 10_000, seed: int = 0,
                    anharmonic: bool = True) -> CoherentMixture:
    return CoherentMixture(0j, thermal_weight(T_temp, omega0, hbar, anharmonic), n_samples, seed)


# --------------------------------------------------------------------------- statistics

def _mean_modulus_squared(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|<z>|^2 over the last axis with a first-order standard error."""
    n = z.shape[-1]
    m = z.mean(axis=-1)
    if n < 2:
        return np.abs(m) ** 2, np.zeros(m.shape)
    se = np.sqrt((z.real.var(axis=-1, ddof=1) + z.imag.var(axis=-1, ddof=1)) / n)
    return np.abs(m) ** 2, 2.0 * np.abs(m) * se + se**2


def _phase_decay(phase: np.ndarray, times, factor: float, label: str,
                 fit_window=None) -> DecaySeries:
    values, err = _mean_modulus_squared(np.exp(1j * factor * phase))
    series = DecaySeries(np.asarray(times, float), values, err, label=label)
    return series.with_fit(fit_window) if fit_window is not None else series


def mixture_trajectories(mixture: CoherentMixture, params: OscParams, T: float, dt: float = 0.01) -> Trajectory:
    return evolve_ensemble(mixture.sample(), params, T, dt)


def phase_autocorrelation(mixture: CoherentMixture, params: OscParams, T: float, dt: float = 0.01,
                          fit_window=None, trajectories: Trajectory | None = None) -> DecaySeries:
    """|<exp(i [phi(t) - phi(0)])>|^2 over the mixture (phi(0) = 0 by construction)."""
    traj = trajectories or mixture_trajectories(mixture, params, T, dt)
    return _phase_decay(traj.phase, traj.times, 1.0, "phase autocorrelation", fit_window)


def classical_mixed_fidelity(mixture: CoherentMixture, sigma: float, params: OscParams, T: float,
                             dt: float = 0.01, fit_window=None,
                             trajectories: Trajectory | None = None) -> DecaySeries:
    """|<exp(i sigma/2 [phi(t) - phi(0)])>|^2: the purely classical estimate of the mixed fidelity."""
    traj = trajectories or mixture_trajectories(mixture, params, T, dt)
    return _phase_decay(traj.phase, traj.times, 0.5 * sigma, f"classical mixed fidelity sigma={sigma:g}",
                        fit_window)


@dataclass(frozen=True)
class DiffusionFit:
    D: float
    intercept: float
    residual: float  # RMS deviation from the line / total fitted growth


def mean_action_diffusion(mixture: CoherentMixture, params: OscParams, T: float, dt: float = 0.01,
                          trajectories: Trajectory | None = None) -> DiffusionFit:
    """Linear fit <I(t)> = intercept + D t over the recorded times."""
    traj = trajectories or mixture_trajectories(mixture, params, T, dt)
    mean_I = traj.action.mean(axis=1)
    t = traj.times
    D, intercept = np.polyfit(t, mean_I, 1)
    rms = float(np.sqrt(np.mean((mean_I - (intercept + D * t)) ** 2)))
    growth = abs(D) * (t[-1] - t[0])
    return DiffusionFit(float(D), float(intercept), rms / growth if growth > 0 else math.inf)


def chi2_from_action_integrals(action_integral: np.ndarray) -> np.ndarray:
    """Variance over the ensemble (last axis) of int_0^t I dt, per recorded time."""
    return np.var(action_integral, axis=-1)


def chi2_from_action_histories(actions: np.ndarray, dt: float) -> np.ndarray:
    """chi_2(t) on a uniform time grid from sampled action histories, shape (times, n)."""
    from scipy.integrate import cumulative_trapezoid

    integ = cumulative_trapezoid(actions, dx=dt, axis=0, initial=0.0)
    return chi2_from_action_integrals(integ)


def chi2_series(mixture: CoherentMixture, params: OscParams, T: float, dt: float = 0.01,
                trajectories: Trajectory | None = None) -> DecaySeries:
    traj = trajectories or mixture_trajectories(mixture, params, T, dt)
    return DecaySeries(traj.times, chi2_from_action_integrals(traj.action_integral), label="chi2")


def chi2_cumulant(mixture: CoherentMixture, params: OscParams, t: float, dt: float = 0.01) -> float:
    """Second cumulant chi_2(t) = Var(int_0^t I dt) over the mixture."""
    if t == 0:
        return 0.0
    traj = mixture_trajectories(mixture, params, t, dt)
    return float(chi2_from_action_integrals(traj.action_integral[-1]))


def action_correlation_constant(times, chi2, window: tuple[float, float]) -> float:
    """K = <(dI)^2> tau_I from the long-time slope of chi_2(t) = 2 K t."""
    t = np.asarray(times, float)
    c = np.asarray(chi2, float)
    mask = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if mask.sum() < 2:
        raise ValueError("slope window needs at least two points")
    slope = np.polyfit(t[mask], c[mask], 1)[0]
    return 0.5 * float(slope)


def fgr_fidelity(sigma: float, K_action: float, T: float, times=None) -> DecaySeries:
    """exp(-2 sigma^2 K t) on integer times 0..T (or on ``times``)."""
    t = np.arange(int(math.floor(T)) + 1, dtype=float) if times is None else np.asarray(times, float)
    return DecaySeries(t, np.exp(-2.0 * sigma**2 * K_action * t), label=f"FGR sigma={sigma:g}")


# --------------------------------------------------------------------------- semiclassical IVR

@dataclass(frozen=True)
class QuantumCellSampler:
    """Draws delta from (2/(pi hbar)) exp(-2|delta|^2/hbar): variance hbar/4 per component.

    ``enabled=False`` (or hbar == 0) switches the quantum fluctuations off: every delta is 0.
    """

    hbar: float
    n_samples: int = 4096
    seed: int = 0
    enabled: bool = True

    def sample(self) -> np.ndarray:
        if not self.enabled or self.hbar == 0.0:
            return np.zeros(self.n_samples, dtype=np.complex128)
        rng = np.random.Generator(np.random.Philox(key=self.seed))
        s = math.sqrt(self.hbar / 4.0)
        return s * (rng.standard_normal(self.n_samples) + 1j * rng.standard_normal(self.n_samples))


@dataclass(frozen=True, eq=False)
class AmplitudeEstimate:
    times: np.ndarray
    amplitude: np.ndarray
    stderr: np.ndarray

    @property
    def fidelity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2


def ivr_fidelity_amplitude(alpha0: complex, sigma: float, sampler: QuantumCellSampler, params: OscParams,
                           T: float, dt: float = 0.01) -> AmplitudeEstimate:
    """Semiclassical fidelity amplitude of a coherent state, averaged over its quantum cell.

    Each sample delta launches a trajectory from alpha0 + delta with linear
    frequency omega0 - 2|delta|^2; the amplitude is <exp(i sigma/2 phi~(t))>.
    """
    delta = sampler.sample()
    traj = evolve_ensemble(alpha0 + delta, params, T, dt, omega_shift=-2.0 * np.abs(delta) ** 2)
    z = np.exp(0.5j * sigma * traj.phase)
    amp = z.mean(axis=1)
    n = z.shape[1]
    if n > 1:
        err = np.sqrt((z.real.var(axis=1, ddof=1) + z.imag.var(axis=1, ddof=1)) / n)
    else:
        err = np.zeros(amp.shape)
    return AmplitudeEstimate(traj.times, amp, err)


def _phase_at(alpha0: complex, omega0: float, params: OscParams, t: float, dt: float) -> float:
    p = OscParams(omega0, params.drive)
    return float(evolve_ensemble(np.asarray(alpha0), p, t, dt).phase[-1])


@dataclass(frozen=True)
class PhaseDerivatives:
    dphi_dalpha: complex  # (d/dx - i d/dy)/2 with alpha = x + i y
    dphi_domega0: float

    @property
    def abs_dphi_dalpha(self) -> float:
        return abs(self.dphi_dalpha)


def _central(f, x0: float, h: float) -> float:
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h)


def _checked_derivative(f, x0: float, h: float, rel_tol: float) -> float:
    d1 = _central(f, x0, h)
    d2 = _central(f, x0, 2.0 * h)
    richardson = (4.0 * d1 - d2) / 3.0
    scale = max(abs(richardson), 1e-300)
    if abs(d1 - d2) > rel_tol * scale and abs(d1 - d2) > 1e-10:
        raise UnreliableDerivativeError(
            f"finite differences disagree: h -> {d1:.6e}, 2h -> {d2:.6e}"
        )
    return richardson


def phase_derivatives(alpha0: complex, params: OscParams, t: float, dt: float = 0.01,
                      rel_step: float = 1e-6, rel_tol: float = 0.1) -> PhaseDerivatives:
    """dphi(t)/d alpha0 and dphi(t)/d omega0 by Richardson-checked central differences."""
    alpha0 = complex(alpha0)
    h_a = rel_step * max(1.0, abs(alpha0))
    h_w = rel_step * max(1.0, abs(params.omega0))
    w0 = params.omega0
    dx = _checked_derivative(lambda x: _phase_at(complex(x, alpha0.imag), w0, params, t, dt), alpha0.real, h_a, rel_tol)
    dy = _checked_derivative(lambda y: _phase_at(complex(alpha0.real, y), w0, params, t, dt), alpha0.imag, h_a, rel_tol)
    dw = _checked_derivative(lambda w: _phase_at(alpha0, w, params, t, dt), w0, h_w, rel_tol)
    return PhaseDerivatives(0.5 * complex(dx, -dy), dw)


def early_time_decay_exponent(alpha0: complex, epsilon: float, hbar: float, params: OscParams, t: float,
                              dt: float = 0.01, derivatives: PhaseDerivatives | None = None) -> float:
    """-ln F for the short-time Gaussian-expansion fidelity of a coherent state."""
    if epsilon == 0.0 or t == 0.0:
        return 0.0
    d = derivatives or phase_derivatives(alpha0, params, t, dt)
    a = (0.5 * epsilon * d.dphi_domega0) ** 2
    b = epsilon**2 / (4.0 * hbar) * d.abs_dphi_dalpha**2
    return math.log1p(a) + b / (1.0 + a)


def early_time_fidelity(alpha0: complex, epsilon: float, hbar: float, params: OscParams, t: float,
                        dt: float = 0.01) -> float:
    return math.exp(-early_time_decay_exponent(alpha0, epsilon, hbar, params, t, dt))


# --------------------------------------------------------------------------- chaos diagnostics

def stretching_rate(alpha0, params: OscParams, T: int, seed: int = 0, dt: float = 0.01,
                    separation: float = 1e-8) -> np.ndarray:
    """Finite-time stretching rate per trajectory over T periods.

    Kicked drives use the exact tangent map; smooth drives use a twin
    trajectory renormalized to ``separation`` after every period.
    """
    alpha = np.atleast_1d(np.asarray(alpha0, dtype=np.complex128)).copy()
    rng = np.random.Generator(np.random.Philox(key=seed))
    z = np.exp(1j * rng.uniform(0.0, TWO_PI, alpha.shape))
    logs = np.zeros(alpha.shape)
    if params.kicked:
        g0 = params.drive.g0
        for _ in range(T):
            I = alpha.real**2 + alpha.imag**2
            w = params.omega0 + 2.0 * I
            dw = 4.0 * (alpha.real * z.real + alpha.imag * z.imag)
            rot = np.exp(-1j * w)
            z = rot * (z - 1j * alpha * dw)
            alpha = alpha * rot + 1j * g0
            nz = np.abs(z)
            logs += np.log(nz)
            z /= nz
    else:
        twin = alpha + separation * z
        t = 0.0
        for _ in range(T):
            a = evolve_ensemble(alpha, params, 1.0, dt, t0=t).alpha[-1]
            b = evolve_ensemble(twin, params, 1.0, dt, t0=t).alpha[-1]
            d = np.abs(b - a)
            logs += np.log(d / separation)
            alpha, twin = a, a + (b - a) * (separation / d)
            t += 1.0
    return logs / T


def find_chaos_threshold(center: complex, omega0: float, g_values, T: int = 200, threshold: float = 0.1,
                         n: int = 64, spread: float = 0.1, seed: int = 0) -> float:
    """Smallest kick strength whose mean finite-time stretching rate exceeds ``threshold``.

    Integrable shear alone gives rates ~ ln(T)/T, hence the default threshold of 0.1 at T=200.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    pts = center + spread * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for g0 in sorted(g_values):
        rate = float(np.mean(stretching_rate(pts, OscParams(omega0, KickedDrive(g0)), T, seed)))
        if rate > threshold:
            return float(g0)
    raise NumericalValidityError("no drive strength in the scanned range is chaotic")


def early_time_exponents(alpha0: complex, epsilon: float, hbar: float, params: OscParams, times,
                         dt: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """(-ln F, |dphi/dalpha|) at each requested time; convenient for superexponential fits."""
    expo, grad = [], []
    for t in times:
        d = phase_derivatives(alpha0, params, float(t), dt)
        expo.append(early_time_decay_exponent(alpha0, epsilon, hbar, params, float(t), dt, derivatives=d))
        grad.append(d.abs_dphi_dalpha)
    return np.asarray(expo), np.asarray(grad)


def fgr_deviation(measured: DecaySeries, predicted: DecaySeries, down_to: float = 0.1) -> float:
    """Largest |measured/predicted - 1| over the times where the measured fidelity is >= ``down_to``."""
    m = measured.values
    p = np.interp(measured.times, predicted.times, predicted.values)
    mask = m >= down_to
    with np.errstate(divide="ignore"):
        rel = np.abs(m[mask] / p[mask] - 1.0)
    return float(rel.max()) if rel.size else math.nan
