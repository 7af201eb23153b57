import math

import numpy as np
import pytest

import oracles
from echolab.errors import UnreliableDerivativeError
from echolab.glauber import match_thermal
from echolab.oscillator import (
    CoherentMixture,
    HarmonicDrive,
    KickedDrive,
    OscParams,
    OscState,
    PulseTrainDrive,
    QuantumCellSampler,
    chi2_cumulant,
    chi2_from_action_histories,
    chi2_series,
    classical_mixed_fidelity,
    early_time_exponents,
    early_time_fidelity,
    evolve_classical,
    fgr_fidelity,
    find_chaos_threshold,
    gaussian_mixture,
    ivr_fidelity_amplitude,
    mean_action_diffusion,
    phase_autocorrelation,
    phase_derivatives,
    ring_mixture,
    stretching_rate,
)
from echolab.series import fit_log_growth, floor_limited_window

FREE = OscParams(1.0, KickedDrive(0.0))
CHAOTIC = OscParams(1.0, KickedDrive(1.0))


# ------------------------------------------------------------------ classical evolution

def test_free_rotation_exact():
    tr = evolve_classical(OscState(1 + 0j), FREE, 6)
    assert np.allclose(tr.action, 1.0, atol=1e-15)
    assert np.allclose(tr.phase, 3.0 * tr.times, atol=1e-13)
    assert np.allclose(tr.action_integral, tr.times, atol=1e-13)


def test_first_kick_from_rest():
    tr = evolve_classical(OscState(0j), OscParams(1.0, KickedDrive(0.5)), 1)
    assert tr.alpha[1] == pytest.approx(0.5j)
    assert tr.action[1] == pytest.approx(0.25)


def test_action_constant_between_kicks():
    tr = evolve_classical(OscState(0.7 - 0.4j, t=3.0), CHAOTIC, 0.9)
    assert tr.times[-1] == pytest.approx(3.9)
    assert tr.action[-1] == pytest.approx(tr.action[0], rel=4 * np.finfo(float).eps)


def test_phase_additivity_piecewise():
    start = OscState(0.8 + 0.3j)
    whole = evolve_classical(start, CHAOTIC, 7.3)
    first = evolve_classical(start, CHAOTIC, 3.1)
    second = evolve_classical(first.state(), CHAOTIC, 4.2)
    assert second.phase[-1] == pytest.approx(whole.phase[-1], abs=1e-12)
    assert second.action_integral[-1] == pytest.approx(whole.action_integral[-1], abs=1e-12)
    # alpha itself carries rounding amplified by the chaotic kicks
    assert second.alpha[-1] == pytest.approx(whole.alpha[-1], abs=1e-10)


def test_bad_dt():
    with pytest.raises(ValueError):
        evolve_classical(OscState(1 + 0j), OscParams(1.0, HarmonicDrive((0.1,))), 1.0, dt=0.0)


def test_smooth_drive_without_force_matches_exact_rotation():
    tr = evolve_classical(OscState(1 + 0.5j), OscParams(1.0, HarmonicDrive((0.0,))), 5.0, dt=0.01)
    ref = evolve_classical(OscState(1 + 0.5j), FREE, 5.0)
    assert np.allclose(tr.alpha, ref.alpha, atol=1e-8)
    assert np.allclose(tr.phase, ref.phase, atol=1e-8)


def test_pulse_train_converges_to_kicks():
    # smoothed kicks approach the impulsive map linearly in the pulse width
    kicked = evolve_classical(OscState(0j), OscParams(1.0, KickedDrive(0.5)), 10.5).action[-1]
    errors = []
    for width in (0.01, 0.003, 0.001):
        smooth = evolve_classical(OscState(0j), OscParams(1.0, PulseTrainDrive(0.5, width)), 10.5,
                                  dt=width / 10).action[-1]
        errors.append(abs(smooth / kicked - 1))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.01


# ------------------------------------------------------------------ mixtures

def test_gaussian_mixture_moments():
    m = gaussian_mixture(1 + 1j, 0.2, 200_000, seed=3)
    d = m.sample() - m.center
    assert np.mean(np.abs(d) ** 2) == pytest.approx(0.2, rel=0.01)
    assert abs(np.mean(d)) < 0.01


def test_ring_and_thermal_sampling_mean_action():
    ring = ring_mixture(0j, 2.0, 0.1, 100_000)
    assert np.mean(np.abs(ring.sample()) ** 2) == pytest.approx(2.0, rel=0.01)
    weight = match_thermal(1.0, 1.0, 0.1).weight
    thermal = CoherentMixture(0j, weight, 100_000, 0)
    assert np.mean(np.abs(thermal.sample()) ** 2) == pytest.approx(weight.mean_action(), rel=0.02)


def test_sampling_is_seeded():
    a = gaussian_mixture(0j, 0.1, 10, seed=5).sample()
    b = gaussian_mixture(0j, 0.1, 10, seed=5).sample()
    assert np.array_equal(a, b)


# ------------------------------------------------------------------ correlations

def test_phase_autocorrelation_free_radial_oracle():
    width, n = 0.1, 200_000
    c = phase_autocorrelation(gaussian_mixture(0j, width, n, seed=1), FREE, 6)
    assert c.values[0] == pytest.approx(1.0)
    for t in range(1, 7):
        want = oracles.radial_phase_correlation(width, 1.0, t)
        assert want == pytest.approx(1.0 / (1.0 + 4 * width**2 * t**2), abs=1e-6)
        assert abs(c.values[t] - want) < 4 * c.stderr[t]


def test_single_sample_mixture_has_unit_fidelity():
    m = gaussian_mixture(1 + 0j, 0.1, 1)
    s = classical_mixed_fidelity(m, 3.0, CHAOTIC, 10)
    assert np.allclose(s.values, 1.0, atol=1e-14)


def test_zero_sigma_mixed_fidelity():
    s = classical_mixed_fidelity(gaussian_mixture(1 + 0j, 0.1, 1000), 0.0, CHAOTIC, 5)
    assert np.allclose(s.values, 1.0)


@pytest.mark.xfail(strict=True, reason="kicked-drive autocorrelation is not a clean exponential; "
                                       "residual ~0.12 in the chosen regime")
def test_phase_autocorrelation_exponential_in_chaotic_regime():
    n = 400_000
    c = phase_autocorrelation(gaussian_mixture(1 + 0j, 0.1, n), CHAOTIC, 20)
    c = c.with_fit(floor_limited_window(c.times, c.values, 1.0 / n))
    assert c.fit_residual < 0.05


def test_mean_action_diffusion():
    free = mean_action_diffusion(gaussian_mixture(1 + 0j, 0.1, 20_000), FREE, 20)
    assert abs(free.D) < 1e-12
    assert free.intercept == pytest.approx(1.1, rel=0.01)
    m = gaussian_mixture(1 + 0j, 0.1, 20_000)
    weak = mean_action_diffusion(m, OscParams(1.0, KickedDrive(0.5)), 50)
    strong = mean_action_diffusion(m, CHAOTIC, 50)
    assert strong.residual < 0.05
    assert strong.D > weak.D > 0


def test_chi2_trivial_limits():
    m = gaussian_mixture(1 + 0j, 0.1, 5000)
    assert chi2_cumulant(m, CHAOTIC, 0.0) == 0.0
    I0 = np.abs(m.sample()) ** 2
    s = chi2_series(m, FREE, 5)
    assert np.allclose(s.values, np.var(I0) * s.times**2, rtol=1e-10)


def test_chi2_surrogate_process():
    tau, var, dt = 0.5, 0.3, 0.05
    acts = oracles.ou_action_histories(4000, 1200, dt, tau, var, 2.0, seed=11)
    chi2 = chi2_from_action_histories(acts, dt)
    t = dt * np.arange(acts.shape[0])
    assert np.all(chi2 >= 0)
    early = t <= 0.5 * tau
    assert np.all(np.diff(chi2[early]) >= 0)
    # long-time law chi2 / t -> 2 <dI^2> tau
    assert chi2[-1] / t[-1] == pytest.approx(2 * var * tau, rel=0.1)
    assert chi2[-1] == pytest.approx(oracles.ou_chi2(t[-1], tau, var), rel=0.1)


def test_fgr_formula():
    assert np.allclose(fgr_fidelity(0.0, 5.0, 10).values, 1.0)
    s = fgr_fidelity(0.1, 2.0, 5)
    assert s.values[5] == pytest.approx(math.exp(-0.2))
    assert s.values[5] == pytest.approx(0.8187, abs=1e-4)


def test_monte_carlo_variance_halves():
    def estimates(n):
        return np.array([phase_autocorrelation(gaussian_mixture(1 + 0j, 0.1, n, seed=s), CHAOTIC, 3).values[3]
                         for s in range(60)])
    v1 = np.var(estimates(2000), ddof=1)
    v2 = np.var(estimates(4000), ddof=1)
    assert 1.2 < v1 / v2 < 3.5


# ------------------------------------------------------------------ semiclassical amplitude

def test_ivr_without_fluctuations_never_decays():
    sampler = QuantumCellSampler(1e-2, 2000, enabled=False)
    amp = ivr_fidelity_amplitude(1 + 0j, 2.0, sampler, CHAOTIC, 10)
    assert np.max(np.abs(np.abs(amp.amplitude) - 1.0)) < 1e-14
    assert np.all(amp.stderr < 1e-15)
    zero = QuantumCellSampler(0.0, 1000)
    assert np.allclose(np.abs(ivr_fidelity_amplitude(1 + 0j, 2.0, zero, CHAOTIC, 5).amplitude), 1.0)


def test_ivr_zero_sigma():
    amp = ivr_fidelity_amplitude(1 + 0j, 0.0, QuantumCellSampler(0.01, 1000), CHAOTIC, 5)
    assert np.array_equal(amp.amplitude, np.ones(6, dtype=complex))


def test_ivr_matches_quadrature_when_integrable():
    alpha0, sigma, hbar = 1 + 0.5j, 2.0, 0.01
    amp = ivr_fidelity_amplitude(alpha0, sigma, QuantumCellSampler(hbar, 20_000, seed=2), FREE, 8)
    want = oracles.ivr_quadrature(alpha0, sigma, hbar, 1.0, amp.times)
    assert np.all(np.abs(amp.amplitude - want) <= 3 * amp.stderr + 1e-15)
    assert np.all(np.abs(amp.amplitude) <= 1 + 3 * amp.stderr + 1e-15)


def test_cell_sampler_variance():
    d = QuantumCellSampler(0.04, 100_000, seed=1).sample()
    assert np.var(d.real) == pytest.approx(0.01, rel=0.02)
    assert np.var(d.imag) == pytest.approx(0.01, rel=0.02)


# ------------------------------------------------------------------ short-time law

def test_early_time_trivial_and_closed_form():
    assert early_time_fidelity(1 + 0j, 0.0, 0.01, CHAOTIC, 3.0) == 1.0
    alpha0, eps, hbar = 0.8 + 0.6j, 0.02, 0.01
    for t in (1.0, 2.5, 4.0):
        d = phase_derivatives(alpha0, FREE, t)
        assert d.abs_dphi_dalpha == pytest.approx(2 * abs(alpha0) * t, rel=1e-8)
        assert d.dphi_domega0 == pytest.approx(t, rel=1e-8)
        a = (0.5 * eps * t) ** 2
        want = math.exp(-(eps**2 / (4 * hbar)) * (2 * abs(alpha0) * t) ** 2 / (1 + a)) / (1 + a)
        assert early_time_fidelity(alpha0, eps, hbar, FREE, t) == pytest.approx(want, rel=1e-8)


def test_unreliable_derivative_is_reported():
    with pytest.raises(UnreliableDerivativeError):
        phase_derivatives(1 + 0j, CHAOTIC, 20.0)


def test_chaotic_phase_gradient_grows_exponentially():
    t = np.arange(1, 7, dtype=float)
    _, grads = early_time_exponents(1 + 0j, 1e-4, 1e-4, CHAOTIC, t)
    fit = fit_log_growth(t, grads)
    assert fit.slope > 0
    assert fit.residual < 0.1


# ------------------------------------------------------------------ chaos diagnostics

def test_stretching_rates():
    pts = np.array([1 + 0j, 1.1 + 0.1j, 0.9 - 0.2j])
    assert np.all(stretching_rate(pts, FREE, 200) < 0.05)
    assert np.all(stretching_rate(pts, CHAOTIC, 200) > 0.5)


def test_stretching_rate_smooth_drive_runs():
    rate = stretching_rate(np.array([1 + 0j]), OscParams(1.0, HarmonicDrive((0.0,))), 20, dt=0.02)
    assert abs(rate[0]) < 0.3


def test_chaos_threshold_found():
    g = find_chaos_threshold(1 + 0j, 1.0, np.linspace(0.05, 1.0, 20))
    assert 0.05 < g <= 1.0
