"""Independent reference implementations used by the tests.

Nothing here imports the propagation code under test; the only shared
conventions are the grid definitions (theta_j = 2 pi j / N, integer
momenta folded into [-N/2, N/2)).
"""

import math

import numpy as np
from scipy import integrate, special


def dft_matrix(N):
    """Unitary DFT, F[k, j] = exp(-2 pi i k j / N) / sqrt(N), rows in FFT order of k."""
    k = np.rint(np.fft.fftfreq(N, d=1.0 / N)).astype(int)
    j = np.arange(N)
    return np.exp(-2j * math.pi * np.outer(k, j) / N) / math.sqrt(N), k


def kick_matrix_momentum(N, K):
    """<k|exp(-i K cos(theta)/hbar)|k'> from the Jacobi-Anger expansion, aliased mod N.

    exp(-i z cos theta) = sum_n (-i)^n J_n(z) exp(i n theta), so on the N-point grid
    the matrix element is sum_m (-i)^(d + mN) J_(d + mN)(z) with d = k - k'.
    """
    hbar = 2 * math.pi / N
    z = K / hbar
    _, k = dft_matrix(N)
    d = k[:, None] - k[None, :]
    out = np.zeros((N, N), dtype=complex)
    m_max = int(z / N) + 6
    for m in range(-m_max, m_max + 1):
        n = d + m * N
        out += (-1j) ** (n % 4) * special.jv(n, z)
    return out


def dense_floquet(N, K, kinetic_shift=0.0):
    """One kick-then-drift period as a dense matrix in the momentum basis."""
    hbar = 2 * math.pi / N
    _, k = dft_matrix(N)
    drift = np.exp(-1j * (1.0 + kinetic_shift) * hbar * k.astype(float) ** 2 / 2.0)
    return drift[:, None] * kick_matrix_momentum(N, K)


def dense_evolution(psi_position, N, K, steps, kinetic_shift=0.0):
    """Position-space amplitudes after ``steps`` periods, via dense matrices only."""
    F, _ = dft_matrix(N)
    U = dense_floquet(N, K, kinetic_shift)
    phi = F @ psi_position
    out = [F.conj().T @ phi]
    for _ in range(steps):
        phi = U @ phi
        out.append(F.conj().T @ phi)
    return np.array(out)


def standard_map_mp(theta, p, K, dps=50):
    """One kick-then-drift step of the standard map at extended precision."""
    import mpmath as mp

    with mp.workdps(dps):
        th, pp, k = mp.mpf(theta), mp.mpf(p), mp.mpf(K)
        two_pi = 2 * mp.pi
        p_new = pp + k * mp.sin(th)
        p_new = p_new - two_pi * mp.floor((p_new + mp.pi) / two_pi)
        th_new = th + p_new
        th_new = th_new - two_pi * mp.floor(th_new / two_pi)
        return float(th_new), float(p_new)


def ivr_quadrature(alpha0, sigma, hbar, omega0, times, order=80):
    """Integrable (g = 0) semiclassical amplitude by 2-D Gauss-Hermite quadrature over delta.

    delta = x + i y with density (2/(pi hbar)) exp(-2|delta|^2/hbar); each
    delta contributes exp(i sigma/2 (omega0 - 2|delta|^2 + 2|alpha0 + delta|^2) t).
    """
    x, w = np.polynomial.hermite.hermgauss(order)
    s = math.sqrt(hbar / 2.0)  # exp(-2 x^2/hbar) = exp(-(x/s)^2)
    dx, dy = np.meshgrid(s * x, s * x, indexing="ij")
    W = np.outer(w, w) / math.pi
    delta = dx + 1j * dy
    rate = omega0 - 2 * np.abs(delta) ** 2 + 2 * np.abs(alpha0 + delta) ** 2
    return np.array([np.sum(W * np.exp(0.5j * sigma * rate * t)) for t in times])


def radial_phase_correlation(width, omega0, t):
    """|int dI radial(I) exp(i (omega0 + 2 I) t)|^2 for the Gaussian radial weight centred at 0."""
    f = lambda I: math.exp(-I / width) / width  # noqa: E731
    re = integrate.quad(lambda I: f(I) * math.cos(2 * I * t), 0, math.inf, limit=400)[0]
    im = integrate.quad(lambda I: f(I) * math.sin(2 * I * t), 0, math.inf, limit=400)[0]
    return re * re + im * im


def ou_action_histories(n, steps, dt, tau, var, mean, seed):
    """Exactly discretized Ornstein-Uhlenbeck actions, shape (steps + 1, n), stationary start."""
    rng = np.random.default_rng(seed)
    a = math.exp(-dt / tau)
    b = math.sqrt(var * (1 - a * a))
    x = rng.normal(0.0, math.sqrt(var), n)
    out = np.empty((steps + 1, n))
    out[0] = x
    for i in range(steps):
        x = a * x + b * rng.standard_normal(n)
        out[i + 1] = x
    return mean + out


def ou_chi2(t, tau, var):
    """Var(int_0^t x) for a stationary OU process."""
    return 2 * var * tau * (t - tau * (1 - math.exp(-t / tau)))


def poisson(n, mean):
    return math.exp(n * math.log(mean) - mean - math.lgamma(n + 1))


def geometric(n, nbar):
    return (1.0 / (1.0 + nbar)) * (nbar / (1.0 + nbar)) ** n
