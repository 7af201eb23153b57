import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.errors import DimensionError, InvalidRegionError
from echolab.hilbert import (
    DEFAULT_REGION,
    QuantumState,
    Region,
    TorusGrid,
    cell_count,
    gaussian_packet,
    make_grid,
    momentum_eigenstate,
    overlap,
    uniform_mixture,
    wrap_momentum,
    wrap_theta,
)


def test_grid_hbar_and_ranges():
    g = make_grid(8192)
    assert g.hbar == pytest.approx(2 * math.pi / 8192, rel=1e-15)
    assert g.hbar == pytest.approx(7.67e-4, rel=1e-3)
    assert np.all((g.p >= -math.pi) & (g.p < math.pi))
    assert np.all((g.theta >= 0) & (g.theta < 2 * math.pi))
    assert sorted(g.momentum_index) == list(range(-4096, 4096))


@pytest.mark.parametrize("N", [0, 1, 2.5])
def test_bad_dimension(N):
    with pytest.raises(DimensionError):
        TorusGrid(N)


def test_packet_norm_and_centre():
    g = make_grid(2048)
    psi = gaussian_packet(g, 2.0, 1.0)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    prob = np.abs(psi.amplitudes) ** 2
    assert g.theta[np.argmax(prob)] == pytest.approx(2.0, abs=2 * 2 * math.pi / g.N)
    mom = np.abs(psi.momentum_amplitudes()) ** 2
    assert g.p[np.argmax(mom)] == pytest.approx(1.0, abs=2 * g.hbar)


def test_packet_position_variance():
    g = make_grid(4096)
    psi = gaussian_packet(g, math.pi, 0.0)
    prob = np.abs(psi.amplitudes) ** 2
    var = np.sum(prob * (g.theta - math.pi) ** 2)
    assert var == pytest.approx(g.hbar / 2, rel=1e-6)


def test_packet_wraps_out_of_range_centre():
    g = make_grid(512)
    a = gaussian_packet(g, 2 * math.pi + 0.5, 0.3 + 2 * math.pi)
    b = gaussian_packet(g, 0.5, 0.3)
    assert abs(overlap(a, b)) == pytest.approx(1.0, abs=1e-12)


def test_momentum_eigenstates_orthonormal():
    g = make_grid(64)
    a, b = momentum_eigenstate(g, 3), momentum_eigenstate(g, -5)
    assert abs(overlap(a, a)) == pytest.approx(1.0)
    assert abs(overlap(a, b)) < 1e-14


def test_overlap_dimension_mismatch():
    with pytest.raises(DimensionError):
        overlap(gaussian_packet(make_grid(16), 0, 0), gaussian_packet(make_grid(32), 0, 0))


def test_state_is_read_only():
    psi = gaussian_packet(make_grid(16), 0.0, 0.0)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 0


def test_region_validation():
    with pytest.raises(InvalidRegionError):
        Region(0.3, 0.2, 0.3, 0.4)
    with pytest.raises(InvalidRegionError):
        Region(0.2, 0.3, 0.4, 0.4)
    with pytest.raises(InvalidRegionError):
        Region(0.2, 1.3, 0.3, 0.4)


def test_cell_count_scales_with_N():
    # area (2 pi)^2/100 over 2 pi hbar = N/100
    assert cell_count(DEFAULT_REGION, make_grid(8192).hbar) == 82
    assert cell_count(DEFAULT_REGION, make_grid(2048).hbar) == 20


def test_uniform_mixture_in_region_and_deterministic():
    g = make_grid(1024)
    a = uniform_mixture(g, count=32, seed=7)
    b = uniform_mixture(g, count=32, seed=7)
    assert np.array_equal(a.theta0, b.theta0) and np.array_equal(a.p0, b.p0)
    assert math.fsum(a.weights) == pytest.approx(1.0, abs=1e-15)
    u, v = a.theta0 / (2 * math.pi), a.p0 / (2 * math.pi)
    assert np.all((u >= 0.2) & (u <= 0.3) & (v >= 0.3) & (v <= 0.4))
    amps = a.amplitudes()
    assert amps.shape == (32, 1024)
    assert np.allclose(np.linalg.norm(amps, axis=1), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.floats(-50, 50, allow_nan=False))
def test_wrapping_lands_in_domain(theta, p):
    t = float(wrap_theta(theta))
    q = float(wrap_momentum(p))
    assert 0.0 <= t < 2 * math.pi + 1e-12
    assert -math.pi <= q < math.pi + 1e-12
    assert math.isclose(math.cos(t), math.cos(theta), abs_tol=1e-9)
    assert math.isclose(math.sin(q), math.sin(p), abs_tol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 11), st.floats(0, 2 * math.pi), st.floats(-math.pi, math.pi))
def test_packets_normalized(logN, theta, p):
    psi = gaussian_packet(make_grid(2**logN), theta, p)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)


def test_fft_round_trip():
    g = make_grid(128)
    psi = QuantumState(np.random.default_rng(1).normal(size=128) + 0j, g)
    assert np.allclose(g.to_position(g.to_momentum(psi.amplitudes)), psi.amplitudes)
