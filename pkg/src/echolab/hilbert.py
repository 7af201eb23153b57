"""Torus Hilbert space for the kicked rotor.

The torus 0 <= theta < 2*pi, -pi <= p < pi holds N Planck cells, so the
effective Planck constant is fixed by the dimension, hbar = 2*pi/N.  States
live in the position representation on the grid theta_j = 2*pi*j/N; the
momentum representation is reached with an orthonormal FFT, and momentum
eigenvalues are the integer multiples of hbar folded into [-pi, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, InvalidRegionError

TWO_PI = 2.0 * math.pi

# Image sum over windings -3..3; the neglected images are ~exp(-(6 pi)^2 / (2 hbar)).
_WINDINGS = np.arange(-3, 4)


@dataclass(frozen=True)
class TorusGrid:
    """Discretized torus with N position and N momentum points."""

    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DimensionError(f"torus dimension must be an integer >= 2, got {self.N!r}")

    @property
    def hbar(self) -> float:
        return TWO_PI / self.N

    @cached_property
    def theta(self) -> np.ndarray:
        return TWO_PI * np.arange(self.N) / self.N

    @cached_property
    def momentum_index(self) -> np.ndarray:
        """Integer momentum quantum numbers in FFT order (k with p = k*hbar)."""
        return np.rint(np.fft.fftfreq(self.N, d=1.0 / self.N)).astype(np.int64)

    @cached_property
    def p(self) -> np.ndarray:
        """Momentum grid in FFT order, values in [-pi, pi)."""
        return self.hbar * self.momentum_index

    def to_momentum(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.fft.fft(amplitudes, axis=-1, norm="ortho")

    def to_position(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.fft.ifft(amplitudes, axis=-1, norm="ortho")


def make_grid(N: int) -> TorusGrid:
    return TorusGrid(N)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized amplitude vector in the position representation."""

    amplitudes: np.ndarray
    grid: TorusGrid

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.grid.N,):
            raise DimensionError(
                f"state has shape {amps.shape}, grid expects ({self.grid.N},)"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def normalized(self) -> "QuantumState":
        return QuantumState(self.amplitudes / self.norm, self.grid)

    def momentum_amplitudes(self) -> np.ndarray:
        return self.grid.to_momentum(self.amplitudes)


def momentum_eigenstate(grid: TorusGrid, k: int) -> QuantumState:
    """Plane wave exp(i k theta)/sqrt(N); k is the integer momentum quantum number."""
    amps = np.exp(1j * k * grid.theta) / math.sqrt(grid.N)
    return QuantumState(amps, grid)


def wrap_theta(theta):
    return np.mod(theta, TWO_PI)


def wrap_momentum(p):
    return np.mod(np.asarray(p) + math.pi, TWO_PI) - math.pi


def packet_amplitudes(grid: TorusGrid, theta0, p0) -> np.ndarray:
    """Periodized minimum-uncertainty packets, one row per (theta0, p0) pair.

    Position variance of |psi|^2 is hbar/2 before periodization.  Accepts
    scalars or equal-length arrays and always returns a 2-D array.
    """
    theta0 = wrap_theta(np.atleast_1d(np.asarray(theta0, dtype=float)))
    p0 = wrap_momentum(np.atleast_1d(np.asarray(p0, dtype=float)))
    if theta0.shape != p0.shape:
        raise DimensionError("theta0 and p0 must have the same shape")
    hbar = grid.hbar
    out = np.zeros((theta0.size, grid.N), dtype=np.complex128)
    for m in _WINDINGS:
        d = grid.theta[None, :] - theta0[:, None] + TWO_PI * m
        out += np.exp(-(d * d) / (2.0 * hbar) + 1j * p0[:, None] * d / hbar)
    out /= np.linalg.norm(out, axis=1)[:, None]
    return out


def gaussian_packet(grid: TorusGrid, theta0: float, p0: float) -> QuantumState:
    """Coherent state centred at (theta0, p0); inputs are wrapped onto the torus."""
    return QuantumState(packet_amplitudes(grid, theta0, p0)[0], grid)


def overlap(a: QuantumState, b: QuantumState) -> complex:
    """<a|b> = sum_j conj(a_j) b_j."""
    if a.grid.N != b.grid.N:
        raise DimensionError(f"grids differ: N={a.grid.N} vs N={b.grid.N}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


@dataclass(frozen=True)
class Region:
    """Rectangle in scaled coordinates (theta/2pi, p/2pi)."""

    theta_min: float
    theta_max: float
    p_min: float
    p_max: float

    def __post_init__(self):
        if not (self.theta_max > self.theta_min and self.p_max > self.p_min):
            raise InvalidRegionError(f"region has zero or negative extent: {self}")
        if self.theta_min < 0.0 or self.theta_max > 1.0:
            raise InvalidRegionError("theta/2pi bounds must lie in [0, 1]")
        if self.p_min < -0.5 or self.p_max > 0.5:
            raise InvalidRegionError("p/2pi bounds must lie in [-0.5, 0.5]")

    @property
    def area(self) -> float:
        """Area in (theta, p) units."""
        return (self.theta_max - self.theta_min) * (self.p_max - self.p_min) * TWO_PI**2


# 0.2 <= theta/2pi <= 0.3, 0.3 <= p/2pi <= 0.4
DEFAULT_REGION = Region(0.2, 0.3, 0.3, 0.4)


def cell_count(region: Region, hbar: float) -> int:
    """Number of Planck cells of area 2*pi*hbar inside the region."""
    return max(1, int(round(region.area / (TWO_PI * hbar))))


@dataclass(frozen=True, eq=False)
class PacketMixture:
    """Equal- or arbitrary-weight mixture of Gaussian packets on one grid."""

    grid: TorusGrid
    theta0: np.ndarray
    p0: np.ndarray
    weights: np.ndarray
    region: Region | None = None
    cell_count: int = 1
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("theta0", "p0", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.theta0.shape == self.p0.shape == self.weights.shape) or self.theta0.ndim != 1:
            raise DimensionError("mixture arrays must be 1-D and of equal length")
        if self.theta0.size == 0:
            raise InvalidRegionError("mixture has no members")
        if np.any(self.weights < 0):
            raise ValueError("mixture weights must be non-negative")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > 1e-12:
            object.__setattr__(self, "weights", self.weights / total)

    def __len__(self) -> int:
        return self.theta0.size

    @property
    def members(self) -> list[tuple[tuple[float, float], float]]:
        return [((float(t), float(p)), float(w)) for t, p, w in zip(self.theta0, self.p0, self.weights)]

    def amplitudes(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        return packet_amplitudes(self.grid, self.theta0[start:stop], self.p0[start:stop])


def uniform_mixture(grid: TorusGrid, region: Region = DEFAULT_REGION, count: int = 64,
                    seed: int = 0) -> PacketMixture:
    """Packet centres drawn uniformly in ``region`` with equal weights."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(region.theta_min, region.theta_max, count)
    v = rng.uniform(region.p_min, region.p_max, count)
    return PacketMixture(
        grid=grid,
        theta0=wrap_theta(TWO_PI * u),
        p0=wrap_momentum(TWO_PI * v),
        weights=np.full(count, 1.0 / count),
        region=region,
        cell_count=cell_count(region, grid.hbar),
        seed=seed,
    )


def single_packet_mixture(grid: TorusGrid, theta0: float, p0: float) -> PacketMixture:
    return PacketMixture(grid, [wrap_theta(theta0)], [wrap_momentum(p0)], [1.0])
