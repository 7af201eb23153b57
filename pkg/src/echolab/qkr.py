"""Quantum kicked rotor on the torus: Floquet propagation and echo measures.

One period is kick-then-drift: multiply by exp(-i K cos(theta)/hbar) in the
position representation, then by exp(-i (1+e) p^2 / (2 hbar)) in the
momentum representation.  The perturbed branch uses e = epsilon; with
``symmetric=True`` the two branches use -epsilon/2 and +epsilon/2 instead.
Fidelity amplitudes are recorded after the drift.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .hilbert import PacketMixture, QuantumState, TorusGrid
from .series import DecaySeries


@dataclass(frozen=True)
class RotorParams:
    K: float
    epsilon: float
    hbar: float
    symmetric: bool = False

    @classmethod
    def from_sigma(cls, K: float, sigma: float, hbar: float, symmetric: bool = False) -> "RotorParams":
        return cls(K=K, epsilon=sigma * hbar, hbar=hbar, symmetric=symmetric)

    @property
    def sigma(self) -> float:
        return self.epsilon / self.hbar

    def branch_shifts(self) -> tuple[float, float]:
        """Kinetic-coefficient shifts (unperturbed, perturbed)."""
        if self.symmetric:
            return -0.5 * self.epsilon, 0.5 * self.epsilon
        return 0.0, self.epsilon


class FloquetOperator:
    """Precomputed phase factors for one branch of the rotor dynamics."""

    def __init__(self, grid: TorusGrid, K: float, kinetic_shift: float = 0.0):
        hbar = grid.hbar
        self.grid = grid
        self.kick = np.exp(-1j * K * np.cos(grid.theta) / hbar)
        self.drift = np.exp(-1j * (1.0 + kinetic_shift) * grid.p**2 / (2.0 * hbar))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Advance one or many position-space states (last axis) by one kick."""
        phi = np.fft.fft(psi * self.kick, axis=-1, norm="ortho")
        return np.fft.ifft(phi * self.drift, axis=-1, norm="ortho")


def _operators(grid: TorusGrid, params: RotorParams) -> tuple[FloquetOperator, FloquetOperator]:
    if not math.isclose(grid.hbar, params.hbar, rel_tol=1e-12):
        raise DimensionError(f"params.hbar={params.hbar} does not match grid hbar={grid.hbar}")
    e0, e1 = params.branch_shifts()
    return FloquetOperator(grid, params.K, e0), FloquetOperator(grid, params.K, e1)


def floquet_step(state: QuantumState, params: RotorParams, perturbed: bool = False) -> QuantumState:
    u0, u1 = _operators(state.grid, params)
    op = u1 if perturbed else u0
    return QuantumState(op.apply(state.amplitudes), state.grid)


def fidelity_amplitude(packet: QuantumState, T: int, params: RotorParams) -> np.ndarray:
    """f(t) = <psi|U0^dagger(t) U_eps(t)|psi> for t = 0..T."""
    u0, u1 = _operators(packet.grid, params)
    a = packet.amplitudes.copy()
    b = packet.amplitudes.copy()
    out = np.empty(T + 1, dtype=np.complex128)
    out[0] = np.vdot(a, b)
    for t in range(1, T + 1):
        a = u0.apply(a)
        b = u1.apply(b)
        out[t] = np.vdot(a, b)
    return out


def _weighted_sum(weights: np.ndarray, z: np.ndarray) -> complex:
    # fixed member order, exactly rounded
    return complex(math.fsum(weights * z.real), math.fsum(weights * z.imag))


@dataclass(frozen=True, eq=False)
class EchoRecord:
    """Per-member fidelity amplitudes and the three mixed-state fidelities."""

    times: np.ndarray
    amplitudes: np.ndarray  # (members, T+1)
    weights: np.ndarray
    coherent: np.ndarray  # |sum_k p_k f_k|^2
    incoherent: np.ndarray  # sum_k p_k |f_k|^2
    peres: np.ndarray  # Tr[rho_0(t) rho_eps(t)] / Tr[rho^2]

    def mean_amplitude(self) -> np.ndarray:
        return np.array([_weighted_sum(self.weights, self.amplitudes[:, t])
                         for t in range(self.times.size)])

    def fluctuation(self) -> np.ndarray:
        """sum_k p_k |f_k - mean f|^2, the gap between incoherent and coherent."""
        fbar = self.mean_amplitude()
        dev = np.abs(self.amplitudes - fbar[None, :]) ** 2
        return np.array([math.fsum(self.weights * dev[:, t]) for t in range(self.times.size)])

    def series(self, which: str) -> DecaySeries:
        values = {"coherent": self.coherent, "incoherent": self.incoherent, "peres": self.peres}[which]
        return DecaySeries(self.times, values, label=which)


def _pairwise_weighted(weights: np.ndarray, left: np.ndarray, right: np.ndarray) -> float:
    """sum_{k,k'} p_k p_k' |<left_k|right_k'>|^2."""
    ov = np.conj(left) @ right.T
    return float(weights @ (np.abs(ov) ** 2) @ weights)


def mixture_echo(mixture: PacketMixture, T: int, params: RotorParams, *,
                 threads: int = 1, peres: bool = True) -> EchoRecord:
    """Co-propagate every mixture member under both branches for T kicks.

    Members are split into contiguous blocks that may be advanced on
    separate threads; every reduction runs afterwards in member order, so
    the result does not depend on ``threads``.
    """
    grid = mixture.grid
    u0, u1 = _operators(grid, params)
    w = mixture.weights
    nmem = len(mixture)
    a = mixture.amplitudes()
    b = a.copy()

    threads = max(1, min(int(threads), nmem))
    bounds = np.linspace(0, nmem, threads + 1).astype(int)
    blocks = [slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def advance(sl):
        a[sl] = u0.apply(a[sl])
        b[sl] = u1.apply(b[sl])

    amps = np.empty((nmem, T + 1), dtype=np.complex128)
    peres_vals = np.ones(T + 1)
    amps[:, 0] = np.sum(np.conj(a) * b, axis=1)
    purity = _pairwise_weighted(w, a, a) if peres else 1.0

    pool = ThreadPoolExecutor(max_workers=len(blocks)) if len(blocks) > 1 else None
    try:
        for t in range(1, T + 1):
            if pool is None:
                advance(slice(None))
            else:
                list(pool.map(advance, blocks))
            amps[:, t] = np.sum(np.conj(a) * b, axis=1)
            if peres:
                peres_vals[t] = _pairwise_weighted(w, a, b) / purity
    finally:
        if pool is not None:
            pool.shutdown()

    coherent = np.empty(T + 1)
    incoherent = np.empty(T + 1)
    for t in range(T + 1):
        coherent[t] = abs(_weighted_sum(w, amps[:, t])) ** 2
        incoherent[t] = math.fsum(w * np.abs(amps[:, t]) ** 2)
    if not peres:
        peres_vals = np.full(T + 1, np.nan)
    return EchoRecord(
        times=np.arange(T + 1, dtype=float),
        amplitudes=amps,
        weights=w,
        coherent=coherent,
        incoherent=incoherent,
        peres=peres_vals,
    )
