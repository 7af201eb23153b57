"""Fidelity (Loschmidt echo) decay for pure and mixed states.

Two model systems: the quantum kicked rotor on a torus with its classical
standard map, and a periodically driven quartic oscillator treated
semiclassically.  Glauber-diagonal mixtures supply number-state populations.
"""

from .errors import (
    ConfigError,
    DimensionError,
    EchoLabError,
    FitDomainError,
    InsufficientDataError,
    InvalidRegionError,
    NumericalValidityError,
    TruncationError,
    UnreliableDerivativeError,
)
from .hilbert import (
    DEFAULT_REGION,
    PacketMixture,
    QuantumState,
    Region,
    TorusGrid,
    cell_count,
    gaussian_packet,
    make_grid,
    overlap,
    uniform_mixture,
)
from .series import DecayFit, DecaySeries, fit_decay_rate, fit_log_growth, floor_limited_window
from .qkr import EchoRecord, RotorParams, fidelity_amplitude, floquet_step, mixture_echo
from .classical_rotor import (
    ClassicalEnsemble,
    angular_correlation,
    lyapunov_exponent,
    standard_map_step,
    uniform_ensemble,
)
from .glauber import RadialWeight, populations_from_weight, thermal_populations, thermal_weight

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
