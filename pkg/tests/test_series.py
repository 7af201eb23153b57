import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.errors import FitDomainError, InsufficientDataError
from echolab.series import DecaySeries, fit_decay_rate, fit_log_growth, floor_limited_window


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 5.0), st.floats(-3, 3))
def test_exact_exponential_recovered(rate, offset):
    t = np.arange(0, 10, dtype=float)
    fit = fit_decay_rate(t, np.exp(-rate * t - offset), (1, 8))
    assert fit.rate == pytest.approx(rate, rel=1e-9)
    assert fit.offset == pytest.approx(offset, abs=1e-8)
    assert fit.residual < 1e-9
    assert fit.npoints == 8


def test_window_too_short():
    with pytest.raises(InsufficientDataError):
        fit_decay_rate([0, 1, 2, 3], [1, 0.5, 0.25, 0.1], (1, 2))


def test_nonpositive_value_in_window():
    with pytest.raises(FitDomainError):
        fit_decay_rate([0, 1, 2, 3], [1, 0.5, 0.0, 0.1], (0, 3))


def test_residual_measures_scatter():
    t = np.arange(12.0)
    clean = fit_decay_rate(t, np.exp(-t), (0, 11))
    noisy = fit_decay_rate(t, np.exp(-t + 0.3 * np.sin(3 * t)), (0, 11))
    assert clean.residual < 1e-12 < noisy.residual


def test_series_fit_and_plateau():
    t = np.arange(20.0)
    s = DecaySeries(t, np.maximum(np.exp(-t), 1e-4)).with_fit((0, 5))
    assert s.fitted_rate == pytest.approx(1.0)
    assert s.fit_window == (0.0, 5.0)
    assert s.plateau(5) == pytest.approx(1e-4)


def test_series_shape_checks():
    with pytest.raises(ValueError):
        DecaySeries([0, 1], [1.0])
    with pytest.raises(ValueError):
        DecaySeries([0, 1], [1.0, 0.5], stderr=[0.1])


def test_floor_limited_window():
    t = np.arange(20.0)
    v = np.maximum(np.exp(-t), 1e-6)
    # e^-t drops below 10 * 1e-6 at t = 12
    assert floor_limited_window(t, v, 1e-6) == (1.0, 11.0)
    assert floor_limited_window(t, v, 1e-6, span=5) == (6.0, 11.0)
    with pytest.raises(InsufficientDataError):
        floor_limited_window(t, v, 0.05)


def test_growth_fit():
    t = np.arange(1, 7, dtype=float)
    g = fit_log_growth(t, 3 * np.exp(1.3 * t))
    assert g.slope == pytest.approx(1.3)
    assert g.intercept == pytest.approx(math.log(3))
