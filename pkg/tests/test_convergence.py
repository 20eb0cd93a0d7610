import numpy as np
import pytest

from gals import InsufficientDataError, fit_order


def test_exact_power_law():
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = fit_order(h, 3.0 * h ** 2.5)
    assert fit.slope == pytest.approx(2.5, abs=1e-12)
    assert np.exp(fit.intercept) == pytest.approx(3.0)
    assert fit.residual == pytest.approx(0.0, abs=1e-10)


def test_noisy_fit_has_positive_halfwidth():
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = fit_order(h, h ** 2 * np.array([1.0, 1.3, 0.8, 1.1]))
    assert fit.residual > 0


def test_fit_rejects_bad_data():
    with pytest.raises(InsufficientDataError):
        fit_order([0.1, 0.05], [1.0, 0.5])
    with pytest.raises(ValueError):
        fit_order([0.1, 0.05, 0.02], [1.0, 0.0, 0.1])
