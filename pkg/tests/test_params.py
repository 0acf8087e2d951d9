import numpy as np
import pytest

from rabidimer.params import DriveParams, ModelParams, bias, sweep_rate


def test_bias_examples():
    assert bias(DriveParams(20, 0.05, 0), 0.0) == pytest.approx(10.0)
    assert bias(DriveParams(0, 0.3, 1.2), 17.0) == 0.0
    assert bias(DriveParams(20, 0.05, 0), np.pi / (3 * 0.05)) == pytest.approx(5.0, abs=1e-12)


def test_sweep_rate_examples():
    t = np.pi / (3 * 0.05)
    assert abs(sweep_rate(DriveParams(20, 0.05, 0), t)) == pytest.approx(np.sqrt(3) / 4, rel=1e-12)
    assert sweep_rate(DriveParams(13, 0.05, 0.0), 0.0) == 0.0
    assert sweep_rate(DriveParams(10, 0.05, 0), np.pi / (2 * 0.05)) == pytest.approx(-0.25, abs=1e-12)


def test_bias_periodic_and_sweep_rate_is_derivative():
    d = DriveParams(17.0, 0.07, 0.4)
    t = np.linspace(0, 100, 37)
    assert np.allclose(bias(d, t + 2 * np.pi / d.Omega), bias(d, t), atol=1e-10)
    h = 1e-4
    fd = (bias(d, t + h) - bias(d, t - h)) / (2 * h)
    assert np.allclose(fd, sweep_rate(d, t), rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("field", ["g", "J", "omega_ph", "alpha"])
def test_negative_parameters_rejected(field):
    with pytest.raises(ValueError):
        ModelParams(**{field: -0.1})


def test_omega_r_positive():
    with pytest.raises(ValueError, match="omega_r"):
        ModelParams(omega_r=0.0)


def test_swapped_and_mode_matrix():
    p = ModelParams(J=0.02, omega_ph=0.05, drive_L=DriveParams(20), drive_R=DriveParams(10))
    s = p.swapped()
    assert s.drive_L.F == 10 and s.drive_R.F == 20
    W = p.mode_matrix()
    assert np.allclose(W, W.T)
    assert W[0, 1] == -0.02 and W[2, 2] == 0.05 and W[0, 0] == 10.0
