import numpy as np
import pytest

from rabidimer.analysis import (arp_check, crossing_times, energy_diagram, fit_peak_law, gap,
                                localization_metric, plz_spectrum, Crossing)
from rabidimer.params import DriveParams, ModelParams, bias


def test_crossing_at_start_when_F_equals_omega_r():
    d = energy_diagram(DriveParams(10.0), ModelParams(), 3)
    first = min(c.time for c in d.crossings)
    assert first == pytest.approx(0.0, abs=1e-12)


def test_first_crossing_fig2b():
    d = energy_diagram(DriveParams(20.0), ModelParams(g=0.3), 3)
    first = min(d.crossings, key=lambda c: c.time)
    assert first.time == pytest.approx(np.pi / (3 * 0.05), abs=1e-10)
    assert abs(first.sweep_rate) == pytest.approx(np.sqrt(3) / 4, rel=1e-12)


def test_no_crossings_below_resonance():
    assert energy_diagram(DriveParams(10 * (1 - 1e-9)), ModelParams(), 3).crossings == []
    with pytest.raises(ValueError):
        energy_diagram(DriveParams(20), ModelParams(), 0)


@pytest.mark.parametrize("F,Phi,Om", [(20, 0, 0.05), (20, np.pi / 6, 0.05), (15, 2.0, 0.09)])
def test_crossing_residual(F, Phi, Om):
    drive = DriveParams(F, Om, Phi)
    for br in (1, -1):
        t = crossing_times(drive, 10.0, 400.0, br)
        assert t.size > 0
        assert np.all(np.abs(2 * bias(drive, t) - br * 10.0) < 1e-10)


def test_levels():
    p = ModelParams()
    d = energy_diagram(DriveParams(20.0), p, 2, t_max=10.0, n_times=11)
    assert d.up_levels.shape == (3, 11) and d.diabatic_levels.shape == (6, 11)
    assert d.up_levels[1, 0] == pytest.approx(10.0 + 10.0)
    assert d.down_levels[2, 0] == pytest.approx(-10.0 + 20.0)


def test_arp_examples():
    c = Crossing(20.94, 0, gap(0.3, 0), np.sqrt(3) / 4, 0.0, 0.3)
    ok, ratio = arp_check(c, 1)
    assert not ok and ratio == pytest.approx((np.sqrt(3) / 4) / 0.72, rel=1e-12)
    assert ratio == pytest.approx(0.601, abs=1e-3)
    ok, ratio = arp_check(c, 19)
    assert ok and ratio == pytest.approx(0.060, abs=1e-3)
    ok, ratio = arp_check(Crossing(1.0, 0, 0.0, 0.4, 0.0, 0.0), 3)
    assert not ok and np.isinf(ratio)
    with pytest.raises(ValueError):
        arp_check(c, -1)


def test_gap_formula():
    assert gap(0.3, 1) ** 2 == pytest.approx(0.72)
    assert gap(0.3, 19) ** 2 == pytest.approx(7.2)


def test_synthetic_tone_peak():
    dt = 0.1
    t = np.arange(4096) * dt
    f0 = 10 / np.pi
    res = plz_spectrum(0.3 + 0.2 * np.cos(2 * np.pi * f0 * t) + 0.1 * np.cos(0.05 * t), dt)
    assert abs(res.peak_frequency - f0) <= res.resolution
    assert res.resolution == pytest.approx(1 / (4096 * dt))


def test_fast_oscillation_at_twice_omega_r_reads_omega_r_over_pi():
    dt = 0.1
    t = np.arange(2048) * dt
    res = plz_spectrum(0.01 * np.cos(2 * 10.0 * t) + 0.5 * np.cos(0.05 * t), dt)
    assert abs(res.peak_frequency - 10.0 / np.pi) <= res.resolution


def test_spectrum_preconditions():
    with pytest.raises(ValueError):
        plz_spectrum(np.zeros(100), 0.1)
    with pytest.raises(ValueError):
        plz_spectrum(np.zeros(2048), 0.0)


def test_fit_peak_law():
    wr = np.array([9, 10, 11, 12.0])
    slope, intercept, resid = fit_peak_law(wr, wr / np.pi)
    assert slope == pytest.approx(1 / np.pi) and abs(intercept) < 1e-12 and resid < 1e-12


def _record(t, Z, N):
    return {"t": t, "Z": Z, "N_total": N}


def test_localization_metric_examples():
    t = np.linspace(0, 400, 40001)
    assert localization_metric(_record(t, np.full_like(t, 20.0), np.full_like(t, 20.0))) == 1.0
    J = 0.01
    # second half of [0, 400] covers several full |cos| periods pi / (2J) ~ 157 only
    # approximately, so use a span of exact periods for the analytic value
    t = np.linspace(0, 4 * np.pi / (2 * J), 200001)
    val = localization_metric(_record(t, 20 * np.cos(2 * J * t), np.full_like(t, 20.0)))
    assert val == pytest.approx(2 / np.pi, abs=1e-3)
    with pytest.raises(ValueError):
        localization_metric(_record(np.linspace(0, 50, 11), np.ones(11), np.ones(11)))
