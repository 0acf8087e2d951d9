"""Post-processing: diabatic energy diagrams, avoided-crossing bookkeeping, the
adiabatic-rapid-passage criterion and spectra of up-state population series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import DriveParams, ModelParams, bias, sweep_rate

ARP_THRESHOLD = 0.25
GUARD_BAND = 0.5
PAD_FACTOR = 4
MIN_SAMPLES = 1024
MIN_LOCALIZATION_SPAN = 100.0


@dataclass(frozen=True)
class Crossing:
    """Avoided crossing between |up, n> and |down, n + 1> (branch +1) or between
    |down, n> and |up, n + 1> (branch -1) of one qubit-photon monomer."""
    time: float
    n: int
    gap: float
    sweep_rate: float
    ratio: float
    g: float
    branch: int = 1


@dataclass
class EnergyDiagram:
    times: np.ndarray
    down_levels: np.ndarray  # (n_show + 1, n_times): -bias + n omega_r
    up_levels: np.ndarray  # (n_show + 1, n_times): +bias + n omega_r
    crossings: list = field(default_factory=list)

    @property
    def diabatic_levels(self) -> np.ndarray:
        return np.concatenate([self.down_levels, self.up_levels])


def gap(g: float, n: float) -> float:
    """Avoided-crossing gap 2 g sqrt(n + 1) for an up-state photon number n."""
    return 2.0 * g * np.sqrt(n + 1.0)


def crossing_times(drive: DriveParams, omega_r: float, t_max: float, branch: int = 1) -> np.ndarray:
    """Times in [0, t_max] at which F cos(Omega t + Phi) = branch * omega_r."""
    F, Om, Ph = drive.F, drive.Omega, drive.Phi
    if F == 0:
        return np.array([])
    r = branch * omega_r / F
    if abs(r) > 1:
        return np.array([])
    if Om == 0:
        # static bias: either on resonance for all time or never
        return np.array([0.0]) if np.isclose(np.cos(Ph), r, rtol=0, atol=1e-12) else np.array([])
    base = np.arccos(r)
    period = 2 * np.pi / abs(Om)
    out = []
    k_max = int(np.ceil(t_max / period)) + 1
    for k in range(-1, k_max + 1):
        for phase in {base, -base}:
            t = (phase + 2 * np.pi * k - Ph) / Om
            if -1e-12 <= t <= t_max + 1e-12:
                out.append(max(t, 0.0))
    return np.unique(np.round(np.array(out), 12))


def energy_diagram(drive: DriveParams, params: ModelParams, n_show: int = 3,
                   t_max: float | None = None, n_times: int = 2001,
                   branches=(1, -1)) -> EnergyDiagram:
    """Diabatic levels -/+ (F/2) cos(Omega t + Phi) + n omega_r and their crossings.

    The grid spans one drive period unless ``t_max`` is given. The qubit-photon
    coupling only enters through the gap formula.
    """
    if n_show < 1:
        raise ValueError("n_show >= 1 required")
    if t_max is None:
        t_max = 2 * np.pi / abs(drive.Omega) if drive.Omega else 400.0
    times = np.linspace(0.0, t_max, n_times)
    eps = bias(drive, times)
    ladder = np.arange(n_show + 1)[:, None] * params.omega_r
    crossings = []
    for br in branches:
        for t in crossing_times(drive, params.omega_r, t_max, br):
            v = float(sweep_rate(drive, t))
            for n in range(n_show):
                d = gap(params.g, n)
                ratio = abs(v) / d**2 if d > 0 else np.inf
                crossings.append(Crossing(float(t), n, d, v, ratio, params.g, br))
    crossings.sort(key=lambda c: (c.time, c.n))
    return EnergyDiagram(times, ladder - eps, ladder + eps, crossings)


def arp_check(crossing: Crossing, n_photons: float,
              threshold: float = ARP_THRESHOLD) -> tuple[bool, float]:
    """Adiabaticity of a passage: |v| / Delta^2 with Delta = 2 g sqrt(n + 1)."""
    if n_photons < 0:
        raise ValueError("n_photons >= 0 required")
    d2 = gap(crossing.g, n_photons) ** 2
    ratio = abs(crossing.sweep_rate) / d2 if d2 > 0 else np.inf
    return bool(ratio < threshold), float(ratio)


@dataclass
class SpectrumResult:
    frequencies: np.ndarray  # cyclic (cycles per 1/omega_0)
    magnitudes: np.ndarray
    peak_frequency: float
    resolution: float  # native Fourier spacing 1 / (N dt)
    fit: tuple | None = None


def plz_spectrum(series, sample_dt: float, guard: float = GUARD_BAND,
                 pad: int = PAD_FACTOR) -> SpectrumResult:
    """Mean-subtracted, Hann-windowed, zero-padded FFT magnitude.

    Frequencies are cyclic, f = omega / (2 pi), in omega_0 units: a component
    cos(omega t) appears at omega / (2 pi). The fast population oscillation at
    angular frequency 2 omega_r therefore shows up at omega_r / pi. The peak is
    the largest magnitude above ``guard``.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < MIN_SAMPLES:
        raise ValueError(f"need a 1-d series of at least {MIN_SAMPLES} samples")
    if not sample_dt > 0:
        raise ValueError("sample_dt > 0 required")
    x = (x - x.mean()) * np.hanning(x.size)
    n_fft = pad * x.size
    mag = np.abs(np.fft.rfft(x, n_fft))
    freqs = np.fft.rfftfreq(n_fft, sample_dt)
    band = freqs > guard
    if not np.any(band):
        raise ValueError("guard band removes every frequency")
    i = np.flatnonzero(band)[np.argmax(mag[band])]
    return SpectrumResult(freqs, mag, float(freqs[i]), 1.0 / (x.size * sample_dt))


def fit_peak_law(omega_r, peaks) -> tuple[float, float, float]:
    """Least-squares line peak = slope * omega_r + intercept; returns the rms residual too."""
    x = np.asarray(omega_r, dtype=float)
    y = np.asarray(peaks, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - slope * x - intercept) ** 2)))
    return float(slope), float(intercept), resid


def localization_metric(record, min_span: float = MIN_LOCALIZATION_SPAN) -> float:
    """Average of |Z| / N over the second half of a trajectory record."""
    t = np.asarray(record["t"])
    if t[-1] - t[0] < min_span:
        raise ValueError(f"record must span at least {min_span} time units")
    half = t >= t[0] + 0.5 * (t[-1] - t[0])
    z = np.asarray(record["Z"])[half]
    n = np.asarray(record["N_total"])[half]
    return float(np.mean(np.abs(z) / n))
