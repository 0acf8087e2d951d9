"""Model parameters for the driven Rabi dimer coupled to a single phonon mode.

Units: energies and rates in omega_0, hbar = 1, time is the dimensionless omega_0*t.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class DriveParams:
    """Harmonic sigma_z drive ``(F/2) cos(Omega t + Phi)`` on one qubit."""

    F: float = 0.0
    Omega: float = 0.05
    Phi: float = 0.0


@dataclass(frozen=True)
class ModelParams:
    omega_r: float = 10.0
    g: float = 0.3
    J: float = 0.01
    omega_ph: float = 0.0
    alpha: float = 0.0
    drive_L: DriveParams = field(default_factory=DriveParams)
    drive_R: DriveParams = field(default_factory=DriveParams)

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError("omega_r > 0 required")
        for name in ("omega_ph", "g", "J", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} >= 0 required")

    def swapped(self) -> "ModelParams":
        """Same model with the left and right drives exchanged."""
        return replace(self, drive_L=self.drive_R, drive_R=self.drive_L)

    def mode_matrix(self) -> np.ndarray:
        """Quadratic boson form W with H_boson = sum_jk W_jk b_j^+ b_k over (L, R, phonon)."""
        w, J = self.omega_r, self.J
        return np.array(
            [[w, -J, 0.0], [-J, w, 0.0], [0.0, 0.0, self.omega_ph]], dtype=float
        )


def bias(drive: DriveParams, t: float) -> float:
    """Instantaneous sigma_z coefficient (F/2) cos(Omega t + Phi)."""
    return 0.5 * drive.F * np.cos(drive.Omega * t + drive.Phi)


def sweep_rate(drive: DriveParams, t: float) -> float:
    """Time derivative of :func:`bias`, -Omega F sin(Omega t + Phi) / 2."""
    return -0.5 * drive.Omega * drive.F * np.sin(drive.Omega * t + drive.Phi)
