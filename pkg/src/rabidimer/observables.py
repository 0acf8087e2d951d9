"""Physical observables of a multi-D2 state and the per-trajectory record."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .ansatz import SIGMA_Z_L, SIGMA_Z_R, MultiD2State, log_overlap, weighted_sum
from .eom import expectation_energy
from .params import ModelParams

log = logging.getLogger(__name__)

COLUMNS = (
    "t", "N_L", "N_R", "N_total", "Z", "sigma_z_L", "sigma_z_R",
    "P_LZ_L", "P_LZ_R", "N_ph", "E_ph", "norm", "energy", "cond_estimate",
)

IMAG_WARN = 1e-8
IMAG_FAIL = 1e-10

_UP_L = (SIGMA_Z_L + 1) / 2
_UP_R = (SIGMA_Z_R + 1) / 2


def _real(val: complex, what: str, scale: float = 1.0) -> float:
    if abs(val.imag) > IMAG_WARN * max(1.0, scale):
        log.warning("%s has imaginary residue %.3e", what, val.imag)
    return float(val.real)


def _mode_population(state: MultiD2State, j: int, S=None) -> complex:
    if S is None:
        S = np.exp(log_overlap(state.displacements))
    a = state.amplitudes
    z = state.displacements[j]
    rho = a.conj().T @ a
    return np.sum(rho * np.outer(z.conj(), z) * S)


def photon_numbers(state: MultiD2State) -> tuple[float, float]:
    S = np.exp(log_overlap(state.displacements))
    nl = _mode_population(state, 0, S)
    nr = _mode_population(state, 1, S)
    return _real(nl, "N_L", abs(nl)), _real(nr, "N_R", abs(nr))


def photon_imbalance(state: MultiD2State) -> float:
    nl, nr = photon_numbers(state)
    return nl - nr


def total_photons(state: MultiD2State) -> float:
    nl, nr = photon_numbers(state)
    return nl + nr


def qubit_polarization(state: MultiD2State) -> tuple[float, float]:
    return (
        _real(weighted_sum(state, SIGMA_Z_L), "sigma_z_L"),
        _real(weighted_sum(state, SIGMA_Z_R), "sigma_z_R"),
    )


def lz_probability(state: MultiD2State, normalize: bool = True) -> tuple[float, float]:
    """Up-state populations of the left and right qubits.

    Divided by the current norm unless ``normalize`` is False.
    """
    pl = _real(weighted_sum(state, _UP_L), "P_LZ_L")
    pr = _real(weighted_sum(state, _UP_R), "P_LZ_R")
    if normalize:
        nrm = float(weighted_sum(state, np.ones(4)).real)
        return pl / nrm, pr / nrm
    return pl, pr


def phonon_observables(state: MultiD2State, params: ModelParams) -> tuple[float, float]:
    nph = _mode_population(state, 2)
    n = _real(nph, "N_ph", abs(nph))
    return n, params.omega_ph * n


def total_energy(state: MultiD2State, params: ModelParams, t: float | None = None) -> float:
    return expectation_energy(state, params, t)


def snapshot(state: MultiD2State, params: ModelParams, cond_estimate: float = np.nan) -> dict:
    """One record row. Everything except ``norm`` is divided by the current norm."""
    S = np.exp(log_overlap(state.displacements))
    nrm = float(weighted_sum(state, np.ones(4), S).real)
    nl = _real(_mode_population(state, 0, S), "N_L") / nrm
    nr = _real(_mode_population(state, 1, S), "N_R") / nrm
    nph = _real(_mode_population(state, 2, S), "N_ph") / nrm
    pl = _real(weighted_sum(state, _UP_L, S), "P_LZ_L") / nrm
    pr = _real(weighted_sum(state, _UP_R, S), "P_LZ_R") / nrm
    szl = _real(weighted_sum(state, SIGMA_Z_L, S), "sigma_z_L") / nrm
    szr = _real(weighted_sum(state, SIGMA_Z_R, S), "sigma_z_R") / nrm
    return {
        "t": state.t,
        "N_L": nl,
        "N_R": nr,
        "N_total": nl + nr,
        "Z": nl - nr,
        "sigma_z_L": szl,
        "sigma_z_R": szr,
        "P_LZ_L": pl,
        "P_LZ_R": pr,
        "N_ph": nph,
        "E_ph": params.omega_ph * nph,
        "norm": nrm,
        "energy": expectation_energy(state, params) / nrm,
        "cond_estimate": cond_estimate,
    }


@dataclass
class TrajectoryRecord:
    columns: tuple = COLUMNS
    rows: list = field(default_factory=list)

    def append(self, row: dict) -> None:
        self.rows.append(tuple(float(row[c]) for c in self.columns))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.column(name)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.rows), len(self.columns))

    def write_csv(self, path) -> None:
        """Header row plus one line per record, 17 significant digits."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([f"{v:.17g}" for v in r])

    @classmethod
    def read_csv(cls, path) -> "TrajectoryRecord":
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = tuple(next(rd))
            rows = [tuple(float(v) for v in line) for line in rd if line]
        return cls(columns=header, rows=rows)
