"""Brute-force reference propagator in a truncated Fock basis.

Basis ordering is |qubits> x |n_L> x |n_R> x |n_ph> with the qubit index in the
same (up-up, up-down, down-up, down-down) order as the variational amplitudes.
Only meant for small photon numbers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .ansatz import FLIP_L, FLIP_R, SIGMA_Z_L, SIGMA_Z_R
from .observables import COLUMNS, TrajectoryRecord
from .params import ModelParams, bias

LEAKAGE_ABORT = 1e-4


class FockLeakage(RuntimeError):
    pass


@dataclass(frozen=True)
class FockConfig:
    n_max_L: int = 12
    n_max_R: int = 12
    n_max_ph: int = 8

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (4, self.n_max_L + 1, self.n_max_R + 1, self.n_max_ph + 1)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


def _annihilation(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr")


def _permutation(perm) -> sp.csr_matrix:
    m = sp.lil_matrix((4, 4))
    for i, j in enumerate(perm):
        m[i, j] = 1.0
    return m.tocsr()


def _embed(ops) -> sp.csr_matrix:
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return out


_FLIP_L = np.asarray(FLIP_L)
_FLIP_R = np.asarray(FLIP_R)
_ZSUM = np.asarray(SIGMA_Z_L + SIGMA_Z_R)


@numba.njit(cache=True)
def _apply_h(psi, diag, g, J, alpha, out):
    """out = H psi with H = diag + hopping + qubit-photon + qubit-phonon terms,
    psi laid out as (qubit, n_L, n_R, n_ph)."""
    nq, nl, nr, nph = psi.shape
    for q in range(nq):
        ql = _FLIP_L[q]
        qr = _FLIP_R[q]
        cz = alpha * _ZSUM[q]
        for i in range(nl):
            for j in range(nr):
                for k in range(nph):
                    v = diag[q, i, j, k] * psi[q, i, j, k]
                    if i > 0 and j < nr - 1:
                        v -= J * np.sqrt(i * (j + 1.0)) * psi[q, i - 1, j + 1, k]
                    if j > 0 and i < nl - 1:
                        v -= J * np.sqrt((i + 1.0) * j) * psi[q, i + 1, j - 1, k]
                    if i > 0:
                        v -= g * np.sqrt(i * 1.0) * psi[ql, i - 1, j, k]
                    if i < nl - 1:
                        v -= g * np.sqrt(i + 1.0) * psi[ql, i + 1, j, k]
                    if j > 0:
                        v -= g * np.sqrt(j * 1.0) * psi[qr, i, j - 1, k]
                    if j < nr - 1:
                        v -= g * np.sqrt(j + 1.0) * psi[qr, i, j + 1, k]
                    if cz != 0.0:
                        if k > 0:
                            v += cz * np.sqrt(k * 1.0) * psi[q, i, j, k - 1]
                        if k < nph - 1:
                            v += cz * np.sqrt(k + 1.0) * psi[q, i, j, k + 1]
                    out[q, i, j, k] = v
    return out


class FockOperators:
    """Static pieces of H plus number operators, built once per (params, config)."""

    def __init__(self, params: ModelParams, config: FockConfig):
        _, nl, nr, nph = config.dims
        I4, IL, IR, IP = (sp.identity(d, format="csr") for d in config.dims)
        aL, aR, b = _annihilation(nl - 1), _annihilation(nr - 1), _annihilation(nph - 1)
        self.aL = _embed([I4, aL, IR, IP])
        self.aR = _embed([I4, IL, aR, IP])
        self.b = _embed([I4, IL, IR, b])
        self.zL = _embed([sp.diags(SIGMA_Z_L), IL, IR, IP])
        self.zR = _embed([sp.diags(SIGMA_Z_R), IL, IR, IP])
        xL = _embed([_permutation(FLIP_L), IL, IR, IP])
        xR = _embed([_permutation(FLIP_R), IL, IR, IP])
        self.nL = (self.aL.T @ self.aL).tocsr()
        self.nR = (self.aR.T @ self.aR).tocsr()
        self.nph = (self.b.T @ self.b).tocsr()
        p = params
        self.H0 = (
            p.omega_r * (self.nL + self.nR)
            - p.J * (self.aL.T @ self.aR + self.aR.T @ self.aL)
            - p.g * (xL @ (self.aL + self.aL.T)) - p.g * (xR @ (self.aR + self.aR.T))
            + p.omega_ph * self.nph
            + p.alpha * ((self.zL + self.zR) @ (self.b + self.b.T))
        ).tocsr()
        self.params = params
        self.config = config
        self._up_L = (self.zL.diagonal() + 1) / 2
        self._up_R = (self.zR.diagonal() + 1) / 2
        self._nL = self.nL.diagonal()
        self._nR = self.nR.diagonal()
        self._nph = self.nph.diagonal()
        self._top = self._top_shell_mask()
        self._free = (p.omega_r * (self._nL + self._nR) + p.omega_ph * self._nph).reshape(config.dims)
        self._zl = self.zL.diagonal().reshape(config.dims)
        self._zr = self.zR.diagonal().reshape(config.dims)
        self._buf = np.empty(config.dims, dtype=complex)

    def _top_shell_mask(self) -> np.ndarray:
        _, nl, nr, nph = self.config.dims
        idx = np.indices((4, nl, nr, nph)).reshape(4, -1)
        mask = np.zeros(idx.shape[1], dtype=bool)
        # a cutoff of 0 freezes the mode in vacuum; it has no shell to leak from
        for axis, n in ((1, nl), (2, nr), (3, nph)):
            if n > 1:
                mask |= idx[axis] == n - 1
        return mask

    def hamiltonian(self, t: float) -> sp.csr_matrix:
        p = self.params
        return (self.H0 + bias(p.drive_L, t) * self.zL + bias(p.drive_R, t) * self.zR).tocsr()

    def apply_sparse(self, t: float, psi: np.ndarray) -> np.ndarray:
        """H(t) psi through the assembled sparse matrix (slow, reference path)."""
        return self.hamiltonian(t) @ psi

    def apply_h(self, t: float, psi: np.ndarray) -> np.ndarray:
        """H(t) psi through the fused tensor kernel."""
        p = self.params
        diag = self._free + bias(p.drive_L, t) * self._zl + bias(p.drive_R, t) * self._zr
        out = _apply_h(psi.reshape(self.config.dims), diag, p.g, p.J, p.alpha, self._buf)
        return out.ravel().copy()

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        """-i H(t) psi."""
        return -1j * self.apply_h(t, psi)

    def leakage(self, psi: np.ndarray) -> float:
        return float(np.sum(np.abs(psi[self._top]) ** 2))

    def observables(self, t: float, psi: np.ndarray) -> dict:
        prob = np.abs(psi) ** 2
        nrm = float(prob.sum())
        nl = float(prob @ self._nL) / nrm
        nr = float(prob @ self._nR) / nrm
        nph = float(prob @ self._nph) / nrm
        pl = float(prob @ self._up_L) / nrm
        pr = float(prob @ self._up_R) / nrm
        energy = float(np.vdot(psi, self.apply_h(t, psi)).real) / nrm
        return {
            "t": t, "N_L": nl, "N_R": nr, "N_total": nl + nr, "Z": nl - nr,
            "sigma_z_L": 2 * pl - 1, "sigma_z_R": 2 * pr - 1,
            "P_LZ_L": pl, "P_LZ_R": pr, "N_ph": nph,
            "E_ph": self.params.omega_ph * nph, "norm": nrm, "energy": energy,
            "cond_estimate": 1.0, "leakage": self.leakage(psi),
        }


def build_hamiltonian(params: ModelParams, config: FockConfig, t: float) -> sp.csr_matrix:
    return FockOperators(params, config).hamiltonian(t)


def coherent_amplitudes(alpha: complex, n_max: int) -> tuple[np.ndarray, float]:
    """Fock expansion of |alpha> up to n_max and the norm lost to truncation."""
    n = np.arange(n_max + 1)
    logmag = -0.5 * abs(alpha) ** 2 - 0.5 * gammaln(n + 1)
    if alpha == 0:
        c = (n == 0).astype(complex)
    else:
        c = np.exp(logmag + n * np.log(abs(alpha))) * np.exp(1j * n * np.angle(alpha))
    lost = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    return c, lost


def initial_state(config: FockConfig, n_photons_left: float = 2.0, qubit_index: int = 3,
                  side: str = "L") -> tuple[np.ndarray, float]:
    """Product state |qubits> |sqrt(n)>_L |0>_R |0>_ph (or mirrored), renormalised.

    Returns the vector and the truncation loss before renormalisation.
    """
    _, nl, nr, nph = config.dims
    q = np.zeros(4, dtype=complex)
    q[qubit_index] = 1.0
    amp = np.sqrt(n_photons_left)
    if side == "L":
        cl, lost = coherent_amplitudes(amp, nl - 1)
        cr, _ = coherent_amplitudes(0.0, nr - 1)
    else:
        cl, _ = coherent_amplitudes(0.0, nl - 1)
        cr, lost = coherent_amplitudes(amp, nr - 1)
    cp, _ = coherent_amplitudes(0.0, nph - 1)
    psi = np.kron(np.kron(np.kron(q, cl), cr), cp)
    return psi / np.linalg.norm(psi), lost


@dataclass
class ExactTrajectory:
    record: TrajectoryRecord
    truncation_loss: float = 0.0
    max_leakage: float = 0.0


def propagate_exact(initial: np.ndarray, params: ModelParams, config: FockConfig,
                    dt: float, t_end: float, output_stride: int = 1,
                    leakage_abort: float = LEAKAGE_ABORT,
                    truncation_loss: float = 0.0) -> ExactTrajectory:
    """Classical RK4 integration of i psi' = H(t) psi on the Fock grid.

    ``truncation_loss`` (from :func:`initial_state`) is passed through to the
    result so that the error budget of a comparison stays auditable.

    The record has the variational schema plus a ``leakage`` column holding the
    population of the outermost kept shell.
    """
    ops = FockOperators(params, config)
    psi = np.asarray(initial, dtype=complex).copy()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("initial Fock vector must be normalised")
    record = TrajectoryRecord(columns=COLUMNS + ("leakage",))
    n_steps = int(round(t_end / dt))
    max_leak = 0.0
    for k in range(n_steps + 1):
        t = k * dt
        if k % output_stride == 0 or k == n_steps:
            row = ops.observables(t, psi)
            max_leak = max(max_leak, row["leakage"])
            if row["leakage"] > leakage_abort:
                raise FockLeakage(f"top-shell population {row['leakage']:.2e} at t={t:.4g}")
            record.append(row)
        if k == n_steps:
            break
        k1 = ops.apply(t, psi)
        k2 = ops.apply(t + dt / 2, psi + dt / 2 * k1)
        k3 = ops.apply(t + dt / 2, psi + dt / 2 * k2)
        k4 = ops.apply(t + dt, psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return ExactTrajectory(record=record, truncation_loss=truncation_loss, max_leakage=max_leak)
