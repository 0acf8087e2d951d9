"""Variational equations of motion for the multi-D2 state.

The Dirac-Frenkel conditions are written for the holomorphic parametrisation
``|psi> = sum_n sum_s a_sn |s> exp(z_n . b^+)|0>`` and then rescaled to the
normalised amplitudes ``A_sn = a_sn exp(|z_n|^2 / 2)`` stored in
:class:`~rabidimer.ansatz.MultiD2State`. After the rescaling every matrix
element carries the normalised overlap ``S_ln``, which stays O(1) for
large photon numbers.

The linear unknowns are ``(k_sn, zdot_jn)`` where ``zdot`` are the displacement
derivatives and ``k_sn = Adot_sn - A_sn Re(z_n^* . zdot_n)`` is the amplitude
derivative in the holomorphic gauge. :func:`to_state_derivative` converts back.
Unknowns (and rows) are ordered (A.., B.., C.., D.., mu.., nu.., eta..).

Equations, with rho_ln = sum_s A*_sl A_sn and (HA)_sln = sum_s' h_ss'(l, n) A_s'n::

    amplitude rows (s, l):
        sum_n S_ln [k_sn + A_sn z*_l.zdot_n] = -i sum_n S_ln (HA)_sln
    displacement rows (j, l):
        sum_n S_ln [z_nj sum_s A*_sl k_sn + rho_ln (zdot_nj + z_nj z*_l.zdot_n)]
          = -i sum_n S_ln [z_nj sum_s A*_sl (HA)_sln + rho_ln (W z_n)_j
                           + sum_ss' A*_sl V^j_ss' A_s'n]

with the boson-coherent matrix element of H between configurations l and n::

    h_ss'(l, n) = delta_ss' (z*_l W z_n + e_s) + sum_j V^j_ss' (z*_lj + z_nj)

where W is the quadratic mode form, e_s the qubit bias energy and V^j the
qubit operator multiplying the linear coupling of mode j: -g sigma_x^L for the
left photon, -g sigma_x^R for the right photon and alpha (sigma_z^L + sigma_z^R)
for the phonon.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import FLIP_L, FLIP_R, SIGMA_Z_L, SIGMA_Z_R, MultiD2State, log_overlap
from .params import ModelParams, bias

DEFAULT_SVD_CUTOFF = 1e-10


class SolverFailure(ArithmeticError):
    pass


@dataclass
class EomSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    condition_estimate: float = np.nan
    hermitian: bool = True


@dataclass
class SolveInfo:
    discarded: int
    condition_estimate: float


def _coupling_action(params: ModelParams, amps: np.ndarray) -> np.ndarray:
    """V^j applied to every amplitude column; returns (3, 4, M)."""
    out = np.empty((3,) + amps.shape, dtype=complex)
    out[0] = -params.g * amps[FLIP_L]
    out[1] = -params.g * amps[FLIP_R]
    out[2] = params.alpha * (SIGMA_Z_L + SIGMA_Z_R)[:, None] * amps
    return out


def _hamiltonian_action(state: MultiD2State, params: ModelParams, t: float):
    """Return S, (HA)_sln and V^j A with the pieces reused by the assembler."""
    A = state.amplitudes
    z = state.displacements
    W = params.mode_matrix()
    S = np.exp(log_overlap(z))
    Xi = z.conj().T @ W @ z
    e = bias(params.drive_L, t) * SIGMA_Z_L + bias(params.drive_R, t) * SIGMA_Z_R
    VA = _coupling_action(params, A)  # (j, s, n)
    # (HA)[s, l, n]
    HA = (Xi[None, :, :] + e[:, None, None]) * A[:, None, :]
    zsum = z.conj()[:, :, None] + z[:, None, :]  # (j, l, n)
    HA += np.einsum("jln,jsn->sln", zsum, VA)
    return S, HA, VA, W


def assemble(state: MultiD2State, params: ModelParams, t: float | None = None) -> EomSystem:
    if t is None:
        t = state.t
    A = state.amplitudes
    z = state.displacements
    M = state.M
    S, HA, VA, W = _hamiltonian_action(state, params, t)
    zc = z.conj()
    rho = A.conj().T @ A  # (l, n)

    mat = np.zeros((7, M, 7, M), dtype=complex)
    # amplitude rows / amplitude columns
    for s in range(4):
        mat[s, :, s, :] = S
    # amplitude rows / displacement columns: S_ln A_sn z*_lk
    mat[:4, :, 4:, :] = np.einsum("ln,sn,kl->slkn", S, A, zc)
    # displacement rows / amplitude columns: S_ln z_nj A*_sl
    mat[4:, :, :4, :] = np.einsum("ln,jn,sl->jlsn", S, z, A.conj())
    # displacement rows / displacement columns: S_ln rho_ln (delta_jk + z_nj z*_lk)
    Srho = S * rho
    mat[4:, :, 4:, :] = np.einsum("ln,jn,kl->jlkn", Srho, z, zc)
    for j in range(3):
        mat[4 + j, :, 4 + j, :] += Srho

    rhs = np.empty((7, M), dtype=complex)
    rhs[:4] = -1j * np.einsum("ln,sln->sl", S, HA)
    AcHA = np.einsum("sl,sln->ln", A.conj(), HA)
    AcVA = np.einsum("sl,jsn->jln", A.conj(), VA)
    Wz = W @ z
    rhs[4:] = -1j * (
        np.einsum("ln,jn,ln->jl", S, z, AcHA)
        + np.einsum("ln,jn->jl", Srho, Wz)
        + np.einsum("ln,jln->jl", S, AcVA)
    )
    return EomSystem(mat.reshape(7 * M, 7 * M), rhs.reshape(7 * M))


REGULARIZATION = "smooth"
EQUILIBRATE = True
EQUILIBRATION_FLOOR = 1e-8


def solve(system: EomSystem, svd_cutoff: float = DEFAULT_SVD_CUTOFF,
          return_info: bool = False, regularization: str | None = None,
          anchor: np.ndarray | None = None, equilibrate: bool | None = None):
    """Regularised least-squares solution of the Gram system.

    The assembled matrix is a Gram matrix of tangent vectors, hence Hermitian
    positive semidefinite, so its singular values are its eigenvalues and
    ``eigh`` gives the same spectral pseudo-inverse as an SVD.

    ``regularization="cutoff"`` discards eigenvalues below ``svd_cutoff`` times
    the largest; ``"smooth"`` (default) uses the Tikhonov filter
    lambda / (lambda^2 + eps^2) with eps = ``svd_cutoff`` times the largest, which
    keeps the vector field continuous when eigenvalues cross the threshold.

    With ``equilibrate`` the matrix is first scaled symmetrically to unit
    diagonal (diagonal entries below ``EQUILIBRATION_FLOOR`` times the largest are
    floored there), so that configurations with very different weights are
    regularised on the same relative scale.

    ``anchor`` is the coefficient vector whose tangent image is the state itself
    (every amplitude derivative equal to its amplitude, displacements frozen).
    When given, that one direction is solved exactly and the regularised
    inverse only acts on its complement, which keeps the norm of the flow
    conserved however ill-conditioned the rest of the metric is.
    """
    if not svd_cutoff > 0:
        raise ValueError("svd_cutoff > 0 required")
    mode = regularization or REGULARIZATION
    if mode not in ("smooth", "cutoff"):
        raise ValueError(f"unknown regularization '{mode}'")
    if equilibrate is None:
        equilibrate = EQUILIBRATE
    G = system.matrix
    if not system.hermitian:
        return _solve_svd(system, svd_cutoff, return_info)
    diag = np.real(np.diagonal(G))
    dmax = diag.max() if diag.size else 0.0
    if not dmax > 0:
        raise SolverFailure("coefficient matrix is identically zero")
    if equilibrate:
        scale = 1.0 / np.sqrt(np.maximum(diag, EQUILIBRATION_FLOOR * dmax))
    else:
        scale = np.ones_like(diag)
    evals, vecs = np.linalg.eigh(scale[:, None] * G * scale[None, :])
    lmax = np.abs(evals).max()
    eps = svd_cutoff * lmax
    keep = np.abs(evals) > eps
    if mode == "smooth":
        filt = evals / (evals**2 + eps**2)
    else:
        filt = np.where(keep, 1.0 / np.where(keep, evals, 1.0), 0.0)

    def pinv(b):
        return scale * (vecs @ (filt * (vecs.conj().T @ (scale * b))))

    x = pinv(system.rhs)
    if anchor is not None:
        x = _anchor_exact(G, system.rhs, x, anchor, pinv)
    cond = float(lmax / np.abs(evals[keep]).min()) if keep.any() else np.inf
    system.condition_estimate = cond
    if return_info:
        return x, SolveInfo(discarded=int(evals.size - keep.sum()), condition_estimate=cond)
    return x


def _solve_svd(system: EomSystem, svd_cutoff: float, return_info: bool):
    U, sv, Vh = np.linalg.svd(system.matrix)
    if sv[0] == 0.0:
        raise SolverFailure("coefficient matrix is identically zero")
    keep = sv > svd_cutoff * sv[0]
    x = Vh[keep].conj().T @ ((U[:, keep].conj().T @ system.rhs) / sv[keep])
    cond = float(sv[0] / sv[keep].min())
    system.condition_estimate = cond
    if return_info:
        return x, SolveInfo(discarded=int(sv.size - keep.sum()), condition_estimate=cond)
    return x


def _anchor_exact(G, rhs, x, x0, pinv):
    """Solve with the projector |psi><psi|/N + Q P Q, Q the complement of psi."""
    Gx0 = G @ x0
    nrm = float(np.vdot(x0, Gx0).real)
    if nrm <= 0:
        return x
    e = np.vdot(x0, rhs) / nrm  # -i <psi|H|psi> / <psi|psi>
    y = pinv(rhs - Gx0 * e)
    return x0 * e + y - x0 * (np.vdot(Gx0, y) / nrm)


def to_state_derivative(state: MultiD2State, raw: np.ndarray) -> np.ndarray:
    """Convert a raw solution (k, zdot) to d/dt of the stored (A, z) vector."""
    M = state.M
    k = raw[: 4 * M].reshape(4, M)
    zdot = raw[4 * M :].reshape(3, M)
    growth = np.real(np.sum(state.displacements.conj() * zdot, axis=0))
    adot = k + state.amplitudes * growth[None, :]
    return np.concatenate([adot.ravel(), zdot.ravel()])


def derivatives(state: MultiD2State, params: ModelParams, t: float | None = None,
                svd_cutoff: float = DEFAULT_SVD_CUTOFF, return_info: bool = False):
    """d/dt of the state vector (see ``MultiD2State.to_vector``) at time t."""
    system = assemble(state, params, t)
    x0 = np.concatenate([state.amplitudes.ravel(), np.zeros(3 * state.M, dtype=complex)])
    raw, info = solve(system, svd_cutoff, return_info=True, anchor=x0)
    d = to_state_derivative(state, raw)
    if return_info:
        return d, info
    return d


def norm_rate(state: MultiD2State, dvec: np.ndarray) -> float:
    """d/dt <psi|psi> = 2 Re <psi|psi-dot> for a state-vector derivative ``dvec``."""
    M = state.M
    A = state.amplitudes
    z = state.displacements
    adot = dvec[: 4 * M].reshape(4, M)
    zdot = dvec[4 * M :].reshape(3, M)
    S = np.exp(log_overlap(z))
    # d/dt of a normalised coherent state |z_n> projected on <z_l|
    proj = z.conj().T @ zdot - np.real(np.sum(z.conj() * zdot, axis=0))[None, :]
    val = np.sum(S * (A.conj().T @ adot + (A.conj().T @ A) * proj))
    return float(2 * val.real)


def energy_rate(state: MultiD2State, dvec: np.ndarray, params: ModelParams,
                t: float | None = None) -> float:
    """d/dt <psi|H|psi> at frozen time (explicit drive dependence excluded)."""
    tt = state.t if t is None else t
    return _directional(state, dvec, lambda s: expectation_energy(s, params, tt))


def _directional(state: MultiD2State, dvec: np.ndarray, fn, h: float = 1e-5) -> float:
    v = state.to_vector()
    plus = MultiD2State.from_vector(v + h * dvec, state.t)
    minus = MultiD2State.from_vector(v - h * dvec, state.t)
    return (fn(plus) - fn(minus)) / (2 * h)


def expectation_energy(state: MultiD2State, params: ModelParams, t: float | None = None) -> float:
    """<psi|H(t)|psi>, not divided by the norm."""
    if t is None:
        t = state.t
    S, HA, _, _ = _hamiltonian_action(state, params, t)
    val = np.einsum("sl,ln,sln->", state.amplitudes.conj(), S, HA)
    return float(val.real)
