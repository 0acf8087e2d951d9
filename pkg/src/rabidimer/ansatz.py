"""Multi-D2 variational state: M configurations, each a four-component qubit
amplitude times coherent states of the left photon, right photon and phonon modes.

Amplitude rows are ordered (up-up, up-down, down-up, down-down), with the left
qubit first. Displacement rows are (mu, nu, eta) for (L photon, R photon, phonon).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

# qubit basis bookkeeping, rows of the amplitude array
SIGMA_Z_L = np.array([1.0, 1.0, -1.0, -1.0])
SIGMA_Z_R = np.array([1.0, -1.0, 1.0, -1.0])
FLIP_L = np.array([2, 3, 0, 1])  # sigma_x on the left qubit permutes rows
FLIP_R = np.array([1, 0, 3, 2])
MIRROR = np.array([0, 2, 1, 3])  # L <-> R relabelling of the qubit basis

NOISE_RADIUS = 1e-3


@dataclass
class MultiD2State:
    amplitudes: np.ndarray  # (4, M) complex
    displacements: np.ndarray  # (3, M) complex
    t: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        self.displacements = np.asarray(self.displacements, dtype=complex)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[0] != 4:
            raise ValueError("amplitudes must have shape (4, M)")
        if self.displacements.shape != (3, self.amplitudes.shape[1]):
            raise ValueError("displacements must have shape (3, M)")

    @property
    def M(self) -> int:
        return self.amplitudes.shape[1]

    def copy(self) -> "MultiD2State":
        return MultiD2State(self.amplitudes.copy(), self.displacements.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.amplitudes)) and np.all(np.isfinite(self.displacements))
        )

    def to_vector(self) -> np.ndarray:
        """Flatten to the 7M ordering (A.., B.., C.., D.., mu.., nu.., eta..)."""
        return np.concatenate([self.amplitudes.ravel(), self.displacements.ravel()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, t: float = 0.0) -> "MultiD2State":
        vec = np.asarray(vec, dtype=complex)
        M = vec.size // 7
        if vec.size != 7 * M:
            raise ValueError("vector length must be a multiple of 7")
        return cls(vec[: 4 * M].reshape(4, M).copy(), vec[4 * M :].reshape(3, M).copy(), t)

    def mirrored(self) -> "MultiD2State":
        """Exchange the roles of the left and right monomers."""
        disp = self.displacements[[1, 0, 2]]
        return MultiD2State(self.amplitudes[MIRROR].copy(), disp.copy(), self.t)

    def save(self, path) -> None:
        """Write a plain-text checkpoint.

        Layout: a ``# M=<M> t=<t>`` header followed by 7M lines ``re im`` in the
        :meth:`to_vector` order.
        """
        lines = [f"# M={self.M} t={float(self.t)!r}"]
        lines += [f"{float(z.real)!r} {float(z.imag)!r}" for z in self.to_vector()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "MultiD2State":
        text = Path(path).read_text().splitlines()
        header = dict(kv.split("=") for kv in text[0].lstrip("# ").split())
        vals = np.array([complex(*map(float, ln.split())) for ln in text[1:] if ln.strip()])
        state = cls.from_vector(vals, float(header["t"]))
        if state.M != int(header["M"]):
            raise ValueError("checkpoint header does not match its body")
        return state


def initialize(M: int, n_photons_left: float = 20.0, seed: int = 0,
               side: str = "L", noise: float = NOISE_RADIUS,
               seed_around: str = "occupied") -> MultiD2State:
    """Both qubits down, a coherent state with ``n_photons_left`` photons in one
    resonator, the other resonator and the phonon in vacuum.

    Only the first configuration is populated. The empty configurations get
    displacements drawn uniformly from a disc of radius ``noise`` using
    ``numpy.random.default_rng(seed)`` (PCG64), so that the variational
    metric is not rank deficient at t = 0. The disc is centred on the occupied
    configuration (``seed_around="occupied"``) or on the vacuum
    (``seed_around="vacuum"``); the former keeps every configuration close to
    the wave packet and is markedly more accurate. ``side="R"`` builds the exact mirror
    image of the ``side="L"`` state, noise included.
    """
    if M < 1:
        raise ValueError("M >= 1 required")
    if n_photons_left < 0:
        raise ValueError("n_photons_left >= 0 required")
    amps = np.zeros((4, M), dtype=complex)
    amps[3, 0] = 1.0
    disp = np.zeros((3, M), dtype=complex)
    rng = np.random.default_rng(seed)
    if M > 1:
        r = noise * np.sqrt(rng.uniform(size=(3, M - 1)))
        phi = rng.uniform(0.0, 2 * np.pi, size=(3, M - 1))
        disp[:, 1:] = r * np.exp(1j * phi)
    disp[0, 0] = np.sqrt(n_photons_left)
    if seed_around == "occupied":
        disp[0, 1:] += disp[0, 0]
    elif seed_around != "vacuum":
        raise ValueError("seed_around must be 'occupied' or 'vacuum'")
    state = MultiD2State(amps, disp, 0.0)
    if side == "R":
        return state.mirrored()
    if side != "L":
        raise ValueError("side must be 'L' or 'R'")
    return state


@dataclass
class OverlapTables:
    S_bar: np.ndarray
    S: np.ndarray
    Xi: np.ndarray


def log_overlap(disp: np.ndarray) -> np.ndarray:
    """log S_ln = z_l^* . z_n - |z_l|^2/2 - |z_n|^2/2 for displacement columns z."""
    cross = disp.conj().T @ disp
    sq = 0.5 * np.sum(np.abs(disp) ** 2, axis=0)
    return cross - sq[:, None] - sq[None, :]


def overlaps(state: MultiD2State, mode_matrix: np.ndarray | None = None) -> OverlapTables:
    """Coherent-state overlap tables.

    ``mode_matrix`` is the quadratic boson form (see ``ModelParams.mode_matrix``);
    without it ``Xi`` is returned as zeros.
    """
    z = state.displacements
    S = np.exp(log_overlap(z))
    S_bar = np.exp(z.conj().T @ z)
    if mode_matrix is None:
        Xi = np.zeros_like(S)
    else:
        Xi = z.conj().T @ mode_matrix @ z
    return OverlapTables(S_bar=S_bar, S=S, Xi=Xi)


def weighted_sum(state: MultiD2State, weights, S: np.ndarray | None = None) -> complex:
    """sum_{l,n,s} w_s A*_{sl} A_{sn} S_ln for per-qubit-state weights w."""
    if S is None:
        S = np.exp(log_overlap(state.displacements))
    a = state.amplitudes
    rho = (a.conj() * np.asarray(weights, dtype=float)[:, None]).T @ a
    return np.sum(rho * S)


def norm(state: MultiD2State) -> float:
    S = np.exp(log_overlap(state.displacements))
    val = weighted_sum(state, np.ones(4), S)
    # cancelling configurations leave round-off on the scale of sum |rho S|
    a = state.amplitudes
    scale = np.sum(np.abs(a.conj().T @ a) * np.abs(S))
    if abs(val.imag) > 1e-12 * max(1.0, scale):
        raise ArithmeticError(f"norm has imaginary part {val.imag:.3e}")
    return float(val.real)
