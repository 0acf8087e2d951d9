import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabidimer.ansatz import (MultiD2State, initialize, log_overlap, norm, overlaps,
                              NOISE_RADIUS)
from rabidimer.observables import snapshot
from rabidimer.params import ModelParams

from conftest import random_state


def test_initialize_reference_state():
    s = initialize(6, 20.0, seed=0)
    assert s.amplitudes[3, 0] == 1.0
    assert np.count_nonzero(s.amplitudes) == 1
    assert s.displacements[0, 0] == pytest.approx(np.sqrt(20))
    assert norm(s) == pytest.approx(1.0, abs=1e-15)
    assert s.t == 0.0
    assert snapshot(s, ModelParams())["N_L"] == pytest.approx(20.0, abs=1e-12)


def test_initialize_vacuum_single():
    s = initialize(1, 0.0)
    assert np.all(s.displacements == 0)
    assert norm(s) == 1.0


def test_initialize_rejects_bad_M():
    with pytest.raises(ValueError, match="M >= 1"):
        initialize(0)


def test_initialize_noise_disc_and_reproducible():
    a = initialize(6, 20.0, seed=3)
    b = initialize(6, 20.0, seed=3)
    c = initialize(6, 20.0, seed=4)
    assert np.array_equal(a.displacements, b.displacements)
    assert not np.array_equal(a.displacements, c.displacements)
    offsets = a.displacements[:, 1:] - a.displacements[:, :1]
    assert np.all(np.abs(offsets) <= NOISE_RADIUS)
    v = initialize(6, 20.0, seed=3, seed_around="vacuum")
    assert np.all(np.abs(v.displacements[:, 1:]) <= NOISE_RADIUS)
    with pytest.raises(ValueError):
        initialize(6, 20.0, seed_around="elsewhere")


def test_initialize_right_is_mirror():
    L = initialize(4, 3.0, seed=1)
    R = initialize(4, 3.0, seed=1, side="R")
    assert np.array_equal(R.displacements[[1, 0, 2]], L.displacements)
    assert R.displacements[1, 0] == pytest.approx(np.sqrt(3.0))


def test_overlap_examples():
    s = MultiD2State(np.zeros((4, 2), complex),
                     np.array([[0, np.sqrt(20)], [0, 0], [0, 0]], dtype=complex))
    tab = overlaps(s)
    assert tab.S[0, 1] == pytest.approx(np.exp(-10), rel=1e-12)
    assert np.allclose(np.diag(tab.S), 1.0)
    vac = MultiD2State(np.zeros((4, 3), complex), np.zeros((3, 3), complex))
    assert np.all(overlaps(vac, ModelParams().mode_matrix()).Xi == 0)


def test_overlap_is_product_of_modes(rstate):
    z = rstate.displacements
    S = np.exp(log_overlap(z))
    prod = np.ones_like(S)
    for j in range(3):
        prod *= np.exp(log_overlap(z[j : j + 1]))
    assert np.allclose(S, prod, rtol=1e-13)
    assert np.allclose(S, S.conj().T, atol=1e-15)
    assert np.linalg.eigvalsh(S).min() >= -1e-12


def test_norm_examples(init_state):
    s = init_state.copy()
    s.amplitudes *= 2
    assert norm(s) == pytest.approx(4.0)
    dup = MultiD2State(np.zeros((4, 2), complex), np.full((3, 2), 0.3 + 0.1j))
    dup.amplitudes[3] = 0.5
    assert norm(dup) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), M=st.integers(1, 5), theta=st.floats(0, 2 * np.pi))
def test_global_phase_invariance(seed, M, theta):
    s = random_state(M, seed)
    r = s.copy()
    r.amplitudes *= np.exp(1j * theta)
    p = ModelParams(alpha=0.2, omega_ph=0.05)
    a, b = snapshot(s, p), snapshot(r, p)
    for k in a:
        if k != "cond_estimate":
            assert a[k] == pytest.approx(b[k], abs=1e-12 * max(1.0, abs(a[k])))


def test_vector_roundtrip_and_checkpoint(tmp_path, rstate):
    v = rstate.to_vector()
    assert v.size == 7 * rstate.M
    back = MultiD2State.from_vector(v, 1.5)
    assert np.array_equal(back.amplitudes, rstate.amplitudes)
    rstate.t = 2.25
    rstate.save(tmp_path / "s.txt")
    loaded = MultiD2State.load(tmp_path / "s.txt")
    assert np.array_equal(loaded.to_vector(), rstate.to_vector())
    assert loaded.t == 2.25
