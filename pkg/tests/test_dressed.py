import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spt.dressed import (bare_jump_block, dressed_basis, excited_block,
                         jump_dressed_closed_form, jump_in_dressed_basis)


def test_reference_point():
    db = dressed_basis(1.0, 2.0)
    assert np.allclose(db.energies, [-1.618034, -0.618034, 0.618034, 1.618034], atol=1e-6)
    assert db.alpha == pytest.approx(0.601501, abs=1e-6)
    assert db.beta == pytest.approx(0.371748, abs=1e-6)


def test_vacuum_rabi_limit():
    db = dressed_basis(1.0, 0.0)
    assert np.allclose(db.energies, [-1.0, 0.0, 0.0, 1.0])
    assert db.alpha == pytest.approx(1 / np.sqrt(2))
    assert db.beta == pytest.approx(0.0)
    # degenerate case: P stays orthogonal; compare projectors, not vectors
    assert np.allclose(db.p_matrix.T @ db.p_matrix, np.eye(4), atol=1e-12)
    h = excited_block(1.0, 0.0)
    proj_dressed = sum(np.outer(db.p_matrix[:, j], db.p_matrix[:, j]) for j in (1, 2))
    w, v = np.linalg.eigh(h)
    proj_num = sum(np.outer(v[:, j], v[:, j]) for j in range(4) if abs(w[j]) < 1e-12)
    assert np.allclose(proj_dressed, proj_num, atol=1e-10)


@given(g2=st.floats(0.2, 3.0), omega=st.floats(0.0, 5.0))
@settings(max_examples=60, deadline=None)
def test_orthogonality_and_normalization(g2, omega):
    db = dressed_basis(g2, omega)
    assert abs(db.alpha**2 + db.beta**2 - 0.5) < 1e-12
    assert np.max(np.abs(db.p_matrix.T @ db.p_matrix - np.eye(4))) < 1e-12
    assert np.all(np.diff(db.energies) >= -1e-12)


@given(g2=st.floats(0.2, 3.0), omega=st.floats(0.05, 5.0))
@settings(max_examples=60, deadline=None)
def test_diagonalizes_excited_block(g2, omega):
    db = dressed_basis(g2, omega)
    h = excited_block(g2, omega)
    rotated = db.p_matrix.T @ h @ db.p_matrix
    assert np.allclose(rotated, np.diag(db.energies), atol=1e-10)
    num = np.sort(np.linalg.eigvalsh(h))
    assert np.allclose(num, db.energies, atol=1e-10)


def test_jump_reference_coefficients():
    # omega = 0 limit: diagonal coefficient 0, cross coefficient 1/2
    c0 = jump_in_dressed_basis(1.0, 0.0, 1.0)
    assert c0[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert c0[0, 2] == pytest.approx(0.5)
    # g2=1, omega=2: omega/(2 sqrt5), g2/(2 sqrt5), 1/2
    c = jump_in_dressed_basis(1.0, 2.0, 1.0)
    assert c[0, 0] == pytest.approx(0.447214, abs=1e-6)
    assert c[0, 2] == pytest.approx(0.223607, abs=1e-6)
    assert c[0, 1] == pytest.approx(0.5)


@given(g2=st.floats(0.2, 3.0), omega=st.floats(0.0, 5.0), k2=st.floats(0.1, 3.0))
@settings(max_examples=60, deadline=None)
def test_closed_form_and_frobenius(g2, omega, k2):
    c_rot = jump_in_dressed_basis(g2, omega, k2)
    assert np.allclose(c_rot, jump_dressed_closed_form(g2, omega, k2), atol=1e-12)
    # orthogonal conjugation preserves the Frobenius norm: ||C||_F^2 = 2 kappa2
    assert np.sum(c_rot**2) == pytest.approx(2 * k2, rel=1e-12)


def test_basis_change_roundtrip_random_draws():
    rng = np.random.default_rng(1)
    for _ in range(50):
        g2 = rng.uniform(0.2, 3.0)
        omega = rng.uniform(0.0, 5.0)
        k2 = rng.uniform(0.1, 3.0)
        db = dressed_basis(g2, omega)
        c_bare = db.p_matrix @ jump_in_dressed_basis(g2, omega, k2) @ db.p_matrix.T
        assert np.max(np.abs(c_bare - bare_jump_block(k2))) < 1e-10
