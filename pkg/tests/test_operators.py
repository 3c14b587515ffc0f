import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symdisc.closedform import rotation_symmetry
from symdisc.ensemble import cyclic_shift, random_unitary
from symdisc.errors import (
    DecompositionFailed,
    DimensionMismatch,
    NotHermitian,
    NotProjectiveOrder,
    NotPSD,
    NotUnitary,
    TraceNotOne,
)
from symdisc.operators import (
    commutator_norm,
    conjugate_power,
    eigenstructure,
    group_average,
    matrix_from_json,
    matrix_to_json,
    pinch,
    validate_density,
    validate_symmetry,
)


def test_maximally_mixed_is_valid():
    rho = validate_density(np.eye(2) / 2)
    assert np.allclose(rho.eigenvalues(), [0.5, 0.5])


def test_rotation_reference_state_eigenvalues():
    rho = validate_density([[0.8, 0.2], [0.2, 0.2]])
    lo, hi = 0.5 - np.sqrt(0.13), 0.5 + np.sqrt(0.13)
    assert np.allclose(rho.eigenvalues(), [lo, hi], atol=1e-14)


@pytest.mark.parametrize("m, exc", [
    ([[1, 0], [0, -0.01]], NotPSD),
    ([[0.5, 0], [0, 0.4]], TraceNotOne),
    ([[0.5, 0.1], [0.3, 0.5]], NotHermitian),
    ([[1, 0, 0]], DimensionMismatch),
])
def test_density_rejections(m, exc):
    with pytest.raises(exc):
        validate_density(m)


def test_density_is_read_only():
    rho = validate_density(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0


def test_rotation_symmetry_phase():
    S = rotation_symmetry(4)
    assert abs(S.phase + 1) < 1e-12


def test_identity_order_one():
    S = validate_symmetry(np.eye(3), 1)
    assert abs(S.phase - 1) < 1e-15


def test_shear_not_unitary():
    with pytest.raises(NotUnitary):
        validate_symmetry([[1, 1], [0, 1]], 2)


def test_wrong_order():
    with pytest.raises(NotProjectiveOrder):
        validate_symmetry(cyclic_shift(2, 3), 2)


@pytest.mark.parametrize("M", [2, 3, 5, 16])
def test_rotation_eigenstructure(M):
    eig = eigenstructure(rotation_symmetry(M))
    assert eig.multiplicities == (1, 1)
    got = sorted(np.angle(eig.eigenvalues))
    assert np.allclose(got, [-np.pi / M, np.pi / M])


def test_identity_eigenstructure():
    eig = eigenstructure(validate_symmetry(np.eye(5), 1))
    assert eig.multiplicities == (5,)
    assert np.allclose(eig.eigenvalues, [1])


def test_cyclic_shift_four_roots():
    P = np.roll(np.eye(4), 1, axis=0)
    S = validate_symmetry(P, 4)
    eig = eigenstructure(S)
    assert eig.multiplicities == (1, 1, 1, 1)
    assert np.allclose(sorted(eig.eigenvalues, key=np.angle), [-1j, 1, 1j, -1])
    U = eig.basis
    assert np.linalg.norm(P @ U - U * eig.diagonal()) < 1e-12


def test_eigenvalue_near_two_pi_wraps_to_zero():
    S = validate_symmetry(np.diag(np.exp(1j * np.array([0.0, -1e-10, np.pi]))), 2)
    eig = eigenstructure(S)
    assert eig.multiplicities == (2, 1)


def test_degenerate_basis_orthonormal(rng):
    V = random_unitary(12, rng)
    k = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2])
    S = validate_symmetry((V * np.exp(2j * np.pi * k / 3)) @ V.conj().T, 3)
    eig = eigenstructure(S)
    assert eig.multiplicities == (4, 3, 5)
    U = eig.basis
    assert np.linalg.norm(U.conj().T @ U - np.eye(12)) < 1e-12


def test_conjugate_power_examples():
    S = rotation_symmetry(2)
    A = np.diag([1.0, 0.0])
    assert np.allclose(conjugate_power(S, 0, A), A)
    assert np.allclose(conjugate_power(S, 1, A), np.diag([0.0, 1.0]), atol=1e-15)
    for i in range(-3, 4):
        assert np.allclose(conjugate_power(S, i, np.eye(2)), np.eye(2))


def test_conjugate_power_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        conjugate_power(rotation_symmetry(3), 1, np.eye(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_group_average_commutes(N, M, seed):
    rng = np.random.default_rng(seed)
    V = random_unitary(N, rng)
    S = validate_symmetry((V * np.exp(2j * np.pi * rng.integers(0, M, N) / M)) @ V.conj().T, M)
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A = G + G.conj().T
    Ab = group_average(S, A)
    assert commutator_norm(Ab, S) < 1e-10 * max(1.0, np.linalg.norm(A))
    assert abs(np.trace(Ab) - np.trace(A)) < 1e-12 * N * M * np.linalg.norm(A)
    # averaging equals pinching in the eigenbasis
    eig = eigenstructure(S)
    U = eig.basis
    blocks = pinch(A, eig)
    Bt = U.conj().T @ Ab @ U
    o = eig.block_offsets
    for j, b in enumerate(blocks):
        assert np.allclose(Bt[o[j]:o[j + 1], o[j]:o[j + 1]], b, atol=1e-10)


def test_json_roundtrip(rng):
    A = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    doc = json.loads(json.dumps(matrix_to_json(A)))
    assert np.array_equal(matrix_from_json(doc), A)


def test_decomposition_failure_is_typed(monkeypatch):
    import scipy.linalg

    def boom(*a, **k):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(scipy.linalg, "schur", boom)
    with pytest.raises(DecompositionFailed):
        eigenstructure(rotation_symmetry(3))
