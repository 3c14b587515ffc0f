import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symdisc.ensemble import build_ensemble, random_ensemble, rotation_ensemble
from symdisc.errors import MaxIterationsExceeded, MissingBlockSpec, ProblemTooLarge
from symdisc.operators import eigenstructure, group_average, validate_density, validate_symmetry
from symdisc.sdp import (
    BlockDiagOperator,
    BlockSpec,
    HermitianBasis,
    barrier_trace_min,
    count_variables,
    lift,
    positive_part,
    reduced_constraint,
    solve_dp1,
    solve_dp3,
    solve_trace_min,
)

ROT_PE = 2 / 3 - np.sqrt(0.52) / 3  # 0.42629658163573...


def test_hermitian_basis_orthonormal():
    b = HermitianBasis(BlockSpec((3, 1, 2)))
    assert b.size == 9 + 1 + 4
    mats = [b.to_mat(v) for v in np.eye(b.size)]
    gram = np.array([[np.vdot(A, B).real for B in mats] for A in mats])
    assert np.allclose(gram, np.eye(b.size))
    for A in mats:
        assert np.allclose(A, A.conj().T)


def test_hermitian_basis_roundtrip(rng):
    spec = BlockSpec((2, 3))
    b = HermitianBasis(spec)
    x = rng.standard_normal(b.size)
    assert np.allclose(b.to_vec(b.to_mat(x)), x)


@pytest.mark.parametrize("A, expected", [
    (np.diag([1.0, -1.0]), np.diag([1.0, 0.0])),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), np.full((2, 2), 0.5)),
    (np.diag([0.3, 0.2]), np.diag([0.3, 0.2])),
])
def test_positive_part_examples(A, expected):
    assert np.allclose(positive_part(A), expected, atol=1e-15)


def test_positive_part_barrier_agrees(rng):
    G = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    A = G + G.conj().T
    X, res = solve_trace_min([A, np.zeros((5, 5))])
    assert abs(np.trace(X).real - np.trace(positive_part(A)).real) <= 2e-6
    assert res.gap <= 1e-8


def test_single_state_dp1():
    rho = validate_density([[0.6, 0.1j], [-0.1j, 0.4]]).matrix
    X, rep = solve_dp1([rho], [1.0])
    assert abs(rep.optimal_value - 1.0) < 1e-8
    assert np.allclose(X, rho, atol=1e-6)


def test_identical_states_blind_guess():
    rho = validate_density(np.diag([0.5, 0.3, 0.2])).matrix
    X, rep = solve_dp1([rho] * 4, [0.25] * 4)
    assert abs(rep.optimal_value - 0.25) < 1e-8


def test_dp1_rotation_oracle():
    e = rotation_ensemble(3, 0.8, 0.2)
    X, rep = solve_dp1(e.states, e.priors)
    assert abs(rep.p_error - ROT_PE) < 1e-7
    assert rep.d == 4 and rep.inequality_constraints == 3
    assert rep.extra["vector_length"] == rep.d


def test_dp3_rotation_oracle():
    e = rotation_ensemble(3, 0.8, 0.2)
    eig = eigenstructure(e.S)
    Xt, rep = solve_dp3(e, eig)
    assert abs(rep.p_error - ROT_PE) < 1e-7
    assert rep.d == 2 and rep.extra["vector_length"] == 2
    X = lift(Xt, eig)
    # the reduced optimum is a multiple of the identity here
    assert np.allclose(X, X[0, 0] * np.eye(2), atol=1e-7)


def test_dp3_identity_symmetry():
    rho = validate_density(np.diag([0.5, 0.5, 0.0])).matrix
    e = build_ensemble(validate_density(rho), validate_symmetry(np.eye(3), 3), 3)
    Xt, rep = solve_dp3(e, eigenstructure(e.S))
    assert abs(Xt.trace() - 1 / 3) < 1e-8


def test_dp1_matches_cvxpy(rng):
    cp = pytest.importorskip("cvxpy")
    e = random_ensemble(4, 3, rng)
    X = cp.Variable((4, 4), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(X))), [X - s / 3 >> 0 for s in e.states])
    prob.solve(solver="CLARABEL")
    _, rep1 = solve_dp1(e.states, e.priors)
    _, rep3 = solve_dp3(e, eigenstructure(e.S))
    assert abs(rep1.optimal_value - prob.value) < 1e-6
    assert abs(rep3.optimal_value - prob.value) < 1e-6


def test_dp3_compression_is_exact(rng):
    e = random_ensemble(6, 2, rng, rank=1)
    eig = eigenstructure(e.S)
    full, rf = solve_dp3(e, eig, compress=False)
    comp, rc = solve_dp3(e, eig, compress=True)
    assert rc.compressed and rc.reduced_d < rc.d == rf.d
    assert abs(full.trace() - comp.trace()) < 2e-8


def test_lift_examples():
    eig = eigenstructure(validate_symmetry(np.roll(np.eye(3), 1, 0), 3))
    spec = BlockSpec.from_eigenstructure(eig)
    one = BlockDiagOperator(spec, tuple(np.eye(n) for n in spec.sizes))
    assert np.allclose(lift(one, eig), np.eye(3))
    lam = BlockDiagOperator(spec, (np.array([[1.0]]), np.array([[2.0]]), np.array([[3.0]])))
    assert np.allclose(np.linalg.eigvalsh(lift(lam, eig)), [1, 2, 3])


@pytest.mark.parametrize("kind, N, M, sizes, expected", [
    ("PP1", 2, 3, None, (12, 1, 3)),
    ("DP3", 2, 3, (1, 1), (2, 0, 1)),
    ("DP2", 4, 7, None, (16, 0, 2)),
    ("DP1", 5, 2, None, (25, 0, 2)),
    ("PP2", 3, 9, None, (9, 1, 1)),
])
def test_count_variables_examples(kind, N, M, sizes, expected):
    spec = BlockSpec(sizes) if sizes else None
    assert count_variables(kind, N, M, spec) == expected


def test_count_dp3_needs_spec():
    with pytest.raises(MissingBlockSpec):
        count_variables("DP3", 4, 2)


def test_problem_too_large():
    with pytest.raises(ProblemTooLarge):
        barrier_trace_min([np.eye(70) / 70], BlockSpec((70,)))


def test_iteration_cap_carries_iterate():
    e = rotation_ensemble(4, 0.9, 0.1)
    with pytest.raises(MaxIterationsExceeded) as info:
        solve_dp1(e.states, e.priors, max_outer=1)
    assert info.value.x is not None


def test_relabeling_invariance(rng):
    e = random_ensemble(3, 4, rng)
    _, a = solve_dp1(e.states, e.priors)
    _, b = solve_dp1(list(e.states)[1:] + list(e.states)[:1], e.priors)
    assert abs(a.optimal_value - b.optimal_value) < 2e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_dp2_averaging_keeps_optimum(N, M, seed):
    """Averaging a DP1 optimum over the group gives a commuting optimum."""
    e = random_ensemble(N, M, seed)
    X, rep = solve_dp1(e.states, e.priors)
    Xb = group_average(e.S, X)
    assert abs(np.trace(Xb).real - rep.optimal_value) < 1e-12
    for s in e.states:
        assert np.linalg.eigvalsh(Xb - s / M)[0] > -1e-9
    assert np.linalg.norm(Xb @ e.S.matrix - e.S.matrix @ Xb) < 1e-8


def test_reduced_constraint_is_pinched_state(rng):
    e = random_ensemble(5, 3, rng)
    eig = eigenstructure(e.S)
    B = reduced_constraint(e, eig)
    U = eig.basis
    assert np.allclose(U @ B @ U.conj().T, e.rho0.matrix / 3)
