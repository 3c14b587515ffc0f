import numpy as np
import pytest

from symdisc.closedform import RotationExampleParams, closed_form_povm, closed_form_xtilde
from symdisc.ensemble import build_ensemble, ppm_ensemble, random_ensemble, rotation_ensemble
from symdisc.errors import CompletenessViolated, EmptyNullSpace
from symdisc.operators import eigenstructure, validate_density, validate_symmetry
from symdisc.povm import (
    POVM,
    expand_povm,
    recover_reference_povm,
    satisfies_rank_bound,
    srm_povm,
    success_probability,
    verify_optimality,
)
from symdisc.sdp import lift, solve_dp3


def _solve(e):
    eig = eigenstructure(e.S)
    Xt, rep = solve_dp3(e, eig)
    return lift(Xt, eig), eig, rep


def test_expand_uniform():
    S = validate_symmetry(np.roll(np.eye(3), 1, 0), 3)
    povm = expand_povm(np.eye(3) / 3, S, 3)
    assert all(np.allclose(P, np.eye(3) / 3) for P in povm.operators)
    assert povm.completeness_residual() < 1e-15


def test_expand_projective_pair():
    e = rotation_ensemble(2, 1.0, 0.0)
    povm = expand_povm(np.diag([1.0, 0.0]), e.S, 2)
    assert np.allclose(povm[0], np.diag([1, 0]))
    assert np.allclose(povm[1], np.diag([0, 1]), atol=1e-15)


def test_expand_wrong_trace():
    e = rotation_ensemble(3, 1.0, 0.0)
    with pytest.raises(CompletenessViolated):
        expand_povm(np.diag([0.5, 0.0]), e.S, 3)


def test_success_probability_examples():
    e = rotation_ensemble(2, 1.0, 0.0)
    povm = POVM((np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
    assert abs(success_probability(e.states, e.priors, povm) - 1.0) < 1e-15
    e = random_ensemble(3, 4, 1)
    blind = POVM(tuple(np.eye(3) / 4 for _ in range(4)))
    assert abs(success_probability(e.states, e.priors, blind) - 0.25) < 1e-15


def test_rotation_recovery_strong_duality():
    e = rotation_ensemble(3, 0.8, 0.2)
    X, eig, rep = _solve(e)
    pi0 = recover_reference_povm(e, X, eig=eig)
    povm = expand_povm(pi0, e.S, 3)
    pc = success_probability(e.states, e.priors, povm)
    assert abs(pc - (1 - 0.4262965816357340)) < 1e-7
    assert verify_optimality(e, povm, X).optimal
    assert satisfies_rank_bound(pi0, e.rho0.matrix)


@pytest.mark.parametrize("M, a, b", [(3, 1.0, 0.0), (5, 1.0, 0.0), (4, 0.5, 0.5), (6, 0.9, 0.3)])
def test_recovery_matches_closed_form(M, a, b):
    p = RotationExampleParams(M, a, b)
    e = rotation_ensemble(M, a, b)
    X, eig, _ = _solve(e)
    pi0 = recover_reference_povm(e, X, eig=eig)
    assert np.linalg.norm(pi0 - closed_form_povm(p)) < 1e-6


def test_identical_states_force_uniform():
    e = build_ensemble(validate_density(np.diag([0.6, 0.4])), validate_symmetry(np.eye(2), 3), 3)
    X, eig, _ = _solve(e)
    assert np.allclose(recover_reference_povm(e, X, eig=eig), np.eye(2) / 3, atol=1e-7)


def test_empty_null_space():
    e = rotation_ensemble(3, 0.8, 0.2)
    with pytest.raises(EmptyNullSpace):
        recover_reference_povm(e, np.eye(2))


def test_closed_form_certificate_exact():
    p = RotationExampleParams(4, 1.0, 0.0)
    e = rotation_ensemble(4, 1.0, 0.0)
    X = closed_form_xtilde(p).dense()  # multiple of I, same in any basis
    povm = expand_povm(closed_form_povm(p), e.S, 4)
    r = verify_optimality(e, povm, X, tol=1e-10)
    assert r.optimal
    assert max(r.slackness_left, r.slackness_right, r.completeness_residual) <= 1e-10


def test_blind_guess_not_optimal():
    e = rotation_ensemble(3, 1.0, 0.0)
    X, _, _ = _solve(e)
    r = verify_optimality(e, POVM(tuple(np.eye(2) / 3 for _ in range(3))), X)
    assert not r.optimal and r.gap > 0.1


def test_srm_orthogonal_states():
    e = ppm_ensemble(2, 3)
    povm = srm_povm(e.states, e.priors)
    assert abs(success_probability(e.states, e.priors, povm) - 1.0) < 1e-12
    assert povm.completeness_residual() < 1e-12


def test_srm_never_beats_optimum(rng):
    for _ in range(5):
        e = random_ensemble(4, 4, rng)
        X, _, rep = _solve(e)
        povm = srm_povm(e.states, e.priors)
        assert povm.completeness_residual() < 1e-10
        assert success_probability(e.states, e.priors, povm) <= rep.optimal_value + 1e-8
        r = verify_optimality(e, povm, X)
        assert r.gap >= -1e-8
