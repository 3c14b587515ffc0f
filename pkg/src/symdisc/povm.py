"""Measurement recovery, evaluation and optimality checks."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    CompletenessInfeasible,
    CompletenessViolated,
    DimensionMismatch,
    EmptyNullSpace,
)
from .operators import (
    EigenStructure,
    SymmetryOperator,
    conjugate_power,
    eigenstructure,
    matrix_rank,
    pinch,
)
from .sdp import BlockSpec, hermitian_basis

#: Default verdict tolerance for numerically solved instances.
VERIFY_TOL = 2e-6


@dataclass(frozen=True)
class POVM:
    operators: tuple

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(np.asarray(P, dtype=np.complex128) for P in self.operators))

    def __len__(self):
        return len(self.operators)

    def __getitem__(self, i):
        return self.operators[i]

    @property
    def dim(self):
        return self.operators[0].shape[0]

    def completeness_residual(self) -> float:
        return float(np.linalg.norm(sum(self.operators) - np.eye(self.dim)))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(P)[0] for P in self.operators))


def expand_povm(pi0, S: SymmetryOperator, M: int, tol: Tolerances = DEFAULT) -> POVM:
    pi0 = np.asarray(pi0, dtype=np.complex128)
    if pi0.shape != S.matrix.shape:
        raise DimensionMismatch(f"reference operator {pi0.shape} vs symmetry {S.matrix.shape}")
    pi0 = 0.5 * (pi0 + pi0.conj().T)
    povm = POVM(tuple(conjugate_power(S, i, pi0) for i in range(M)))
    res = povm.completeness_residual()
    if res > tol.povm:
        raise CompletenessViolated(f"sum of POVM elements deviates from I by {res:.3e}", res)
    return povm


def success_probability(states, priors, povm: POVM) -> float:
    """``sum_i q_i Tr(rho_i Pi_i)``, unclamped."""
    if len(states) != len(povm) or len(priors) != len(povm):
        raise DimensionMismatch("states, priors and POVM must have the same length")
    total = 0.0
    for q, rho, P in zip(priors, states, povm.operators):
        rho = np.asarray(rho)
        if rho.shape != P.shape:
            raise DimensionMismatch(f"state {rho.shape} vs POVM element {P.shape}")
        total += q * np.vdot(rho, P).real  # Tr(rho P) for Hermitian rho
    return float(total)


def _completeness_system(V, eig: EigenStructure, M):
    """Linear map from Hermitian ``C`` (k x k) to the pinched blocks of ``V C V^H``.

    Completeness of the orbit of ``Pi0 = V C V^H`` is equivalent to every
    diagonal block of ``U^H Pi0 U`` equalling ``I/M``: averaging over powers
    of ``S`` keeps exactly those blocks.
    """
    k = V.shape[1]
    basis = hermitian_basis(BlockSpec((k,)))
    E = np.stack([basis.to_mat(row) for row in np.eye(basis.size)])
    rows, rhs = [], []
    for j in range(len(eig.multiplicities)):
        G = eig.block(j).conj().T @ V
        img = np.einsum("ap,lpq,bq->lab", G, E, G.conj())
        n = G.shape[0]
        rows.append(img.reshape(basis.size, -1).real.T)
        rows.append(img.reshape(basis.size, -1).imag.T)
        target = np.eye(n) / M
        rhs.append(target.ravel())
        rhs.append(np.zeros(n * n))
    return np.vstack(rows), np.concatenate(rhs), basis


def _lstsq_hermitian(A, b, basis):
    c = np.linalg.lstsq(A, b, rcond=None)[0]
    C = basis.to_mat(c)
    return 0.5 * (C + C.conj().T)


def _clip(C):
    w, Q = np.linalg.eigh(C)
    return (Q * np.clip(w, 0.0, None)) @ Q.conj().T, w, Q


def recover_reference_povm(e, X_opt, tol: Tolerances = DEFAULT, eig: EigenStructure | None = None):
    """Reference measurement operator from a dual optimum by complementary slackness.

    ``Pi0`` is sought as ``V C V^H`` with ``V`` spanning the numerical null
    space of ``D = X_opt - rho0/M`` and ``C`` Hermitian PSD chosen so the
    orbit of ``Pi0`` sums to the identity.  The linear system is solved in
    least squares (minimum norm when underdetermined), projected onto the
    PSD cone, then re-solved once on the face selected by the projection.
    """
    X_opt = np.asarray(X_opt, dtype=np.complex128)
    N, M = e.dim, e.M
    if X_opt.shape != (N, N):
        raise DimensionMismatch(f"X_opt has shape {X_opt.shape}, expected {(N, N)}")
    eig = eig or eigenstructure(e.S, tol)
    D = X_opt - e.rho0.matrix / M
    w, Q = np.linalg.eigh(0.5 * (D + D.conj().T))
    scale = max(np.abs(w).max(), np.linalg.eigvalsh(X_opt)[-1])
    V = Q[:, np.abs(w) <= tol.null * scale]
    k = V.shape[1]
    if k == 0:
        raise EmptyNullSpace(
            f"X_opt - rho0/M is definite (smallest eigenvalue {w[0]:.3e}); X_opt is not optimal")

    A, b, basis = _completeness_system(V, eig, M)
    C = _lstsq_hermitian(A, b, basis)
    Cp, lam, R = _clip(C)
    if lam[0] < 0:
        face = R[:, lam > tol.null * max(lam[-1], 0.0)]
        if face.shape[1] > 0:
            Vf = V @ face
            Af, bf, bf_basis = _completeness_system(Vf, eig, M)
            Cf, _, _ = _clip(_lstsq_hermitian(Af, bf, bf_basis))
            V, Cp = Vf, Cf
    pi0 = V @ Cp @ V.conj().T
    pi0 = 0.5 * (pi0 + pi0.conj().T)

    # The null space of an interior-point iterate is tilted by roughly
    # (solver gap) / (spectral gap of D), which leaves a small completeness
    # defect.  The orbit sum F commutes with S, so F^-1/2 Pi0 F^-1/2 has an
    # orbit summing to I exactly while staying PSD with the same rank.
    resid = _orbit_residual(pi0, eig, M)
    if resid > np.sqrt(tol.povm):
        raise CompletenessInfeasible(
            f"completeness residual {resid:.3e} after PSD projection; the null space of "
            f"X_opt - rho0/M cannot carry a complete measurement", resid)
    pi0 = _normalize_orbit(pi0, eig, M)
    resid = _orbit_residual(pi0, eig, M)
    if resid > tol.povm:
        raise CompletenessInfeasible(
            f"completeness residual {resid:.3e} exceeds {tol.povm:.1e}", resid)
    return pi0


def _orbit_residual(pi0, eig, M):
    """``||sum_i S^i Pi0 S^-i - I||_F`` evaluated blockwise in the eigenbasis."""
    return float(np.sqrt(sum(np.linalg.norm(M * P - np.eye(P.shape[0])) ** 2
                             for P in pinch(pi0, eig))))


def _normalize_orbit(pi0, eig, M):
    U = eig.basis
    o = eig.block_offsets
    T = np.zeros_like(U)
    for j, P in enumerate(pinch(pi0, eig)):
        w, Q = np.linalg.eigh(M * P)
        T[o[j]:o[j + 1], o[j]:o[j + 1]] = (Q / np.sqrt(w)[None, :]) @ Q.conj().T
    F = U @ T @ U.conj().T
    out = F @ pi0 @ F.conj().T
    return 0.5 * (out + out.conj().T)


def srm_povm(states, priors, tol: Tolerances = DEFAULT) -> POVM:
    """Square-root measurement ``rho_bar^{-1/2} q_i rho_i rho_bar^{-1/2}``.

    The inverse square root is taken on the support of ``rho_bar``; the
    projector onto its kernel is split evenly among the outcomes so the
    elements still sum to the identity on the whole space.
    """
    states = [np.asarray(s, dtype=np.complex128) for s in states]
    M = len(states)
    N = states[0].shape[0]
    rho_bar = sum(q * s for q, s in zip(priors, states))
    w, Q = np.linalg.eigh(0.5 * (rho_bar + rho_bar.conj().T))
    supp = w > tol.null * w[-1]
    Qs = Q[:, supp]
    R = (Qs / np.sqrt(w[supp])[None, :]) @ Qs.conj().T
    kernel = np.eye(N) - Qs @ Qs.conj().T
    ops = []
    for q, s in zip(priors, states):
        P = R @ (q * s) @ R + kernel / M
        ops.append(0.5 * (P + P.conj().T))
    return POVM(tuple(ops))


@dataclass
class OptimalityReport:
    slackness_left: float
    slackness_right: float
    min_slack_eigenvalue: float
    completeness_residual: float
    min_povm_eigenvalue: float
    trace_X: float
    success_probability: float
    gap: float
    tol: float
    optimal: bool

    def to_dict(self):
        return asdict(self)


def verify_optimality(e, povm: POVM, X, tol=VERIFY_TOL) -> OptimalityReport:
    """Check complementary slackness, dual feasibility and completeness."""
    X = np.asarray(X, dtype=np.complex128)
    if X.shape != (e.dim, e.dim) or povm.dim != e.dim or len(povm) != e.M:
        raise DimensionMismatch("ensemble, POVM and X must agree in dimension and size")
    left = right = 0.0
    min_slack = np.inf
    for i in range(e.M):
        Z = X - e.prior * e.state(i)
        P = povm[i]
        left = max(left, np.linalg.norm(Z @ P))
        right = max(right, np.linalg.norm(P @ Z))
        min_slack = min(min_slack, np.linalg.eigvalsh(0.5 * (Z + Z.conj().T))[0])
    pc = success_probability(e.states, e.priors, povm)
    trx = float(np.trace(X).real)
    comp = povm.completeness_residual()
    min_pi = povm.min_eigenvalue()
    gap = trx - pc
    ok = (left <= tol and right <= tol and min_slack >= -tol and comp <= tol
          and min_pi >= -tol and abs(gap) <= tol)
    return OptimalityReport(float(left), float(right), float(min_slack), comp, min_pi,
                            trx, pc, float(gap), float(tol), bool(ok))


def satisfies_rank_bound(pi0, rho0) -> bool:
    """``rank(Pi0) <= rank(rho0)``, both at the default rank threshold."""
    return matrix_rank(pi0) <= matrix_rank(rho0)
