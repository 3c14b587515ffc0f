"""Trace-minimization SDPs solved by a log-det barrier method.

Every problem here has the form::

    minimize Tr X   subject to   X - A_i >= 0,  i = 1..K

where ``X`` ranges over Hermitian matrices that are block diagonal with a
fixed :class:`BlockSpec`.  The general dual uses one full block and one
constraint per state; the symmetry-reduced dual uses the eigenspace blocks
of ``S`` and a single constraint in the eigenbasis.

``X`` is carried as a real vector over an orthonormal Hermitian basis, so
the vector length is the variable count ``d`` of the problem.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .config import DEFAULT, MAX_DENSE_VARS
from .errors import (
    DimensionMismatch,
    MaxIterationsExceeded,
    MissingBlockSpec,
    NumericalBreakdown,
    ProblemTooLarge,
    SymDiscError,
)
from .kernels import hessian
from .operators import EigenStructure

_SQRT1_2 = np.sqrt(0.5)


@dataclass(frozen=True)
class BlockSpec:
    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise SymDiscError(f"block sizes must be positive integers, got {self.sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def dim(self):
        return sum(self.sizes)

    @property
    def offsets(self):
        return tuple(np.concatenate([[0], np.cumsum(self.sizes)]).astype(int).tolist())

    @property
    def n_params(self):
        return sum(s * s for s in self.sizes)

    @classmethod
    def from_eigenstructure(cls, eig: EigenStructure):
        return cls(eig.multiplicities)


class HermitianBasis:
    """Orthonormal real basis of block-diagonal Hermitian matrices.

    Per block of size ``n``: ``n`` diagonal units, then for each ``a < b`` a
    symmetric and an antisymmetric element scaled by ``1/sqrt(2)``.  Each
    element is stored as two weighted matrix units (``coef``, ``rows``,
    ``cols``) which is all the Hessian kernel needs.
    """

    def __init__(self, spec: BlockSpec):
        self.spec = spec
        coef, rows, cols = [], [], []
        for off, n in zip(spec.offsets[:-1], spec.sizes):
            for a in range(n):
                coef.append((1.0, 0.0))
                rows.append((off + a, 0))
                cols.append((off + a, 0))
            for a in range(n):
                for b in range(a + 1, n):
                    i, j = off + a, off + b
                    coef.append((_SQRT1_2, _SQRT1_2))
                    rows.append((i, j))
                    cols.append((j, i))
                    coef.append((1j * _SQRT1_2, -1j * _SQRT1_2))
                    rows.append((i, j))
                    cols.append((j, i))
        self.coef = np.array(coef, dtype=np.complex128).reshape(-1, 2)
        self.rows = np.array(rows, dtype=np.int64).reshape(-1, 2)
        self.cols = np.array(cols, dtype=np.int64).reshape(-1, 2)

    @property
    def size(self):
        return self.coef.shape[0]

    def to_vec(self, G) -> np.ndarray:
        """Coordinates ``Re Tr(G E_k)`` of the block-diagonal part of ``G``."""
        G = np.asarray(G)
        v = self.coef[:, 0] * G[self.cols[:, 0], self.rows[:, 0]]
        v += self.coef[:, 1] * G[self.cols[:, 1], self.rows[:, 1]]
        return v.real.copy()

    def to_mat(self, x) -> np.ndarray:
        n = self.spec.dim
        X = np.zeros((n, n), dtype=np.complex128)
        for s in (0, 1):
            np.add.at(X, (self.rows[:, s], self.cols[:, s]), self.coef[:, s] * x)
        return X


@lru_cache(maxsize=64)
def hermitian_basis(spec: BlockSpec) -> HermitianBasis:
    return HermitianBasis(spec)


@dataclass(frozen=True)
class BlockDiagOperator:
    spec: BlockSpec
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=np.complex128) for b in self.blocks)
        if len(blocks) != len(self.spec.sizes) or any(
            b.shape != (n, n) for b, n in zip(blocks, self.spec.sizes)
        ):
            raise DimensionMismatch("block shapes do not match the block specification")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self):
        return self.spec.dim

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks))

    def dense(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks).astype(np.complex128)

    @classmethod
    def from_dense(cls, spec: BlockSpec, X):
        o = spec.offsets
        return cls(spec, tuple(np.array(X[o[j]:o[j + 1], o[j]:o[j + 1]]) for j in range(len(spec.sizes))))


@dataclass
class SolveReport:
    optimal_value: float
    p_error: float
    duality_gap: float
    iterations: int
    newton_steps: int
    max_constraint_violation: float
    d: int
    equality_constraints: int
    inequality_constraints: int
    wall_time: float
    method: str = ""
    converged: bool = True
    compressed: bool = False
    reduced_d: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# barrier core


@dataclass
class BarrierResult:
    x: np.ndarray
    X: np.ndarray
    duals: list
    primal: float
    lower_bound: float
    gap: float
    iterations: int
    newton_steps: int
    max_violation: float
    converged: bool
    t: float


def _factor(X, constraints):
    """Cholesky factors of every slack, or ``None`` if one is not positive definite."""
    out = []
    for A in constraints:
        try:
            out.append(scipy.linalg.cholesky(X - A, lower=True, check_finite=False))
        except np.linalg.LinAlgError:
            return None
    return out


def _logdet(L):
    return 2.0 * np.sum(np.log(np.diag(L).real))


def _inverse(L):
    n = L.shape[0]
    Li = scipy.linalg.solve_triangular(L, np.eye(n), lower=True, check_finite=False)
    W = Li.conj().T @ Li
    return 0.5 * (W + W.conj().T)


def _max_step(Ls, dX):
    """Largest ``s`` with every ``Z_i + s dX`` still positive semidefinite."""
    smax = np.inf
    for L in Ls:
        T = scipy.linalg.solve_triangular(L, dX, lower=True, check_finite=False)
        T = scipy.linalg.solve_triangular(L, T.conj().T, lower=True, check_finite=False)
        lo = np.linalg.eigvalsh(0.5 * (T + T.conj().T))[0]
        if lo < 0:
            smax = min(smax, -1.0 / lo)
    return smax


def _newton_direction(H, g):
    try:
        cf = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(cf, -g, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(H)
    if not np.all(np.isfinite(w)) or w[-1] <= 0:
        raise NumericalBreakdown("Newton system has no positive curvature")
    keep = w > w[-1] * 1e-14
    return -(V[:, keep] @ ((V[:, keep].conj().T @ g) / w[keep]))


def _dual_bound(basis, constraints, Ws, dX, t):
    """Certified lower bound from the Newton-corrected dual estimate.

    ``Y_i = (W_i - W_i dX W_i) / t`` satisfies the linearized stationarity
    condition exactly.  Clipping to the PSD cone and rescaling so that the
    block-diagonal part of ``sum Y_i`` is dominated by ``I`` keeps the point
    dual feasible once the remainder ``R = I - P(sum Y)`` is assigned to the
    constraint where it helps most.
    """
    spec = basis.spec
    Ys = []
    for W in Ws:
        Y = (W - W @ dX @ W) / t
        w, V = np.linalg.eigh(0.5 * (Y + Y.conj().T))
        w = np.clip(w, 0.0, None)
        Ys.append((V * w) @ V.conj().T)
    total = sum(Ys)
    o = spec.offsets
    blocks = [total[o[j]:o[j + 1], o[j]:o[j + 1]] for j in range(len(spec.sizes))]
    scale = max(np.linalg.eigvalsh(b)[-1] for b in blocks)
    if not np.isfinite(scale) or scale <= 0:
        return -np.inf, Ys
    Ys = [Y / scale for Y in Ys]
    R = np.eye(spec.dim) - basis.to_mat(basis.to_vec(sum(Ys)))
    bound = sum(np.vdot(Y, A).real for Y, A in zip(Ys, constraints))
    bound += max(np.vdot(R, A).real for A in constraints)
    return bound, Ys


def barrier_trace_min(constraints, spec: BlockSpec, tol=DEFAULT.solver, *,
                      max_outer=200, max_newton=50, mu=10.0, newton_eps=1e-9,
                      max_dense_vars=MAX_DENSE_VARS, backend=None) -> BarrierResult:
    """Minimize ``Tr X`` over block-diagonal Hermitian ``X`` with ``X >= A_i``.

    Path following on ``t Tr X - sum_i log det(X - A_i)``.  Stops once the
    certified duality gap is at most ``tol``; raises
    :class:`MaxIterationsExceeded` (carrying the last iterate) otherwise.
    """
    constraints = [np.asarray(A, dtype=np.complex128) for A in constraints]
    n = spec.dim
    if not constraints:
        raise SymDiscError("at least one constraint is required")
    for A in constraints:
        if A.shape != (n, n):
            raise DimensionMismatch(f"constraint shape {A.shape} does not match dimension {n}")
    basis = hermitian_basis(spec)
    d = basis.size
    if d > max_dense_vars:
        raise ProblemTooLarge(f"{d} real variables exceed the dense Newton cap {max_dense_vars}")

    c = basis.to_vec(np.eye(n))
    m = len(constraints) * n
    lam0 = 1.0 + max(0.0, max(np.linalg.eigvalsh(A)[-1] for A in constraints))
    x = lam0 * c
    t = len(constraints) / lam0
    coef, rows, cols = basis.coef, basis.rows, basis.cols

    def phi(Ls, x):
        return t * (c @ x) - sum(_logdet(L) for L in Ls)

    newton_total = 0
    outer = 0
    best = None
    while outer < max_outer:
        outer += 1
        for _ in range(max_newton):
            X = basis.to_mat(x)
            Ls = _factor(X, constraints)
            if Ls is None:
                raise NumericalBreakdown("iterate left the interior of the feasible set", x=x)
            Ws = [_inverse(L) for L in Ls]
            g = t * c - sum(basis.to_vec(W) for W in Ws)
            H = hessian(Ws, coef, rows, cols, backend=backend)
            dx = _newton_direction(H, g)
            newton_total += 1
            lam2 = -(g @ dx)
            if not np.isfinite(lam2):
                raise NumericalBreakdown("non-finite Newton decrement", x=x)
            if lam2 <= 2 * newton_eps:
                break
            dX = basis.to_mat(dx)
            s = min(1.0, 0.98 * _max_step(Ls, dX))
            f0 = phi(Ls, x)
            slope = g @ dx
            while s > 1e-14:
                xn = x + s * dx
                Ln = _factor(basis.to_mat(xn), constraints)
                if Ln is not None and phi(Ln, xn) <= f0 + 0.25 * s * slope:
                    break
                s *= 0.5
            else:
                break  # no progress possible at this t; treat as centered
            x = xn

        dX = basis.to_mat(dx)
        lower, Ys = _dual_bound(basis, constraints, Ws, dX, t)
        primal = float(c @ x)
        gap = primal - lower
        if best is None or gap < best.gap:
            best = BarrierResult(x.copy(), basis.to_mat(x), Ys, primal, lower, gap,
                                 outer, newton_total, 0.0, False, t)
        if gap <= tol:
            break
        if m / t < 1e-3 * tol:
            break  # the barrier term is exhausted; further increases only add roundoff
        t *= mu

    best.iterations, best.newton_steps = outer, newton_total
    X = best.X
    best.max_violation = max(0.0, -min(np.linalg.eigvalsh(X - A)[0] for A in constraints))
    best.converged = best.gap <= tol
    if not best.converged:
        raise MaxIterationsExceeded(
            f"duality gap {best.gap:.3e} above tolerance {tol:.1e} after {outer} barrier iterations",
            x=best.x, report=best)
    return best


# ---------------------------------------------------------------------------
# public problem forms

TABLE_KINDS = ("PP1", "PP2", "DP1", "DP2", "DP3")


def count_variables(kind, N, M, spec: BlockSpec | None = None):
    """``(d, C_e, C_i)``: real variables, equality and inequality constraints."""
    kind = kind.upper()
    if kind == "PP1":
        return M * N * N, 1, M
    if kind == "PP2":
        return N * N, 1, 1
    if kind == "DP1":
        return N * N, 0, M
    if kind == "DP2":
        return N * N, 0, 2
    if kind == "DP3":
        if spec is None:
            raise MissingBlockSpec("DP3 counts need the eigenvalue multiplicities of S")
        return spec.n_params, 0, 1
    raise SymDiscError(f"unknown problem kind {kind!r}; expected one of {TABLE_KINDS}")


def _report(res: BarrierResult, method, counts, t0, **kw):
    d, ce, ci = counts
    rep = SolveReport(
        optimal_value=res.primal,
        p_error=1.0 - res.primal,
        duality_gap=res.gap,
        iterations=res.iterations,
        newton_steps=res.newton_steps,
        max_constraint_violation=res.max_violation,
        d=d,
        equality_constraints=ce,
        inequality_constraints=ci,
        wall_time=time.perf_counter() - t0,
        method=method,
        converged=res.converged,
        **kw,
    )
    rep.extra["vector_length"] = int(res.x.size)
    return rep


def solve_trace_min(constraints, spec=None, tol=DEFAULT.solver, **kw):
    """Generic entry point: returns ``(X, BarrierResult)``."""
    n = np.asarray(constraints[0]).shape[0]
    spec = spec or BlockSpec((n,))
    res = barrier_trace_min(constraints, spec, tol, **kw)
    return res.X, res


def solve_dp1(states, priors, tol=DEFAULT.solver, **kw):
    """General dual: ``min Tr X`` with ``X >= q_i rho_i`` for every state."""
    t0 = time.perf_counter()
    states = [np.asarray(s, dtype=np.complex128) for s in states]
    priors = np.asarray(priors, dtype=float)
    if not states:
        raise SymDiscError("at least one state is required")
    N = states[0].shape[0]
    if any(s.shape != (N, N) for s in states):
        raise DimensionMismatch("states must share a common dimension")
    if priors.shape != (len(states),) or np.any(priors < 0) or abs(priors.sum() - 1) > DEFAULT.trace:
        raise SymDiscError("priors must be non-negative, one per state, and sum to 1")
    spec = BlockSpec((N,))
    res = barrier_trace_min([q * s for q, s in zip(priors, states)], spec, tol, **kw)
    counts = count_variables("DP1", N, len(states))
    assert res.x.size == counts[0]
    return res.X, _report(res, "dp1", counts, t0)


def reduced_constraint(e, eig: EigenStructure) -> np.ndarray:
    """``(1/M) U^H rho0 U`` in the grouped eigenbasis of ``S``."""
    U = eig.basis
    B = U.conj().T @ e.rho0.matrix @ U / e.M
    return 0.5 * (B + B.conj().T)


def _support_compression(B, spec, rel_tol=1e-12):
    """Per-block orthonormal bases of ``range(B_jj)``.

    For PSD ``B`` the range of every block row lies in the range of its
    diagonal block, so restricting block ``j`` of the variable to
    ``range(B_jj)`` loses nothing: compressing any feasible point keeps it
    feasible and does not increase the trace.
    """
    o = spec.offsets
    top = np.linalg.eigvalsh(B)[-1]
    bases = []
    for j in range(len(spec.sizes)):
        w, V = np.linalg.eigh(B[o[j]:o[j + 1], o[j]:o[j + 1]])
        bases.append(V[:, w > rel_tol * max(top, 0.0)])
    return bases


def solve_dp3(e, eig: EigenStructure, tol=DEFAULT.solver, compress=None,
              max_dense_vars=MAX_DENSE_VARS, **kw):
    """Symmetry-reduced dual over block-diagonal ``X~ >= (1/M) U^H rho0 U``.

    ``compress=None`` compresses only when the full block variable would
    exceed ``max_dense_vars``.  Compression restricts each block to the
    support of the data and is exact; ``report.d`` keeps the uncompressed
    count and ``report.reduced_d`` records the vector actually solved.
    """
    t0 = time.perf_counter()
    if eig.dim != e.dim:
        raise DimensionMismatch("eigenstructure and ensemble dimensions differ")
    spec = BlockSpec.from_eigenstructure(eig)
    counts = count_variables("DP3", e.dim, e.M, spec)
    B = reduced_constraint(e, eig)
    if compress is None:
        compress = spec.n_params > max_dense_vars
    if not compress:
        res = barrier_trace_min([B], spec, tol, max_dense_vars=max_dense_vars, **kw)
        assert res.x.size == counts[0]
        Xt = BlockDiagOperator.from_dense(spec, res.X)
        return Xt, _report(res, "dp3", counts, t0)

    bases = _support_compression(B, spec)
    kept = [j for j, V in enumerate(bases) if V.shape[1] > 0]
    cspec = BlockSpec(tuple(bases[j].shape[1] for j in kept))
    o = spec.offsets
    Vc = np.zeros((e.dim, cspec.dim), dtype=np.complex128)
    co = cspec.offsets
    for k, j in enumerate(kept):
        Vc[o[j]:o[j + 1], co[k]:co[k + 1]] = bases[j]
    Bc = Vc.conj().T @ B @ Vc
    res = barrier_trace_min([0.5 * (Bc + Bc.conj().T)], cspec, tol,
                            max_dense_vars=max_dense_vars, **kw)
    blocks = [np.zeros((n, n), dtype=np.complex128) for n in spec.sizes]
    for k, j in enumerate(kept):
        C = res.X[co[k]:co[k + 1], co[k]:co[k + 1]]
        blocks[j] = bases[j] @ C @ bases[j].conj().T
    Xt = BlockDiagOperator(spec, tuple(blocks))
    return Xt, _report(res, "dp3", counts, t0, compressed=True, reduced_d=int(res.x.size))


def lift(Xt: BlockDiagOperator, eig: EigenStructure) -> np.ndarray:
    """``X = U X~ U^H``: the reduced optimum in the original basis."""
    if Xt.dim != eig.dim or Xt.spec.sizes != tuple(eig.multiplicities):
        raise DimensionMismatch("block operator does not match the eigenstructure")
    U = eig.basis
    X = U @ Xt.dense() @ U.conj().T
    return 0.5 * (X + X.conj().T)


def positive_part(A) -> np.ndarray:
    """Sum of the positive spectral components of Hermitian ``A``."""
    A = np.asarray(A, dtype=np.complex128)
    try:
        w, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    except np.linalg.LinAlgError as exc:
        from .errors import DecompositionFailed

        raise DecompositionFailed(str(exc)) from exc
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.conj().T
