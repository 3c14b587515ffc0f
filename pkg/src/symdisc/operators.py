"""Validated operator types, symmetry eigenstructure and conjugation.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  The
wrapper types below only exist where a matrix carries extra invariants
(unit trace, unitarity plus a projective order, a grouped eigenbasis);
they are frozen and their arrays are marked read-only after validation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .config import DEFAULT, Tolerances
from .errors import (
    DecompositionFailed,
    DimensionMismatch,
    NotHermitian,
    NotProjectiveOrder,
    NotPSD,
    NotUnitary,
    SymDiscError,
    TraceNotOne,
)

EPS = np.finfo(float).eps


def _frozen(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(m, square=True):
    """Coerce ``m`` to a finite complex128 2-D array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SymDiscError("matrix has NaN or Inf entries")
    return a


def hermitize(m, tol: Tolerances = DEFAULT):
    """Return ``(m + m^H)/2`` after checking ``m`` is Hermitian within ``tol.herm``."""
    a = as_matrix(m)
    skew = np.linalg.norm(a - a.conj().T)
    scale = np.linalg.norm(a)
    if skew > tol.herm * scale:
        raise NotHermitian(f"||A - A^H||_F = {skew:.3e} exceeds {tol.herm:.1e} * ||A||_F")
    return 0.5 * (a + a.conj().T)


def matrix_rank(a, rel_tol=DEFAULT.rank):
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def rank(self, rel_tol=DEFAULT.rank):
        return matrix_rank(self.matrix, rel_tol)


def validate_density(m, tol: Tolerances = DEFAULT) -> DensityOperator:
    a = hermitize(m, tol)
    w = np.linalg.eigvalsh(a)
    if w[0] < -tol.psd:
        raise NotPSD(f"most negative eigenvalue {w[0]:.3e} below -{tol.psd:.1e}", w[0])
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > tol.trace:
        raise TraceNotOne(f"trace {tr!r} differs from 1 by more than {tol.trace:.1e}", tr)
    return DensityOperator(a)


@dataclass(frozen=True)
class SymmetryOperator:
    """Unitary ``S`` with ``S**order == phase * I``.

    Powers are cached on first use.  The cache is filled idempotently, so
    concurrent readers at worst compute the same power twice.
    """

    matrix: np.ndarray
    order: int
    phase: complex = 1.0
    _powers: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))
        object.__setattr__(self, "phase", complex(self.phase))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def power(self, i: int) -> np.ndarray:
        """``S**i`` for any integer ``i`` (negative powers use the adjoint)."""
        if i < 0:
            return self.power(-i).conj().T
        q, r = divmod(i, self.order)
        p = self._powers.get(r)
        if p is None:
            p = _frozen(np.linalg.matrix_power(self.matrix, r))
            self._powers[r] = p
        return p * self.phase**q if q else p


def validate_symmetry(m, M: int, tol: Tolerances = DEFAULT) -> SymmetryOperator:
    if M < 1:
        raise SymDiscError(f"order M must be >= 1, got {M}")
    s = as_matrix(m)
    n = s.shape[0]
    eye = np.eye(n)
    dev = np.linalg.norm(s @ s.conj().T - eye)
    if dev > tol.unitary:
        raise NotUnitary(f"||S S^H - I||_F = {dev:.3e} exceeds {tol.unitary:.1e}")
    sm = np.linalg.matrix_power(s, M)
    c = np.trace(sm) / n
    if abs(c) < 0.5:
        raise NotProjectiveOrder(f"S^{M} is not proportional to the identity (Tr/N = {c:.3g})")
    c = c / abs(c)
    dev = np.linalg.norm(sm - c * eye)
    if dev > tol.unitary:
        raise NotProjectiveOrder(f"||S^{M} - c I||_F = {dev:.3e} exceeds {tol.unitary:.1e}")
    return SymmetryOperator(s, int(M), complex(c))


@dataclass(frozen=True)
class EigenStructure:
    """Eigenbasis of ``S`` with columns grouped by distinct eigenvalue."""

    basis: np.ndarray
    eigenvalues: tuple
    multiplicities: tuple

    def __post_init__(self):
        object.__setattr__(self, "basis", _frozen(self.basis))
        object.__setattr__(self, "eigenvalues", tuple(complex(x) for x in self.eigenvalues))
        object.__setattr__(self, "multiplicities", tuple(int(x) for x in self.multiplicities))

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def block_offsets(self):
        return tuple(np.concatenate([[0], np.cumsum(self.multiplicities)]).tolist())

    def block(self, j):
        """Columns of the eigenbasis belonging to distinct eigenvalue ``j``."""
        o = self.block_offsets
        return self.basis[:, o[j]:o[j + 1]]

    def diagonal(self):
        """Eigenvalues repeated with multiplicity, aligned with ``basis`` columns."""
        return np.repeat(np.array(self.eigenvalues), self.multiplicities)


def eigenstructure(S: SymmetryOperator, tol: Tolerances = DEFAULT) -> EigenStructure:
    """Unitary eigendecomposition of ``S`` grouped into distinct eigenvalues.

    A complex Schur form is used rather than ``eig``: for a normal matrix it
    is diagonal and its Schur vectors are orthonormal even inside highly
    degenerate eigenspaces.  Eigenvalues are ordered by principal angle in
    ``[0, 2*pi)`` (stable on ties) and merged when adjacent angles differ by
    less than ``tol.grouping``.
    """
    s = S.matrix
    n = s.shape[0]
    try:
        t, z = scipy.linalg.schur(s, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DecompositionFailed(str(exc)) from exc
    lam = np.diag(t).copy()
    ang = np.mod(np.angle(lam), 2 * np.pi)
    ang[ang > 2 * np.pi - tol.grouping] -= 2 * np.pi
    order = np.argsort(ang, kind="stable")
    ang, lam, z = ang[order], lam[order], z[:, order]

    starts = [0] + [k for k in range(1, n) if ang[k] - ang[k - 1] >= tol.grouping]
    bounds = starts + [n]
    cols, reps, mult = [], [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        q, _ = np.linalg.qr(z[:, a:b])
        cols.append(q)
        rep = lam[a:b].mean()
        reps.append(rep / abs(rep))
        mult.append(b - a)
    u = np.hstack(cols)
    eig = EigenStructure(u, reps, mult)

    resid = np.linalg.norm(s @ u - u * eig.diagonal()[None, :])
    if not np.isfinite(resid) or resid > tol.unitary * np.sqrt(n) + 1e3 * EPS * n:
        raise DecompositionFailed(f"||S U - U Lambda||_F = {resid:.3e} after grouping")
    return eig


def conjugate_power(S: SymmetryOperator, i: int, A) -> np.ndarray:
    """``S**i A S**-i``, re-symmetrized so the result is exactly Hermitian."""
    a = np.asarray(A, dtype=np.complex128)
    if a.shape != S.matrix.shape:
        raise DimensionMismatch(f"operator shape {a.shape} vs symmetry {S.matrix.shape}")
    if i % S.order == 0:
        return a.copy()
    p = S.power(i % S.order)
    out = p @ a @ p.conj().T
    return 0.5 * (out + out.conj().T)


def group_average(S: SymmetryOperator, A) -> np.ndarray:
    """``(1/M) sum_i S**-i A S**i``; the result commutes with ``S``."""
    a = np.asarray(A, dtype=np.complex128)
    acc = np.zeros_like(a)
    for i in range(S.order):
        p = S.power(i)
        acc += p.conj().T @ a @ p
    acc /= S.order
    return 0.5 * (acc + acc.conj().T)


def commutator_norm(A, S: SymmetryOperator) -> float:
    a = np.asarray(A)
    return float(np.linalg.norm(a @ S.matrix - S.matrix @ a))


def pinch(A, eig: EigenStructure) -> list:
    """Diagonal blocks of ``U^H A U`` in the grouped eigenbasis of ``S``."""
    at = eig.basis.conj().T @ np.asarray(A) @ eig.basis
    o = eig.block_offsets
    return [at[o[j]:o[j + 1], o[j]:o[j + 1]] for j in range(len(o) - 1)]


# JSON matrix codec: {"rows": R, "cols": C, "data": [[re, im], ...]} row-major.

def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    if not np.all(np.isfinite(a)):
        raise SymDiscError("cannot serialize a matrix with NaN or Inf entries")
    flat = a.ravel()
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(doc) -> np.ndarray:
    try:
        rows, cols, data = int(doc["rows"]), int(doc["cols"]), doc["data"]
    except (KeyError, TypeError) as exc:
        raise SymDiscError(f"malformed matrix document: {exc}") from exc
    if rows < 1 or cols < 1 or len(data) != rows * cols:
        raise DimensionMismatch(f"matrix document declares {rows}x{cols} but has {len(data)} entries")
    arr = np.array(data, dtype=float)
    if arr.shape != (rows * cols, 2):
        raise SymDiscError("matrix entries must be [re, im] pairs")
    out = (arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise SymDiscError("matrix document has NaN or Inf entries")
    return out


def vector_from_json(data) -> np.ndarray:
    """Read a vector given as a list of ``[re, im]`` pairs."""
    arr = np.array(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise SymDiscError("vector entries must be [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]
