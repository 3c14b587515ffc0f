"""Geometrically uniform state ensembles.

An ensemble is fixed by a reference state ``rho0``, a symmetry operator
``S`` and the number of states ``M``; state ``i`` is ``S^i rho0 S^-i`` with
uniform prior ``1/M``.
"""
from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.stats

from .config import DEFAULT, DIMENSION_CAP, Tolerances
from .errors import (
    DegenerateVectorsWarning,
    DimensionCapExceeded,
    DimensionMismatch,
    OrderMismatch,
    SymDiscError,
)
from .operators import (
    DensityOperator,
    SymmetryOperator,
    conjugate_power,
    matrix_from_json,
    matrix_to_json,
    validate_density,
    validate_symmetry,
    vector_from_json,
)

#: States are materialized up front when ``M * N**2`` stays below this.
EAGER_LIMIT = 2**26


class _LazyStates(Sequence):
    def __init__(self, ens):
        self._ens = ens

    def __len__(self):
        return self._ens.M

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        return self._ens.state(i % len(self))


@dataclass(frozen=True)
class GUEnsemble:
    rho0: DensityOperator
    S: SymmetryOperator
    M: int
    _states: tuple = field(default=None, repr=False, compare=False)

    @property
    def dim(self):
        return self.rho0.dim

    @property
    def prior(self):
        return 1.0 / self.M

    @property
    def priors(self):
        return np.full(self.M, 1.0 / self.M)

    def state(self, i) -> np.ndarray:
        if self._states is not None:
            return self._states[i % self.M]
        return conjugate_power(self.S, i, self.rho0.matrix)

    @property
    def states(self):
        if self._states is not None:
            return list(self._states)
        return _LazyStates(self)

    def rank(self, rel_tol=DEFAULT.rank):
        return self.rho0.rank(rel_tol)


def build_ensemble(rho0: DensityOperator, S: SymmetryOperator, M: int) -> GUEnsemble:
    if rho0.dim != S.dim:
        raise DimensionMismatch(f"rho0 is {rho0.dim}-dimensional but S is {S.dim}-dimensional")
    if S.order != M:
        raise OrderMismatch(f"S was validated with order {S.order}, ensemble asks for M={M}")
    states = None
    if M * rho0.dim**2 <= EAGER_LIMIT:
        states = tuple(conjugate_power(S, i, rho0.matrix) for i in range(M))
        for s in states:
            s.setflags(write=False)
    return GUEnsemble(rho0, S, M, states)


def rotation_ensemble(M: int, alpha: float, beta: float) -> GUEnsemble:
    """Two-dimensional ensemble generated by the rotation through ``pi/M``."""
    from .closedform import RotationExampleParams, reference_state, rotation_symmetry

    p = RotationExampleParams(M, alpha, beta)
    return build_ensemble(validate_density(reference_state(p)), rotation_symmetry(M), M)


def cyclic_shift(n: int, M: int) -> np.ndarray:
    """Permutation matrix shifting the ``M`` tensor factors of ``(C^n)^{(x)M}`` by one.

    Maps ``|x_0 x_1 ... x_{M-1}>`` to ``|x_{M-1} x_0 ... x_{M-2}>`` so that a
    pulse in slot ``k`` moves to slot ``k + 1``.
    """
    shape = (n,) * M
    N = n**M
    digits = np.array(np.unravel_index(np.arange(N), shape))
    target = np.ravel_multi_index(np.roll(digits, 1, axis=0), shape)
    S = np.zeros((N, N), dtype=np.complex128)
    S[target, np.arange(N)] = 1.0
    return S


def ppm_ensemble(n, M, pulse=None, idle=None, dim_cap=DIMENSION_CAP,
                 tol: Tolerances = DEFAULT) -> GUEnsemble:
    """Pulse-position words on ``n**M`` dimensions with cyclic-shift symmetry.

    Word ``i`` is the product state with ``pulse`` in slot ``i`` and ``idle``
    everywhere else.  This is a plain pure-state stand-in for quantum PPM,
    not a model of optical coherent states.  Defaults are ``idle = e_0`` and
    ``pulse = e_1`` (orthogonal words).
    """
    if n < 2 or M < 2:
        raise SymDiscError(f"ppm_ensemble needs n >= 2 and M >= 2, got n={n}, M={M}")
    N = n**M
    if N > dim_cap:
        raise DimensionCapExceeded(f"n**M = {N} exceeds the dimension cap {dim_cap}")
    eye = np.eye(n, dtype=np.complex128)
    pulse = eye[1] if pulse is None else np.asarray(pulse, dtype=np.complex128).ravel()
    idle = eye[0] if idle is None else np.asarray(idle, dtype=np.complex128).ravel()
    for name, v in (("pulse", pulse), ("idle", idle)):
        if v.shape != (n,):
            raise DimensionMismatch(f"{name} must have length {n}, got {v.shape}")
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise SymDiscError(f"{name} must be a unit vector (norm {np.linalg.norm(v):.6g})")
    if abs(abs(np.vdot(pulse, idle)) - 1.0) < 1e-12:
        warnings.warn("pulse is parallel to idle: all PPM words coincide",
                      DegenerateVectorsWarning, stacklevel=2)
    w0 = reduce(np.kron, [pulse] + [idle] * (M - 1))
    rho0 = validate_density(np.outer(w0, w0.conj()), tol)
    S = validate_symmetry(cyclic_shift(n, M), M, tol)
    return build_ensemble(rho0, S, M)


def random_density(N, rng, rank=None):
    rank = N if rank is None else rank
    g = rng.standard_normal((N, rank)) + 1j * rng.standard_normal((N, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(N, rng):
    if N == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return scipy.stats.unitary_group.rvs(N, random_state=rng)


def random_ensemble(N, M, rng=None, rank=None, tol: Tolerances = DEFAULT) -> GUEnsemble:
    """Random GU ensemble: random ``rho0`` and ``S = V diag(w^k) V^H``.

    ``V`` is Haar-random and each ``k`` is drawn uniformly from ``0..M-1``
    (``w = exp(2 pi i / M)``), so eigenvalues repeat and ``S`` has
    nontrivial multiplicities for ``N > M``.
    """
    rng = np.random.default_rng(rng)
    V = random_unitary(N, rng)
    k = rng.integers(0, M, size=N)
    S = (V * np.exp(2j * np.pi * k / M)[None, :]) @ V.conj().T
    return build_ensemble(
        validate_density(random_density(N, rng, rank), tol),
        validate_symmetry(S, M, tol),
        M,
    )


def average_state(e: GUEnsemble) -> np.ndarray:
    acc = np.zeros((e.dim, e.dim), dtype=np.complex128)
    for i in range(e.M):
        acc += e.state(i)
    acc /= e.M
    return 0.5 * (acc + acc.conj().T)


def ensemble_from_json(doc, tol: Tolerances = DEFAULT, dim_cap=DIMENSION_CAP) -> GUEnsemble:
    """Build an ensemble from one of the documented JSON forms."""
    if not isinstance(doc, dict):
        raise SymDiscError("ensemble document must be a JSON object")
    gen = doc.get("generator")
    try:
        if gen is None:
            M = int(doc["M"])
            rho0 = validate_density(matrix_from_json(doc["rho0"]), tol)
            S = validate_symmetry(matrix_from_json(doc["S"]), M, tol)
            if rho0.dim > dim_cap:
                raise DimensionCapExceeded(f"dimension {rho0.dim} exceeds cap {dim_cap}")
            return build_ensemble(rho0, S, M)
        if gen == "rotation":
            return rotation_ensemble(int(doc["M"]), float(doc["alpha"]), float(doc["beta"]))
        if gen == "ppm":
            pulse = vector_from_json(doc["pulse"]) if "pulse" in doc else None
            idle = vector_from_json(doc["idle"]) if "idle" in doc else None
            return ppm_ensemble(int(doc["n"]), int(doc["M"]), pulse, idle, dim_cap, tol)
        if gen == "random":
            return random_ensemble(int(doc["N"]), int(doc["M"]), int(doc.get("seed", 0)),
                                   doc.get("rank"), tol)
    except KeyError as exc:
        raise SymDiscError(f"ensemble document is missing field {exc}") from exc
    raise SymDiscError(f"unknown generator {gen!r}")


def ensemble_to_json(e: GUEnsemble) -> dict:
    return {"M": e.M, "rho0": matrix_to_json(e.rho0.matrix), "S": matrix_to_json(e.S.matrix)}
