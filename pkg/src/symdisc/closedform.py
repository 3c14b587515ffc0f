"""Analytic solution of the two-dimensional rotation example.

The states live on ``C^2``; the symmetry is the rotation through ``pi/M``
and the reference state is ``[[alpha, beta], [beta, 1 - alpha]]``.  Both
eigenvalues of the rotation are simple, so the reduced dual variable is a
2x2 diagonal matrix and the whole problem solves by hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleParameters
from .operators import SymmetryOperator, validate_symmetry
from .sdp import BlockDiagOperator, BlockSpec

_FEAS_SLACK = 1e-12


@dataclass(frozen=True)
class RotationExampleParams:
    M: int
    alpha: float
    beta: float

    def __post_init__(self):
        M, a, b = int(self.M), float(self.alpha), float(self.beta)
        if M < 2:
            raise InfeasibleParameters(f"M must be >= 2, got {M}")
        if not (0.0 <= a <= 1.0):
            raise InfeasibleParameters(f"alpha must lie in [0, 1], got {a}")
        if b * b > a * (1.0 - a) + _FEAS_SLACK:
            raise InfeasibleParameters(
                f"|beta| = {abs(b)} exceeds sqrt(alpha (1 - alpha)) = {math.sqrt(a * (1 - a)):.6g}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def gain(self):
        """``sqrt((2 alpha - 1)^2 + (2 beta)^2)``, the length of the Bloch vector."""
        return math.hypot(2.0 * self.alpha - 1.0, 2.0 * self.beta)


def reference_state(p: RotationExampleParams) -> np.ndarray:
    return np.array([[p.alpha, p.beta], [p.beta, 1.0 - p.alpha]], dtype=np.complex128)


def rotation_matrix(M: int) -> np.ndarray:
    th = math.pi / M
    return np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]],
                    dtype=np.complex128)


def rotation_symmetry(M: int) -> SymmetryOperator:
    """Counterclockwise rotation through ``pi/M``; ``S^M = -I``."""
    if M < 1:
        raise InfeasibleParameters(f"M must be >= 1, got {M}")
    return validate_symmetry(rotation_matrix(M), M)


def closed_form_pe(p: RotationExampleParams) -> float:
    return (p.M - 1) / p.M - p.gain / p.M


def closed_form_xtilde(p: RotationExampleParams) -> BlockDiagOperator:
    x = (1.0 + p.gain) / (2 * p.M)
    return BlockDiagOperator(BlockSpec((1, 1)), (np.array([[x]]), np.array([[x]])))


def closed_form_povm(p: RotationExampleParams):
    """Reference measurement operator where a closed form is known, else ``None``.

    ``beta == 0``: the projector on the larger diagonal entry of ``rho0``
    scaled by ``2/M`` (for ``alpha < 1/2`` this is the mirrored projector
    on the second basis vector).  ``|beta| == sqrt(alpha (1 - alpha))``:
    ``rho0`` is pure and the answer is ``(2/M) rho0``.
    """
    scale = 2.0 / p.M
    if abs(p.beta) <= _FEAS_SLACK:
        return scale * (np.diag([1.0, 0.0]) if p.alpha >= 0.5 else np.diag([0.0, 1.0])).astype(np.complex128)
    if abs(p.beta * p.beta - p.alpha * (1.0 - p.alpha)) <= _FEAS_SLACK:
        return scale * reference_state(p)
    return None
