"""Numerical tolerances shared across modules."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    unitary: float = 1e-8
    psd: float = 1e-9
    trace: float = 1e-9
    grouping: float = 1e-8  # radians
    rank: float = 1e-8  # relative to the largest singular value
    null: float = 1e-6  # null space of the slack, relative
    povm: float = 1e-7
    solver: float = 1e-8  # duality gap

    def with_(self, **kw):
        return replace(self, **kw)


DEFAULT = Tolerances()

#: Default cap on the Hilbert-space dimension of generated ensembles.
DIMENSION_CAP = 2048

#: Largest number of real unknowns assembled into a dense Newton system.
MAX_DENSE_VARS = 4096
