"""Exception types raised by symdisc.

Every exception derives from :class:`SymDiscError` (itself a ``ValueError``)
so callers and the CLI can catch the whole family at once.  Each class
carries a ``code`` used in machine-readable error output.
"""


class SymDiscError(ValueError):
    code = "error"


class DimensionMismatch(SymDiscError):
    code = "dimension_mismatch"


class NotHermitian(SymDiscError):
    code = "not_hermitian"


class NotPSD(SymDiscError):
    code = "not_psd"

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class TraceNotOne(SymDiscError):
    code = "trace_not_one"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NotUnitary(SymDiscError):
    code = "not_unitary"


class NotProjectiveOrder(SymDiscError):
    code = "not_projective_order"


class DecompositionFailed(SymDiscError):
    code = "decomposition_failed"


class OrderMismatch(SymDiscError):
    code = "order_mismatch"


class InfeasibleParameters(SymDiscError):
    code = "infeasible_parameters"


class DimensionCapExceeded(SymDiscError):
    code = "dimension_cap_exceeded"


class MissingBlockSpec(SymDiscError):
    code = "missing_block_spec"


class ProblemTooLarge(SymDiscError):
    """The dense Newton system would not fit the configured variable cap."""

    code = "problem_too_large"


class SolverError(SymDiscError):
    code = "solver_error"

    def __init__(self, message, x=None, report=None):
        super().__init__(message)
        self.x = x
        self.report = report


class MaxIterationsExceeded(SolverError):
    """Raised with the best iterate attached as ``x`` and ``report``."""

    code = "max_iterations_exceeded"


class NumericalBreakdown(SolverError):
    code = "numerical_breakdown"


class EmptyNullSpace(SymDiscError):
    code = "empty_null_space"


class CompletenessInfeasible(SymDiscError):
    code = "completeness_infeasible"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CompletenessViolated(SymDiscError):
    code = "completeness_violated"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateVectorsWarning(UserWarning):
    """Pulse and idle vectors are parallel, so every PPM word is identical."""
