"""Exception taxonomy shared by all solver modules.

Every error carries a stable category name (the class name) that the CLI
reports verbatim, so scripts can dispatch on it.
"""


class SolverError(Exception):
    """Base class for all package errors."""

    @property
    def category(self) -> str:
        return type(self).__name__


# --- configuration validation ---

class ParameterConflict(SolverError):
    """Line-search / learner parameters violate their admissible ranges."""


class StepSeedTooSmall(SolverError):
    """Initial trial step size below the alpha2*beta/L1 floor."""


class SpectrumViolation(SolverError):
    """Initial curvature matrix has eigenvalues outside [mu, L1]."""


class DegenerateCurvature(SolverError):
    """Curvature metadata is inconsistent (L1 < mu, or mu <= 0)."""


# --- problem generation / ingestion ---

class InvalidSpectrum(SolverError):
    """Requested eigenvalue range is empty or non-positive."""


class ParseError(SolverError):
    """Input file is not a readable Matrix Market matrix."""


class NotSymmetric(SolverError):
    """Matrix read from file is not symmetric."""


class NotPositiveDefinite(SolverError):
    """Matrix read from file has a non-positive eigenvalue."""


# --- linear solver ---

class IterationCapExceeded(SolverError):
    """Krylov solver hit its iteration cap; the operator likely violates
    the positive-definite precondition or the tolerance is unreachable."""


# --- eigenvalue oracle ---

class EigFailure(SolverError):
    """Dense symmetric eigendecomposition did not converge."""


# --- online learner ---

class ZeroDisplacement(SolverError):
    """Loss sample has a zero displacement vector."""


class StateMismatch(SolverError):
    """Learner round update without a preceding prediction."""


# --- line search ---

class BacktrackCapExceeded(SolverError):
    """Line search exceeded its attempt budget; (mu, L1) metadata is
    likely invalid for the supplied objective."""


# --- main solver ---

class NonFiniteIterate(SolverError):
    """NaN or Inf appeared in an iterate or gradient."""


class MissingGroundTruth(SolverError):
    """A requested certificate needs the minimizer or Hessian oracle."""


# --- baselines ---

class LineSearchFailure(SolverError):
    """Armijo backtracking failed to find a decrease step."""


# --- CLI ---

class ProblemMismatch(SolverError):
    """Comparison requires at least two runs on one and the same problem."""
