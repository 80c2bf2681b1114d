"""Exception types shared across the package.

Numerical failure modes get their own classes so callers (and the CLI exit
code mapping) can distinguish bad input from non-convergence from genuinely
infeasible requests.
"""


class PainleveTorusError(Exception):
    """Base class for all package errors."""


class InvalidTauError(PainleveTorusError, ValueError):
    """Modular parameter not in the upper half plane."""


class PoleProximityError(PainleveTorusError, ValueError):
    """Evaluation point too close to a pole / singularity."""


class HalfPeriodError(PainleveTorusError, ValueError):
    """Input is (too close to) a half period / half lattice point where the
    requested quantity is undefined."""


class DegenerateParameterError(PainleveTorusError, ValueError):
    """A denominator of a closed-form expression is numerically zero."""


class UnsupportedIndexError(PainleveTorusError, ValueError):
    """Requested an index for which no closed-form lift is implemented."""


class ConvergenceError(PainleveTorusError, RuntimeError):
    """An iterative solver or adaptive integrator failed to meet tolerance."""


class BranchJumpError(ConvergenceError):
    """Continuous-branch tracking across a stencil lost the branch."""


class HalfPeriodCollisionError(ConvergenceError):
    """A trajectory approached the two-torsion set E_tau[2]."""


class PathConstructionError(PainleveTorusError, ValueError):
    """Clearance constraints for a continuation path are unsatisfiable."""


class IllConditionedError(PainleveTorusError, RuntimeError):
    """Eigenvector extraction too ill-conditioned to classify reliably."""


class NotUnitaryError(PainleveTorusError, ValueError):
    """Solution synthesis requested for a non-unitary monodromy."""


class StencilError(PainleveTorusError, ValueError):
    """A finite-difference stencil would touch a singularity."""
