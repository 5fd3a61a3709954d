"""Exception types shared across the package."""


class QpclabError(Exception):
    """Base class for all qpclab errors."""


class ConfigError(QpclabError):
    """Invalid run configuration (CLI flags or config file)."""


class SingularRootError(QpclabError):
    """Root configuration with coincident or zero roots; the Bethe
    equations are singular there."""


class PairingViolationError(QpclabError):
    """Imaginary part of the root sum exceeds the conjugate-pairing
    tolerance."""


class ReconstructionError(QpclabError):
    """Root reconstruction from an eigenvector failed to certify.

    Carries the best residual reached in ``best_residual``.
    """

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class NewtonError(QpclabError):
    """Newton iteration did not converge; carries the best iterate."""

    def __init__(self, message, best_roots=None, best_residual=None):
        super().__init__(message)
        self.best_roots = best_roots
        self.best_residual = best_residual


class NodeProximityError(QpclabError):
    """A sample point lies too close to a wavefunction node; the
    log-derivative residual is undefined there."""


class QuarticInstabilityError(QpclabError):
    """Quartic coefficient of the local expansion is not positive."""


class DomainError(QpclabError):
    """Finite-difference domain cannot be made large enough."""


class NoCrossoverError(QpclabError):
    """No bifurcation / derivative jump found in the scanned window."""


class ConsistencyError(QpclabError):
    """Closed-form and numerical routes disagree beyond tolerance."""
