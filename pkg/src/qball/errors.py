"""Exception types raised by the solvers.

Each maps to a distinct CLI exit code (see ``qball.cli``).
"""


class QBallError(Exception):
    """Base class for toolkit failures."""


class ZeroCharge(QBallError):
    """The hylenic charge is too small for the ratio E/|C| to be defined."""


class Collapse(QBallError):
    """A minimization iterate vanished."""


class NoConvergence(QBallError):
    """Iteration budget exhausted before the stopping rule was met."""


class NoGroundState(QBallError):
    """Shooting could not bracket a decaying, node-free profile."""


class DegenerateFit(QBallError):
    """Too few nodes carry matter to fit the frequency."""


class CertificateFailed(QBallError):
    """No test profile on the radius ladder has ratio below the mass."""


class NumericAbort(QBallError):
    """Non-finite values appeared during time stepping."""


class ConfigError(QBallError, ValueError):
    """Malformed or inconsistent run configuration."""
