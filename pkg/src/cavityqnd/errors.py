"""Exception hierarchy shared by all modules.

Each class carries a ``category`` string used by the command-line runner to
choose an exit code and to emit a machine-readable error line.
"""


class CavityQNDError(Exception):
    category = "error"


class ParameterError(CavityQNDError, ValueError):
    """Invalid or inconsistent input parameters."""

    category = "config"


class AccuracyError(CavityQNDError):
    """A numerical accuracy requirement could not be met."""

    category = "numerical"


class CutoffError(AccuracyError):
    """A basis or Fock-space truncation loses too much weight."""


class ResolutionError(AccuracyError):
    """A grid is too coarse for the structure it must resolve."""


class BoundaryLeakError(AccuracyError):
    """Probability reached the edge of the periodic grid."""


class NoSignalError(AccuracyError):
    """No probability is left in the detection region."""


class ZeroLikelihoodError(AccuracyError):
    """A measurement outcome has zero likelihood for every photon number."""
