"""Quantum nondemolition photon counting with atoms scattered off a cavity mode.

Modules
-------
model         parameters, units, momentum folding and simulation grids
bloch         Bloch bands of the photon-number dependent lattice
semianalytic  single-band Gaussian packets and the field entropy
field         Fock-space field states, entropies and the Husimi Q function
propagator    split-operator propagation through the cavity
measurement   detection statistics, photon filter and measurement cascades
cli           command-line runner
"""

from .errors import (AccuracyError, BoundaryLeakError, CavityQNDError, CutoffError,
                     NoSignalError, ParameterError, ResolutionError, ZeroLikelihoodError)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BoundaryLeakError", "CavityQNDError", "CutoffError", "NoSignalError",
    "ParameterError", "ResolutionError", "ZeroLikelihoodError", "__version__",
]
