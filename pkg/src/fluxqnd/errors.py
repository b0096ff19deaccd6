"""Exception hierarchy shared by all modules.

Two families exist so the command line can map failures to exit codes:
``ConfigError`` for invalid user input and ``NumericalError`` for solver
failures.
"""


class FluxQNDError(Exception):
    """Base class for all package errors."""


class ConfigError(FluxQNDError, ValueError):
    """Invalid or incomplete experiment configuration."""


class NumericalError(FluxQNDError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class DegenerateBias(NumericalError):
    """The SQUID Josephson energy vanishes at the requested flux."""


class NoConvergence(NumericalError):
    """An iterative solver exhausted its iteration or cutoff budget."""


class CutoffTooSmall(ConfigError):
    """Basis truncation below the supported minimum."""


class LengthMismatch(ConfigError):
    """Per-element inputs do not match the number of elements."""


class DegeneracyError(NumericalError):
    """Finite differences requested at a (near) degenerate point."""


class StepSizeTooLarge(NumericalError):
    """Output grid too coarse or integrator failed to meet its tolerance."""


class PhotonOverflow(NumericalError):
    """Intracavity photon number ran far beyond the critical number."""


class TruncationBreach(NumericalError):
    """Population leaked into the last Fock level beyond tolerance."""


class GridTooCoarse(NumericalError):
    """Phase-space grid fails to normalize the Wigner function."""


class UnsupportedNoise(ConfigError):
    """Requested input-noise model is not implemented."""


class Unreachable(NumericalError):
    """Target fidelity cannot be reached within the time horizon."""


class DriveBoundExceeded(NumericalError):
    """Drive amplitude lies beyond the validity bound of the model."""
