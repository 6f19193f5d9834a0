"""Exception types shared across the toolkit.

Everything derives from WptLabError so callers can catch the whole family
with one except clause. The CLI maps ConfigError to exit code 2 and
SolverError (or any solver-side failure) to exit code 3.
"""


class WptLabError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(WptLabError):
    """Invalid or inconsistent user-supplied configuration."""


class SolverError(WptLabError):
    """An optimization routine failed to produce a usable result."""


class DomainError(WptLabError):
    """Argument outside the mathematical domain of the function."""


class BracketError(WptLabError):
    """Root bracketing failed: function has the same sign at both ends."""


class NonFiniteError(SolverError):
    """Objective or gradient evaluated to NaN or infinity."""


class SamplingError(WptLabError):
    """Too few samples per period to resolve the requested moments."""


class DimensionError(WptLabError):
    """Array arguments have inconsistent lengths or shapes."""


class ShapeError(DimensionError):
    """Array argument has the wrong shape for this operation."""


class NarrowbandError(WptLabError):
    """Delay spread too large for the flat-per-subband channel model."""


class RandomSignalError(WptLabError):
    """Operation defined only for deterministic signals was given a random one."""


class OrderError(WptLabError):
    """Requested moment order exceeds what the harvester model supports."""


class UnsupportedError(WptLabError):
    """Input falls outside the closed-form path; use the Monte Carlo route."""


class DegenerateChannelError(WptLabError):
    """All channel amplitudes are zero; there is nothing to optimize."""


class ZeroChannelError(WptLabError):
    """A per-tone channel vector is identically zero."""


class DivisibilityError(WptLabError):
    """Surface size is not divisible by the requested group size."""


class QuadratureError(WptLabError):
    """Numerical integration failed to converge to the requested accuracy."""


class InfeasibleError(WptLabError):
    """Constraints cannot be satisfied for the given inputs."""


class DivergenceError(SolverError):
    """Training loss became non-finite."""


class DegenerateError(WptLabError):
    """No sensor is worth scheduling at any price."""
