"""Exception types shared across the package."""


class ShearfreeError(Exception):
    """Base class for all errors raised by this package."""


class GridError(ShearfreeError):
    """Invalid grid construction request."""


class FrameError(ShearfreeError):
    """Operation mixed compactified/physical frames, or asked for a
    physical-frame value at a boundary node where it diverges."""


class WeightWindowError(ShearfreeError):
    """Requested decay weight lies outside the invertibility window of the
    elliptic operator; the solve is refused before assembly."""


class SolverError(ShearfreeError):
    """Linear solve stagnated or produced a residual above tolerance."""


class NewtonError(ShearfreeError):
    """Nonlinear (Newton) solve diverged or hit the positivity floor."""


class DataError(ShearfreeError):
    """Field data violates a documented precondition (sign, decay, trace)."""


class ConfigError(ShearfreeError):
    """Malformed run configuration."""
