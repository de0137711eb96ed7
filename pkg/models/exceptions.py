"""
Exceptions for FFTracer
All errors raised by the engine derive from FFTracerError.
"""

from typing import List, Optional


class FFTracerError(Exception):
    """Base class for engine errors"""


class ValidationError(FFTracerError, ValueError):
    """Invalid input object (non-Hermitian operator, negative duration, ...)

    ``field`` names the offending parameter when there is a single one.
    """

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class CapacityError(FFTracerError, ValueError):
    """Requested size is outside what the implementation supports"""


class TimeRangeError(FFTracerError, ValueError):
    """Time argument outside [0, tau]"""


class ChannelMismatchError(FFTracerError, ValueError):
    """Sequences or parts disagree on their noise channels"""

    def __init__(self, message: str, channels: Optional[List[str]] = None):
        super().__init__(message)
        self.channels = list(channels or [])


class FrameMismatchError(FFTracerError, ValueError):
    """Per-gate parts are inconsistent in grid, frames or time offsets"""


class PropagationError(FFTracerError, ArithmeticError):
    """Eigendecomposition or propagator construction failed"""

    def __init__(self, message: str, residual: float = float('nan')):
        super().__init__(message)
        self.residual = residual


class NonIntegrableSpectrumError(FFTracerError, ValueError):
    """Spectrum has no finite variance in the requested configuration"""


class StepAlignmentError(FFTracerError, ValueError):
    """Trajectory step does not divide a segment duration"""


class ConfigError(FFTracerError):
    """Run configuration violates the schema"""

    def __init__(self, message: str, violations: Optional[List[dict]] = None):
        super().__init__(message)
        self.violations = list(violations or [])
