"""Exception hierarchy shared by all camforge modules.

Every error carries a short machine-readable ``code`` so the CLI and the
HTTP service can map failures to structured responses without string
matching on messages.
"""

from __future__ import annotations


class CamforgeError(Exception):
    """Base class for all camforge errors."""

    code = "error"


class DirectiveSyntaxError(CamforgeError):
    """Directive text does not match the control grammar."""

    code = "syntax"

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class UnknownParamError(CamforgeError):
    """Directive names a parameter outside the seven supported controls."""

    code = "unknown-param"


class DuplicateParamError(CamforgeError):
    """Directive repeats a parameter."""

    code = "duplicate-param"


class DirectiveValueError(CamforgeError):
    """Value token is well-formed but violates a value invariant."""

    code = "value"


class RangeError(CamforgeError):
    """Numeric input outside the calibrated operating range."""

    code = "range"


class UnknownStyleError(CamforgeError):
    """Style name not present in the style registry."""

    code = "unknown-style"


class SpaceMismatchError(CamforgeError):
    """Image buffer is in the wrong color space for the operation."""

    code = "space-mismatch"


class TooSmallError(CamforgeError):
    """Image (or crop region) is too small for the operation."""

    code = "too-small"


class DimensionMismatchError(CamforgeError):
    """Two buffers that must agree in shape do not."""

    code = "dimension-mismatch"


class ShapeError(CamforgeError):
    """Tensor shape inconsistent with the conditioning configuration."""

    code = "shape"


class ConfigError(CamforgeError):
    """Dataset build configuration is invalid."""

    code = "config"


class StateError(CamforgeError):
    """Operation invoked without the state it requires (e.g. backward
    before forward)."""

    code = "state"


class DivergenceError(CamforgeError):
    """Training loss became non-finite."""

    code = "divergence"
