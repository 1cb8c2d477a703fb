"""
Exception types raised by SpatialFDR.

Every error carries a short machine-readable ``code`` so that the command
line front end can report failures as JSON without parsing messages.
"""


class SpatialFDRError(Exception):
    """Base class for all library errors."""
    code = "spatialfdr-error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class InvalidSpecError(SpatialFDRError, ValueError):
    """A neighborhood specification cannot be realized on the lattice."""
    code = "invalid-spec"


class InvalidLatticeError(SpatialFDRError, ValueError):
    """Lattice dims/values are inconsistent or out of range."""
    code = "invalid-lattice"


class DimsMismatchError(SpatialFDRError, ValueError):
    code = "dims-mismatch"


class DegenerateNullError(SpatialFDRError, RuntimeError):
    """The estimated null distribution leaves nothing to divide by."""
    code = "degenerate-null"


class UnsupportedAnalyticError(SpatialFDRError, ValueError):
    code = "unsupported-analytic"


class NonInvertibleModelError(SpatialFDRError, ValueError):
    code = "non-invertible-model"


class ConfigError(SpatialFDRError, ValueError):
    code = "bad-config"
