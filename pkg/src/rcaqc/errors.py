"""Exception types shared across the package."""


class QcError(Exception):
    """Base class for all rcaqc errors."""


class UnsupportedFormat(QcError):
    """File is not in the supported NIfTI-1 subset (or raw test format)."""


class CorruptHeader(QcError):
    """Header fields are inconsistent or out of range."""


class InvalidLabel(QcError):
    """Label value outside the supported class codes {0, 1, 2, 3}."""


class InvalidData(QcError):
    """Voxel data violates a grid invariant (non-finite values, bad shape)."""


class IoError(QcError):
    """File could not be read or written."""


class EmptyMass(QcError):
    """Center of mass undefined: no foreground / zero total intensity."""


class GridMismatch(QcError):
    """Two grids expected to share dims/spacing/origin do not."""


class UndefinedDistance(QcError):
    """Surface distance undefined because a surface is empty."""


class DivergedRegistration(QcError):
    """Non-finite objective encountered during registration."""


class NoReferences(QcError):
    """RCA invoked with an empty reference set."""


class InvalidPhantom(QcError):
    """Phantom shape parameters do not fit inside the grid."""


class UndefinedCorrelation(QcError):
    """Fewer than two finite value pairs: correlation has no value."""
