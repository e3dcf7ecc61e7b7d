"""Exception types; the CLI maps each family to an exit code."""


class HcrError(Exception):
    """Base class for toolkit errors."""


class DataError(HcrError):
    """Unusable input data: blank images, missing files, too few samples."""


class ImageFormatError(DataError):
    """An image file could not be read or has an unsupported format."""


class BlankImageError(DataError):
    """No foreground pixel survives binarization."""


class NumericalError(HcrError):
    """A numerical routine failed, e.g. an LM system stayed singular."""
