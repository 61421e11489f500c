"""Exception types shared across the package."""


class MinumatchError(Exception):
    """Base class for all package-specific errors."""


class EmptyTemplateError(MinumatchError):
    """A comparison side has no minutiae; the input is non-comparable."""


class ZeroTotalWeightError(MinumatchError):
    """All pair weights are zero; no usable pairs for alignment."""


class FormatError(MinumatchError):
    """Malformed template text: bad magic/version, field counts, or numbers."""


class RangeError(MinumatchError):
    """A parsed field is outside its legal range."""


class DuplicateEntryError(MinumatchError):
    """Two dataset files resolve to the same (subject, impression) key."""


class PlacementFailureError(MinumatchError):
    """Synthetic point placement could not satisfy the spacing constraint."""


class EmptyScoresError(MinumatchError):
    """EER requested but the genuine or impostor score list is empty."""
