"""Exception hierarchy.

Every loud failure mode of the library has its own class so callers (and the
CLI exit-code mapping) can tell input problems apart from precision or budget
exhaustion.
"""


class FreqlabError(Exception):
    """Base class for all library errors."""


class InputError(FreqlabError):
    """Invalid user input (CLI exit code 3)."""


class SchemaError(InputError):
    """Malformed specification or serialized document; carries a field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class RegistryMismatchError(InputError):
    """Operands built on different atom registries were mixed."""


class ExponentDomainError(InputError):
    """Exponents outside the domain of the requested inequality."""


class ModeError(InputError):
    """Requested computation mode is not valid for the given input size."""


class SpanError(InputError):
    """The disjoint-span hypothesis of a frequency union is violated."""


class CollisionError(InputError):
    """Two frequencies being merged share an identical value."""


class WindowError(InputError):
    """Not enough nonempty blocks to fill the requested tail window."""


class ProfileError(InputError):
    """A block profile was requested for a frequency with no usable blocks."""


class ResourceError(FreqlabError):
    """Budget or precision exhaustion (CLI exit code 4)."""


class BudgetError(ResourceError):
    """An enumeration or convolution would exceed the configured budget."""


class SizeError(BudgetError):
    """A generator would exceed the configured memory budget."""


class DimensionError(ResourceError):
    """A torus lift has more variables than the sampling cap allows."""


class PrecisionError(ResourceError):
    """Certified interval arithmetic could not decide at the precision cap."""


class UndecidableComparisonError(PrecisionError):
    """Two distinct values whose enclosures still overlap at the cap."""


class UndecidableFloorError(PrecisionError):
    """A value enclosure straddles an integer at the precision cap."""


class VerificationFailure(FreqlabError):
    """A caveat-free inequality check failed (CLI exit code 2)."""
