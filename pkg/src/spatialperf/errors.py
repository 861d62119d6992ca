"""Exception types shared across the package."""


class SpatialPerfError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SpatialPerfError):
    """Bad user input: malformed config documents, unknown names, invalid values."""


class MissingFieldError(InputError):
    """A required key is absent from a config document."""

    def __init__(self, field: str, doc_kind: str = "document"):
        self.field = field
        super().__init__(f"{doc_kind} is missing required field '{field}'")


class UnknownFieldError(InputError):
    """A config document contains a key that is not part of the schema."""

    def __init__(self, field: str, doc_kind: str = "document"):
        self.field = field
        super().__init__(f"{doc_kind} has unknown field '{field}'")


class InvalidValueError(InputError, ValueError):
    """A field value violates its declared range or type."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid value for '{field}': {message}")


class WidthOverflowError(SpatialPerfError):
    """A requested word width exceeds the widest configurable SRAM port."""

    def __init__(self, bits: int, max_width: int):
        self.bits = bits
        self.max_width = max_width
        super().__init__(
            f"word width of {bits} bits exceeds the widest SRAM port "
            f"configuration ({max_width} bits)"
        )


class InfeasibleError(SpatialPerfError):
    """No design point satisfies the active constraints."""
