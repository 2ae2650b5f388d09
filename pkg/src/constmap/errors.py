"""Exception types shared across the package."""


class SchemaError(ValueError):
    """A JSON document does not match the expected schema.

    The message always names the offending field, e.g. ``mrc.d_re[3]``.
    """


class DegenerateInputError(ValueError):
    """An input is degenerate for the requested operation (e.g. a zero-power block)."""


class ShapeMismatchError(ValueError):
    """Forward and backward values passed to straight_through disagree in shape."""
