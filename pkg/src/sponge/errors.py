"""Exception taxonomy shared by the library and the CLI exit-code map."""


class SpongeError(Exception):
    """Base class for all package errors."""


class SchemaError(SpongeError):
    """Config/spec document is malformed or violates a validity condition."""


class BudgetError(SpongeError):
    """A requested computation exceeds its configured size/compute cap."""


class NumericError(SpongeError):
    """A numeric procedure cannot proceed (bracketing, rejection, fit)."""


class RejectionError(NumericError):
    """Joint-constraint rejection sampling hit its attempt cap."""


class NonContractionError(NumericError):
    """Ratio bounds do not define a contraction, pressure cannot be bracketed."""


class DegenerateFitError(NumericError):
    """A regression has no usable variation (all covering counts equal)."""
