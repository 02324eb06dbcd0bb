"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a function precondition."""


class OutOfRegimeError(ValueError):
    """A closed-form value was requested outside the range where it holds."""


class ConfigError(ValueError):
    """An experiment configuration field is invalid.

    ``field`` names the offending field so the CLI can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
