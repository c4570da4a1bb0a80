"""Exception types shared across the package.

The split matters for the CLI's exit-code discipline: configuration and
validation problems are reported differently from runtime failures.
"""


class InvalidInputError(ValueError):
    """A runtime input (token id, row list, sample list, ...) violates a precondition."""


class InvalidConfigError(ValueError):
    """A construction or configuration parameter is out of its legal range."""


class ContractViolationError(RuntimeError):
    """Two internally produced values disagree in shape; indicates a caller bug."""
