"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration/usage
problems exit 1, file-format and I/O problems exit 2, numeric or
invariant failures exit 3.
"""


class ConfigError(ValueError):
    """Invalid parameter or configuration (bad shapes, bounds, flags)."""


class FormatError(ValueError):
    """Malformed input file (matrix text, trace CSV, PGM)."""


class InvariantError(RuntimeError):
    """A numeric invariant that should hold by construction was violated."""
