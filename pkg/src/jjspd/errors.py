"""Exception hierarchy shared across the package and the CLI."""


class JJSPDError(Exception):
    """Base class for package-specific failures."""


class ConfigError(JJSPDError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


class DataError(JJSPDError):
    """Missing or malformed input data (CLI exit code 3)."""


class NumericError(JJSPDError):
    """Numerical failure: domain violation or non-convergence (CLI exit code 4)."""


class NoSolutionError(NumericError):
    """A requested inversion has no solution in the admissible range."""
