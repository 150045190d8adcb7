"""
Exception hierarchy and CLI exit codes.

Exit codes:
    0  success
    1  usage / configuration error
    2  data error (bad CSV, empty panel, missing artifacts)
    3  numerical failure inside a sampler or decomposition
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class ReliabilityError(Exception):
    """Base class for every error raised by the package."""

    exit_code = EXIT_DATA


class ConfigError(ReliabilityError, ValueError):
    """Invalid run configuration or command-line usage."""

    exit_code = EXIT_USAGE


class DataError(ReliabilityError, ValueError):
    """Input data that cannot be turned into a usable panel or matrix."""

    exit_code = EXIT_DATA


class IngestError(DataError):
    """
    Raw CSV rejected during parsing.

    `issues` holds one dict per problem with keys row, column, issue
    (row numbers are 1-based file lines, header = line 1).
    """

    def __init__(self, message: str, issues: list[dict] | None = None):
        self.issues = issues or []
        super().__init__(message)

    def __str__(self) -> str:
        base = super().__str__()
        if not self.issues:
            return base
        lines = [base]
        for item in self.issues[:20]:
            lines.append(f"  row {item['row']}, column {item['column']}: {item['issue']}")
        if len(self.issues) > 20:
            lines.append(f"  ... and {len(self.issues) - 20} more")
        return "\n".join(lines)


class EmptyPanelError(DataError):
    """Every row of a metric was dropped."""


class NumericalError(ReliabilityError, ArithmeticError):
    """Nonfinite state or a failed decomposition."""

    exit_code = EXIT_NUMERICAL


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ReliabilityError):
        return exc.exit_code
    return EXIT_DATA
