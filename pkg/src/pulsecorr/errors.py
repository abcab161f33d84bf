"""Exception hierarchy; the CLI maps each family to an exit code."""


class PulseCorrError(Exception):
    exit_code = 1


class ConfigError(PulseCorrError, ValueError):
    """Invalid parameters or inconsistent configuration."""

    exit_code = 2


class DomainError(ConfigError):
    """An argument lies outside the domain of an operation."""


class DegenerateFilterError(ConfigError):
    """Filter geometry for which the closed forms divide by zero."""


class DataError(PulseCorrError):
    """Malformed, incomplete or too-short input data."""

    exit_code = 3


class MissingSequenceError(DataError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join("-".join(m) for m in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"{len(self.missing)} sequence(s) missing: {shown}{more}")


class CoverageError(DataError):
    pass


class NumericError(PulseCorrError):
    exit_code = 4


class ResolutionError(NumericError):
    """Integration step too coarse for the fastest pole."""


class NoFitError(NumericError):
    def __init__(self, message, best_residual=float("nan")):
        self.best_residual = best_residual
        if best_residual == best_residual:
            message = f"{message} (best residual rms {best_residual:.6g})"
        super().__init__(message)


class HookContractError(NumericError):
    """A key-rate hook returned a negative or non-finite value."""
