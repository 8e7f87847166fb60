from typing import Optional


class EpidemicError(Exception):
    """Base class for everything the simulator raises on purpose."""
    exit_code = 1


class ContractViolationError(EpidemicError):
    pass


class DomainError(EpidemicError):
    pass


class StateConsistencyError(EpidemicError):
    # a blown-up state, reported like an integration failure
    exit_code = 4


class DegenerateControlError(EpidemicError, ZeroDivisionError):
    pass


class ConfigurationError(EpidemicError):
    exit_code = 2


class ConfigParseError(ConfigurationError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class IntegrationError(EpidemicError):
    exit_code = 4

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} at step {step}")


class SolverError(EpidemicError):
    exit_code = 4


# Exit status for a sweep that stopped at max_iter; not an exception.
EXIT_NOT_CONVERGED = 3
