# exceptions.py
from typing import Any, Dict


class NsvhError(Exception):
    """Base error. `code` is machine-readable, `exit_code` is what the CLI returns."""
    code = "nsvh_error"
    exit_code = 3

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        payload = {"code": self.code, "message": self.message}
        payload.update(self.details)
        return {"error": payload}


class ValidationError(NsvhError, ValueError):
    code = "validation_error"
    exit_code = 2


class DomainError(ValidationError):
    code = "domain_error"


class UnsupportedLambdaError(ValidationError):
    code = "unsupported_lambda"


class DegenerateCorrelationError(ValidationError):
    code = "degenerate_correlation"


class InsufficientDataError(ValidationError):
    code = "insufficient_data"


class NoSolutionError(NsvhError):
    code = "no_solution"
    exit_code = 3


class InfeasibleMomentsError(NsvhError):
    """Target moments lie outside what the model can attain.

    `min_exkurt` is the smallest attainable excess kurtosis at the given
    skewness; `boundary` holds the |rho| = 1 parameter fit when available.
    """
    code = "infeasible_moments"
    exit_code = 3


class ConvergenceError(NsvhError):
    code = "not_converged"
    exit_code = 4
