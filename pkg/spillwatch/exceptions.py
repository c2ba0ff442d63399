from typing import Any


class DomainError(ValueError):
    """An argument is outside the mathematical domain of a function."""


class IngestionError(ValueError):
    """A price file could not be turned into a price series."""

    def __init__(self, message: str, path: str | None = None, row: int | None = None):
        self.path = path
        self.row = row
        location = ""
        if path is not None:
            location = f"{path}"
            if row is not None:
                location += f", line {row}"
            location += ": "
        super().__init__(f"{location}{message}")


class FittingError(RuntimeError):
    """Maximum likelihood did not converge for any of the multistarts."""

    def __init__(
        self,
        message: str,
        best_params: dict[str, float] | None = None,
        best_loglik: float | None = None,
        trace: list[float] | None = None,
    ):
        self.best_params = best_params
        self.best_loglik = best_loglik
        self.trace = trace or []
        details = ""
        if best_params is not None:
            details = f" Best parameters: {best_params}, loglik: {best_loglik}."
        super().__init__(message + details)


class BoundaryError(FittingError):
    """The copula fit ran into the boundary of the parameter space."""


class OracleError(ValueError):
    """A Monte-Carlo or brute-force check was asked for something it can't give."""


class MultiplePelcovError(RuntimeError):
    """Some dates have two PELCoV levels, so the monitoring threshold is ambiguous."""

    def __init__(self, dates_by_level: dict[float, list[Any]]):
        self.dates_by_level = dates_by_level
        parts = [
            f"v={v}: {len(dates)} date(s), first {dates[0]}"
            for v, dates in dates_by_level.items()
            if dates
        ]
        super().__init__("Two PELCoV levels found. " + "; ".join(parts))


class StageError(RuntimeError):
    """A stage of the monitoring pipeline failed."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"Stage '{stage}' failed: {cause}")
