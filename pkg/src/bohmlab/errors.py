"""
Exception hierarchy for bohmlab.

Every error raised on purpose by the package derives from ``BohmlabError``.
The command-line surface maps the three families below to exit codes:

- ``ConfigError``        -> 2 (usage / configuration)
- ``DomainError``        -> 3 (numeric domain, singularities)
- ``VerificationFailure`` -> 1 (a check exceeded its tolerance)
"""

from typing import Iterable, Optional


class BohmlabError(Exception):
    """Base class for all bohmlab errors."""

    exit_code = 1


class ConfigError(BohmlabError, ValueError):
    """Invalid parameters, grids, constants or family configurations."""

    exit_code = 2


class ExprSyntaxError(ConfigError):
    """Expression text that does not match the grammar."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} (column {position})\n  {text}\n  {pointer}")


class UnknownIdentifierError(ConfigError):
    """Identifier that is neither a variable, a constant nor a declared parameter."""

    def __init__(self, name: str, text: str = "", position: Optional[int] = None):
        self.name = name
        self.text = text
        self.position = position
        where = f" at column {position}" if position is not None else ""
        super().__init__(
            f"Unknown identifier '{name}'{where}; declare it as a parameter"
        )


class DomainError(BohmlabError, ArithmeticError):
    """Evaluation outside the numeric domain (sqrt of negative, log of non-positive, 1/0)."""

    exit_code = 3


class SingularPathError(DomainError):
    """A quadrature path from x=0 crosses an excluded (singular) cell."""

    def __init__(self, message: str, x: Optional[float] = None, t: Optional[float] = None):
        self.x = x
        self.t = t
        super().__init__(message)


class IntegrationError(DomainError):
    """ODE integration failure: step-size underflow or leaving the grid."""

    def __init__(self, message: str, location: Optional[float] = None):
        self.location = location
        super().__init__(message)


class PropagationError(DomainError):
    """Non-finite values during split-step propagation."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class VerificationFailure(BohmlabError):
    """One or more verification checks exceeded tolerance."""

    exit_code = 1

    def __init__(self, failed: Iterable[str]):
        self.failed = list(failed)
        super().__init__(f"Verification failed: {', '.join(self.failed)}")
