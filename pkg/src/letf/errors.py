"""Exception types shared across the package."""


class LetfError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LetfError, ValueError):
    """A parameter set violates a model invariant."""


class DomainError(LetfError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DefaultJumpError(DomainError):
    """A jump size outside the predefault domain: the leveraged fund defaults."""


class MoneynessError(LetfError, ValueError):
    """Operation called with the wrong call/put moneyness side."""


class AtTheMoneyError(MoneynessError):
    """Strike equals spot; the short-maturity expansions do not cover this case."""


class NoSolutionError(LetfError, ValueError):
    """Root finding has no solution inside the admissible bracket."""


class QuadratureError(LetfError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(LetfError, ValueError):
    """A run configuration file is malformed or inconsistent."""
