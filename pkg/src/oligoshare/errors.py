"""Exception hierarchy shared by all solvers."""


class OligoshareError(Exception):
    """Base class; the CLI maps every subclass to exit code 1."""


class InvalidParameters(OligoshareError, ValueError):
    pass


class InfeasibleDemand(OligoshareError):
    """Price vector lies outside the interior-demand region."""


class InfeasibleCosts(OligoshareError):
    """A firm would exit the market at the given marginal costs."""

    def __init__(self, firm: int, message: str = ""):
        self.firm = firm
        super().__init__(message or f"firm {firm} violates the positive-output condition")


class NoConvergence(OligoshareError):
    pass


class BetaMismatch(OligoshareError):
    pass


class ZeroCost(OligoshareError):
    pass


class DomainError(OligoshareError):
    pass


class NoIndividuallyRationalPoint(OligoshareError):
    pass


class SizeLimitExceeded(OligoshareError):
    pass
