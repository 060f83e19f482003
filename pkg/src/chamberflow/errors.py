"""Exception hierarchy for chamberflow.

Every error names the structural condition that failed, so callers can
distinguish "input outside the chart" from "numerical budget exhausted".
"""


class ChamberflowError(Exception):
    """Base class for all library errors."""


class NonInvertible(ChamberflowError):
    """Input matrix is numerically singular (invalid group element)."""


class NotInBigCell(ChamberflowError):
    """A leading principal minor vanishes: the element is outside N- M A N."""

    def __init__(self, minor_index, value=None):
        self.minor_index = minor_index
        self.value = value
        super().__init__(
            f"leading principal minor {minor_index + 1} below threshold"
            + (f" (value {value:.3e})" if value is not None else "")
        )


class NotTransverse(ChamberflowError):
    """A flag pair required to be transverse is not."""


class OutOfDomain(ChamberflowError):
    """A flag lies outside the domain of the requested section/chart."""


class NotLoxodromic(ChamberflowError):
    """Eigenvalue moduli are not strictly separated at the tolerance."""


class CannotCertify(ChamberflowError):
    """No power within the budget admits an (r, eps) certificate."""


class NotGeneric(ChamberflowError):
    """A family of loxodromic elements fails pairwise transversality."""


class BudgetExceeded(ChamberflowError):
    """Word enumeration (or similar) exceeded the configured cap."""


class HypothesisViolated(ChamberflowError):
    """A numerical hypothesis of a product estimate fails."""

    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"hypothesis {clause} violated" + (f": {detail}" if detail else ""))


class NeedLargerN(ChamberflowError):
    """Ping-pong containment fails at the given exponent."""


class NotDenseAtBudget(ChamberflowError):
    """Covering check failed at the coefficient budget."""

    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class CertificationFailure(ChamberflowError):
    """An (r, eps) certification clause fails."""

    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"clause {clause} failed" + (f": {detail}" if detail else ""))
