"""Exception hierarchy shared by all modules of the package."""


class MagWKBError(Exception):
    """Base class; ``module`` names the subsystem that raised."""

    module = "magwkb"

    def __str__(self):
        msg = super().__str__()
        return f"[{self.module}] {msg}"


# -- series -----------------------------------------------------------------

class SeriesError(MagWKBError, ValueError):
    module = "series"


class CapMismatch(SeriesError):
    pass


class ArityMismatch(SeriesError):
    pass


class NearSingularDivision(SeriesError):
    pass


class ValuationMismatch(SeriesError):
    def __init__(self, msg, leading_coefficient=None, degree=None):
        super().__init__(msg)
        self.leading_coefficient = leading_coefficient
        self.degree = degree


class BranchUndefined(SeriesError):
    pass


class ConstantTermNonzero(SeriesError):
    pass


# -- field ------------------------------------------------------------------

class FieldError(MagWKBError, ValueError):
    module = "field"


class NonPositiveMinimumValue(FieldError):
    pass


class NotCriticalAtOrigin(FieldError):
    pass


class DegenerateMinimum(FieldError):
    pass


class GaugeConsistencyError(FieldError, RuntimeError):
    pass


# -- eikonal ----------------------------------------------------------------

class EikonalError(MagWKBError, RuntimeError):
    module = "eikonal"


class NoConvergence(EikonalError):
    pass


class InvariantViolation(MagWKBError, RuntimeError):
    """A certified invariant failed; ``invariant`` names which one."""

    def __init__(self, invariant, value=None, tol=None, module="magwkb"):
        self.invariant = invariant
        self.value = value
        self.tol = tol
        self.module = module
        detail = invariant
        if value is not None:
            detail += f" (got {value:.3e}, tol {tol:.1e})"
        super().__init__(detail)


# -- wkb --------------------------------------------------------------------

class WKBError(MagWKBError, RuntimeError):
    module = "wkb"


class NoHomogeneousIndex(WKBError):
    pass


class SolvabilityCoefficientVanished(WKBError):
    pass


class GridOutsideValidityWindow(WKBError, ValueError):
    pass


# -- validator --------------------------------------------------------------

class ValidatorError(MagWKBError, RuntimeError):
    module = "validator"


class EigenNoConvergence(ValidatorError):
    def __init__(self, msg, iterations=None, residuals=None):
        super().__init__(msg)
        self.iterations = iterations
        self.residuals = residuals


# -- cli --------------------------------------------------------------------

class ConfigError(MagWKBError, ValueError):
    module = "cli"
