"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for invalid input, 2 for numerical failures.
"""


class LieSphereError(Exception):
    exit_code = 2


class ValidationError(LieSphereError):
    exit_code = 1


class NumericalError(LieSphereError):
    exit_code = 2


# input / configuration
class SchemaViolation(ValidationError):
    pass


class UnknownCatalogId(ValidationError):
    pass


class MissingField(ValidationError):
    pass


class InsufficientDerivativeOrder(ValidationError):
    pass


class PeriodicityError(ValidationError):
    pass


class ExpressionError(ValidationError):
    pass


# geometry
class RankDeficient(NumericalError):
    pass


class UmbilicInDomain(NumericalError):
    pass


class UmbilicPoint(NumericalError):
    pass


class NotConjugate(NumericalError):
    pass


class DegenerateInvariant(NumericalError):
    pass


class ZeroCurvature(NumericalError):
    pass


class NonIntegrable(NumericalError):
    pass


class RepeatedCurvature(NumericalError):
    pass


class NormalizationFailure(NumericalError):
    pass


class SingularInversion(NumericalError):
    pass


class FocalSingularity(NumericalError):
    pass


# integrable systems
class ZeroDivision(NumericalError):
    pass


class NonPositiveDensity(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class IncompatibleData(NumericalError):
    pass


class GenericityLoss(NumericalError):
    pass


class StepFailure(NumericalError):
    pass


class NegativeRadicand(NumericalError):
    pass


# hydrodynamic systems
class SingularTransform(NumericalError):
    pass


class RepeatedVelocity(NumericalError):
    pass


class RepeatedEigenvalue(NumericalError):
    pass


# flows
class SolvabilityFailure(NumericalError):
    pass


class CFLViolation(NumericalError):
    pass
