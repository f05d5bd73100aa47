"""
Error kinds raised across dkplab.

Everything derives from DkpLabError (itself a ValueError) so callers that only
care about "bad input" can catch one thing.
"""


class DkpLabError(ValueError):
    """Base class for all dkplab errors"""


class ParseError(DkpLabError):
    """Malformed instance, bundle or matrix file"""


class DependentColumns(DkpLabError):
    """Columns of a lattice basis are linearly dependent"""


class DimensionCap(DkpLabError):
    """Enumeration requested beyond the configured dimension cap"""


class RankDeficient(DkpLabError):
    """Matrix does not have full row rank"""


class ShapeMismatch(DkpLabError):
    """Vector or matrix dimensions do not agree"""


class ReformulationError(DkpLabError):
    """Reformulation requested in a form it does not support"""


class UnboundedWidth(DkpLabError):
    """Width requested along a direction that is unbounded on the relaxation"""


class UnboundedDirection(DkpLabError):
    """Direction is unbounded on the relaxation, no split can be read off"""


class TooLarge(DkpLabError):
    """Input exceeds a desk-scale guard"""


class LimitExceeded(DkpLabError):
    """Run would exceed the original-formulation guard without an explicit override"""


class GeneratorError(DkpLabError):
    """Instance generator constraint violated"""


class EmptyInterval(GeneratorError):
    """No integer right-hand side fits the required open interval"""


class InvalidK(GeneratorError):
    """k outside the admissible range"""


class AssumptionViolated(GeneratorError):
    """Ratios r_i/p_i are not nondecreasing, or p is a multiple of r"""


class BadDimension(GeneratorError):
    """Family does not exist for the requested n"""


class ParallelVectors(GeneratorError):
    """p and r are parallel, ratio spread q_n - q_1 is zero"""


class GcdNotOne(GeneratorError):
    """Frobenius number undefined, gcd(a) > 1"""


class NotCertified(GeneratorError):
    """Split certificate does not hold for the given parameters"""


class BadRho(GeneratorError):
    """rho outside (sqrt(3)/2, 1)"""
