"""Exception hierarchy.

``InputError`` subclasses describe bad user data (CLI exit code 1),
``InternalInvariantError`` subclasses a broken invariant (exit code 2) and
``FallbackExhausted`` a refusal of the fast path with no way out (exit code 3).
"""


class NthCoeffError(Exception):
    pass


class InputError(NthCoeffError, ValueError):
    pass


class InternalInvariantError(NthCoeffError, ArithmeticError):
    pass


class FallbackExhausted(NthCoeffError):
    pass


# ground field
class NonPrime(InputError):
    pass


class Reducible(InputError):
    pass


class NotMonic(InputError):
    pass


class ContextMismatch(NthCoeffError, TypeError):
    pass


class NotAUnit(NthCoeffError, ZeroDivisionError):
    pass


class NotDivisible(InternalInvariantError):
    pass


class InexactDivision(InternalInvariantError):
    pass


# linear algebra
class NotInvertibleModB(NthCoeffError, ArithmeticError):
    pass


class RankDeficient(NthCoeffError, ArithmeticError):
    pass


class Inconsistent(InternalInvariantError):
    pass


# series
class NotASeries(NthCoeffError, ArithmeticError):
    pass


class ZeroDivisor(NthCoeffError, ZeroDivisionError):
    pass


class DigitOutOfRange(NthCoeffError, ValueError):
    pass


class BadInitialSegment(InputError):
    pass


# instances and engines
class ParseError(InputError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvariantViolation(InputError):
    def __init__(self, which, message=""):
        super().__init__(f"{which}: {message}" if message else which)
        self.which = which


class InstanceNotIrreducible(InputError):
    pass


class NoGoodModulus(FallbackExhausted):
    pass


class H1Violated(NthCoeffError):
    pass


class SingularDerivation(NthCoeffError):
    pass


class SplitFailed(NthCoeffError):
    pass


class NoAdmissibleAlpha(NthCoeffError):
    pass
