"""Exception types raised across the package."""

from __future__ import annotations

from dataclasses import dataclass


class Hj2WaveError(Exception):
    pass


class InvalidCoordinate(Hj2WaveError):
    pass


class UnknownSymbol(Hj2WaveError):
    pass


class NonRepresentable(Hj2WaveError):
    """An operation would need a node the algebra refuses to hold
    (a bare logarithm, a product of two matrix symbols, ...)."""


class NonHomogeneous(Hj2WaveError):
    """Log substitution could not clear the equation to a single
    homogeneous degree; the input is outside the method's shape."""


class NoActionField(Hj2WaveError):
    pass


class OddDegreeTerm(Hj2WaveError):
    """A term admits no pairing into (factor, conjugate factor)."""


class NotBilinear(Hj2WaveError):
    pass


class Unconstrained(Hj2WaveError):
    pass


class Inconsistent(Hj2WaveError):
    pass


class NotGradientForm(Hj2WaveError):
    pass


class DispersionViolated(Hj2WaveError):
    pass


class SingularMetric(Hj2WaveError):
    pass


class SingularCoefficient(Hj2WaveError):
    """An equation coefficient blows up at a numeric sample point."""


class LinearSolveFailure(Hj2WaveError):
    pass


class ZeroAmplitude(Hj2WaveError):
    pass


class UnknownCatalogId(Hj2WaveError):
    pass


class GoldenMismatch(Hj2WaveError):
    pass


class CheckpointMismatch(Hj2WaveError):
    """A derivation step's output disagrees with the recorded form for its
    anchor beyond a constant factor."""


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ValueError(f"bad span ({self.start}, {self.end})")


class DslError(Hj2WaveError):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.span = span


class DslSyntaxError(DslError):
    def __init__(self, span: SourceSpan, expected: str, found: str):
        super().__init__(f"expected {expected}, found {found}", span)
        self.expected = expected
        self.found = found


class UndeclaredSymbol(DslError):
    def __init__(self, span: SourceSpan, name: str):
        super().__init__(f"undeclared symbol {name!r}", span)
        self.name = name
