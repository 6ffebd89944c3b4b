"""Symbol table entries shared by the expression engine and the DSL parser."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum


class SymbolKind(Enum):
    FIELD = "field"
    COORDINATE = "coordinate"
    CONSTANT = "constant"


@dataclass(frozen=True)
class Symbol:
    """A named quantity.

    kind=FIELD: a complex scalar unknown (S, Psi); differentiable in every
    coordinate, conjugable, and the only kind the log substitution acts on.
    kind=COORDINATE: an independent variable; usable as a value (r in a metric
    component) with d(c)/d(c) = 1.
    kind=CONSTANT: a given real quantity. With an empty `deps` it is a pure
    constant (hbar, m, e); with deps it is a known function of the coordinates
    (U, phi, A components, metric components) that Deriv may act on.

    Identity (hash/eq) is (name, kind, conjugated): the dependence list and
    flags steer differentiation and conjugation but two declarations of "U"
    in different files must unify when comparing equations.
    """

    name: str
    kind: SymbolKind = SymbolKind.CONSTANT
    deps: tuple[str, ...] = field(default=(), compare=False)
    complex_valued: bool = field(default=False, compare=False)
    matrix_valued: bool = field(default=False, compare=False)
    conjugated: bool = False

    def depends_on(self, coord_name: str) -> bool:
        if self.kind is SymbolKind.FIELD:
            return True
        if self.kind is SymbolKind.COORDINATE:
            return False
        return coord_name in self.deps

    def conjugate_symbol(self) -> "Symbol":
        if self.kind is SymbolKind.FIELD:
            return replace(self, conjugated=not self.conjugated)
        raise ValueError(f"cannot conjugate non-field symbol {self.name!r}")

    @property
    def display(self) -> str:
        return f"conj({self.name})" if self.conjugated else self.name

    def sort_key(self):
        return (self.name, self.kind.value, self.conjugated)


def field_symbol(name: str) -> Symbol:
    return Symbol(name, SymbolKind.FIELD)


def coordinate(name: str) -> Symbol:
    return Symbol(name, SymbolKind.COORDINATE)


def constant(name: str, deps: tuple[str, ...] = (), *, complex_valued: bool = False,
             matrix_valued: bool = False) -> Symbol:
    return Symbol(name, SymbolKind.CONSTANT, deps, complex_valued, matrix_valued)
