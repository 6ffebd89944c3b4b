"""Equations: residual comparison, matching up to overall factors, and
term-level diffing used to localize a mismatch against a reference form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import poly as P
from .errors import NonRepresentable
from .expr import (Expr, HermPair, ONE_E, Product, Sum, ZERO_E,
                   canonicalize, equal_up_to_factor, poly_to_expr)
from .rational import ONE, GaussianRational
from .symbols import SymbolKind


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    rhs: Expr = ZERO_E
    name: str = ""

    def residual(self) -> Expr:
        return canonicalize(self.lhs - self.rhs)

    def residual_poly(self) -> P.Poly:
        return P.poly_sub(self.lhs.to_poly(), self.rhs.to_poly())

    def __str__(self):
        from .poly import poly_str
        tag = f"[{self.name}] " if self.name else ""
        return f"{tag}{poly_str(self.lhs.to_poly())} = {poly_str(self.rhs.to_poly())}"


@dataclass(frozen=True)
class VectorEquation:
    lhs: tuple
    rhs: tuple
    name: str = ""

    def __post_init__(self):
        if len(self.lhs) != len(self.rhs):
            raise ValueError("vector equation sides have different lengths")

    def components(self) -> tuple[Equation, ...]:
        return tuple(
            Equation(l, r, f"{self.name}[{i}]" if self.name else f"[{i}]")
            for i, (l, r) in enumerate(zip(self.lhs, self.rhs)))


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    factor: Optional[Expr] = None
    differences: tuple[str, ...] = field(default=())

    def __bool__(self):
        return self.matched


def _normalized_residual(eq: Equation) -> Optional[tuple]:
    p = eq.residual_poly()
    if not p:
        return None
    _, _, key = P.normalize_base(p)
    return key


def _constant_factor(f: Expr) -> bool:
    # a single monomial whose atoms are all dependency-free constants
    p = f.to_poly()
    if len(p) != 1:
        return False
    (mono, _c), = p.items()
    for atom, _exp in mono:
        if not isinstance(atom, P.SymAtom):
            return False
        if atom.symbol.kind is not SymbolKind.CONSTANT:
            return False
        if atom.symbol.deps or atom.derivs:
            return False
    return True


def _herm_terms(e: Expr, scale: GaussianRational, pairs: list, rest: list):
    """Additive split into (coefficient poly, pair-factor poly) entries plus
    plain scalar terms. Raises NonRepresentable for shapes that bury a
    dagger pair under anything other than a product prefix."""
    if isinstance(e, Sum):
        for t in e.terms:
            _herm_terms(t, scale, pairs, rest)
        return
    if isinstance(e, HermPair):
        pairs.append((P.poly_const(scale), e.factor.to_poly()))
        return
    if isinstance(e, Product):
        herms = [i for i, f in enumerate(e.factors) if isinstance(f, HermPair)]
        if len(herms) == 1:
            coeff = P.poly_const(scale)
            for i, f in enumerate(e.factors):
                if i != herms[0]:
                    coeff = P.poly_mul(coeff, f.to_poly())
            pairs.append((coeff, e.factors[herms[0]].factor.to_poly()))
            return
        if herms:
            raise NonRepresentable("product of two dagger pairs")
    rest.append(P.poly_scale(e.to_poly(), scale))


def _herm_match(a: Equation, b: Equation) -> MatchResult:
    """Exact comparison for equations holding dagger-pair terms: every pair
    term and the scalar remainder must agree with no overall rescaling (a
    rescaled pair factor does not rescale its expansion linearly)."""
    def split(eq: Equation):
        pairs: list = []
        rest: list = []
        _herm_terms(eq.lhs, ONE, pairs, rest)
        _herm_terms(eq.rhs, -ONE, pairs, rest)
        total = P.poly_zero()
        for r in rest:
            total = P.poly_add(total, r)
        key = sorted(((P.poly_key(fp), P.poly_key(cp)) for cp, fp in pairs))
        merged: dict = {}
        for fk, ck in key:
            merged.setdefault(fk, []).append(ck)
        return {fk: sorted(cs) for fk, cs in merged.items()}, P.poly_key(total)

    try:
        ka, ra = split(a)
        kb, rb = split(b)
    except NonRepresentable as exc:
        return MatchResult(False, differences=(str(exc),))
    if ka == kb and ra == rb:
        return MatchResult(True, ONE_E)
    diffs = []
    if ka != kb:
        diffs.append("dagger-pair terms differ")
    if ra != rb:
        diffs.append("scalar terms differ")
    return MatchResult(False, differences=tuple(diffs))


def _has_herm(e: Expr) -> bool:
    if isinstance(e, HermPair):
        return True
    if isinstance(e, Sum):
        return any(_has_herm(t) for t in e.terms)
    if isinstance(e, Product):
        return any(_has_herm(f) for f in e.factors)
    return False


def equations_match(a: Equation, b: Equation) -> MatchResult:
    """True when the residuals agree up to one nonzero constant factor.

    Both-zero matches; zero against nonzero does not. Constant means a
    single monomial in dependency-free constant symbols; a ratio carrying a
    field, a coordinate or a varying parameter is a mismatch. Equations
    holding dagger-pair terms compare exactly, term by term.
    """
    if _has_herm(a.lhs) or _has_herm(a.rhs) or _has_herm(b.lhs) or _has_herm(b.rhs):
        return _herm_match(a, b)
    ra, rb = a.residual_poly(), b.residual_poly()
    if not ra and not rb:
        return MatchResult(True, None)
    if not ra or not rb:
        return MatchResult(False, differences=("one side is identically zero",))
    f = equal_up_to_factor(poly_to_expr(ra), poly_to_expr(rb))
    if f is not None:
        if _constant_factor(f):
            return MatchResult(True, f)
        return MatchResult(False, differences=(
            "residuals agree only up to a non-constant factor",))
    return MatchResult(False, differences=tuple(term_differences(a, b)))


def term_differences(a: Equation, b: Equation) -> list[str]:
    """Human-readable per-monomial diff of the two normalized residuals."""
    ka = _normalized_residual(a)
    kb = _normalized_residual(b)
    if ka is None or kb is None:
        return ["zero residual on one side"]
    da, db = dict(ka), dict(kb)
    out = []
    for mono in sorted(set(da) | set(db), key=P.MONO_KEY, reverse=True):
        ca, cb = da.get(mono), db.get(mono)
        mstr = P.poly_str({mono: ca if ca is not None else cb})
        if ca is None:
            out.append(f"only in second: {P.poly_str({mono: cb})}")
        elif cb is None:
            out.append(f"only in first: {mstr}")
        elif ca != cb:
            out.append(f"coefficient differs on {P.poly_str({mono: ca})}: "
                       f"{ca} vs {cb}")
    return out
