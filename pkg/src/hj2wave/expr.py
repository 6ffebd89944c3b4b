"""Immutable expression trees over the exact polynomial layer.

Node vocabulary: Sum, Product, Power (integer exponents), Deriv, FieldRef,
ParamRef, Const, TrigFn, plus two structural markers the quantization
pipeline threads through:

  PairProd(left, right)  a product whose two slots came from a squared
                         classical factor; multiplies out transparently,
                         but the conjugate split knows to star the right slot;
  HermPair(factor)       dagger(factor) * factor for a matrix-valued factor;
                         opaque to the scalar algebra.

LogRef is accepted only as a substitution replacement (c * LogRef(field));
logarithms never survive into stored expressions — substitution rewrites
derivatives of the target through the chain rule instead.

Equality of canonical forms is the equality test everywhere: canonicalize
rebuilds a sorted sum-of-products tree from the polynomial form, and two
expressions agree iff those trees are structurally equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from . import poly as P
from .errors import InvalidCoordinate, NonRepresentable
from .poly import EvalEnv, InvAtom, SymAtom, TrigAtom
from .rational import GaussianRational, I as IMAG, ONE, ZERO
from .symbols import Symbol, SymbolKind

Number = Union[int, Fraction, GaussianRational]


class Expr:
    __slots__ = ()

    # -- operator sugar -----------------------------------------------------
    def __add__(self, other):
        return Sum((self, as_expr(other)))

    def __radd__(self, other):
        return Sum((as_expr(other), self))

    def __sub__(self, other):
        return Sum((self, -as_expr(other)))

    def __rsub__(self, other):
        return Sum((as_expr(other), -self))

    def __neg__(self):
        return Product((Const(GaussianRational.of(-1)), self))

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    def __rmul__(self, other):
        return Product((as_expr(other), self))

    def __truediv__(self, other):
        return Product((self, Power(as_expr(other), -1)))

    def __rtruediv__(self, other):
        return Product((as_expr(other), Power(self, -1)))

    def __pow__(self, n: int):
        return Power(self, n)

    def to_poly(self) -> P.Poly:
        raise NotImplementedError


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction, GaussianRational)):
        return Const(GaussianRational.coerce(x))
    if isinstance(x, Symbol):
        return ref(x)
    raise TypeError(f"cannot interpret {x!r} as an expression")


def ref(sym: Symbol) -> Expr:
    if sym.kind is SymbolKind.FIELD:
        return FieldRef(sym)
    return ParamRef(sym)


@dataclass(frozen=True)
class Const(Expr):
    value: GaussianRational

    def to_poly(self):
        return P.poly_const(self.value)


@dataclass(frozen=True)
class FieldRef(Expr):
    symbol: Symbol

    def __post_init__(self):
        if self.symbol.kind is not SymbolKind.FIELD:
            raise TypeError(f"FieldRef needs a field symbol, got {self.symbol}")

    def to_poly(self):
        return P.poly_atom(SymAtom(self.symbol))


@dataclass(frozen=True)
class ParamRef(Expr):
    symbol: Symbol

    def __post_init__(self):
        if self.symbol.kind is SymbolKind.FIELD:
            raise TypeError(f"ParamRef cannot hold a field symbol {self.symbol}")

    def to_poly(self):
        return P.poly_atom(SymAtom(self.symbol))


@dataclass(frozen=True)
class TrigFn(Expr):
    fn: str
    coord: Symbol

    def __post_init__(self):
        if self.fn not in ("sin", "cos"):
            raise ValueError(f"unsupported function {self.fn!r}")
        if self.coord.kind is not SymbolKind.COORDINATE:
            raise InvalidCoordinate(f"{self.fn} takes a bare coordinate")

    def to_poly(self):
        return P.poly_atom(TrigAtom(self.fn, self.coord.name))


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple[Expr, ...]

    def to_poly(self):
        out = P.poly_zero()
        for t in self.terms:
            out = P.poly_add(out, t.to_poly())
        return out


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple[Expr, ...]

    def to_poly(self):
        out = P.poly_const(ONE)
        for f in self.factors:
            out = P.poly_mul(out, f.to_poly())
        return out


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int):
            raise TypeError("Power exponents are integers")

    def to_poly(self):
        return P.poly_pow(self.base.to_poly(), self.exponent)


@dataclass(frozen=True)
class Deriv(Expr):
    target: Expr
    coord: Symbol
    order: int = 1

    def __post_init__(self):
        if self.coord.kind is not SymbolKind.COORDINATE:
            raise InvalidCoordinate(f"{self.coord.name!r} is not a coordinate")
        if self.order < 1:
            raise ValueError("derivative order must be >= 1")

    def to_poly(self):
        p = self.target.to_poly()
        for _ in range(self.order):
            p = P.poly_diff(p, self.coord.name)
        return p


@dataclass(frozen=True)
class PairProd(Expr):
    left: Expr
    right: Expr

    def to_poly(self):
        return P.poly_mul(self.left.to_poly(), self.right.to_poly())


@dataclass(frozen=True)
class HermPair(Expr):
    factor: Expr

    def to_poly(self):
        raise NonRepresentable(
            "dagger(X)*X of a matrix-valued factor has no scalar expansion")


@dataclass(frozen=True)
class LogRef(Expr):
    symbol: Symbol

    def to_poly(self):
        raise NonRepresentable("logarithms are not representable expressions")


ZERO_E = Const(ZERO)
ONE_E = Const(ONE)
I_E = Const(IMAG)


def const(re=0, im=0) -> Const:
    return Const(GaussianRational.of(re, im))


# --------------------------------------------------------------- canonical


def to_poly(e: Expr) -> P.Poly:
    return e.to_poly()


def _atom_expr(atom, exp: int) -> Expr:
    if isinstance(atom, SymAtom):
        base: Expr = ref(atom.symbol)
        for coord_name, order in atom.derivs:
            base = Deriv(base, Symbol(coord_name, SymbolKind.COORDINATE), order)
        return base if exp == 1 else Power(base, exp)
    if isinstance(atom, TrigAtom):
        base = TrigFn(atom.fn, Symbol(atom.coord, SymbolKind.COORDINATE))
        return base if exp == 1 else Power(base, exp)
    if isinstance(atom, InvAtom):
        return Power(poly_to_expr(dict(atom.base)), -exp)
    raise TypeError(f"unknown atom {atom!r}")


def poly_to_expr(p: P.Poly) -> Expr:
    if not p:
        return ZERO_E
    terms = []
    for mono, coeff in sorted(p.items(), key=lambda kv: P.MONO_KEY(kv[0]), reverse=True):
        factors: list[Expr] = []
        if not coeff.is_one() or not mono:
            factors.append(Const(coeff))
        for atom, exp in mono:
            factors.append(_atom_expr(atom, exp))
        if len(factors) == 1:
            terms.append(factors[0])
        else:
            terms.append(Product(tuple(factors)))
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def canonicalize(e: Expr) -> Expr:
    return poly_to_expr(e.to_poly())


def exprs_equal(a: Expr, b: Expr) -> bool:
    return P.poly_equal(a.to_poly(), b.to_poly())


def is_zero(e: Expr) -> bool:
    return not e.to_poly()


# -------------------------------------------------------------- operations


def differentiate(e: Expr, coord: Symbol) -> Expr:
    if coord.kind is not SymbolKind.COORDINATE:
        raise InvalidCoordinate(f"{coord.name!r} is not a coordinate")
    return poly_to_expr(P.poly_diff(e.to_poly(), coord.name))


def conjugate(e: Expr) -> Expr:
    return poly_to_expr(P.poly_conjugate(e.to_poly()))


def free_symbols(e: Expr) -> set[Symbol]:
    out: set[Symbol] = set()
    _collect_symbols(e.to_poly(), out)
    return out


def _collect_symbols(p: P.Poly, out: set[Symbol]):
    for mono in p:
        for atom, _ in mono:
            if isinstance(atom, SymAtom):
                out.add(atom.symbol)
            elif isinstance(atom, InvAtom):
                _collect_symbols(dict(atom.base), out)


def substitute(e: Expr, target: Symbol, replacement: Expr) -> Expr:
    """Replace target (and every derivative of it) by the replacement.

    Derivatives of the target become the corresponding derivatives of the
    replacement, computed through the chain rule on the replacement's own
    structure. A replacement of the shape c * LogRef(F) triggers the
    logarithmic rewrite: d^a(target) -> c * d^a(log F) expanded in F and
    1/F; a surviving underived target would need an actual logarithm and
    raises NonRepresentable.
    """
    log_shape = _match_log_replacement(replacement)
    if log_shape is not None:
        prefactor, field = log_shape
        return poly_to_expr(_substitute_log(e.to_poly(), target, prefactor, field))
    repl_poly = replacement.to_poly()
    return poly_to_expr(_substitute_poly(e.to_poly(), target, repl_poly))


def _match_log_replacement(replacement: Expr) -> Optional[tuple[P.Poly, Symbol]]:
    if isinstance(replacement, LogRef):
        return P.poly_const(ONE), replacement.symbol
    if isinstance(replacement, Product):
        logs = [f for f in replacement.factors if isinstance(f, LogRef)]
        if not logs:
            return None
        if len(logs) > 1:
            raise NonRepresentable("products of logarithms are not representable")
        rest = [f for f in replacement.factors if not isinstance(f, LogRef)]
        pre = P.poly_const(ONE)
        for f in rest:
            pre = P.poly_mul(pre, f.to_poly())
        return pre, logs[0].symbol
    return None


def _replace_atoms(p: P.Poly, mapper) -> P.Poly:
    """mapper(atom, exp) -> Poly or None (keep). Rebuilds the polynomial."""
    out = P.poly_zero()
    for mono, coeff in p.items():
        term = P.poly_const(coeff)
        for atom, exp in mono:
            if isinstance(atom, InvAtom):
                inner = _replace_atoms(dict(atom.base), mapper)
                if P.poly_equal(inner, dict(atom.base)):
                    rep = P.poly_atom(atom, exp)
                else:
                    rep = P.poly_pow(inner, -exp)
            else:
                mapped = mapper(atom, exp)
                rep = P.poly_atom(atom, exp) if mapped is None else mapped
            term = P.poly_mul(term, rep)
        out = P.poly_add(out, term)
    return out


def _substitute_poly(p: P.Poly, target: Symbol, repl: P.Poly) -> P.Poly:
    deriv_cache: dict[P.MultiIndex, P.Poly] = {(): repl}

    def deriv_of(mi: P.MultiIndex) -> P.Poly:
        if mi in deriv_cache:
            return deriv_cache[mi]
        coord, order = mi[-1]
        prev = P.multi_index(*mi[:-1], (coord, order - 1))
        base = deriv_of(prev)
        out = P.poly_diff(base, coord)
        deriv_cache[mi] = out
        return out

    def mapper(atom, exp):
        if isinstance(atom, SymAtom) and atom.symbol == target:
            return P.poly_pow(deriv_of(atom.derivs), exp)
        return None

    return _replace_atoms(p, mapper)


def _substitute_log(p: P.Poly, target: Symbol, prefactor: P.Poly,
                    field: Symbol) -> P.Poly:
    """d^a(target) -> prefactor * d^a(log field); bare target is an error."""
    field_atom = SymAtom(field)
    log_cache: dict[P.MultiIndex, P.Poly] = {}

    def dlog(mi: P.MultiIndex) -> P.Poly:
        if not mi:
            raise NonRepresentable(
                f"bare {target.name} would substitute to a logarithm")
        if mi in log_cache:
            return log_cache[mi]
        coord, order = mi[-1]
        prev = P.multi_index(*mi[:-1], (coord, order - 1))
        if prev:
            base = dlog(prev)
            out = P.poly_diff(base, coord)
        else:
            out = P.poly_mul(
                P.poly_atom(field_atom, -1),
                P.poly_atom(SymAtom(field, P.multi_index((coord, 1)))),
            )
        log_cache[mi] = out
        return out

    def mapper(atom, exp):
        if isinstance(atom, SymAtom) and atom.symbol == target:
            return P.poly_pow(P.poly_mul(prefactor, dlog(atom.derivs)), exp)
        return None

    return _replace_atoms(p, mapper)


def rename_coordinates(e: Expr, mapping: dict[str, str]) -> Expr:
    """Rename coordinates in atoms and derivative indices."""

    def mapper(atom, exp):
        if isinstance(atom, SymAtom):
            sym = atom.symbol
            new_sym = sym
            if sym.kind is SymbolKind.COORDINATE and sym.name in mapping:
                new_sym = Symbol(mapping[sym.name], SymbolKind.COORDINATE)
            elif sym.deps:
                new_deps = tuple(mapping.get(d, d) for d in sym.deps)
                if new_deps != sym.deps:
                    new_sym = Symbol(sym.name, sym.kind, new_deps,
                                     sym.complex_valued, sym.matrix_valued,
                                     sym.conjugated)
            new_derivs = P.multi_index(
                *(((mapping.get(c, c)), o) for c, o in atom.derivs))
            if new_sym is sym and new_derivs == atom.derivs:
                return None
            return P.poly_atom(SymAtom(new_sym, new_derivs), exp)
        if isinstance(atom, TrigAtom) and atom.coord in mapping:
            return P.poly_atom(TrigAtom(atom.fn, mapping[atom.coord]), exp)
        return None

    return poly_to_expr(_replace_atoms(e.to_poly(), mapper))


# -------------------------------------------------------------- degree maps


def field_degree(mono: P.Monomial, field: Symbol) -> int:
    """Total degree in the field and its derivatives (conjugate excluded)."""
    deg = 0
    for atom, exp in mono:
        if isinstance(atom, SymAtom) and atom.symbol == field:
            deg += exp
    return deg


@dataclass(frozen=True)
class DegreeMap:
    field: Symbol
    entries: tuple[tuple[int, Expr], ...]

    def __getitem__(self, degree: int) -> Expr:
        for d, e in self.entries:
            if d == degree:
                return e
        return ZERO_E

    def degrees(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.entries)

    def reassemble(self) -> Expr:
        return poly_to_expr(_merge([e.to_poly() for _, e in self.entries]))


def _merge(polys: Iterable[P.Poly]) -> P.Poly:
    out = P.poly_zero()
    for p in polys:
        out = P.poly_add(out, p)
    return out


def collect_by_degree(e: Expr, field: Symbol) -> DegreeMap:
    buckets: dict[int, P.Poly] = {}
    for mono, coeff in e.to_poly().items():
        d = field_degree(mono, field)
        buckets.setdefault(d, {})[mono] = coeff
    entries = tuple((d, poly_to_expr(p)) for d, p in sorted(buckets.items()))
    return DegreeMap(field, entries)


# ----------------------------------------------------- comparison, numbers


def equal_up_to_factor(a: Expr, b: Expr) -> Optional[Expr]:
    """If b == f * a for a single-monomial factor f, return f (canonical)."""
    pa, pb = a.to_poly(), b.to_poly()
    if not pa and not pb:
        return ONE_E
    if not pa or not pb:
        return None
    ma, ca = P.leading(pa)
    mb, cb = P.leading(pb)
    fm = P.mono_div(mb, ma)
    fc = cb / ca
    if P.poly_equal(P.poly_mono_mul(pa, fm, fc), pb):
        return poly_to_expr({fm: fc})
    return None


def evaluate(e: Expr, env: EvalEnv) -> complex:
    return P.poly_eval(e.to_poly(), env)


class PolyField:
    """A multivariate polynomial sampler for fields in numeric oracles.

    coeffs: {(deg per coord, aligned with coord order): complex}
    """

    def __init__(self, coords: tuple[str, ...], coeffs: dict[tuple[int, ...], complex]):
        self.coords = coords
        self.coeffs = dict(coeffs)

    def __call__(self, derivs: P.MultiIndex, point: dict[str, float]) -> complex:
        want = {c: 0 for c in self.coords}
        for c, o in derivs:
            if c not in want:
                return 0.0
            want[c] = o
        total = 0j
        for degs, c in self.coeffs.items():
            v = complex(c)
            ok = True
            for name, deg in zip(self.coords, degs):
                k = want[name]
                if deg < k:
                    ok = False
                    break
                fall = 1
                for j in range(k):
                    fall *= deg - j
                v *= fall * point[name] ** (deg - k)
            if ok:
                total += v
        return total
