"""Canonical polynomial layer under the expression tree.

Every expression the pipeline touches normalizes to a Laurent polynomial:
a map monomial -> GaussianRational, where a monomial is a sorted tuple of
(atom, integer exponent) pairs. Atoms are

  SymAtom   d^alpha(symbol) for a field/coordinate/dependent constant,
            alpha a sorted multi-index of (coordinate name, order);
  TrigAtom  sin or cos of a bare coordinate (what the Schwarzschild metric
            needs, nothing more);
  InvAtom   the reciprocal of a normalized multi-term polynomial, e.g.
            1/(r - r_g). Single-term reciprocals are just negative exponents.

The monomial order is lexicographic over atoms in their sort order with the
higher exponent winning at the first difference. It is total and compatible
with multiplication, which is what exact division needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Callable, Iterable, Optional

from .rational import GaussianRational, ONE, ZERO
from .symbols import Symbol, SymbolKind

MultiIndex = tuple[tuple[str, int], ...]


def multi_index(*pairs: tuple[str, int]) -> MultiIndex:
    acc: dict[str, int] = {}
    for name, order in pairs:
        acc[name] = acc.get(name, 0) + order
    return tuple(sorted((n, o) for n, o in acc.items() if o != 0))


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return multi_index(*a, *b)


def mi_order(a: MultiIndex) -> int:
    return sum(o for _, o in a)


@dataclass(frozen=True)
class SymAtom:
    symbol: Symbol
    derivs: MultiIndex = ()

    def sort_key(self):
        return (0, self.symbol.sort_key(), self.derivs)

    def __str__(self):
        if not self.derivs:
            return self.symbol.display
        parts = ",".join(c if o == 1 else f"{c}*{o}" for c, o in self.derivs)
        return f"d[{parts}]({self.symbol.display})"


@dataclass(frozen=True)
class TrigAtom:
    fn: str  # "sin" | "cos"
    coord: str

    def sort_key(self):
        return (1, self.coord, self.fn)

    def __str__(self):
        return f"{self.fn}({self.coord})"


@dataclass(frozen=True)
class InvAtom:
    # canonical key of the (normalized) base polynomial: sorted tuple of
    # (monomial, coeff) pairs, leading coefficient 1, no monomial content
    base: tuple

    def sort_key(self):
        return (2, _key_sort_form(self.base))

    def base_poly(self) -> "Poly":
        return dict(self.base)

    def __str__(self):
        return f"inv({poly_str(dict(self.base))})"


Atom = object  # SymAtom | TrigAtom | InvAtom
Monomial = tuple  # tuple[tuple[Atom, int], ...]
Poly = dict  # dict[Monomial, GaussianRational]

EMPTY: Monomial = ()


def _key_sort_form(base_key: tuple):
    # recursive, comparable rendering of a poly key for atom ordering
    return tuple(
        (tuple((_atom_repr(a), e) for a, e in mono), coeff.sort_key())
        for mono, coeff in base_key
    )


def _atom_repr(a):
    return a.sort_key() if not isinstance(a, tuple) else a


# ---------------------------------------------------------------- monomials


def mono_make(pairs: Iterable[tuple[Atom, int]]) -> Monomial:
    acc: dict[Atom, int] = {}
    for atom, exp in pairs:
        if exp == 0:
            continue
        acc[atom] = acc.get(atom, 0) + exp
    items = [(a, e) for a, e in acc.items() if e != 0]
    items.sort(key=lambda p: p[0].sort_key())
    return tuple(items)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return mono_make(list(a) + list(b))


def mono_pow(a: Monomial, n: int) -> Monomial:
    return tuple((atom, e * n) for atom, e in a) if n != 0 else EMPTY


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    return mono_mul(a, mono_pow(b, -1))


def mono_cmp(a: Monomial, b: Monomial) -> int:
    """Vector lexicographic compare with missing exponents read as zero."""
    ia, ib = 0, 0
    while ia < len(a) or ib < len(b):
        if ia < len(a) and ib < len(b):
            ka, kb = a[ia][0].sort_key(), b[ib][0].sort_key()
            if ka == kb:
                ea, eb = a[ia][1], b[ib][1]
                if ea != eb:
                    return 1 if ea > eb else -1
                ia += 1
                ib += 1
            elif ka < kb:
                # a has an atom b lacks at the most significant open slot
                return 1 if a[ia][1] > 0 else -1
            else:
                return -1 if b[ib][1] > 0 else 1
        elif ia < len(a):
            return 1 if a[ia][1] > 0 else -1
        else:
            return -1 if b[ib][1] > 0 else 1
    return 0


MONO_KEY = cmp_to_key(mono_cmp)


# ------------------------------------------------------------------- polys


def poly_zero() -> Poly:
    return {}


def poly_const(c: GaussianRational) -> Poly:
    return {} if c.is_zero() else {EMPTY: c}


def poly_atom(atom: Atom, exp: int = 1) -> Poly:
    if exp == 0:
        return {EMPTY: ONE}
    return {mono_make([(atom, exp)]): ONE}


def poly_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, ZERO) + c
        if s.is_zero():
            out.pop(m, None)
        else:
            out[m] = s
    return out


def poly_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def poly_sub(a: Poly, b: Poly) -> Poly:
    return poly_add(a, poly_neg(b))


def poly_scale(a: Poly, c: GaussianRational) -> Poly:
    if c.is_zero():
        return {}
    return {m: cc * c for m, cc in a.items()}


def poly_mono_mul(a: Poly, mono: Monomial, c: GaussianRational = ONE) -> Poly:
    if c.is_zero():
        return {}
    return {mono_mul(m, mono): cc * c for m, cc in a.items()}


def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = mono_mul(ma, mb)
            s = out.get(m, ZERO) + ca * cb
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
    return reduce_inverses(out)


def poly_pow(a: Poly, n: int) -> Poly:
    if n < 0:
        return poly_pow(poly_invert(a), -n)
    out = poly_const(ONE)
    base = a
    while n:
        if n & 1:
            out = poly_mul(out, base)
        base = poly_mul(base, base) if n > 1 else base
        n >>= 1
    return out


def poly_key(a: Poly) -> tuple:
    return tuple(sorted(a.items(), key=lambda kv: MONO_KEY(kv[0]), reverse=True))


def poly_equal(a: Poly, b: Poly) -> bool:
    return poly_key(a) == poly_key(b)


def leading(a: Poly) -> tuple[Monomial, GaussianRational]:
    if not a:
        raise ValueError("zero polynomial has no leading term")
    m = max(a, key=MONO_KEY)
    return m, a[m]


def mono_content(a: Poly) -> Monomial:
    """Per-atom minimum exponent across all monomials (0 for absent atoms)."""
    if not a:
        return EMPTY
    mins: dict[Atom, int] = {}
    seen_in: dict[Atom, int] = {}
    n = len(a)
    for m in a:
        for atom, e in m:
            seen_in[atom] = seen_in.get(atom, 0) + 1
            if atom not in mins or e < mins[atom]:
                mins[atom] = e
    out = []
    for atom, e in mins.items():
        if seen_in[atom] < n:
            e = min(e, 0)
        if e != 0:
            out.append((atom, e))
    return mono_make(out)


# ------------------------------------------------------------ inverse atoms


def normalize_base(a: Poly) -> tuple[GaussianRational, Monomial, tuple]:
    """Split a into lc * content * base_key with base_key normalized
    (leading coefficient 1, no monomial content, >= 2 terms)."""
    content = mono_content(a)
    stripped = poly_mono_mul(a, mono_pow(content, -1))
    _, lc = leading(stripped)
    normalized = poly_scale(stripped, lc.inverse())
    return lc, content, poly_key(normalized)


def poly_invert(a: Poly) -> Poly:
    """Reciprocal of a poly: exact for monomials, InvAtom otherwise."""
    if not a:
        raise ZeroDivisionError("reciprocal of zero polynomial")
    if len(a) == 1:
        m, c = next(iter(a.items()))
        return {mono_pow(m, -1): c.inverse()}
    lc, content, key = normalize_base(a)
    inv_mono = mono_mul(mono_pow(content, -1), mono_make([(InvAtom(key), 1)]))
    return {inv_mono: lc.inverse()}


def reduce_inverses(a: Poly) -> Poly:
    """Cancel inv(P) factors common to every monomial against divisibility
    by P. Normalizes products like (r - r_g) * inv(r - r_g) to 1, and
    expands reciprocals of reciprocals (inv(P)^-k becomes P^k)."""
    if not a:
        return a
    if any(isinstance(atom, InvAtom) and e < 0 for m in a for atom, e in m):
        expanded: Poly = {}
        for m, c in a.items():
            neg = [(atom, e) for atom, e in m if isinstance(atom, InvAtom) and e < 0]
            if not neg:
                expanded[m] = expanded.get(m, ZERO) + c
                continue
            rest = mono_make([(atom, e) for atom, e in m
                              if not (isinstance(atom, InvAtom) and e < 0)])
            piece: Poly = {rest: c}
            for atom, e in neg:
                piece = poly_mul(piece, poly_pow(dict(atom.base), -e))
            for mm, cc in piece.items():
                s = expanded.get(mm, ZERO) + cc
                if s.is_zero():
                    expanded.pop(mm, None)
                else:
                    expanded[mm] = s
        a = {m: c for m, c in expanded.items() if not c.is_zero()}
        if not a:
            return a
    bases: set[InvAtom] = set()
    for m in a:
        for atom, e in m:
            if isinstance(atom, InvAtom) and e > 0:
                bases.add(atom)
    for inv in bases:
        k = min(_exp_of(m, inv) for m in a)
        if k <= 0:
            continue
        stripped = poly_mono_mul(a, mono_make([(inv, -k)]))
        base = dict(inv.base)
        while k > 0:
            q = exact_divide(stripped, base)
            if q is None:
                break
            stripped = q
            k -= 1
        a = poly_mono_mul(stripped, mono_make([(inv, k)])) if k else stripped
    return a


def rational_zero(a: Poly) -> bool:
    """Zero test for polys holding reciprocal atoms. Each inv(P) is cleared
    by multiplying through with P to the highest power present, which keeps
    zero-ness exactly (P is a nonzero polynomial)."""
    a = reduce_inverses(a)
    rounds = 0
    while a:
        invs = sorted({atom for m in a for atom, e in m
                       if isinstance(atom, InvAtom) and e > 0},
                      key=lambda at: at.sort_key())
        if not invs:
            return False
        if rounds > 64:
            return False
        inv = invs[0]
        top = max(_exp_of(m, inv) for m in a)
        base = dict(inv.base)
        out: Poly = {}
        for m, c in a.items():
            e = _exp_of(m, inv)
            rest = mono_make([(at, ex) for at, ex in m if at != inv])
            out = poly_add(out, poly_mono_mul(poly_pow(base, top - e), rest, c))
        a = reduce_inverses(out)
        rounds += 1
    return True


def _exp_of(m: Monomial, atom: Atom) -> int:
    for a, e in m:
        if a == atom:
            return e
    return 0


def exact_divide(num: Poly, den: Poly) -> Optional[Poly]:
    """num / den when exact, else None. Laurent-safe via content clearing."""
    if not num:
        return {}
    if not den:
        raise ZeroDivisionError("division by zero polynomial")
    shift = mono_content(num)
    work = poly_mono_mul(num, mono_pow(shift, -1))
    dm, dc = leading(den)
    quotient: Poly = {}
    guard = (len(work) + 4) * (len(den) + 4) * 4
    while work:
        if guard <= 0:
            return None
        guard -= 1
        wm, wc = leading(work)
        qm = mono_div(wm, dm)
        if any(e < 0 for _, e in qm):
            return None
        qc = wc / dc
        quotient[qm] = quotient.get(qm, ZERO) + qc
        work = poly_sub(work, poly_mono_mul(den, qm, qc))
        if work:
            nm, _ = leading(work)
            if mono_cmp(nm, wm) >= 0:
                return None
    quotient = {m: c for m, c in quotient.items() if not c.is_zero()}
    return poly_mono_mul(quotient, shift)


# ---------------------------------------------------------- differentiation


def atom_derivative(atom: Atom, coord: str) -> Poly:
    if isinstance(atom, SymAtom):
        sym = atom.symbol
        if sym.kind is SymbolKind.COORDINATE:
            if atom.derivs:
                return poly_zero()
            return poly_const(ONE) if sym.name == coord else poly_zero()
        if sym.depends_on(coord):
            return poly_atom(SymAtom(sym, mi_add(atom.derivs, ((coord, 1),))))
        return poly_zero()
    if isinstance(atom, TrigAtom):
        if atom.coord != coord:
            return poly_zero()
        if atom.fn == "sin":
            return poly_atom(TrigAtom("cos", atom.coord))
        return poly_scale(poly_atom(TrigAtom("sin", atom.coord)), GaussianRational.of(-1))
    if isinstance(atom, InvAtom):
        base = dict(atom.base)
        dbase = poly_diff(base, coord)
        if not dbase:
            return poly_zero()
        inv_sq = poly_atom(atom, 2)
        return poly_scale(poly_mul(inv_sq, dbase), GaussianRational.of(-1))
    raise TypeError(f"unknown atom {atom!r}")


def poly_diff(a: Poly, coord: str) -> Poly:
    out: Poly = {}
    for m, c in a.items():
        for i, (atom, exp) in enumerate(m):
            datom = atom_derivative(atom, coord)
            if not datom:
                continue
            rest = mono_make([(at, e) for j, (at, e) in enumerate(m) if j != i]
                             + [(atom, exp - 1)])
            piece = poly_mono_mul(datom, rest, c * GaussianRational.of(exp))
            out = poly_add(out, piece)
    return reduce_inverses(out)


# -------------------------------------------------------------- conjugation


def poly_conjugate(a: Poly) -> Poly:
    out: Poly = {}
    for m, c in a.items():
        pairs = []
        for atom, e in m:
            pairs.append((_atom_conjugate(atom), e))
        mm = mono_make(pairs)
        out[mm] = out.get(mm, ZERO) + c.conjugate()
    return {m: c for m, c in out.items() if not c.is_zero()}


def _atom_conjugate(atom: Atom) -> Atom:
    if isinstance(atom, SymAtom):
        sym = atom.symbol
        if sym.kind is SymbolKind.FIELD:
            return SymAtom(sym.conjugate_symbol(), atom.derivs)
        if sym.complex_valued:
            raise ValueError(
                f"conjugate of complex constant {sym.name!r} is not representable")
        return atom
    if isinstance(atom, TrigAtom):
        return atom
    if isinstance(atom, InvAtom):
        base = poly_conjugate(dict(atom.base))
        _, _, key = normalize_base(base)
        return InvAtom(key)
    raise TypeError(f"unknown atom {atom!r}")


# ---------------------------------------------------------------- evaluation

Sampler = Callable[[MultiIndex, dict[str, float]], complex]


class EvalEnv:
    """Numeric assignment for polynomial evaluation.

    coords: coordinate name -> float value
    params: constant name -> complex value (covers dependent constants too,
            via callables taking the coord dict)
    fields: field name -> sampler(multi_index, coords) -> complex; conjugated
            fields evaluate through the base sampler and conjugate.
    """

    def __init__(self, coords=None, params=None, fields=None):
        self.coords = dict(coords or {})
        self.params = dict(params or {})
        self.fields = dict(fields or {})

    def atom_value(self, atom: Atom) -> complex:
        if isinstance(atom, SymAtom):
            sym = atom.symbol
            if sym.kind is SymbolKind.COORDINATE:
                if atom.derivs:
                    return 0.0
                return complex(self.coords[sym.name])
            if sym.kind is SymbolKind.FIELD:
                sampler = self.fields[sym.name]
                v = sampler(atom.derivs, self.coords)
                return v.conjugate() if sym.conjugated else v
            val = self.params[sym.name]
            if callable(val):
                return _call_param(val, atom.derivs, self.coords)
            if atom.derivs:
                raise KeyError(
                    f"no derivative values available for constant {sym.name!r}")
            return complex(val)
        if isinstance(atom, TrigAtom):
            import math
            x = float(self.coords[atom.coord])
            return complex(math.sin(x) if atom.fn == "sin" else math.cos(x))
        if isinstance(atom, InvAtom):
            return 1.0 / poly_eval(dict(atom.base), self)
        raise TypeError(f"unknown atom {atom!r}")


def _call_param(fn, derivs: MultiIndex, coords: dict[str, float]) -> complex:
    try:
        return complex(fn(derivs, coords))
    except TypeError:
        if derivs:
            raise
        return complex(fn(coords))


def poly_eval(a: Poly, env: EvalEnv) -> complex:
    total = 0j
    for m, c in a.items():
        v = complex(c)
        for atom, e in m:
            v *= env.atom_value(atom) ** e
        total += v
    return total


# ------------------------------------------------------------------ display


def poly_str(a: Poly) -> str:
    if not a:
        return "0"
    bits = []
    for m, c in sorted(a.items(), key=lambda kv: MONO_KEY(kv[0]), reverse=True):
        factors = [str(c)] if not c.is_one() or not m else ([] if m else [str(c)])
        for atom, e in m:
            factors.append(str(atom) if e == 1 else f"{atom}^{e}")
        bits.append("*".join(factors) if factors else "1")
    return " + ".join(bits)
