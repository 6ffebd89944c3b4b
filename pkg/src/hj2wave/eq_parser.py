"""Text format for entering equations with their declarations.

One equation per file. Statements, each ending with ';':

    coords t, x, y, z;          ordered coordinate list (first statement)
    field S, Psi;               complex scalar unknowns
    param hbar, m, U(x, y, z);  real givens; parenthesized coordinate
                                dependence makes them differentiable
    complexparam nu;            complex given (conjugation is refused)
    vecfield A(x, y, z);        components A_x, A_y, A_z, each a param
                                depending on all coordinates
    metric g diag(e0, e1, e2, e3);
    eq: lhs = rhs;              scalar equation
    veceq: lhs = rhs;           vector equation, componentwise

Expressions: + - * / ^ with integer exponents, rationals via division,
`i` reserved for the imaginary unit, `#` comments. Operators: dt, d, grad,
div, curl, lap, dot, cross, adv, conj, sin, cos, cov. Indexed sums expand
at parse time: `sum(j,k) g[j,k]*d(S,j)*d(S,k)` ranges each index over the
coordinate list; inside, `A[j]` picks a vector component and `g[j,k]` a
metric entry (zero off the diagonal). `cov(e, j)` is the covariant
derivative, which for the scalars this format allows equals d(e, j).

grad/div/curl/lap/adv act over the spatial coordinates: every declared
coordinate except one named `t`.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

from . import vectors as V
from .equations import Equation, VectorEquation
from .errors import DslSyntaxError, SourceSpan, UndeclaredSymbol
from .expr import (
    Const, Deriv, Expr, FieldRef, HermPair, PairProd, ParamRef, Power,
    Product, Sum, TrigFn, as_expr, const, poly_to_expr, ref,
)
from . import poly as P
from .rational import GaussianRational, ONE
from .symbols import Symbol, SymbolKind, constant, coordinate, field_symbol

Value = Union[Expr, tuple]


# ------------------------------------------------------------------- lexer

_PUNCT = {"(", ")", "[", "]", ",", ";", ":", "=", "+", "-", "*", "/", "^"}

KEYWORDS = {"coords", "field", "param", "complexparam", "vecfield", "metric",
            "eq", "veceq", "diag"}

OPERATORS = {"dt", "d", "grad", "div", "curl", "lap", "dot", "cross", "adv",
             "conj", "sin", "cos", "cov", "sum"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | punctuation | "eof"
    text: str
    start: int
    end: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.start, self.end)


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    n = len(text)
    pos = 0
    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if ch == "#":
            while pos < n and text[pos] != "\n":
                pos += 1
            continue
        if ch in _PUNCT:
            toks.append(Token(ch, ch, pos, pos + 1))
            pos += 1
            continue
        if ch.isdigit():
            start = pos
            while pos < n and text[pos].isdigit():
                pos += 1
            toks.append(Token("int", text[start:pos], start, pos))
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            toks.append(Token("ident", text[start:pos], start, pos))
            continue
        raise DslSyntaxError(SourceSpan(pos, pos + 1),
                             expected=("token",), found=repr(ch))
    toks.append(Token("eof", "", n, n))
    return toks


# ---------------------------------------------------------------- document


@dataclass
class Document:
    """A parsed file: declarations plus its single equation."""

    coordinates: tuple[Symbol, ...]
    declarations: tuple[Symbol, ...]
    equation: Union[Equation, VectorEquation]
    label: str = ""
    vecfields: dict = dc_field(default_factory=dict)  # name -> axes (Symbols)
    metrics: dict = dc_field(default_factory=dict)  # name -> tuple[Expr,...]
    param_kinds: dict = dc_field(default_factory=dict)  # name -> statement kw

    @property
    def spatial(self) -> tuple[Symbol, ...]:
        return tuple(c for c in self.coordinates if c.name != "t")

    def symbol(self, name: str) -> Symbol:
        for s in self.declarations:
            if s.name == name:
                return s
        for c in self.coordinates:
            if c.name == name:
                return c
        raise KeyError(name)


def _component_name(vec: str, axis: str) -> str:
    return f"{vec}_{axis}"


# ----------------------------------------------------------------- parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.pos = 0
        self.coords: list[Symbol] = []
        self.symbols: dict[str, Symbol] = {}
        self.vecfields: dict[str, tuple[Symbol, ...]] = {}
        self.metrics: dict[str, tuple[Expr, ...]] = {}
        self.param_kinds: dict[str, str] = {}
        self.indices: dict[str, int] = {}
        self.pending_deps: list[Token] = []
        self.label = ""
        self._open_parens: list[Token] = []

    # -- token plumbing
    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        # unclosed-paren bookkeeping, for the end-of-input diagnostic only
        if t.kind == "(":
            self._open_parens.append(t)
        elif t.kind == ")" and self._open_parens:
            self._open_parens.pop()
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            found = t.text or "end of input"
            if kind == ")" and t.kind == "eof" and self._open_parens:
                where = self._open_parens[-1].span.start
                found = f"end of input (parenthesis at offset {where} unclosed)"
            raise DslSyntaxError(t.span, expected=(kind,), found=found)
        return self.next()

    def fail(self, tok: Token, *expected: str):
        raise DslSyntaxError(tok.span, expected=expected,
                             found=tok.text or "end of input")

    # -- declarations
    def parse_document(self) -> Document:
        equation = None
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind != "ident":
                self.fail(t, "statement keyword")
            if equation is not None:
                self.fail(t, "end of input (one equation per file)")
            kw = t.text
            if kw == "coords":
                self.next()
                self._parse_coords()
            elif kw in ("field", "param", "complexparam"):
                self.next()
                self._parse_scalar_decl(kw)
            elif kw == "vecfield":
                self.next()
                self._parse_vecfield()
            elif kw == "metric":
                self.next()
                self._parse_metric()
            elif kw in ("eq", "veceq"):
                self.next()
                self.expect(":")
                equation = self._parse_equation(vector=(kw == "veceq"))
            else:
                self.fail(t, "coords", "field", "param", "complexparam",
                          "vecfield", "metric", "eq", "veceq")
        if equation is None:
            raise DslSyntaxError(self.peek().span, expected=("eq", "veceq"),
                                 found="end of input")
        for t in self.pending_deps:
            if not any(c.name == t.text for c in self.coords):
                raise UndeclaredSymbol(t.span, t.text)
        decls = tuple(sorted(
            (s for s in self.symbols.values()
             if s.kind is not SymbolKind.COORDINATE),
            key=lambda s: s.name))
        return Document(
            coordinates=tuple(self.coords),
            declarations=decls,
            equation=equation,
            label=self.label,
            vecfields=dict(self.vecfields),
            metrics=dict(self.metrics),
            param_kinds=dict(self.param_kinds),
        )

    def _declare(self, tok: Token, sym: Symbol):
        if tok.text == "i":
            raise DslSyntaxError(tok.span,
                                 expected=("a name other than the reserved 'i'",),
                                 found=tok.text)
        if tok.text in self.symbols or any(c.name == tok.text for c in self.coords):
            raise DslSyntaxError(tok.span, expected=("an undeclared name",),
                                 found=f"duplicate {tok.text!r}")
        self.symbols[tok.text] = sym

    def _parse_coords(self):
        if self.coords:
            self.fail(self.peek(), "coords declared once")
        while True:
            t = self.expect("ident")
            if t.text == "i":
                raise DslSyntaxError(t.span,
                                     expected=("a name other than the reserved 'i'",),
                                     found=t.text)
            if any(c.name == t.text for c in self.coords):
                raise DslSyntaxError(t.span, expected=("an undeclared name",),
                                     found=f"duplicate {t.text!r}")
            self.coords.append(coordinate(t.text))
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(";")

    def _parse_deps(self) -> tuple[str, ...]:
        # coordinates may be declared after the params that depend on them;
        # names are checked once the whole document is read
        deps = []
        self.expect("(")
        while True:
            t = self.expect("ident")
            deps.append(t.text)
            self.pending_deps.append(t)
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(")")
        return tuple(deps)

    def _parse_scalar_decl(self, kw: str):
        while True:
            t = self.expect("ident")
            if kw == "field":
                self._declare(t, field_symbol(t.text))
            else:
                deps = self._parse_deps() if self.peek().kind == "(" else ()
                self._declare(t, constant(t.text, deps,
                                          complex_valued=(kw == "complexparam")))
            self.param_kinds[t.text] = kw
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(";")

    def _parse_vecfield(self):
        t = self.expect("ident")
        name = t.text
        axes_names = self._parse_deps()
        axes = tuple(c for c in self.coords if c.name in axes_names)
        if len(axes) != len(axes_names):
            raise DslSyntaxError(t.span, expected=("declared coordinate axes",),
                                 found=name)
        all_deps = tuple(c.name for c in self.coords)
        comps = []
        for ax in axes:
            cname = _component_name(name, ax.name)
            ctok = Token("ident", cname, t.start, t.end)
            sym = constant(cname, all_deps)
            self._declare(ctok, sym)
            self.param_kinds[cname] = "vecfield-component"
            comps.append(sym)
        self.vecfields[name] = tuple(axes)
        self.param_kinds[name] = "vecfield"
        self.expect(";")

    def _parse_metric(self):
        t = self.expect("ident")
        name = t.text
        if name in self.metrics or name in self.symbols:
            raise DslSyntaxError(t.span, expected=("an undeclared name",),
                                 found=f"duplicate {name!r}")
        kwtok = self.expect("ident")
        if kwtok.text != "diag":
            self.fail(kwtok, "diag")
        self.expect("(")
        entries = []
        while True:
            entries.append(self._scalar(self._parse_add(), kwtok))
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(")")
        self.expect(";")
        if len(entries) != len(self.coords):
            raise DslSyntaxError(t.span,
                                 expected=(f"{len(self.coords)} diagonal entries",),
                                 found=f"{len(entries)}")
        self.metrics[name] = tuple(entries)

    # -- equation
    def _parse_equation(self, vector: bool):
        lhs = self._parse_add()
        self.expect("=")
        rhs = self._parse_add()
        # terminator is optional when the equation ends the input
        if self.peek().kind == ";":
            self.next()
        elif self.peek().kind != "eof":
            self.fail(self.peek(), ";")
        lv, rv = isinstance(lhs, tuple), isinstance(rhs, tuple)
        if vector:
            n = len(self.coords) - (1 if any(c.name == "t" for c in self.coords) else 0)
            if not lv:
                lhs = self._broadcast(lhs, n)
            if not rv:
                rhs = self._broadcast(rhs, n)
            if len(lhs) != len(rhs):
                raise DslSyntaxError(self.toks[self.pos - 1].span,
                                     expected=("equal component counts",),
                                     found=f"{len(lhs)} vs {len(rhs)}")
            return VectorEquation(tuple(lhs), tuple(rhs))
        if lv or rv:
            raise DslSyntaxError(self.toks[self.pos - 1].span,
                                 expected=("scalar sides (use veceq)",),
                                 found="vector value")
        return Equation(lhs, rhs)

    @staticmethod
    def _broadcast(e: Expr, n: int) -> tuple:
        from .expr import is_zero
        if is_zero(e):
            return tuple(Const(GaussianRational.of(0)) for _ in range(n))
        raise DslSyntaxError(SourceSpan(0, 0),
                             expected=("a vector value or 0",), found="scalar")

    # -- expressions
    def _parse_add(self) -> Value:
        t = self.peek()
        left = self._parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.next()
            right = self._parse_term()
            if isinstance(left, tuple) != isinstance(right, tuple):
                # cover the whole mixed expression, not just the operator;
                # the offending token is usually inside an operand
                raise DslSyntaxError(SourceSpan(t.span.start, op.span.end),
                                     expected=("matching scalar/vector "
                                               "operands",),
                                     found=op.text)
            if isinstance(left, tuple):
                left = V.add(left, right) if op.kind == "+" else V.sub(left, right)
            else:
                left = left + right if op.kind == "+" else left - right
        return left

    def _parse_term(self) -> Value:
        if self.peek().kind == "ident" and self.peek().text == "sum":
            return self._parse_sum()
        return self._parse_mul()

    def _parse_sum(self) -> Value:
        self.next()  # 'sum'
        self.expect("(")
        idx_names = []
        while True:
            t = self.expect("ident")
            if t.text in self.indices or t.text in self.symbols or t.text == "i" \
                    or any(c.name == t.text for c in self.coords):
                raise DslSyntaxError(t.span, expected=("a fresh index name",),
                                     found=t.text)
            idx_names.append(t.text)
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(")")
        start = self.pos
        total: Optional[Value] = None
        n = len(self.coords)
        assignments = [[]]
        for _ in idx_names:
            assignments = [a + [v] for a in assignments for v in range(n)]
        end = start
        for assign in assignments:
            self.pos = start
            for nm, v in zip(idx_names, assign):
                self.indices[nm] = v
            piece = self._parse_mul()
            for nm in idx_names:
                del self.indices[nm]
            end = self.pos
            if isinstance(piece, tuple):
                raise DslSyntaxError(self.toks[start].span,
                                     expected=("a scalar summand",),
                                     found="vector value")
            total = piece if total is None else total + piece
        self.pos = end
        return total

    def _parse_mul(self) -> Value:
        left = self._parse_unary()
        while self.peek().kind in ("*", "/"):
            op = self.next()
            right = self._parse_unary()
            lv, rv = isinstance(left, tuple), isinstance(right, tuple)
            if op.kind == "*":
                if lv and rv:
                    self.fail(op, "dot(a, b) or cross(a, b) for vector products")
                if lv:
                    left = V.scale(right, left)
                elif rv:
                    left = V.scale(left, right)
                else:
                    left = left * right
            else:
                if rv:
                    self.fail(op, "a scalar divisor")
                inv = Power(right, -1)
                left = V.scale(inv, left) if lv else left * inv
        return left

    def _parse_unary(self) -> Value:
        t = self.peek()
        if t.kind == "-":
            self.next()
            v = self._parse_unary()
            if isinstance(v, tuple):
                return V.scale(const(-1), v)
            return -v
        if t.kind == "+":
            self.next()
            return self._parse_unary()
        return self._parse_power()

    def _parse_power(self) -> Value:
        base = self._parse_primary()
        if self.peek().kind == "^":
            caret = self.next()
            n = self._parse_int_exponent()
            if isinstance(base, tuple):
                self.fail(caret, "a scalar base")
            return Power(base, n)
        return base

    def _parse_int_exponent(self) -> int:
        neg = False
        parens = False
        if self.peek().kind == "(":
            self.next()
            parens = True
        if self.peek().kind == "-":
            self.next()
            neg = True
        t = self.expect("int")
        if parens:
            self.expect(")")
        v = int(t.text)
        return -v if neg else v

    def _parse_primary(self) -> Value:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return const(int(t.text))
        if t.kind == "(":
            self.next()
            first = self._parse_add()
            if self.peek().kind == ",":
                comps = [self._scalar(first, t)]
                while self.peek().kind == ",":
                    self.next()
                    comps.append(self._scalar(self._parse_add(), t))
                self.expect(")")
                return tuple(comps)
            self.expect(")")
            return first
        if t.kind == "ident":
            if t.text in OPERATORS:
                return self._parse_operator_call()
            return self._parse_name()
        self.fail(t, "an expression")

    def _scalar(self, v: Value, tok: Token) -> Expr:
        if isinstance(v, tuple):
            self.fail(tok, "a scalar value")
        return v

    def _vector(self, v: Value, tok: Token) -> tuple:
        if not isinstance(v, tuple):
            self.fail(tok, "a vector value")
        return v

    def _parse_name(self) -> Value:
        t = self.next()
        name = t.text
        if name == "i":
            return const(0, 1)
        if name in self.indices:
            raise DslSyntaxError(t.span,
                                 expected=("a value (indices name coordinates)",),
                                 found=name)
        if name in self.vecfields:
            if self.peek().kind == "[":
                idx = self._parse_index_list(1)[0]
                return self._vec_component(t, name, idx)
            axes = self.vecfields[name]
            return tuple(ref(self.symbols[_component_name(name, a.name)])
                         for a in axes)
        if name in self.metrics:
            j, k = self._parse_index_list(2)
            entries = self.metrics[name]
            if j == k:
                return entries[j]
            return const(0)
        if name in self.symbols:
            return ref(self.symbols[name])
        for c in self.coords:
            if c.name == name:
                return ref(c)
        raise UndeclaredSymbol(t.span, name)

    def _parse_index_list(self, count: int) -> list[int]:
        self.expect("[")
        out = []
        while True:
            t = self.next()
            if t.kind == "int":
                v = int(t.text)
                if v >= len(self.coords):
                    raise DslSyntaxError(t.span,
                                         expected=("an index below "
                                                   f"{len(self.coords)}",),
                                         found=t.text)
                out.append(v)
            elif t.kind == "ident" and t.text in self.indices:
                out.append(self.indices[t.text])
            else:
                self.fail(t, "an index variable or integer")
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect("]")
        if len(out) != count:
            raise DslSyntaxError(self.toks[self.pos - 1].span,
                                 expected=(f"{count} indices",),
                                 found=f"{len(out)}")
        return out

    def _vec_component(self, tok: Token, name: str, idx: int) -> Expr:
        axes = self.vecfields[name]
        coord = self.coords[idx]
        if coord not in axes:
            raise DslSyntaxError(tok.span,
                                 expected=(f"an axis of {name}",),
                                 found=coord.name)
        return ref(self.symbols[_component_name(name, coord.name)])

    def _coord_arg(self) -> Symbol:
        t = self.expect("ident")
        if t.text in self.indices:
            return self.coords[self.indices[t.text]]
        for c in self.coords:
            if c.name == t.text:
                return c
        raise DslSyntaxError(t.span, expected=("a coordinate or index",),
                             found=t.text)

    def _parse_operator_call(self) -> Value:
        t = self.next()
        op = t.text
        if op == "sum":
            self.fail(t, "sum used as a prefix term: sum(j) expr")
        self.expect("(")
        spatial = tuple(c for c in self.coords if c.name != "t")

        def arg() -> Value:
            return self._parse_add()

        if op == "dt":
            v = arg()
            self.expect(")")
            tc = next((c for c in self.coords if c.name == "t"), None)
            if tc is None:
                raise DslSyntaxError(t.span, expected=("a coordinate named t",),
                                     found="dt")
            if isinstance(v, tuple):
                return tuple(Deriv(c, tc) for c in v)
            return Deriv(v, tc)
        if op == "d":
            v = arg()
            self.expect(",")
            c = self._coord_arg()
            order = 1
            if self.peek().kind == ",":
                self.next()
                order = int(self.expect("int").text)
            self.expect(")")
            if isinstance(v, tuple):
                return tuple(Deriv(x, c, order) for x in v)
            return Deriv(v, c, order)
        if op == "cov":
            v = self._scalar(arg(), t)
            self.expect(",")
            c = self._coord_arg()
            self.expect(")")
            return Deriv(v, c)
        if op in ("sin", "cos"):
            c = self._coord_arg()
            self.expect(")")
            return TrigFn(op, c)
        if op == "conj":
            v = self._scalar(arg(), t)
            self.expect(")")
            from .expr import conjugate
            try:
                return conjugate(v)
            except ValueError as exc:
                raise DslSyntaxError(t.span,
                                     expected=("a conjugable expression",),
                                     found=str(exc))
        if op == "grad":
            v = self._scalar(arg(), t)
            self.expect(")")
            return V.grad(v, spatial)
        if op == "div":
            v = self._vector(arg(), t)
            self.expect(")")
            return V.div(v, spatial)
        if op == "curl":
            v = self._vector(arg(), t)
            self.expect(")")
            return V.curl(v, spatial)
        if op == "lap":
            v = arg()
            self.expect(")")
            if isinstance(v, tuple):
                return tuple(V.lap(x, spatial) for x in v)
            return V.lap(v, spatial)
        if op in ("dot", "cross"):
            a = self._vector(arg(), t)
            self.expect(",")
            b = self._vector(arg(), t)
            self.expect(")")
            return V.dot(a, b) if op == "dot" else V.cross(a, b)
        if op == "adv":
            a = self._vector(arg(), t)
            self.expect(",")
            b = self._vector(arg(), t)
            self.expect(")")
            return V.adv(a, b, spatial)
        self.fail(t, "an operator")


def parse(text: str) -> Document:
    return _Parser(text).parse_document()


def parse_equation(text: str) -> Equation:
    doc = parse(text)
    if not isinstance(doc.equation, Equation):
        raise ValueError("file holds a vector equation")
    return doc.equation


# -------------------------------------------------------------- formatting


def _format_rational(c: GaussianRational, in_product: bool) -> str:
    s = str(c)
    if in_product and (("+" in s[1:]) or ("-" in s[1:]) or s.startswith("-")):
        return f"({s})"
    return s


def _format_coeff_str(c: GaussianRational) -> str:
    # rational text using only DSL tokens: ints, i, * and /
    def frac(f):
        return f"{f.numerator}" if f.denominator == 1 else f"{f.numerator}/{f.denominator}"

    if c.im == 0:
        return frac(c.re)
    if c.re == 0:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "-i"
        return f"{frac(c.im)}*i"
    im = c.im
    sign = " + " if im > 0 else " - "
    im = abs(im)
    imtxt = "i" if im == 1 else f"{frac(im)}*i"
    return f"({frac(c.re)}{sign}{imtxt})"


def _format_atom(atom, doc: Optional[Document]) -> str:
    if isinstance(atom, P.SymAtom):
        base = f"conj({atom.symbol.name})" if atom.symbol.conjugated else atom.symbol.name
        out = base
        for coord_name, order in atom.derivs:
            if coord_name == "t" and order == 1:
                out = f"dt({out})"
            elif order == 1:
                out = f"d({out}, {coord_name})"
            else:
                out = f"d({out}, {coord_name}, {order})"
        return out
    if isinstance(atom, P.TrigAtom):
        return f"{atom.fn}({atom.coord})"
    if isinstance(atom, P.InvAtom):
        return f"({format_poly(dict(atom.base), doc)})^(-1)"
    raise TypeError(f"unknown atom {atom!r}")


def format_poly(p: P.Poly, doc: Optional[Document] = None) -> str:
    if not p:
        return "0"
    items = sorted(p.items(), key=lambda kv: P.MONO_KEY(kv[0]), reverse=True)
    parts = []
    for n, (mono, coeff) in enumerate(items):
        neg = coeff.re < 0 or (coeff.re == 0 and coeff.im < 0)
        shown = GaussianRational.of(-1) * coeff if neg else coeff
        bits = []
        if not shown.is_one() or not mono:
            bits.append(_format_coeff_str(shown))
        for atom, e in mono:
            if isinstance(atom, P.InvAtom):
                base = format_poly(dict(atom.base), doc)
                pexp = -e
                bits.append(f"({base})" if pexp == 1 else f"({base})^({pexp})")
                continue
            a = _format_atom(atom, doc)
            if e == 1:
                bits.append(a)
            else:
                bits.append(f"{a}^{e}" if e > 0 else f"{a}^({e})")
        term = "*".join(bits)
        if n == 0:
            parts.append(f"-{term}" if neg else term)
        else:
            parts.append(f" - {term}" if neg else f" + {term}")
    return "".join(parts)


def format_expr(e: Expr, doc: Optional[Document] = None) -> str:
    """Canonical text for an expression; structural fallback for the
    marker nodes that have no scalar polynomial form."""
    if _has_opaque(e):
        return _format_structural(e, doc)
    return format_poly(e.to_poly(), doc)


def _has_opaque(e: Expr) -> bool:
    if isinstance(e, HermPair):
        return True
    if isinstance(e, Sum):
        return any(_has_opaque(t) for t in e.terms)
    if isinstance(e, Product):
        return any(_has_opaque(f) for f in e.factors)
    if isinstance(e, (Power, Deriv)):
        inner = e.base if isinstance(e, Power) else e.target
        return _has_opaque(inner)
    if isinstance(e, PairProd):
        return _has_opaque(e.left) or _has_opaque(e.right)
    return False


def _format_structural(e: Expr, doc) -> str:
    if isinstance(e, HermPair):
        return f"herm({format_expr(e.factor, doc)})"
    if isinstance(e, PairProd):
        return f"pair({format_expr(e.left, doc)}, {format_expr(e.right, doc)})"
    if isinstance(e, Sum):
        return " + ".join(f"({_format_structural(t, doc)})" if isinstance(t, Sum)
                          else _format_structural(t, doc) for t in e.terms)
    if isinstance(e, Product):
        return "*".join(f"({_format_structural(f, doc)})"
                        if isinstance(f, (Sum, PairProd)) else _format_structural(f, doc)
                        for f in e.factors)
    return format_expr(e, doc)


def format_equation(eq: Union[Equation, VectorEquation],
                    doc: Optional[Document] = None) -> str:
    if isinstance(eq, VectorEquation):
        lhs = ", ".join(format_expr(x, doc) for x in eq.lhs)
        rhs = ", ".join(format_expr(x, doc) for x in eq.rhs)
        return f"veceq: ({lhs}) = ({rhs});"
    return f"eq: {format_expr(eq.lhs, doc)} = {format_expr(eq.rhs, doc)};"


def format_document(doc: Document) -> str:
    lines = []
    if doc.label:
        lines.append(f"# label: {doc.label}")
    lines.append("coords " + ", ".join(c.name for c in doc.coordinates) + ";")
    fields = sorted(s.name for s in doc.declarations
                    if s.kind is SymbolKind.FIELD and not s.conjugated)
    if fields:
        lines.append("field " + ", ".join(fields) + ";")

    def decl_text(s: Symbol) -> str:
        return s.name + (f"({', '.join(s.deps)})" if s.deps else "")

    comp_names = {_component_name(v, a.name)
                  for v, axes in doc.vecfields.items() for a in axes}
    params = sorted((s for s in doc.declarations
                     if s.kind is SymbolKind.CONSTANT and not s.complex_valued
                     and s.name not in comp_names), key=lambda s: s.name)
    if params:
        lines.append("param " + ", ".join(decl_text(s) for s in params) + ";")
    cparams = sorted((s for s in doc.declarations
                      if s.kind is SymbolKind.CONSTANT and s.complex_valued),
                     key=lambda s: s.name)
    if cparams:
        lines.append("complexparam " + ", ".join(decl_text(s) for s in cparams) + ";")
    for name in sorted(doc.vecfields):
        axes = ", ".join(a.name for a in doc.vecfields[name])
        lines.append(f"vecfield {name}({axes});")
    for name in sorted(doc.metrics):
        entries = ", ".join(format_expr(e, doc) for e in doc.metrics[name])
        lines.append(f"metric {name} diag({entries});")
    lines.append(format_equation(doc.equation, doc))
    return "\n".join(lines) + "\n"
