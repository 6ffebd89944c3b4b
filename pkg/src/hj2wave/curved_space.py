"""Diagonal-metric geometry: connection coefficients, the scalar wave
operator in a gravitational background, and the centrally symmetric case
with its recorded-form comparison.

Conventions: a Metric stores the contravariant diagonal entries (the ones
the quadratic first-order equation contracts with), its determinant is the
product of those entries, and the volume factor w satisfies
w^2 * det + 1 = 0 for a Lorentzian signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from . import eq_parser
from . import poly as P
from .equations import Equation, MatchResult, equations_match, term_differences
from .errors import SingularMetric
from .expr import Deriv, Expr, Power, Product, Sum, poly_to_expr, substitute
from .rational import GaussianRational
from .symbols import Symbol

_HALF = GaussianRational.of("1/2")
_SCHWARZSCHILD_TEXT = """
    coords t, r, theta, phi;
    field Psi;
    param kappa, rg;
    metric g diag(r*(r - rg)^(-1), -1 + rg*r^(-1), -r^(-2),
                  -r^(-2)*sin(theta)^(-2));
    eq: Psi = r^2*sin(theta);
"""

#: the recorded third spatial entry, kept verbatim; it is inconsistent with
#: the recorded determinant, which forces the azimuthal form used above
PRINTED_G33 = "-(1 - rg*r^(-1))"
USED_G33 = "-r^(-2)*sin(theta)^(-2)"


@dataclass(frozen=True)
class Metric:
    coords: tuple[Symbol, ...]
    inverse: tuple[Expr, ...]  # contravariant diagonal entries
    volume: Optional[Expr] = None  # w, when it has a closed monomial form

    def __post_init__(self):
        if len(self.inverse) != len(self.coords):
            raise ValueError("one diagonal entry per coordinate")

    def dim(self) -> int:
        return len(self.coords)

    def inverse_poly(self, j: int) -> P.Poly:
        return self.inverse[j].to_poly()

    def lower_poly(self, j: int) -> P.Poly:
        p = self.inverse_poly(j)
        if not p:
            raise SingularMetric(f"zero diagonal entry {j}")
        return P.poly_invert(p)

    def determinant_poly(self) -> P.Poly:
        out = P.poly_const(GaussianRational.of(1))
        for j in range(self.dim()):
            out = P.poly_mul(out, self.inverse_poly(j))
        return out


def schwarzschild_document() -> eq_parser.Document:
    return eq_parser.parse(_SCHWARZSCHILD_TEXT)


@lru_cache(maxsize=None)
def schwarzschild_metric() -> Metric:
    doc = schwarzschild_document()
    return Metric(doc.coordinates, doc.metrics["g"], doc.equation.rhs)


def volume_factor_consistent(metric: Metric) -> bool:
    """w^2 * det(g^..) + 1 == 0, exactly."""
    if metric.volume is None:
        return False
    w2 = P.poly_pow(metric.volume.to_poly(), 2)
    p = P.poly_mul(w2, metric.determinant_poly())
    p = P.reduce_inverses(P.poly_add(p, P.poly_const(GaussianRational.of(1))))
    return not p


def christoffel(metric: Metric) -> dict[tuple[int, int, int], P.Poly]:
    """Connection coefficients of a diagonal metric, keyed (upper, lo, lo),
    only the nonzero ones. Exact polynomial arithmetic throughout."""
    n = metric.dim()
    lower = [metric.lower_poly(j) for j in range(n)]
    upper = [metric.inverse_poly(j) for j in range(n)]
    d_lower = [[P.poly_diff(lower[j], metric.coords[k].name) for k in range(n)]
               for j in range(n)]
    out: dict[tuple[int, int, int], P.Poly] = {}
    for l in range(n):
        for j in range(n):
            for k in range(j, n):
                # diagonal metric: only d_j g_lk + d_k g_lj - d_l g_jk survives
                # with every index pattern collapsing onto the diagonal
                acc = P.poly_zero()
                if l == k:
                    acc = P.poly_add(acc, d_lower[l][j])
                if l == j:
                    acc = P.poly_add(acc, d_lower[l][k])
                if j == k:
                    acc = P.poly_sub(acc, d_lower[j][l])
                if not acc:
                    continue
                g = P.reduce_inverses(
                    P.poly_scale(P.poly_mul(upper[l], acc), _HALF))
                if g:
                    out[(l, j, k)] = g
                    if j != k:
                        out[(l, k, j)] = g
    return out


def metric_compatibility_residuals(metric: Metric) -> dict[tuple[int, int, int], P.Poly]:
    """Covariant derivative of the contravariant metric, every component:
    d_l g^{jk} + G^j_{lm} g^{mk} + G^k_{lm} g^{jm}. All must vanish."""
    n = metric.dim()
    gam = christoffel(metric)
    upper = [metric.inverse_poly(j) for j in range(n)]
    out = {}
    for l in range(n):
        for j in range(n):
            for k in range(n):
                acc = P.poly_diff(upper[j], metric.coords[l].name) \
                    if j == k else P.poly_zero()
                for m in range(n):
                    if m == k and (j, l, m) in gam:
                        acc = P.poly_add(acc, P.poly_mul(gam[(j, l, m)], upper[k]))
                    if m == j and (k, l, m) in gam:
                        acc = P.poly_add(acc, P.poly_mul(gam[(k, l, m)], upper[j]))
                out[(l, j, k)] = acc
    return out


def metric_compatible(metric: Metric) -> bool:
    return all(P.rational_zero(v)
               for v in metric_compatibility_residuals(metric).values())


def divergence_free_inverse(metric: Metric) -> bool:
    """The contracted statement the viscosity elimination leans on:
    (1/w) d_j (w g^{jk}) + g^{jj} G^k_{jj} == 0 for every k, which is the
    covariant divergence of the inverse metric."""
    n = metric.dim()
    gam = christoffel(metric)
    if metric.volume is None:
        return False
    w = metric.volume.to_poly()
    winv = P.poly_invert(w)
    for k in range(n):
        term = P.poly_diff(P.poly_mul(w, metric.inverse_poly(k)),
                           metric.coords[k].name)
        acc = P.poly_mul(winv, term)
        for j in range(n):
            if (k, j, j) in gam:
                acc = P.poly_add(
                    acc, P.poly_mul(metric.inverse_poly(j), gam[(k, j, j)]))
        if not P.rational_zero(acc):
            return False
    return True


def curved_wave_operator(metric: Metric, psi: Symbol, kappa: Symbol) -> Equation:
    """The scalar equation g^{jj} d_j d_j Psi + (1/w) d_j(w g^{jj}) d_j Psi
    + kappa^2 Psi = 0 written without w: the log-derivative of the volume
    factor is -1/2 the metric's own log-derivative sum."""
    from .expr import Const, FieldRef, ParamRef
    terms: list[Expr] = []
    fp = FieldRef(psi)
    n = metric.dim()
    for j in range(n):
        c = metric.coords[j]
        terms.append(Product((metric.inverse[j], Deriv(fp, c, 2))))
        terms.append(Product((poly_to_expr(
            P.poly_diff(metric.inverse_poly(j), c.name)), Deriv(fp, c))))
        for m in range(n):
            dgm = P.poly_diff(metric.inverse_poly(m), c.name)
            if not dgm:
                continue
            coeff = P.reduce_inverses(P.poly_mul(
                P.poly_mul(metric.inverse_poly(j), dgm),
                P.poly_invert(metric.inverse_poly(m))))
            coeff = P.poly_scale(coeff, -_HALF)
            if coeff:
                terms.append(Product((poly_to_expr(coeff), Deriv(fp, c))))
    terms.append(Product((Power(ParamRef(kappa), 2), fp)))
    return Equation(Sum(tuple(terms)), name="curved-wave")


def schwarzschild_wave_equation() -> Equation:
    doc = schwarzschild_document()
    return curved_wave_operator(schwarzschild_metric(), doc.symbol("Psi"),
                                doc.symbol("kappa"))


def compare_schwarzschild_to_recorded(recorded: Equation) -> MatchResult:
    """Match the derived centrally symmetric equation against a recorded
    form; mismatches come back as per-term differences."""
    derived = schwarzschild_wave_equation()
    m = equations_match(derived, recorded)
    if m:
        return m
    return MatchResult(False, differences=tuple(term_differences(derived, recorded)))


def determinant_evidence() -> tuple[bool, bool]:
    """Whether the printed and the used third entry reproduce the recorded
    determinant -1/(r^4 sin^2 theta); (printed_ok, used_ok)."""
    met = schwarzschild_metric()
    want = eq_parser.parse(_SCHWARZSCHILD_TEXT.replace(
        "eq: Psi = r^2*sin(theta);",
        "eq: Psi = -r^(-4)*sin(theta)^(-2);")).equation.rhs.to_poly()

    def det_with(g33_text: str) -> P.Poly:
        d = eq_parser.parse(_SCHWARZSCHILD_TEXT.replace(USED_G33, g33_text))
        return Metric(d.coordinates, d.metrics["g"]).determinant_poly()

    printed_ok = not P.reduce_inverses(
        P.poly_sub(det_with(PRINTED_G33), want))
    used_ok = not P.reduce_inverses(P.poly_sub(met.determinant_poly(), want))
    return printed_ok, used_ok
