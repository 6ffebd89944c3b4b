"""Exact matrix algebra for the first-order factorization step.

Everything here is over Gaussian rationals so the anticommutation checks
and the dagger-square expansion are exact, not floating point. The one
numeric helper (plane-wave spectrum) uses numpy and is meant for the
desk-scale verification harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import poly as P
from .expr import (Expr, canonicalize, const as expr_const, differentiate,
                   is_zero as expr_is_zero, ref)
from .rational import GaussianRational, ONE, ZERO
from .symbols import Symbol, constant, coordinate

Matrix = tuple[tuple[GaussianRational, ...], ...]

_G = GaussianRational.of


def matrix(rows: Sequence[Sequence]) -> Matrix:
    out = []
    width = len(rows[0])
    for row in rows:
        if len(row) != width:
            raise ValueError("ragged matrix")
        out.append(tuple(GaussianRational.coerce(x) if not isinstance(x, GaussianRational)
                         else x for x in row))
    return tuple(out)


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if r == c else ZERO for c in range(n)) for r in range(n))


def zero(n: int) -> Matrix:
    return tuple(tuple(ZERO for _ in range(n)) for _ in range(n))


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(c: GaussianRational, a: Matrix) -> Matrix:
    return tuple(tuple(c * x for x in row) for row in a)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n, k, m = len(a), len(b), len(b[0])
    if len(a[0]) != k:
        raise ValueError("shape mismatch")
    return tuple(
        tuple(sum((a[r][j] * b[j][c] for j in range(k)), ZERO) for c in range(m))
        for r in range(n))


def dagger(a: Matrix) -> Matrix:
    n, m = len(a), len(a[0])
    return tuple(tuple(a[c][r].conjugate() for c in range(n)) for r in range(m))


def anticommutator(a: Matrix, b: Matrix) -> Matrix:
    return mat_add(mat_mul(a, b), mat_mul(b, a))


def is_zero(a: Matrix) -> bool:
    return all(x == ZERO for row in a for x in row)


def block4(tl: Matrix, tr: Matrix, bl: Matrix, br: Matrix) -> Matrix:
    rows = []
    for r in range(2):
        rows.append(tuple(tl[r]) + tuple(tr[r]))
    for r in range(2):
        rows.append(tuple(bl[r]) + tuple(br[r]))
    return tuple(rows)


def pauli_matrices() -> tuple[Matrix, Matrix, Matrix]:
    sx = matrix([[0, 1], [1, 0]])
    sy = ((ZERO, _G(0, -1)), (_G(0, 1), ZERO))
    sz = matrix([[1, 0], [0, -1]])
    return sx, sy, sz


@dataclass(frozen=True)
class MatrixSet:
    alpha: tuple[Matrix, Matrix, Matrix]
    beta: Matrix


def dirac_matrices() -> MatrixSet:
    sx, sy, sz = pauli_matrices()
    z2, i2 = zero(2), identity(2)
    alpha = tuple(block4(z2, s, s, z2) for s in (sx, sy, sz))
    beta = block4(i2, z2, z2, mat_scale(_G(-1), i2))
    return MatrixSet(alpha, beta)


def printed_dirac_matrices() -> MatrixSet:
    """The recorded display of the third matrix pairs different spin blocks
    off the diagonal; kept verbatim so the check below can show exactly
    which identities it breaks."""
    sx, sy, sz = pauli_matrices()
    z2, i2 = zero(2), identity(2)
    a1 = block4(z2, sx, sx, z2)
    a2 = block4(z2, sy, sy, z2)
    a3 = block4(z2, sz, sy, z2)
    beta = block4(i2, z2, z2, mat_scale(_G(-1), i2))
    return MatrixSet((a1, a2, a3), beta)


@dataclass(frozen=True)
class CliffordReport:
    identities: tuple[tuple[str, bool], ...]

    @property
    def ok(self) -> bool:
        return all(good for _, good in self.identities)

    def failures(self) -> tuple[str, ...]:
        return tuple(name for name, good in self.identities if not good)


def clifford_check(mats: MatrixSet) -> CliffordReport:
    """The ten identities that make the squared first-order operator
    collapse to a scalar: unit squares and pairwise anticommutation."""
    a1, a2, a3 = mats.alpha
    b = mats.beta
    n = len(b)
    eye = identity(n)
    named = [("a1", a1), ("a2", a2), ("a3", a3)]
    out = []
    for nm, m in named + [("b", b)]:
        out.append((f"{nm}^2 = 1", mat_mul(m, m) == eye))
    for i in range(3):
        for j in range(i + 1, 3):
            out.append((f"{{{named[i][0]}, {named[j][0]}}} = 0",
                        is_zero(anticommutator(named[i][1], named[j][1]))))
    for nm, m in named:
        out.append((f"{{{nm}, b}} = 0", is_zero(anticommutator(m, b))))
    return CliffordReport(tuple(out))


def dagger_square(pairs: Sequence[tuple[Matrix, P.Poly]]) -> list[list[P.Poly]]:
    """Expand (sum_a M_a F_a)^dagger (sum_b M_b F_b) into a matrix of
    polynomials, conjugating the scalar factors exactly."""
    n = len(pairs[0][0])
    out = [[P.poly_zero() for _ in range(n)] for _ in range(n)]
    for ma, fa in pairs:
        fa_c = P.poly_conjugate(fa)
        for mb, fb in pairs:
            coeff = P.poly_mul(fa_c, fb)
            mam = mat_mul(dagger(ma), mb)
            for r in range(n):
                for c in range(n):
                    if mam[r][c] != ZERO:
                        out[r][c] = P.poly_add(
                            out[r][c], P.poly_scale(coeff, mam[r][c]))
    return out


def scalar_of_identity(matpoly: list[list[P.Poly]]) -> Optional[P.Poly]:
    """The polynomial s when matpoly == s*I, else None."""
    n = len(matpoly)
    s = matpoly[0][0]
    for r in range(n):
        for c in range(n):
            want = s if r == c else P.poly_zero()
            if not P.poly_equal(matpoly[r][c], want):
                return None
    return s


def rational_square_check(p: tuple, m) -> bool:
    """(alpha.p + beta m)^dagger (alpha.p + beta m) == (p.p + m^2) I at
    exact rational component values. Fraction arithmetic end to end, so a
    True is an identity at that point, not a small residual."""
    mats = dirac_matrices()
    vals = [GaussianRational.of(x) for x in (*p, m)]
    pairs = [(a, P.poly_const(v)) for a, v in zip(mats.alpha, vals[:3])]
    pairs.append((mats.beta, P.poly_const(vals[3])))
    s = scalar_of_identity(dagger_square(pairs))
    if s is None:
        return False
    want = vals[0] * vals[0] + vals[1] * vals[1] \
        + vals[2] * vals[2] + vals[3] * vals[3]
    return P.poly_equal(s, P.poly_const(want))


@dataclass(frozen=True)
class PlaneWaveReport:
    momentum: tuple[float, float, float]
    mass: float
    energies: tuple[float, ...]
    expected: float
    square_residual: float
    eigen_residual: float
    degeneracies_ok: bool

    @property
    def ok(self) -> bool:
        return (self.degeneracies_ok and self.square_residual < 1e-12
                and self.eigen_residual < 1e-12)


def _to_complex(a: Matrix) -> np.ndarray:
    return np.array([[float(x.re) + 1j * float(x.im) for x in row]
                     for row in a], dtype=complex)


def plane_wave_spectrum(p: tuple[float, float, float], m: float,
                        mats: Optional[MatrixSet] = None) -> PlaneWaveReport:
    """Spectrum of alpha.p + beta*m: two branches at +/- sqrt(p^2 + m^2),
    each twofold, and the operator square must be (p^2 + m^2)*I."""
    mats = mats or dirac_matrices()
    h = sum(_to_complex(a) * pc for a, pc in zip(mats.alpha, p))
    h = h + _to_complex(mats.beta) * m
    e = float(np.sqrt(p[0] ** 2 + p[1] ** 2 + p[2] ** 2 + m ** 2))
    vals, vecs = np.linalg.eigh(h)
    sq = h @ h - e ** 2 * np.eye(4)
    resid = float(np.max(np.abs(sq)))
    eig_resid = float(np.max(np.abs(h @ vecs - vecs * vals)))
    expect = np.array([-e, -e, e, e])
    deg_ok = bool(np.max(np.abs(np.sort(vals) - expect)) < 1e-12 * max(1.0, e))
    return PlaneWaveReport(p, m, tuple(float(v) for v in vals), e, resid,
                           eig_resid, deg_ok)


# ------------------------------------------------------------ spin channel

SPIN_NAMES = ("s1", "s2", "s3")


def spin_vector() -> tuple[Expr, Expr, Expr]:
    """The spin direction as three constant expressions, named to match the
    spin channel of the charged-action catalog entry."""
    return tuple(ref(constant(n)) for n in SPIN_NAMES)


def space_coordinates() -> tuple[Symbol, Symbol, Symbol]:
    return (coordinate("x"), coordinate("y"), coordinate("z"))


def _cross(u: Sequence[Expr], v: Sequence[Expr]) -> tuple[Expr, Expr, Expr]:
    return (u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0])


def _dot(u: Sequence[Expr], v: Sequence[Expr]) -> Expr:
    total: Expr = expr_const(0)
    for a, b in zip(u, v):
        total = total + a * b
    return total


def _divergence(vec: Sequence[Expr], coords: Sequence[Symbol]) -> Expr:
    total: Expr = expr_const(0)
    for comp, c in zip(vec, coords):
        total = total + differentiate(comp, c)
    return total


def _curl(vec: Sequence[Expr], coords: Sequence[Symbol]) \
        -> tuple[Expr, Expr, Expr]:
    def d(i: int, j: int) -> Expr:
        return differentiate(vec[j], coords[i])

    return (d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0))


def pauli_term(a: Sequence[Expr], nu_s: Expr,
               coords: Optional[Sequence[Symbol]] = None) -> Expr:
    """Spin-channel potential -nu_s * div(s x A), expanded.

    `a` is the vector potential as three expressions over `coords` (default
    x, y, z); the spin direction is the constant triple from spin_vector().
    Any charge factor belongs inside `a` or `nu_s`, chosen by the caller.
    """
    coords = tuple(coords) if coords is not None else space_coordinates()
    return canonicalize(-(nu_s * _divergence(_cross(spin_vector(), a),
                                             coords)))


def curl_coupling(a: Sequence[Expr], nu_s: Expr,
                  coords: Optional[Sequence[Symbol]] = None) -> Expr:
    """Moment-dot-curl potential -nu_s * (s . curl A).

    For a constant spin direction div(s x A) = -(s . curl A), so this is
    exactly -pauli_term(a, nu_s). The recorded chain treats the two shapes
    as one potential; keeping them separate here makes the sign and the
    placement of the charge factor explicit instead of implicit.
    """
    coords = tuple(coords) if coords is not None else space_coordinates()
    return canonicalize(-(nu_s * _dot(spin_vector(), _curl(a, coords))))


def divergence_curl_identity(a: Sequence[Expr],
                             coords: Optional[Sequence[Symbol]] = None) \
        -> bool:
    """div(s x A) + s . curl(A) == 0 exactly, for the constant spin triple.

    This is the identity behind equating the two potential shapes. It holds
    verbatim only when any charge factor scales A in both shapes at once;
    scaling one side alone breaks the equality by that factor.
    """
    coords = tuple(coords) if coords is not None else space_coordinates()
    s = spin_vector()
    return expr_is_zero(_divergence(_cross(s, a), coords)
                        + _dot(s, _curl(a, coords)))
