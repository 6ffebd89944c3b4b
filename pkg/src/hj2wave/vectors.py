"""Component-tuple vector calculus on expression trees.

A vector is a plain tuple of Expr components aligned with an ordered tuple
of coordinate Symbols. Nothing here canonicalizes; comparisons happen at
the equation layer.
"""

from __future__ import annotations

from .errors import InvalidCoordinate
from .expr import Deriv, Expr, Sum, Product, as_expr
from .symbols import Symbol, SymbolKind

Vec = tuple  # tuple[Expr, ...]


def _check_coords(coords: tuple[Symbol, ...]):
    for c in coords:
        if c.kind is not SymbolKind.COORDINATE:
            raise InvalidCoordinate(f"{c.name!r} is not a coordinate")


def grad(e: Expr, coords: tuple[Symbol, ...]) -> Vec:
    _check_coords(coords)
    return tuple(Deriv(e, c) for c in coords)


def div(v: Vec, coords: tuple[Symbol, ...]) -> Expr:
    _check_coords(coords)
    if len(v) != len(coords):
        raise ValueError("component count does not match coordinates")
    return Sum(tuple(Deriv(as_expr(comp), c) for comp, c in zip(v, coords)))


def lap(e: Expr, coords: tuple[Symbol, ...]) -> Expr:
    return div(grad(e, coords), coords)


def dot(a: Vec, b: Vec) -> Expr:
    if len(a) != len(b):
        raise ValueError("dot of vectors with different lengths")
    return Sum(tuple(Product((as_expr(x), as_expr(y))) for x, y in zip(a, b)))


def scale(c, v: Vec) -> Vec:
    ce = as_expr(c)
    return tuple(Product((ce, as_expr(x))) for x in v)


def add(a: Vec, b: Vec) -> Vec:
    if len(a) != len(b):
        raise ValueError("sum of vectors with different lengths")
    return tuple(Sum((as_expr(x), as_expr(y))) for x, y in zip(a, b))


def sub(a: Vec, b: Vec) -> Vec:
    return add(a, tuple(-as_expr(y) for y in b))


def cross(a: Vec, b: Vec) -> Vec:
    if len(a) != 3 or len(b) != 3:
        raise ValueError("cross product needs three components")
    ax, ay, az = (as_expr(x) for x in a)
    bx, by, bz = (as_expr(x) for x in b)
    return (ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx)


def curl(v: Vec, coords: tuple[Symbol, ...]) -> Vec:
    _check_coords(coords)
    if len(v) != 3 or len(coords) != 3:
        raise ValueError("curl needs three components over three coordinates")
    vx, vy, vz = (as_expr(x) for x in v)
    x, y, z = coords
    return (
        Deriv(vz, y) - Deriv(vy, z),
        Deriv(vx, z) - Deriv(vz, x),
        Deriv(vy, x) - Deriv(vx, y),
    )


def adv(v: Vec, w: Vec, coords: tuple[Symbol, ...]) -> Vec:
    """(v . nabla) w, componentwise."""
    _check_coords(coords)
    if len(v) != len(coords) or len(w) != len(coords):
        raise ValueError("component count does not match coordinates")
    out = []
    for comp in w:
        out.append(Sum(tuple(
            Product((as_expr(vj), Deriv(as_expr(comp), cj)))
            for vj, cj in zip(v, coords))))
    return tuple(out)
