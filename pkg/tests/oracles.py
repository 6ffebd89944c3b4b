"""Independent expected-value computations for the derived test cases.

Every function here recomputes an expected value from plain Python, numpy,
or a hand-written formula, so tests compare two genuinely different routes
to the same number. The only engine imports are immutable node classes
needed to walk expression trees; no engine algorithm is reused.
"""

from __future__ import annotations

import math

import numpy as np

# SI values used by the regime example (CODATA rounding is irrelevant at
# the precision the classification needs)
HBAR_SI = 1.054571817e-34
ELECTRON_MASS_SI = 9.1093837015e-31


# ---------------------------------------------------------------- sampling
# A fixed polynomial field: Psi(coords) = product over coords of
# (a_c + b_c*x_c + c_c*x_c^2). Closed-form partial derivatives, so the
# sampler differentiates by hand instead of through the engine.

class QuadraticField:
    def __init__(self, coeffs: dict[str, tuple[complex, complex, complex]]):
        self.coeffs = dict(coeffs)

    def _factor(self, name: str, x: float, order: int) -> complex:
        a, b, c = self.coeffs.get(name, (1.0, 0.0, 0.0))
        if order == 0:
            return a + b * x + c * x * x
        if order == 1:
            return b + 2 * c * x
        if order == 2:
            return 2 * c
        return 0.0

    def value(self, derivs, coords) -> complex:
        orders = dict(derivs or ())
        out = 1.0 + 0.0j
        for name in set(self.coeffs) | set(orders):
            out *= self._factor(name, float(coords.get(name, 0.0)),
                                int(orders.get(name, 0)))
        return out

    def sampler(self):
        return lambda derivs, coords: self.value(derivs, coords)


def default_field() -> QuadraticField:
    return QuadraticField({
        "t": (1.0 + 0.3j, 0.7, -0.2j),
        "x": (1.1, 2.0, 3.0 + 0.5j),
        "y": (0.9 - 0.1j, -0.4, 0.6),
        "z": (1.3, 0.2j, -0.5),
    })


def log_square_value(field: QuadraticField, b: complex, coords,
                     axes=("x", "y", "z")) -> complex:
    """Direct evaluation of B^2 * (grad Psi)^2 / Psi^2 at one point."""
    psi = field.value((), coords)
    total = 0.0j
    for ax in axes:
        d = field.value(((ax, 1),), coords)
        total += d * d
    return b * b * total / (psi * psi)


# ----------------------------------------------------------- curved metric
# Hand-written Schwarzschild lower metric, r_g symbolic -> plain closures.

def schwarzschild_lower(rg: float):
    return (
        lambda t, r, th, ph: 1.0 - rg / r,
        lambda t, r, th, ph: -1.0 / (1.0 - rg / r),
        lambda t, r, th, ph: -r * r,
        lambda t, r, th, ph: -r * r * math.sin(th) ** 2,
    )


def fd_christoffel(rg: float, point: tuple[float, float, float, float],
                   l: int, j: int, k: int, h: float = 1e-5) -> float:
    """Gamma^l_{jk} = (1/2) g^{ll} (d_j g_{lk} + d_k g_{lj} - d_l g_{jk})
    with every metric derivative taken by central differences."""
    lower = schwarzschild_lower(rg)

    def g(idx: int, p) -> float:
        return lower[idx](*p)

    def dg(idx: int, wrt: int, p) -> float:
        lo = list(p)
        hi = list(p)
        lo[wrt] -= h
        hi[wrt] += h
        return (g(idx, hi) - g(idx, lo)) / (2 * h)

    # diagonal metric: g_{lk} nonzero only for l == k
    term = 0.0
    if l == k:
        term += dg(l, j, point)
    if l == j:
        term += dg(l, k, point)
    if j == k:
        term -= dg(j, l, point)
    g_ll = g(l, point)
    return 0.5 * term / g_ll


def radial_coefficient(rg: float, r: float) -> float:
    """Hand expansion of (1/r^2) d/dr [r^2 (1 - rg/r)] = 2/r - rg/r^2."""
    return 2.0 / r - rg / r ** 2


def recorded_radial_coefficient(rg: float, r: float) -> float:
    """The recorded display (2/r)(1 - (3/2) rg/r)."""
    return (2.0 / r) * (1.0 - 1.5 * rg / r)


# ------------------------------------------------------------ spin algebra
# Standard Pauli and Dirac matrices, hard-coded numerically.

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def numeric_alpha() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    out = []
    for s in SIGMA:
        m = np.zeros((4, 4), dtype=complex)
        m[:2, 2:] = s
        m[2:, :2] = s
        out.append(m)
    return tuple(out)


def numeric_beta() -> np.ndarray:
    return np.diag([1, 1, -1, -1]).astype(complex)


def printed_alpha3() -> np.ndarray:
    """The misprinted third matrix: sigma_y in both off-diagonal blocks."""
    m = np.zeros((4, 4), dtype=complex)
    m[:2, 2:] = SIGMA[2]
    m[2:, :2] = SIGMA[1]
    return m


def dagger_square_value(p: tuple[float, float, float], m: float) -> np.ndarray:
    alpha = numeric_alpha()
    h = sum(a * pc for a, pc in zip(alpha, p)) + numeric_beta() * m
    return h.conj().T @ h


# --------------------------------------------------------------- numerics

def free_gaussian_variance(sigma0: float, t: float, hbar: float,
                           m: float) -> float:
    return sigma0 ** 2 + (hbar * t / (2 * m * sigma0)) ** 2


def box_ground_energy(length: float, hbar: float, m: float) -> float:
    return (math.pi * hbar / length) ** 2 / (2 * m)


def box_ground_profile(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    length = hi - lo
    psi = np.sqrt(2.0 / length) * np.sin(math.pi * (x - lo) / length)
    return psi.astype(complex)


def harmonic_ground_variance(hbar: float, m: float, omega: float) -> float:
    return hbar / (2 * m * omega)


def plane_wave_averaged_pair(k: float, hbar: float, m: float) -> tuple[float, float]:
    """Periodic plane-wave segment: both averaged integrands are constant,
    so the time term is -hbar*omega and the kinetic term hbar^2 k^2 / 2m."""
    omega = hbar * k * k / (2 * m)
    return (-hbar * omega, hbar ** 2 * k ** 2 / (2 * m))


def electron_box_regime() -> tuple[float, str]:
    """Electron in a 1 Angstrom box. Crossing time at the ground-state
    speed v = pi*hbar/(m*L) gives p = m*L/T = pi*hbar/L and wavelength
    lam = hbar/p = L/pi, so the ratio lam/L = 1/pi sits in the marginal
    band (0.01 < 1/pi < 1)."""
    m = ELECTRON_MASS_SI
    length = 1e-10
    v = math.pi * HBAR_SI / (m * length)
    t = length / v
    p = m * length / t
    lam = HBAR_SI / p
    ratio = lam / length
    regime = "particle" if ratio < 0.01 else ("wave" if ratio > 1 else "marginal")
    return ratio, regime


# ------------------------------------------------- independent AST walker
# Structural evaluation of an expression tree using plain complex
# arithmetic. Understands exactly the node shapes the canonical-form
# invariant allows derivatives on (field/param leaves), which is all the
# random-expression strategy generates.

def walk_eval(e, coords: dict[str, float], params: dict[str, complex],
              fields) -> complex:
    from hj2wave.expr import (Const, Deriv, FieldRef, ParamRef, Power,
                              Product, Sum, TrigFn)
    from hj2wave.symbols import SymbolKind

    if isinstance(e, Const):
        return complex(e.value)
    if isinstance(e, Sum):
        return sum((walk_eval(t, coords, params, fields) for t in e.terms), 0j)
    if isinstance(e, Product):
        out = 1 + 0j
        for f in e.factors:
            out *= walk_eval(f, coords, params, fields)
        return out
    if isinstance(e, Power):
        return walk_eval(e.base, coords, params, fields) ** e.exponent
    if isinstance(e, TrigFn):
        x = coords[e.coord.name]
        return complex(math.sin(x) if e.fn == "sin" else math.cos(x))
    if isinstance(e, Deriv):
        leaf = e.target
        derivs = ((e.coord.name, e.order),)
        while isinstance(leaf, Deriv):
            derivs = derivs + ((leaf.coord.name, leaf.order),)
            leaf = leaf.target
        merged: dict[str, int] = {}
        for c, o in derivs:
            merged[c] = merged.get(c, 0) + o
        mi = tuple(sorted(merged.items()))
        sym = leaf.symbol
        if sym.kind is SymbolKind.FIELD:
            v = fields[sym.name](mi, coords)
            return v.conjugate() if sym.conjugated else v
        fn = params[sym.name]
        return complex(fn(mi, coords))
    if isinstance(e, FieldRef):
        v = fields[e.symbol.name]((), coords)
        return v.conjugate() if e.symbol.conjugated else v
    if isinstance(e, ParamRef):
        sym = e.symbol
        if sym.kind is SymbolKind.COORDINATE:
            return complex(coords[sym.name])
        v = params[sym.name]
        if callable(v):
            return complex(v((), coords))
        v = complex(v)
        return v.conjugate() if sym.conjugated else v
    raise TypeError(f"walker does not understand {type(e).__name__}")
