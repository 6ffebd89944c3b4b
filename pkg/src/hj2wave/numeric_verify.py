"""Finite-difference verification of the derived wave equations.

Desk-scale numerics only: one spatial dimension for the time evolution,
small sample lattices for the analytic substitutions, and a two-coordinate
radial/polar grid for the gravitational operator. Everything is float64;
the exact claims live in the symbolic modules and this one measures how
well the discretized statements track them.

Discretization policy: second-order central stencils throughout, with the
fourth-order variants reserved for the oracle comparisons of
manufactured_solution_residual. Quadrature is trapezoidal, matching the
zero-boundary assumption of the weak-form derivation. Logarithms of the
field use the principal branch continued nearest-neighbor along the grid;
points with |Psi| below 1e-6 of the peak are masked from any quantity that
divides by the field.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from . import curved_space
from . import poly as P
from . import reference_forms as rf
from .equations import Equation
from .errors import (
    DispersionViolated,
    LinearSolveFailure,
    SingularCoefficient,
    ZeroAmplitude,
)

AMPLITUDE_MASK = 1e-6
BOUNDARY_BUFFER = 8  # grid cells next to each wall excluded from residual reports

Trial = Callable[[P.MultiIndex, Mapping[str, float]], complex]


def _trapz(y: np.ndarray, dx: float) -> complex:
    if len(y) < 2:
        return 0.0
    return complex(dx * (y.sum() - 0.5 * (y[0] + y[-1])))


# ------------------------------------------------------------------- states


@dataclass(frozen=True)
class Grid1D:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("need at least 8 points")
        if not self.hi > self.lo:
            raise ValueError("empty interval")

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class WaveState:
    """A sampled field with the evolution parameters it travels with.

    The boundary values are pinned to zero: that is the boundary condition
    the weak-form reduction assumed, and the evolution below never touches
    the two wall points.
    """

    grid: Grid1D
    psi: np.ndarray
    time: float = 0.0
    dt: float = 1e-3
    hbar: float = 1.0
    m: float = 1.0
    potential: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.psi) != self.grid.n:
            raise ValueError("amplitude count does not match the grid")
        if self.psi[0] != 0 or self.psi[-1] != 0:
            raise ValueError("boundary values must be zero")
        if self.potential is not None and len(self.potential) != self.grid.n:
            raise ValueError("potential sampled on a different grid")
        if self.dt == 0:
            raise ValueError("zero time step")

    def norm_sq(self) -> float:
        return float(_trapz(np.abs(self.psi) ** 2, self.grid.dx).real)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


def gaussian_state(grid: Grid1D, sigma0: float, center: float = 0.0,
                   kick: float = 0.0, hbar: float = 1.0, m: float = 1.0,
                   dt: float = 1e-3,
                   potential: Optional[np.ndarray] = None) -> WaveState:
    x = grid.points()
    psi = np.exp(-(x - center) ** 2 / (4 * sigma0 ** 2) + 1j * kick * x)
    psi[0] = psi[-1] = 0.0
    psi /= math.sqrt(float(_trapz(np.abs(psi) ** 2, grid.dx).real))
    return WaveState(grid, psi, 0.0, dt, hbar, m, potential)


def plane_wave_state(grid: Grid1D, k: float, hbar: float = 1.0,
                     m: float = 1.0, dt: float = 1e-3) -> WaveState:
    """exp(ikx) sampled on the grid with the wall values forced to zero.
    The truncation contaminates a few cells next to each wall; interior
    quantities must exclude a buffer (see continuity_residual)."""
    psi = np.exp(1j * k * grid.points())
    psi[0] = psi[-1] = 0.0
    return WaveState(grid, psi, 0.0, dt, hbar, m, None)


def free_gaussian(x: np.ndarray, t: float, sigma0: float, kick: float = 0.0,
                  hbar: float = 1.0, m: float = 1.0,
                  center: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Closed form of the freely spreading packet and its space derivative.

    psi(x,0) = (2 pi sigma0^2)^(-1/4) exp(ik x - (x-c)^2/(4 sigma0^2));
    at time t the complex width is sigma0^2 (1 + i tau), tau = hbar t/(2 m
    sigma0^2), the center rides at the group velocity hbar k/m, and the
    measured density variance is sigma0^2 (1 + tau^2).
    """
    tau = hbar * t / (2 * m * sigma0 ** 2)
    w = 1 + 1j * tau
    xc = x - center - hbar * kick * t / m
    amp = (2 * math.pi * sigma0 ** 2) ** -0.25 / np.sqrt(w)
    phase = 1j * kick * (x - center) - 1j * hbar * kick ** 2 * t / (2 * m)
    psi = amp * np.exp(phase - xc ** 2 / (4 * sigma0 ** 2 * w))
    dpsi = psi * (1j * kick - xc / (2 * sigma0 ** 2 * w))
    return psi, dpsi


def measured_variance(state: WaveState) -> float:
    x = state.grid.points()
    rho = state.density()
    total = float(_trapz(rho, state.grid.dx).real)
    mean = float(_trapz(x * rho, state.grid.dx).real) / total
    return float(_trapz((x - mean) ** 2 * rho, state.grid.dx).real) / total


def discrete_ground_state(grid: Grid1D, hbar: float = 1.0, m: float = 1.0,
                          potential: Optional[np.ndarray] = None,
                          dt: float = 1e-3) -> tuple[WaveState, float]:
    """Lowest eigenpair of the interior three-point Hamiltonian, embedded
    with the zero walls. Under the trapezoidal stepper an eigenvector only
    turns by a phase, which is what the stationarity checks lean on."""
    h2 = grid.dx ** 2
    u = np.zeros(grid.n) if potential is None else np.asarray(potential, float)
    diag = hbar ** 2 / (m * h2) + u[1:-1]
    off = np.full(grid.n - 3, -hbar ** 2 / (2 * m * h2))
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    psi = np.zeros(grid.n, dtype=complex)
    psi[1:-1] = vecs[:, 0]
    psi /= math.sqrt(float(_trapz(np.abs(psi) ** 2, grid.dx).real))
    return WaveState(grid, psi, 0.0, dt, hbar, m, potential), float(vals[0])


# ------------------------------------------------------------ time stepping


def _hamiltonian_bands(state: WaveState) -> tuple[np.ndarray, np.ndarray]:
    h2 = state.grid.dx ** 2
    u = (np.zeros(state.grid.n) if state.potential is None
         else np.asarray(state.potential, float))
    diag = state.hbar ** 2 / (state.m * h2) + u[1:-1]
    off = -state.hbar ** 2 / (2 * state.m * h2)
    return diag, np.full(state.grid.n - 3, off)


def _cn_matrices(state: WaveState, dt: float):
    diag, off = _hamiltonian_bands(state)
    ni = len(diag)
    z = 1j * dt / (2 * state.hbar)
    ab = np.zeros((3, ni), dtype=complex)
    ab[1] = 1.0 + z * diag
    ab[0, 1:] = z * off
    ab[2, :-1] = z * off
    b_diag = 1.0 - z * diag
    b_off = -z * off
    return ab, b_diag, b_off


def _cn_apply(state: WaveState, dt: float, steps: int) -> np.ndarray:
    ab, b_diag, b_off = _cn_matrices(state, dt)
    v = state.psi[1:-1].astype(complex)
    for _ in range(steps):
        rhs = b_diag * v
        rhs[:-1] += b_off * v[1:]
        rhs[1:] += b_off * v[:-1]
        try:
            v = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:
            raise LinearSolveFailure(f"trapezoidal solve failed: {exc}") from exc
    out = np.zeros(state.grid.n, dtype=complex)
    out[1:-1] = v
    return out


def crank_nicolson_evolve(state: WaveState, steps: int) -> tuple[WaveState, float]:
    """Implicit trapezoidal evolution; returns the final state and the
    relative drift of the squared norm (zero for the zero state)."""
    if steps < 0:
        raise ValueError("negative step count")
    stability = abs(state.dt) * state.hbar / (state.m * state.grid.dx ** 2)
    if stability > 10:
        raise ValueError(f"time step too coarse for the grid ({stability:.1f})")
    psi = _cn_apply(state, state.dt, steps)
    out = WaveState(state.grid, psi, state.time + steps * state.dt,
                    state.dt, state.hbar, state.m, state.potential)
    n0 = state.norm_sq()
    if n0 == 0.0:
        return out, 0.0
    return out, abs(out.norm_sq() - n0) / n0


def time_density_derivative(state: WaveState) -> np.ndarray:
    """d|Psi|^2/dt by one trapezoidal step forward and one backward,
    centered."""
    plus = _cn_apply(state, state.dt, 1)
    minus = _cn_apply(state, -state.dt, 1)
    return (np.abs(plus) ** 2 - np.abs(minus) ** 2) / (2 * state.dt)


def _time_psi_derivative(state: WaveState) -> np.ndarray:
    plus = _cn_apply(state, state.dt, 1)
    minus = _cn_apply(state, -state.dt, 1)
    return (plus - minus) / (2 * state.dt)


# ------------------------------------------------------------- plane waves


@dataclass(frozen=True)
class PlaneWaveSpec:
    """The exponential trial with wavevector k and frequency omega.

    gamma and beta are the integration constants of the exponent written as
    exp(i (gamma t - beta . x)); for this parametrization gamma = -omega
    and beta = -k, so they are exposed as derived views.
    """

    k: tuple[float, ...]
    omega: float
    amplitude: float = 1.0

    @property
    def gamma(self) -> float:
        return -self.omega

    @property
    def beta(self) -> tuple[float, ...]:
        return tuple(-kc for kc in self.k)

    def wavenumber_sq(self) -> float:
        return sum(kc ** 2 for kc in self.k)


def _plane_wave_sampler(spec: PlaneWaveSpec, time_coord: str,
                        space_coords: Sequence[str]):
    kmap = dict(zip(space_coords, spec.k))

    def sample(derivs: P.MultiIndex, point: Mapping[str, float]) -> complex:
        phase = -spec.omega * point[time_coord]
        for c, kc in kmap.items():
            phase += kc * point[c]
        val = spec.amplitude * cmath.exp(1j * phase)
        for c, o in derivs:
            if c == time_coord:
                val *= (-1j * spec.omega) ** o
            elif c in kmap:
                val *= (1j * kmap[c]) ** o
            else:
                return 0j
        return val

    return sample


def dispersion_gap(kind: str, spec: PlaneWaveSpec,
                   params: Mapping[str, float]) -> float:
    """How far the spec sits from the frequency the equation demands."""
    hbar = params.get("hbar", 1.0)
    m = params["m"]
    if kind == "schrodinger":
        u = params.get("U", 0.0)
        return abs(hbar * spec.omega
                   - hbar ** 2 * spec.wavenumber_sq() / (2 * m) - u)
    if kind == "klein_gordon":
        return abs(spec.omega ** 2 - spec.wavenumber_sq() - (m / hbar) ** 2)
    raise ValueError(f"unknown kind {kind!r}")


def plane_wave_residual(kind: str, spec: PlaneWaveSpec,
                        params: Mapping[str, float]) -> float:
    """Substitute the exponential trial analytically into the derived
    equation and report the largest |lhs - rhs| over one period of samples
    in time and one wavelength along the propagation direction."""
    hbar = params.get("hbar", 1.0)
    m = params["m"]
    if kind == "schrodinger":
        eq = rf.equation("eq37")
        time_coord, space = "t", ("x", "y", "z")
        u = params.get("U", 0.0)
        env_params: dict = {
            "hbar": hbar, "m": m,
            "U": lambda derivs, _c, _u=u: 0.0 if derivs else _u,
        }
    elif kind == "klein_gordon":
        eq = rf.equation("eq42")
        time_coord, space = "x0", ("x1", "x2", "x3")
        env_params = {"hbar": hbar, "m": m, "e": 0.0}
        for c in ("x0", "x1", "x2", "x3"):
            env_params[f"A_{c}"] = lambda derivs, _c: 0.0
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if len(spec.k) != len(space):
        raise ValueError(f"{kind} takes a {len(space)}-component wavevector")
    p = eq.residual_poly()
    sampler = _plane_wave_sampler(spec, time_coord, space)
    period = 2 * math.pi / abs(spec.omega) if spec.omega else 1.0
    kn = math.sqrt(spec.wavenumber_sq())
    wavelength = 2 * math.pi / kn if kn else 1.0
    khat = [kc / kn if kn else 0.0 for kc in spec.k]
    worst = 0.0
    for ti in range(8):
        for si in range(8):
            s = wavelength * si / 8
            coords = {time_coord: period * ti / 8}
            for c, hc in zip(space, khat):
                coords[c] = hc * s
            env = P.EvalEnv(coords=coords, params=env_params,
                            fields={"Psi": sampler})
            worst = max(worst, abs(P.poly_eval(p, env)))
    return worst


def dispersion_draws(kind: str, count: int = 20,
                     seed: int = 20260819) -> list[tuple[float, float]]:
    """Random parameter draws; each entry is (residual at the matched
    frequency, residual at a detuned control)."""
    rng = np.random.default_rng(seed if kind == "schrodinger" else seed + 1)
    out = []
    for _ in range(count):
        hbar = float(rng.uniform(0.5, 2.0))
        m = float(rng.uniform(0.5, 2.0))
        k = tuple(float(v) for v in rng.uniform(0.5, 2.0, size=3))
        ksq = sum(v ** 2 for v in k)
        if kind == "schrodinger":
            u = float(rng.uniform(0.5, 2.0))
            params = {"hbar": hbar, "m": m, "U": u}
            omega = (hbar ** 2 * ksq / (2 * m) + u) / hbar
        else:
            params = {"hbar": hbar, "m": m}
            omega = math.sqrt(ksq + (m / hbar) ** 2)
        good = plane_wave_residual(kind, PlaneWaveSpec(k, omega), params)
        bad = plane_wave_residual(
            kind, PlaneWaveSpec(k, omega + 1.0 / hbar), params)
        out.append((good, bad))
    return out


# ------------------------------------------------------------- reports


@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    l2: float
    convergence_order: Optional[float] = None
    excluded: int = 0

    def __post_init__(self):
        if self.max_abs < 0 or self.l2 < 0:
            raise ValueError("residual magnitudes cannot be negative")

    def with_order(self, order: float) -> "ResidualReport":
        return ResidualReport(self.max_abs, self.l2, order, self.excluded)


def richardson_order(coarse: ResidualReport, fine: ResidualReport) -> float:
    if fine.max_abs == 0:
        return math.inf
    return math.log2(coarse.max_abs / fine.max_abs)


# ----------------------------------------------------------- field calculus


def _amplitude_mask(psi: np.ndarray) -> np.ndarray:
    peak = float(np.max(np.abs(psi))) if len(psi) else 0.0
    if peak == 0.0:
        raise ZeroAmplitude("the field vanishes everywhere")
    return np.abs(psi) >= AMPLITUDE_MASK * peak


def unwrapped_phase(psi: np.ndarray) -> np.ndarray:
    """Principal-branch argument continued along the grid. Masked points
    inherit their nearest unmasked neighbor's branch, which keeps the
    continuation defined without trusting their noisy angles."""
    return np.unwrap(np.angle(psi))


def log_ratio_conj(psi: np.ndarray) -> np.ndarray:
    """ln(Psi*/Psi) = -2i * (unwrapped phase)."""
    return -2j * unwrapped_phase(psi)


def continuity_residual(state: WaveState,
                        buffer: int = BOUNDARY_BUFFER) -> ResidualReport:
    """Pointwise defect of d|Psi|^2/dt = (hbar/2im) div[|Psi|^2 grad
    ln(Psi*/Psi)] with central stencils, a trapezoidal-step time
    derivative, and the low-amplitude mask. buffer cells next to each wall
    are dropped; states that do not genuinely vanish at the walls (a
    truncated plane wave) need a wider buffer since their wall defect
    leaks inward at the implicit stencil's decay rate."""
    h = state.grid.dx
    rho = state.density()
    drho_dt = time_density_derivative(state)
    mask = _amplitude_mask(state.psi)
    ln_ratio = log_ratio_conj(state.psi)
    flux = np.zeros_like(ln_ratio)
    flux[1:-1] = rho[1:-1] * (ln_ratio[2:] - ln_ratio[:-2]) / (2 * h)
    div = np.zeros_like(flux)
    div[2:-2] = (flux[3:-1] - flux[1:-3]) / (2 * h)
    resid = drho_dt - (state.hbar / (2j * state.m)) * div
    lo, hi = buffer, state.grid.n - buffer
    if hi - lo < 4:
        raise ValueError("buffer leaves no interior")
    keep = mask.copy()
    keep[:lo] = False
    keep[hi:] = False
    excluded = int(np.count_nonzero(~mask[lo:hi]))
    vals = np.abs(resid[keep])
    if len(vals) == 0:
        raise ZeroAmplitude("no usable interior points")
    return ResidualReport(float(vals.max()),
                          float(np.sqrt(np.mean(vals ** 2))),
                          excluded=excluded)


def averaged_action_terms(state: WaveState) -> tuple[complex, complex, complex]:
    """The three weighted averages whose sum the boundary-free identity
    sends to zero: <dS/dt>, (1/2m)<|grad S|^2>, <U>, all with weight
    |Psi|^2 and S = (hbar/i) ln Psi.

    The middle term is summed over the staggered midpoints: that quadrature
    is the exact summation-by-parts partner of the three-point Laplacian
    driving the time derivative, so the discrete identity closes to the
    accuracy of the time step instead of the grid spacing.
    """
    h = state.grid.dx
    dpsi_dt = _time_psi_derivative(state)
    i1 = complex(-1j * state.hbar
                 * _trapz(np.conj(state.psi) * dpsi_dt, h))
    steps = np.abs(np.diff(state.psi)) ** 2
    i2 = complex(state.hbar ** 2 / (2 * state.m) * steps.sum() / h)
    if state.potential is None:
        i3 = 0j
    else:
        i3 = complex(_trapz(state.potential * state.density(), h))
    return i1, i2, i3


def averaged_hj_residual(state: WaveState) -> float:
    """|<dS/dt> + (1/2m)<|grad S|^2> + <U>| for a unit-norm state."""
    if abs(state.norm_sq() - 1.0) > 1e-8:
        raise ValueError("state must be normalized")
    i1, i2, i3 = averaged_action_terms(state)
    return abs(i1 + i2 + i3)


def phase_gradient_crosscheck(psi: np.ndarray, dpsi: np.ndarray,
                              dx: float, hbar: float = 1.0) -> float:
    """Largest gap between Re[(hbar/i) dPsi/Psi] and hbar times the central
    difference of the unwrapped phase, over unmasked interior points."""
    mask = _amplitude_mask(psi)
    phase = unwrapped_phase(psi)
    fd = (phase[2:] - phase[:-2]) / (2 * dx)
    lhs = np.real(-1j * hbar * dpsi[1:-1] / psi[1:-1])
    keep = mask[1:-1] & mask[2:] & mask[:-2]
    if not keep.any():
        raise ZeroAmplitude("no usable interior points")
    return float(np.max(np.abs(lhs[keep] - hbar * fd[keep])))


# ------------------------------------------------------------ massless dual


@dataclass(frozen=True)
class DualCheckReport:
    particle_max_dev: float
    wave_max_dev: float
    relation_max_dev: float
    energy: float
    momentum: tuple[float, float, float]

    @property
    def ok(self) -> bool:
        return max(self.particle_max_dev, self.wave_max_dev,
                   self.relation_max_dev) < 1e-12


def massless_dual_check(k: tuple[float, float, float], omega: float,
                        hbar: float = 1.0, extent: float = 3.0,
                        t_max: float = 2.0) -> DualCheckReport:
    """Both faces of the light-cone action: the linear form -Et + p.x and
    the exponential form exp[-i(omega t - k.x)] must each satisfy
    (dS/dt)^2 = (grad S)^2 on a sample lattice, and (hbar/i) times the
    logarithm of the exponential form must reproduce the linear form with
    E = hbar omega and p = hbar k. The logarithm is multivalued; the
    branch is the one agreeing with the linear form at the first lattice
    point (an integer choice), after which continuity forces every other
    value and the pointwise comparison carries the content."""
    kn = math.sqrt(sum(kc ** 2 for kc in k))
    if abs(omega - kn) > 1e-9 * max(1.0, kn):
        raise DispersionViolated(
            f"omega={omega} is not the magnitude of k (|k|={kn})")
    n_s = max(41, int(4 * kn * extent) + 9)
    n_t = max(17, int(4 * abs(omega) * t_max) + 9)
    s = np.linspace(-extent, extent, n_s)
    t = np.linspace(0.0, t_max, n_t)
    tt, ss = np.meshgrid(t, s, indexing="ij")
    # particle form: constant first derivatives
    e = hbar * omega
    p = tuple(hbar * kc for kc in k)
    psq = sum(pc ** 2 for pc in p)
    particle_dev = float(abs(e ** 2 - psq))
    # wave form on the lattice
    theta = -(omega * tt - kn * ss)
    sw = np.exp(1j * theta)
    dt_sw = -1j * omega * sw
    grad_sq = -(kn ** 2) * sw ** 2
    wave_dev = float(np.max(np.abs(dt_sw ** 2 - grad_sq)))
    # the log relation, branch continued across the lattice
    ang = np.unwrap(np.angle(sw), axis=1)
    ang = np.unwrap(ang, axis=0)
    s_p = -e * tt + hbar * kn * ss
    shift = round((s_p[0, 0] / hbar - ang[0, 0]) / (2 * math.pi))
    ang += 2 * math.pi * shift
    relation_dev = float(np.max(np.abs(hbar * ang - s_p)))
    return DualCheckReport(particle_dev, wave_dev, relation_dev, e,
                           (p[0], p[1], p[2]))


# ------------------------------------------------- manufactured solutions


class SeparableTrial:
    """Product of single-coordinate factors with hand-coded derivatives.

    Each factor maps (value, order) -> the order-th derivative at value.
    Derivatives along undeclared coordinates vanish identically.
    """

    def __init__(self, **factors: Callable[[float, int], complex]):
        self.factors = dict(factors)

    def __call__(self, derivs: P.MultiIndex,
                 point: Mapping[str, float]) -> complex:
        want = {c: 0 for c in self.factors}
        for c, o in derivs:
            if c not in want:
                return 0j
            want[c] = o
        v = 1 + 0j
        for c, f in self.factors.items():
            v *= f(float(point[c]), want[c])
        return v


def exp_decay(scale: float) -> Callable[[float, int], complex]:
    return lambda x, o: (-1.0 / scale) ** o * math.exp(-x / scale)


def offset_cosine(offset: float = 2.0,
                  freq: float = 1.0) -> Callable[[float, int], complex]:
    def f(x: float, o: int) -> complex:
        if o == 0:
            return offset + math.cos(freq * x)
        return freq ** o * math.cos(freq * x + o * math.pi / 2)
    return f


_STENCIL_1 = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1 / 12), (-1, -2 / 3), (1, 2 / 3), (2, -1 / 12)),
}
_STENCIL_2 = {
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    4: ((-2, -1 / 12), (-1, 4 / 3), (0, -5 / 2), (1, 4 / 3), (2, -1 / 12)),
}


def finite_difference_sampler(values: Trial, spacings: Mapping[str, float],
                              order: int = 2) -> Trial:
    """Wrap a field so every derivative request is answered by central
    stencils over its values alone."""
    if order not in _STENCIL_1:
        raise ValueError("stencil order must be 2 or 4")

    def sample(derivs: P.MultiIndex, point: Mapping[str, float]) -> complex:
        derivs = tuple(derivs)
        if not derivs:
            return values((), point)
        (c, o), rest = derivs[0], derivs[1:]
        h = spacings[c]
        if o <= 2:
            table = (_STENCIL_1 if o == 1 else _STENCIL_2)[order]
            power = o
            inner: P.MultiIndex = rest
        else:
            table = _STENCIL_1[order]
            power = 1
            inner = ((c, o - 1), *rest)
        total = 0j
        for offset, w in table:
            q = dict(point)
            q[c] += offset * h
            total += w * sample(inner, q)
        return total / h ** power

    return sample


def manufactured_solution_residual(
        eq: Equation, trial: Trial, grids: Mapping[str, np.ndarray],
        params: Mapping[str, float], order: int = 2) -> ResidualReport:
    """Apply the equation's operator to the trial field by stencils and
    compare against the analytically differentiated trial at every grid
    point. grids maps each coordinate to its sample values; single-value
    arrays pin a coordinate."""
    p = eq.residual_poly()
    spacings = {}
    for c, arr in grids.items():
        arr = np.asarray(arr, dtype=float)
        spacings[c] = float(arr[1] - arr[0]) if len(arr) > 1 else 1.0
    fd = finite_difference_sampler(trial, spacings, order)
    names = sorted(grids)
    mesh = np.meshgrid(*(np.asarray(grids[c], dtype=float) for c in names),
                       indexing="ij")
    devs = []
    for idx in np.ndindex(mesh[0].shape):
        point = {c: float(m[idx]) for c, m in zip(names, mesh)}
        env_fd = P.EvalEnv(coords=point, params=dict(params),
                           fields={"Psi": fd})
        env_exact = P.EvalEnv(coords=point, params=dict(params),
                              fields={"Psi": trial})
        try:
            devs.append(abs(P.poly_eval(p, env_fd) - P.poly_eval(p, env_exact)))
        except ZeroDivisionError as exc:
            raise SingularCoefficient(
                f"coefficient singular at {point}") from exc
    a = np.array(devs)
    return ResidualReport(float(a.max()), float(np.sqrt(np.mean(a ** 2))))


def flat_metric_callables() -> dict[str, Callable]:
    """Inverse-metric coefficient functions diag(1, -1, -1, -1) for the
    generic curved equation, with vanishing derivatives."""

    def const(v: float) -> Callable:
        return lambda derivs, _coords: 0.0 if derivs else v

    return {"g0": const(1.0), "g1": const(-1.0),
            "g2": const(-1.0), "g3": const(-1.0)}


def schwarzschild_metric_callables(rg: float = 1.0) -> dict[str, Callable]:
    """Inverse-metric coefficient functions of the exterior centrally
    symmetric solution on coordinates (x0, x1, x2, x3) = (time, radius,
    polar, azimuth), with first derivatives; the generic curved equation
    never asks for more."""

    def check(derivs):
        total = sum(o for _c, o in derivs)
        if total > 1:
            raise ValueError("coefficient derivatives beyond first order")
        return dict(derivs)

    def g0(derivs, coords):
        d = check(derivs)
        r = coords["x1"]
        if not d:
            return r / (r - rg)
        if d == {"x1": 1}:
            return -rg / (r - rg) ** 2
        return 0.0

    def g1(derivs, coords):
        d = check(derivs)
        r = coords["x1"]
        if not d:
            return -1.0 + rg / r
        if d == {"x1": 1}:
            return -rg / r ** 2
        return 0.0

    def g2(derivs, coords):
        d = check(derivs)
        r = coords["x1"]
        if not d:
            return -(r ** -2)
        if d == {"x1": 1}:
            return 2.0 * r ** -3
        return 0.0

    def g3(derivs, coords):
        d = check(derivs)
        r = coords["x1"]
        th = coords["x2"]
        if not d:
            return -(r ** -2) * math.sin(th) ** -2
        if d == {"x1": 1}:
            return 2.0 * r ** -3 * math.sin(th) ** -2
        if d == {"x2": 1}:
            return 2.0 * r ** -2 * math.cos(th) * math.sin(th) ** -3
        return 0.0

    return {"g0": g0, "g1": g1, "g2": g2, "g3": g3}


def schwarzschild_domain(
        rg: float = 1.0, n_r: int = 256, n_theta: int = 1,
        names: tuple[str, str, str, str] = ("t", "r", "theta", "phi"),
) -> dict[str, np.ndarray]:
    """Sample box outside the horizon: radius in [1.5 rg, 10 rg], polar
    angle kept away from the axis, one fixed time and azimuth. names
    labels the (time, radius, polar, azimuth) coordinates."""
    out = {
        names[0]: np.array([0.0]),
        names[1]: np.linspace(1.5 * rg, 10.0 * rg, n_r),
        names[3]: np.array([0.3]),
    }
    if n_theta > 1:
        out[names[2]] = np.linspace(0.1, math.pi - 0.1, n_theta)
    else:
        out[names[2]] = np.array([1.1])
    return out


def transcription_difference(trial: Trial, rg: float = 1.0,
                             kappa: float = 0.7,
                             n_r: int = 64) -> tuple[float, float]:
    """Evaluate the derived centrally symmetric operator and the recorded
    eq55 display on the same trial, analytically, over the radial box.
    Returns (largest |difference|, largest |difference - 2 rg/r^2 dPsi/dr|):
    the second number localizes the whole gap in the radial first-derivative
    coefficient."""
    derived = curved_space.schwarzschild_wave_equation().residual_poly()
    recorded = rf.equation("eq55").residual_poly()
    grids = schwarzschild_domain(rg, n_r)
    params = {"rg": rg, "kappa": kappa}
    worst = 0.0
    worst_localized = 0.0
    for r in grids["r"]:
        point = {"t": 0.0, "r": float(r), "theta": 1.1, "phi": 0.3}
        env = P.EvalEnv(coords=point, params=params, fields={"Psi": trial})
        d = P.poly_eval(derived, env)
        rec = P.poly_eval(recorded, env)
        dpsi_dr = trial((("r", 1),), point)
        predicted = 2.0 * rg / point["r"] ** 2 * dpsi_dr
        worst = max(worst, abs(d - rec))
        worst_localized = max(worst_localized, abs((rec - d) - predicted))
    return worst, worst_localized


# --------------------------------------------------------- connection oracle


def christoffel_fd_check(rg: float = 1.0, n_samples: int = 20,
                         h: float = 1e-5, seed: int = 7) -> ResidualReport:
    """Exact connection coefficients against a finite-difference rebuild
    from sampled covariant metric values, at random exterior points."""
    met = curved_space.schwarzschild_metric()
    names = [c.name for c in met.coords]
    n = met.dim()
    lower = [met.lower_poly(j) for j in range(n)]
    upper = [met.inverse_poly(j) for j in range(n)]
    sym = curved_space.christoffel(met)
    rng = np.random.default_rng(seed)
    rs = rng.uniform(1.5 * rg, 10.0 * rg, size=n_samples)
    thetas = rng.uniform(0.1, math.pi - 0.1, size=n_samples)
    params = {"rg": rg}

    def lower_at(j: int, point: dict[str, float]) -> float:
        env = P.EvalEnv(coords=point, params=params)
        return P.poly_eval(lower[j], env).real

    devs = []
    for r, theta in zip(rs, thetas):
        point = {"t": 0.0, "r": float(r), "theta": float(theta), "phi": 0.3}
        env = P.EvalEnv(coords=point, params=params)
        gup = [P.poly_eval(upper[j], env).real for j in range(n)]
        dg = np.zeros((n, n))
        for l in range(n):
            for j in range(n):
                q_hi = dict(point)
                q_hi[names[j]] += h
                q_lo = dict(point)
                q_lo[names[j]] -= h
                dg[l, j] = (lower_at(l, q_hi) - lower_at(l, q_lo)) / (2 * h)
        for l in range(n):
            for j in range(n):
                for kk in range(n):
                    acc = 0.0
                    if l == kk:
                        acc += dg[l, j]
                    if l == j:
                        acc += dg[l, kk]
                    if j == kk:
                        acc -= dg[j, l]
                    fd_val = 0.5 * gup[l] * acc
                    sym_val = 0.0
                    if (l, j, kk) in sym:
                        sym_val = P.poly_eval(sym[(l, j, kk)], env).real
                    devs.append(abs(sym_val - fd_val))
    a = np.array(devs)
    return ResidualReport(float(a.max()), float(np.sqrt(np.mean(a ** 2))))


# ------------------------------------------------------------------ CSV dump


def dump_state_csv(state: WaveState, residual: Optional[np.ndarray],
                   path) -> None:
    x = state.grid.points()
    r = np.zeros(state.grid.n) if residual is None else np.asarray(residual)
    with open(path, "w") as fh:
        fh.write("x,re,im,abs2,residual\n")
        for j in range(state.grid.n):
            fh.write(f"{x[j]!r},{state.psi[j].real!r},{state.psi[j].imag!r},"
                     f"{abs(state.psi[j]) ** 2!r},{abs(r[j])!r}\n")
