"""Command line front end.

hj2wave derive <catalog_id> [--format json|text] [--out PATH]
hj2wave verify <suite> [--n INT] [--dt FLOAT] [--steps INT]
                       [--k FLOAT ...] [--m FLOAT] [--rg FLOAT]
                       [--format json|text] [--out PATH]
hj2wave list

Exit codes: 0 success (recorded discrepancies are reported, not failed),
2 a golden comparison or verification bound failed, 64 usage errors and
unknown names, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__, curved_space, data, eq_parser
from . import numeric_verify as nv
from . import quantization as qz
from . import reference_forms as rf
from . import report as rpt
from . import spin_algebra as sa
from .equations import equations_match
from .errors import Hj2WaveError, UnknownCatalogId

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_FAIL = 2
EXIT_USAGE = 64


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 means a failed check here, so
    usage problems get their own code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def golden_anchor(entry: str) -> str:
    """The recorded form the route must land on: the last checked step."""
    anchors = [sp.check for sp in qz.ROUTES[entry] if sp.check is not None]
    if not anchors:
        raise Hj2WaveError(f"route {entry} has no checked step")
    return anchors[-1]


# ----------------------------------------------------------------- derive


def _run_derive(args) -> tuple[rpt.Report, int]:
    entry = args.catalog_id
    trace = qz.derive(entry)
    anchor = golden_anchor(entry)
    gpath = data.golden_path(anchor)
    inputs = {
        f"catalog/{entry}.hj": rpt.file_sha256(data.catalog_path(entry)),
        f"goldens/{anchor}.hj": rpt.file_sha256(gpath),
    }
    golden_doc = eq_parser.parse(gpath.read_text())
    matched = bool(equations_match(trace.result, golden_doc.equation))
    if matched:
        passed = True
    else:
        # a known recorded disagreement covers the gap only if the golden
        # file itself still carries the authentic recorded form
        covered = any(d.anchor == anchor for d in trace.discrepancies)
        authentic = bool(equations_match(golden_doc.equation,
                                         rf.equation(anchor)))
        passed = covered and authentic
    extra = (rpt.ResidualEntry(
        f"golden_{anchor}", 1.0 if matched else 0.0,
        "structural match, or gap covered by a recorded discrepancy",
        passed),)
    report = rpt.trace_report(__version__, trace, inputs, passed, extra)
    return report, EXIT_OK if passed else EXIT_FAIL


# ----------------------------------------------------------------- suites


def _suite_norm(args) -> list[rpt.ResidualEntry]:
    n = args.n or 512
    dt = args.dt or 1e-3
    steps = args.steps or 2000
    m = args.m or 1.0
    sigma0 = 2.0
    grid = nv.Grid1D(-12.0, 12.0, n)
    state = nv.gaussian_state(grid, sigma0, m=m, dt=dt)
    final, drift = nv.crank_nicolson_evolve(state, steps)
    tau = final.hbar * final.time / (2 * m * sigma0 ** 2)
    want = sigma0 ** 2 * (1 + tau ** 2)
    got = nv.measured_variance(final)
    return [
        rpt.below("norm_drift", drift, 1e-10),
        rpt.below("width_law_rel_err", abs(got - want) / want, 1e-4),
    ]


def _suite_dispersion(args) -> list[rpt.ResidualEntry]:
    count = args.n or 20
    kinds = (args.kind,) if args.kind else ("schrodinger", "klein_gordon")
    out = []
    for kind in kinds:
        pairs = nv.dispersion_draws(kind, count)
        out.append(rpt.below(f"{kind}_worst_residual",
                             max(p[0] for p in pairs), 1e-12))
        out.append(rpt.above(f"{kind}_weakest_control",
                             min(p[1] for p in pairs), 0.1))
    if args.k:
        k3 = _as_k3(args.k)
        m = args.m or 1.0
        ksq = sum(v ** 2 for v in k3)
        if "schrodinger" in kinds:
            w_s = ksq / 2 / m
            out.append(rpt.below(
                "requested_schrodinger",
                nv.plane_wave_residual(
                    "schrodinger", nv.PlaneWaveSpec(k3, w_s),
                    {"hbar": 1.0, "m": m, "U": 0.0}), 1e-12))
        if "klein_gordon" in kinds:
            w_k = math.sqrt(ksq + m ** 2)
            out.append(rpt.below(
                "requested_klein_gordon",
                nv.plane_wave_residual(
                    "klein_gordon", nv.PlaneWaveSpec(k3, w_k),
                    {"hbar": 1.0, "m": m}), 1e-12))
    return out


def _suite_continuity(args) -> list[rpt.ResidualEntry]:
    n = args.n or 512
    m = args.m or 1.0
    grid = nv.Grid1D(-12.0, 12.0, n)
    pw = nv.plane_wave_state(grid, k=1.0, m=m, dt=args.dt or 5e-3)
    pw_rep = nv.continuity_residual(pw, buffer=48)
    box, _e = nv.discrete_ground_state(grid, m=m, dt=1e-3)
    box_rate = float(np.max(np.abs(nv.time_density_derivative(box))))
    reps = {}
    for points in (n // 2, n):
        g = nv.Grid1D(-12.0, 12.0, points)
        s = nv.gaussian_state(g, sigma0=2.0, kick=0.7, m=m, dt=1e-5)
        reps[points] = nv.continuity_residual(s)
    ratio = reps[n // 2].max_abs / reps[n].max_abs
    return [
        rpt.below("plane_wave_max", pw_rep.max_abs, 1e-12),
        rpt.below("box_density_rate", box_rate, 1e-10),
        rpt.within("gaussian_refinement_ratio", ratio, 3.5, 4.5),
    ]


def _suite_averaged_hj(args) -> list[rpt.ResidualEntry]:
    n = args.n or 512
    m = args.m or 1.0
    dt = args.dt or 1e-3
    grid = nv.Grid1D(-12.0, 12.0, n)
    gauss = nv.gaussian_state(grid, sigma0=2.0, m=m, dt=dt)
    box, _e = nv.discrete_ground_state(grid, m=m, dt=dt)
    return [
        rpt.below("free_gaussian", nv.averaged_hj_residual(gauss), 1e-6),
        rpt.below("box_ground_state", nv.averaged_hj_residual(box), 1e-6),
    ]


def _suite_dual(args) -> list[rpt.ResidualEntry]:
    k3 = _as_k3(args.k) if args.k else (1.3, -0.4, 0.2)
    kn = math.sqrt(sum(v ** 2 for v in k3))
    rep = nv.massless_dual_check(k3, kn)
    detuned = 2.0 * kn if kn else 1.0
    try:
        nv.massless_dual_check(k3, detuned)
        rejected = False
    except nv.DispersionViolated:
        rejected = True
    return [
        rpt.below("particle_action_dev", rep.particle_max_dev, 1e-12),
        rpt.below("wave_action_dev", rep.wave_max_dev, 1e-12),
        rpt.below("log_relation_dev", rep.relation_max_dev, 1e-12),
        rpt.flag("detuned_rejected", rejected, "raises"),
    ]


def _suite_clifford(args) -> list[rpt.ResidualEntry]:
    count = args.n or 100
    good = sa.clifford_check(sa.dirac_matrices())
    printed = sa.clifford_check(sa.printed_dirac_matrices())
    rng = np.random.default_rng(414213)
    draws_ok = all(
        sa.rational_square_check(
            tuple(Fraction(int(num), int(den))
                  for num, den in zip(rng.integers(-60, 61, size=3),
                                      rng.integers(1, 13, size=3))),
            Fraction(int(rng.integers(-60, 61)), int(rng.integers(1, 13))))
        for _ in range(count))
    spec = sa.plane_wave_spectrum((0.3, -1.1, 0.7), 1.2)
    return [
        rpt.flag("identities_hold", good.ok,
                 f"all {len(good.identities)} exact"),
        rpt.flag("printed_third_matrix_fails", not printed.ok,
                 "counterexample"),
        rpt.flag("dagger_square_rational_draws", draws_ok,
                 f"{count} draws exact"),
        rpt.below("spectrum_square_residual", spec.square_residual, 1e-12),
        rpt.flag("spectrum_branches", spec.degeneracies_ok,
                 "+/-sqrt(p^2+m^2), twofold each"),
    ]


def _suite_schwarzschild(args) -> list[rpt.ResidualEntry]:
    rg = args.rg or 1.0
    n = args.n or 512
    chris = nv.christoffel_fd_check(rg=rg)
    eq53 = rf.equation("eq53")
    trial = nv.SeparableTrial(x1=nv.exp_decay(2.0))
    params = dict(nv.schwarzschild_metric_callables(rg))
    params["kappa"] = 0.7
    reps = {}
    for points in (n // 2, n):
        grids = nv.schwarzschild_domain(rg, points,
                                        names=("x0", "x1", "x2", "x3"))
        reps[points] = nv.manufactured_solution_residual(
            eq53, trial, grids, params)
    ratio = reps[n // 2].max_abs / reps[n].max_abs
    met = curved_space.schwarzschild_metric()
    printed_ok, used_ok = curved_space.determinant_evidence()
    gap, localized = nv.transcription_difference(
        nv.SeparableTrial(r=nv.exp_decay(2.0)), rg=rg)
    return [
        rpt.below("christoffel_fd_dev", chris.max_abs, 1e-8),
        rpt.within("manufactured_refinement_ratio", ratio, 3.5, 4.5),
        rpt.flag("metric_compatible", curved_space.metric_compatible(met)),
        rpt.flag("divergence_free_inverse",
                 curved_space.divergence_free_inverse(met)),
        rpt.flag("determinant_selects_azimuthal_entry",
                 used_ok and not printed_ok, "volume factor evidence"),
        rpt.above("radial_coefficient_gap", gap, 1e-3),
        rpt.below("radial_gap_minus_prediction", localized, 1e-12),
    ]


SUITES = {
    "norm": _suite_norm,
    "dispersion": _suite_dispersion,
    "continuity": _suite_continuity,
    "averaged_hj": _suite_averaged_hj,
    "dual": _suite_dual,
    "clifford": _suite_clifford,
    "schwarzschild": _suite_schwarzschild,
}


def _as_k3(values) -> tuple[float, float, float]:
    v = list(values)
    if len(v) == 1:
        return (float(v[0]), 0.0, 0.0)
    if len(v) == 3:
        return (float(v[0]), float(v[1]), float(v[2]))
    raise Hj2WaveError("--k takes one or three components")


def _run_verify(args) -> tuple[rpt.Report, int]:
    entries = tuple(SUITES[args.suite](args))
    knobs = {name: getattr(args, name)
             for name in ("n", "dt", "steps", "k", "m", "rg", "kind")}
    report = rpt.suite_report(__version__, args.suite, knobs, entries)
    return report, EXIT_OK if report.passed else EXIT_FAIL


def _run_list() -> str:
    lines = ["catalog entries:"]
    for entry in data.CATALOG_ENTRIES:
        lines.append(f"  {entry} (golden {golden_anchor(entry)})")
    lines.append("verification suites:")
    for name in SUITES:
        lines.append(f"  {name}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- main


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="hj2wave",
                             description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_ArgumentParser)

    p_derive = sub.add_parser("derive",
                              help="run a recorded derivation route")
    p_derive.add_argument("catalog_id")
    _output_options(p_derive)

    p_verify = sub.add_parser("verify", help="run one numeric check suite")
    p_verify.add_argument("suite", choices=sorted(SUITES))
    p_verify.add_argument("--n", type=int, default=None,
                          help="grid points, draws, or sample count")
    p_verify.add_argument("--dt", type=float, default=None)
    p_verify.add_argument("--steps", type=int, default=None)
    p_verify.add_argument("--k", type=float, nargs="+", default=None,
                          help="wavevector, one or three components")
    p_verify.add_argument("--m", type=float, default=None)
    p_verify.add_argument("--rg", type=float, default=None)
    p_verify.add_argument("--kind", choices=("schrodinger", "klein_gordon"),
                          default=None,
                          help="restrict the dispersion suite to one kind")
    _output_options(p_verify)

    sub.add_parser("list", help="show catalog entries and suites")
    return parser


def _output_options(p) -> None:
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", default=None, help="write the report to a file")


def _emit(report: rpt.Report, args) -> None:
    text = report.to_json() if args.format == "json" else report.to_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            sys.stdout.write(_run_list())
            return EXIT_OK
        if args.command == "derive":
            report, code = _run_derive(args)
        else:
            report, code = _run_verify(args)
        _emit(report, args)
        return code
    except UnknownCatalogId as exc:
        print(f"hj2wave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Hj2WaveError as exc:
        print(f"hj2wave: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        # str(OSError) carries both the offending path and the OS message
        print(f"hj2wave: io error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the boundary of the program
        print(f"hj2wave: internal error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
