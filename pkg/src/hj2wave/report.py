"""Machine-readable run records.

A Report is what a command hands back: the derivation steps or numeric
residuals it produced, the sha256 of every file it read, and a single
pass flag. The JSON form is byte-stable for identical runs (sorted keys,
repr floats), so records can be diffed or committed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import eq_parser
from .quantization import DerivationTrace, DiscrepancyEntry

SCHEMA = 1


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class ResidualEntry:
    """One measured number with the bound it must satisfy."""

    name: str
    value: float
    requirement: str
    passed: bool


def below(name: str, value: float, bound: float) -> ResidualEntry:
    return ResidualEntry(name, float(value), f"< {bound:g}", value < bound)


def above(name: str, value: float, bound: float) -> ResidualEntry:
    return ResidualEntry(name, float(value), f"> {bound:g}", value > bound)


def within(name: str, value: float, lo: float, hi: float) -> ResidualEntry:
    return ResidualEntry(name, float(value), f"in [{lo:g}, {hi:g}]",
                         lo <= value <= hi)


def flag(name: str, ok: bool, requirement: str = "exact") -> ResidualEntry:
    return ResidualEntry(name, 1.0 if ok else 0.0, requirement, bool(ok))


@dataclass(frozen=True)
class StepRecord:
    rule: str
    anchor: str
    equation: str
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Report:
    version: str
    command: tuple[str, ...]
    inputs: dict[str, str]  # file identity -> sha256 of its bytes
    steps: tuple[StepRecord, ...] = ()
    residuals: tuple[ResidualEntry, ...] = ()
    discrepancies: tuple[DiscrepancyEntry, ...] = ()
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "version": self.version,
            "command": list(self.command),
            "inputs": dict(sorted(self.inputs.items())),
            "steps": [
                {"rule": s.rule, "anchor": s.anchor, "equation": s.equation,
                 "notes": list(s.notes)}
                for s in self.steps
            ],
            "residuals": [
                {"name": r.name, "value": r.value,
                 "requirement": r.requirement, "passed": r.passed}
                for r in self.residuals
            ],
            "discrepancies": [
                {"anchor": d.anchor, "subject": d.subject,
                 "printed": d.printed, "derived": d.derived}
                for d in self.discrepancies
            ],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"hj2wave {self.version}: {' '.join(self.command)}"]
        for ident, digest in sorted(self.inputs.items()):
            lines.append(f"input {ident} sha256={digest}")
        for s in self.steps:
            lines.append(f"{s.rule} {s.anchor}: {s.equation}")
        for r in self.residuals:
            word = "pass" if r.passed else "FAIL"
            lines.append(f"{r.name} = {r.value!r} ({r.requirement}) {word}")
        for d in self.discrepancies:
            lines.append(
                f"discrepancy {d.anchor} {d.subject}: "
                f"printed {d.printed}, derived {d.derived}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def trace_report(version: str, trace: DerivationTrace,
                 inputs: dict[str, str], passed: bool,
                 extra: tuple[ResidualEntry, ...] = ()) -> Report:
    steps = tuple(
        StepRecord(s.rule, s.anchor, eq_parser.format_equation(s.after),
                   s.notes)
        for s in trace.steps)
    return Report(
        version=version,
        command=("derive", trace.entry),
        inputs=inputs,
        steps=steps,
        residuals=extra,
        discrepancies=trace.discrepancies,
        passed=passed,
    )


def suite_report(version: str, suite: str, args: dict,
                 residuals: tuple[ResidualEntry, ...],
                 inputs: Optional[dict[str, str]] = None,
                 discrepancies: tuple[DiscrepancyEntry, ...] = ()) -> Report:
    command = ["verify", suite]
    for key in sorted(args):
        val = args[key]
        if val is None:
            continue
        if isinstance(val, (list, tuple)):
            command.append(f"--{key}=" + ",".join(repr(float(v)) for v in val))
        else:
            command.append(f"--{key}={val!r}")
    return Report(
        version=version,
        command=tuple(command),
        inputs=dict(inputs or {}),
        residuals=residuals,
        discrepancies=discrepancies,
        passed=all(r.passed for r in residuals),
    )
