"""Locating the catalog of input equations and the recorded golden files.

The package is installed from a src layout, so the data directories live at
the repository root, two levels above this file. Installed copies fall back
to the working directory; HJ2WAVE_GOLDENS overrides the goldens location.
"""

from __future__ import annotations

import os
from pathlib import Path

from .errors import UnknownCatalogId

CATALOG_ENTRIES = (
    "schrodinger_free",
    "schrodinger_em",
    "schrodinger_nbody",
    "klein_gordon_em",
    "pauli",
    "dirac",
    "curved_kg",
)


def _repo_root() -> Path:
    here = Path(__file__).resolve()
    for cand in (*here.parents, Path.cwd()):
        if (cand / "catalog").is_dir():
            return cand
    return Path.cwd()


def catalog_dir() -> Path:
    return _repo_root() / "catalog"


def goldens_dir() -> Path:
    env = os.environ.get("HJ2WAVE_GOLDENS")
    if env:
        return Path(env)
    return _repo_root() / "goldens"


def catalog_path(entry: str) -> Path:
    if entry not in CATALOG_ENTRIES:
        raise UnknownCatalogId(
            f"{entry!r} is not in the catalog; known: {', '.join(CATALOG_ENTRIES)}")
    p = catalog_dir() / f"{entry}.hj"
    if not p.is_file():
        raise FileNotFoundError(f"catalog file missing: {p}")
    return p


def golden_path(anchor: str) -> Path:
    return goldens_dir() / f"{anchor}.hj"
