"""System manifests: a JSON document naming MatrixMarket files or inline arrays.

Example manifest::

    {
      "name": "heat:3",
      "n": 9, "m": 3, "p": 1, "nu": 1,
      "provenance": "heat_system(3)",
      "A": "A.mtx",
      "Nx": ["Nx0.mtx"],
      "Nu": ["Nu0.mtx"],
      "B": "B.mtx",
      "C": [[0.111, 0.111, ...]],
      "D": "D.mtx"
    }

Each matrix entry is either a path relative to the manifest, or an inline
row-major nested list. ``Nu`` and ``D`` may be omitted (zero).
"""

import json
from pathlib import Path

import numpy as np
import scipy.io

from .operators import StochasticSystem
from .problems import heat_system, random_system, scalar_system

__all__ = ["ManifestError", "load_system", "parse_generator", "read_manifest", "write_manifest"]

MATRIX_KEYS = ("A", "B", "C", "D")


class ManifestError(ValueError):
    """A manifest or matrix file is missing, unreadable or inconsistent."""


def read_matrix(path):
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"matrix file not found: {path}")
    try:
        M = scipy.io.mmread(str(path))
    except Exception as exc:  # scipy raises assorted types on malformed input
        raise ManifestError(f"cannot parse MatrixMarket file {path}: {exc}") from exc
    if hasattr(M, "toarray"):
        M = M.toarray()
    return np.atleast_2d(np.asarray(M, dtype=float))


def write_matrix(path, M):
    # 17 significant digits round-trip doubles exactly
    scipy.io.mmwrite(str(path), np.atleast_2d(np.asarray(M, dtype=float)), precision=17)


def _entry(value, base, key):
    if isinstance(value, str):
        return read_matrix(base / value)
    try:
        return np.atleast_2d(np.asarray(value, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"manifest entry {key!r} is neither a path nor a numeric array") from exc


def read_manifest(path):
    """Load a :class:`StochasticSystem` from a manifest file."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    base = path.parent
    for key in ("A", "B", "C"):
        if key not in doc:
            raise ManifestError(f"manifest {path} lacks required entry {key!r}")
    mats = {k: _entry(doc[k], base, k) for k in MATRIX_KEYS if doc.get(k) is not None}
    nx = doc.get("Nx") or []
    nu = doc.get("Nu") or []
    if isinstance(nx, str):
        nx = [nx]
    if isinstance(nu, str):
        nu = [nu]
    Nx = [_entry(v, base, "Nx") for v in nx]
    Nu = [_entry(v, base, "Nu") for v in nu]
    try:
        sys = StochasticSystem(A=mats["A"], Nx=Nx, Nu=Nu or None, B=mats["B"], C=mats["C"],
                               D=mats.get("D"), name=doc.get("name", path.stem))
    except ValueError as exc:
        raise ManifestError(f"manifest {path}: {exc}") from exc
    for key, value in (("n", sys.n), ("m", sys.m), ("p", sys.p), ("nu", sys.nu)):
        if key in doc and int(doc[key]) != value:
            raise ManifestError(f"manifest {path}: declared {key}={doc[key]} but matrices give {value}")
    return sys


def write_manifest(sys, directory, name=None, provenance=""):
    """Write `sys` as MatrixMarket files plus ``manifest.json`` into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {"name": name or sys.name, "n": sys.n, "m": sys.m, "p": sys.p, "nu": sys.nu,
           "provenance": provenance}
    for key in MATRIX_KEYS:
        fname = f"{key}.mtx"
        write_matrix(directory / fname, getattr(sys, key))
        doc[key] = fname
    doc["Nx"], doc["Nu"] = [], []
    for j, (Nx, Nu) in enumerate(zip(sys.Nx, sys.Nu)):
        write_matrix(directory / f"Nx{j}.mtx", Nx)
        write_matrix(directory / f"Nu{j}.mtx", Nu)
        doc["Nx"].append(f"Nx{j}.mtx")
        doc["Nu"].append(f"Nu{j}.mtx")
    out = directory / "manifest.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    return out


def parse_generator(spec):
    """Build a system from ``heat:K``, ``random:N[,M,P[,SEED]]`` or ``scalar:A,N1,B,C[,D]``."""
    kind, _, args = spec.partition(":")
    try:
        if kind == "heat":
            k = int(args)
            return heat_system(k), f"heat_system({k})"
        if kind == "random":
            vals = [int(v) for v in args.split(",")]
            n, m, p, seed = (vals + [1, 1, 0][len(vals) - 1:])[:4]
            return random_system(n, m, p, seed), f"random_system({n}, {m}, {p}, seed={seed})"
        if kind == "scalar":
            vals = [float(v) for v in args.split(",")]
            return scalar_system(*vals), f"scalar_system{tuple(vals)}"
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"bad generator spec {spec!r}: {exc}") from exc
    raise ManifestError(f"unknown generator {spec!r}; expected heat:K, random:N,M,P,SEED "
                        "or scalar:A,N1,B,C")


def load_system(source):
    """A manifest path, or a generator spec such as ``heat:5``."""
    if ":" in str(source) and not Path(source).exists():
        return parse_generator(str(source))[0]
    return read_manifest(source)
