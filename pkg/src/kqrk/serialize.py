"""File formats: binary matrix container, CSV matrices/vectors, bundles.

Binary matrix container layout (little-endian):

    offset  size  field
    0       4     magic  b"KQRK"
    4       4     format version (u32), currently 1
    8       8     m (u64)
    16      8     n (u64)
    24      1     row_normalized flag (u8, 0 or 1)
    25      m*n*8 entries, float64, row-major

CSV files use '.' as the decimal separator and 17 significant digits,
which round-trips every float64 exactly.  A problem bundle is a directory
holding the matrix container, one single-column CSV per vector, and a
JSON manifest with the generating spec, the pre-normalization row norms,
and SHA-256 checksums of every data file.
"""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from .linalg import DenseMatrix
from .problems import CorruptedProblem, GenSpec, InvalidSpecError

__all__ = [
    "ContainerFormatError",
    "MATRIX_FILENAME",
    "VECTOR_NAMES",
    "fmt_float",
    "save_matrix",
    "load_matrix",
    "save_matrix_csv",
    "load_matrix_csv",
    "save_vector_csv",
    "load_vector_csv",
    "sha256_file",
    "save_problem",
    "load_problem",
    "problem_files",
    "save_trace_csv",
]

MAGIC = b"KQRK"
CONTAINER_VERSION = 1
_HEADER = struct.Struct("<4sIQQB")

MATRIX_FILENAME = "matrix.kqrk"
MANIFEST_FILENAME = "manifest.json"
VECTOR_NAMES = ("x_star", "b_t", "eta", "xi", "b")


class ContainerFormatError(ValueError):
    """The file is not a valid matrix container."""


def fmt_float(x: float) -> str:
    """17 significant digits; lossless for float64."""
    return format(float(x), ".17g")


def save_matrix(path: str | Path, a: DenseMatrix) -> None:
    payload = np.ascontiguousarray(a.data, dtype="<f8").tobytes()
    header = _HEADER.pack(MAGIC, CONTAINER_VERSION, a.m, a.n, int(a.row_normalized))
    Path(path).write_bytes(header + payload)


def load_matrix(path: str | Path) -> DenseMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ContainerFormatError(f"{path}: truncated header")
    magic, version, m, n, flag = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ContainerFormatError(f"{path}: bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise ContainerFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + m * n * 8
    if len(raw) != expected:
        raise ContainerFormatError(
            f"{path}: expected {expected} bytes for a {m}x{n} matrix, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(m, n)
    return DenseMatrix(data.astype(np.float64), row_normalized=bool(flag))


def save_matrix_csv(path: str | Path, a: DenseMatrix) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in a.data:
            writer.writerow([fmt_float(v) for v in row])


def load_matrix_csv(path: str | Path, *, row_normalized: bool = False) -> DenseMatrix:
    rows = []
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            if record:
                rows.append([float(v) for v in record])
    return DenseMatrix(np.array(rows, dtype=np.float64), row_normalized=row_normalized)


def save_vector_csv(path: str | Path, name: str, values: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([name])
        for v in np.asarray(values).ravel():
            writer.writerow([fmt_float(v)])


def load_vector_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ContainerFormatError(f"{path}: empty vector file")
        return np.array([float(row[0]) for row in reader if row], dtype=np.float64)


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def spec_to_dict(spec: GenSpec) -> dict:
    return {
        "m": spec.m,
        "n": spec.n,
        "beta": str(spec.beta),
        "corruption_scale": spec.corruption_scale,
        "noise_stddev": spec.noise_stddev,
        "ensemble": spec.ensemble,
        "disjoint_support": spec.disjoint_support,
        "signed_corruption": spec.signed_corruption,
        "seed": spec.seed,
    }


def spec_from_dict(payload: dict) -> GenSpec:
    try:
        return GenSpec(
            m=int(payload["m"]),
            n=int(payload["n"]),
            beta=Fraction(payload["beta"]),
            corruption_scale=float(payload["corruption_scale"]),
            noise_stddev=float(payload["noise_stddev"]),
            ensemble=str(payload["ensemble"]),
            disjoint_support=bool(payload["disjoint_support"]),
            signed_corruption=bool(payload.get("signed_corruption", False)),
            seed=int(payload["seed"]),
        )
    except KeyError as exc:
        raise InvalidSpecError(f"manifest spec missing field {exc}") from exc


def problem_files(directory: str | Path) -> dict[str, Path]:
    base = Path(directory)
    files = {"matrix": base / MATRIX_FILENAME}
    for name in VECTOR_NAMES:
        files[name] = base / f"{name}.csv"
    return files


def save_problem(
    directory: str | Path,
    problem: CorruptedProblem,
    spec: GenSpec | None = None,
    *,
    extra_manifest: dict | None = None,
) -> dict:
    """Write a problem bundle; returns the manifest that was stored."""
    base = Path(directory)
    base.mkdir(parents=True, exist_ok=True)
    files = problem_files(base)
    save_matrix(files["matrix"], problem.system)
    for name in VECTOR_NAMES:
        save_vector_csv(files[name], name, getattr(problem, name))
    checksums = {path.name: sha256_file(path) for path in files.values()}
    manifest = {
        "schema_version": 1,
        "kind": "problem",
        "spec": spec_to_dict(spec) if spec is not None else None,
        "norms": None
        if problem.row_norms is None
        else [float(v) for v in problem.row_norms],
        "checksums": checksums,
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    with open(base / MANIFEST_FILENAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_problem(directory: str | Path) -> tuple[CorruptedProblem, dict]:
    base = Path(directory)
    manifest_path = base / MANIFEST_FILENAME
    if not manifest_path.is_file():
        raise ContainerFormatError(f"{base}: no {MANIFEST_FILENAME}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    files = problem_files(base)
    system = load_matrix(files["matrix"])
    vectors = {name: load_vector_csv(files[name]) for name in VECTOR_NAMES}
    norms = manifest.get("norms")
    problem = CorruptedProblem(
        system=system,
        x_star=vectors["x_star"],
        b_t=vectors["b_t"],
        eta=vectors["eta"],
        xi=vectors["xi"],
        b=vectors["b"],
        row_norms=None if norms is None else np.asarray(norms, dtype=np.float64),
    )
    return problem, manifest


def save_trace_csv(path, trace) -> None:
    """Write a solver trace as CSV: k, sq_error, residual_norm,
    chosen_index, Q0, Q.  Columns that do not apply stay empty (rk has no
    quantiles; the final state has no chosen index)."""
    states = len(trace.residual_norms)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "sq_error", "residual_norm", "chosen_index", "Q0", "Q"])
        for k in range(states):
            writer.writerow(
                [
                    str(k),
                    "" if trace.sq_errors is None else fmt_float(float(trace.sq_errors[k])),
                    fmt_float(float(trace.residual_norms[k])),
                    str(int(trace.chosen_indices[k])) if k < len(trace.chosen_indices) else "",
                    "" if trace.quantiles_q0 is None else fmt_float(float(trace.quantiles_q0[k])),
                    "" if trace.quantiles_q is None else fmt_float(float(trace.quantiles_q[k])),
                ]
            )
