"""Dense row systems, multiset quantiles, and subset singular values.

Conventions used throughout the package:

* A quantile level ``q`` is an exact rational.  For a multiset of ``m``
  values, ``q*m`` must be an integer ``k``, and the q-quantile is the k-th
  smallest element counted with multiplicity.  There is no interpolation;
  an infeasible level is an error.  Float levels are accepted only when
  they sit within a tiny snap window of a feasible rational (callers that
  want rounding-to-feasible use :func:`snap_level`).

* ``sigma_q_min(A)`` is the minimum, over all row subsets of size ``q*m``,
  of the smallest singular value of the subset matrix (as an operator from
  R^n, so subsets with fewer rows than columns contribute 0).  The exact
  variant enumerates subsets; the sampled variant inspects a random subset
  of index sets and therefore can only overestimate.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "DenseMatrix",
    "MultisetQuantileSpec",
    "SigmaQMinResult",
    "ZeroRowError",
    "NonIntegerQuantileError",
    "SvdConvergenceError",
    "TooManySubsetsError",
    "row_normalize",
    "snap_level",
    "feasible_level",
    "quantile",
    "singular_extremes",
    "frobenius_sq",
    "sigma_q_min_exact",
    "sigma_q_min_sampled",
]

SUBSET_ENUMERATION_CAP = 2_000_000
FLOAT_LEVEL_TOLERANCE = 1e-9
UNIT_ROW_TOLERANCE = 1e-12


class ZeroRowError(ValueError):
    """A row with zero Euclidean norm cannot be normalized."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has zero norm and cannot be normalized")


class NonIntegerQuantileError(ValueError):
    """Raised when q*m is not an integer for the multiset at hand."""


class SvdConvergenceError(RuntimeError):
    """The dense SVD driver failed to converge."""


class TooManySubsetsError(ValueError):
    """Exact subset enumeration would exceed the configured cap."""


@dataclass(frozen=True)
class DenseMatrix:
    """An m-by-n dense matrix with float64 entries stored row-major.

    ``row_normalized`` asserts that every row has unit Euclidean norm to
    within ``UNIT_ROW_TOLERANCE``; the flag is validated on construction.
    The underlying array is marked read-only.
    """

    data: np.ndarray
    row_normalized: bool = False

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("matrix data must be two-dimensional")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("matrix must have at least one row and one column")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        if self.row_normalized:
            norms = np.linalg.norm(arr, axis=1)
            bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_ROW_TOLERANCE)
            if bad.size:
                raise ValueError(
                    f"row {int(bad[0])} has norm {norms[bad[0]]!r}; "
                    "row_normalized requires unit rows"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def row_sq_norms(self) -> np.ndarray:
        if self.row_normalized:
            return np.ones(self.m)
        return np.einsum("ij,ij->i", self.data, self.data)


def row_normalize(a: DenseMatrix | np.ndarray) -> tuple[DenseMatrix, np.ndarray]:
    """Scale each row to unit norm; returns the scaled matrix and the norms.

    Multiplying row i of the result by ``norms[i]`` reconstructs the input
    exactly up to float rounding of the single division performed.
    """
    data = a.data if isinstance(a, DenseMatrix) else np.asarray(a, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("expected a two-dimensional array")
    norms = np.linalg.norm(data, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroRowError(int(zero[0]))
    return DenseMatrix(data / norms[:, None], row_normalized=True), norms


def snap_level(q: float | Fraction, m: int) -> Fraction:
    """Nearest rational k/m to ``q`` with integer k clamped to [0, m]."""
    if m < 1:
        raise ValueError("m must be positive")
    k = round(Fraction(q) * m)
    k = min(max(k, 0), m)
    return Fraction(k, m)


def feasible_level(
    q: float | Fraction | int,
    m: int,
    *,
    lowest: int = 0,
) -> Fraction:
    """Validate that ``q*m`` is an integer and return ``q`` as a Fraction.

    Rational inputs are checked exactly.  Float inputs are accepted when
    they lie within ``FLOAT_LEVEL_TOLERANCE * m`` of a feasible rational
    (so 0.8 means 4/5 even though the binary float is not exactly 4/5);
    anything further off raises :class:`NonIntegerQuantileError`.
    ``lowest`` is the smallest admissible count q*m.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if isinstance(q, float):
        scaled = q * m
        k = round(scaled)
        if abs(scaled - k) > FLOAT_LEVEL_TOLERANCE * max(1, m):
            raise NonIntegerQuantileError(
                f"q*m must be an integer; q = {q!r} gives q*m = {scaled!r} "
                f"(nearest feasible q = {float(snap_level(q, m)):.6g})"
            )
    else:
        frac = Fraction(q)
        if (frac * m).denominator != 1:
            raise NonIntegerQuantileError(
                f"q*m must be an integer; q = {frac} gives q*m = {frac * m} "
                f"(nearest feasible q = {snap_level(frac, m)})"
            )
        k = int(frac * m)
    if k < lowest or k > m:
        raise NonIntegerQuantileError(
            f"q*m = {k} outside the admissible range [{lowest}, {m}]"
        )
    return Fraction(k, m)


@dataclass(frozen=True)
class MultisetQuantileSpec:
    """Quantile level for a multiset of a fixed size m, with q*m integral."""

    q: Fraction
    m: int

    def __post_init__(self) -> None:
        level = feasible_level(self.q, self.m, lowest=1)
        if not (0 < level <= 1):
            raise NonIntegerQuantileError(f"q = {level} outside (0, 1]")
        object.__setattr__(self, "q", level)

    @property
    def count(self) -> int:
        """k = q*m, the rank of the order statistic selected."""
        return int(self.q * self.m)


def quantile(values, spec: MultisetQuantileSpec) -> float:
    """The (q*m)-th smallest element of the multiset, with multiplicity."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size != spec.m:
        raise ValueError(f"expected {spec.m} values, got {arr.size}")
    k = spec.count
    return float(np.partition(arr, k - 1)[k - 1])


def singular_extremes(a: DenseMatrix) -> tuple[float, float]:
    """Largest and smallest singular values of the matrix.

    The smallest value is the min(m, n)-th singular value; for a matrix
    with full column rank this is the operator lower bound
    inf_{|x|=1} |A x|.  Rank deficiency is not an error here; consumers
    that require full column rank check for it themselves.
    """
    try:
        svals = np.linalg.svd(a.data, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SvdConvergenceError(str(exc)) from exc
    return float(svals[0]), float(svals[-1])


def frobenius_sq(a: DenseMatrix) -> float:
    return float(np.sum(a.data * a.data))


@dataclass(frozen=True)
class SigmaQMinResult:
    """Result of a subset minimum-singular-value computation.

    ``mode`` is "exact" when every subset of the prescribed size was
    covered (by enumeration or an analytic shortcut) and "sampled" when
    only a random subset of index sets was inspected.  A sampled value is
    an upper bound only, which is what ``is_upper_bound_only`` records;
    the two fields are locked together.
    """

    value: float
    mode: str
    subsets_examined: int
    is_upper_bound_only: bool

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.mode == "sampled") != self.is_upper_bound_only:
            raise ValueError("sampled mode and is_upper_bound_only must agree")


def _subset_min_singular(rows: np.ndarray) -> float:
    # Operator minimum over R^n: zero when the subset has fewer rows than
    # columns, else the smallest singular value of the submatrix.
    if rows.shape[0] < rows.shape[1]:
        return 0.0
    return float(np.linalg.svd(rows, compute_uv=False)[-1])


def _analytic_sigma_q_min(a: DenseMatrix, k: int) -> float | None:
    # Shortcuts that stay exact without touching any subset: if the subset
    # size cannot reach column rank, every subset gives 0; for a single
    # column the minimum is the root of the k smallest squared entries.
    if k < a.n:
        return 0.0
    if a.n == 1:
        sq = np.sort(a.data[:, 0] ** 2)
        return float(math.sqrt(math.fsum(sq[:k])))
    return None


def sigma_q_min_exact(
    a: DenseMatrix,
    q: float | Fraction,
    *,
    cap: int = SUBSET_ENUMERATION_CAP,
) -> SigmaQMinResult:
    """Exact min over all size-(q*m) row subsets of the subset sigma_min.

    Raises :class:`TooManySubsetsError` when C(m, q*m) exceeds ``cap`` and
    no analytic shortcut applies.
    """
    level = feasible_level(q, a.m, lowest=1)
    k = int(level * a.m)
    shortcut = _analytic_sigma_q_min(a, k)
    if shortcut is not None:
        return SigmaQMinResult(shortcut, "exact", 0, False)
    total = math.comb(a.m, k)
    if total > cap:
        raise TooManySubsetsError(
            f"C({a.m}, {k}) = {total} subsets exceeds the cap of {cap}"
        )
    best = math.inf
    for subset in itertools.combinations(range(a.m), k):
        val = _subset_min_singular(a.data[list(subset)])
        if val < best:
            best = val
    return SigmaQMinResult(best, "exact", total, False)


def sigma_q_min_sampled(
    a: DenseMatrix,
    q: float | Fraction,
    samples: int,
    seed: int,
) -> SigmaQMinResult:
    """Minimum of the subset sigma_min over ``samples`` random subsets.

    Sampling covers a subset of all index sets, so the value can only
    overestimate the exact minimum.  When ``samples`` reaches the total
    subset count the computation enumerates everything and the result is
    exact.  Deterministic for a fixed seed.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    level = feasible_level(q, a.m, lowest=1)
    k = int(level * a.m)
    shortcut = _analytic_sigma_q_min(a, k)
    if shortcut is not None:
        return SigmaQMinResult(shortcut, "exact", 0, False)
    total = math.comb(a.m, k)
    if samples >= total:
        best = math.inf
        for subset in itertools.combinations(range(a.m), k):
            val = _subset_min_singular(a.data[list(subset)])
            if val < best:
                best = val
        return SigmaQMinResult(best, "exact", total, False)
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, ...]] = set()
    best = math.inf
    while len(seen) < samples:
        subset = tuple(sorted(int(i) for i in rng.choice(a.m, size=k, replace=False)))
        if subset in seen:
            continue
        seen.add(subset)
        val = _subset_min_singular(a.data[list(subset)])
        if val < best:
            best = val
    return SigmaQMinResult(best, "sampled", samples, True)
