"""Quantile levels and subset singular values, the package's two primitives.

Every robust guarantee in this package leans on two quantities: the
q-quantile of a residual multiset (with q*m forced to be an integer so
the quantile is an order statistic, never an interpolation) and
sigma_{q,min}, the worst smallest singular value over all row subsets of
size q*m.  This script pokes at both on a small matrix where exhaustive
enumeration is instant.

Run:  python3 demos/01_quantiles_and_subset_minima.py
"""
import math
from fractions import Fraction

import numpy as np

from kqrk import (
    MultisetQuantileSpec,
    NonIntegerQuantileError,
    feasible_level,
    quantile,
    row_normalize,
    sigma_q_min_exact,
    sigma_q_min_sampled,
    snap_level,
)

# ---- order-statistic quantiles ------------------------------------------
m = 10
values = np.array([5.0, 1.0, 3.0, 3.0, 8.0, 0.5, 2.0, 9.0, 4.0, 7.0])
spec = MultisetQuantileSpec(q=Fraction(4, 5), m=m)
print(f"q = {spec.q}, m = {m}: the quantile is the k = {spec.count}-th smallest")
print("values:", sorted(values.tolist()))
print("quantile:", quantile(values, spec))

# Levels that do not give an integer count are rejected, with the nearest
# feasible level in the message; snap_level computes that level directly.
try:
    feasible_level(Fraction(1, 3), m)
except NonIntegerQuantileError as exc:
    print("rejected:", exc)
print("snap_level(1/3, 10) =", snap_level(Fraction(1, 3), 10))

# ---- subset minimum singular values --------------------------------------
print()
rng = np.random.default_rng(3)
a, norms = row_normalize(rng.standard_normal((12, 3)))
print(f"12x3 Gaussian system, rows normalized (norms ranged "
      f"{norms.min():.2f}..{norms.max():.2f})")

level = Fraction(3, 4)  # subsets of 9 of the 12 rows
exact = sigma_q_min_exact(a, level)
total = math.comb(12, 9)
print(f"sigma_({level})min over all {total} subsets: {exact.value:.6f} "
      f"(mode={exact.mode}, examined={exact.subsets_examined})")

# Random sampling inspects fewer subsets, so it can only miss the worst
# one: the sampled value is an upper bound, and the result says so.
sampled = sigma_q_min_sampled(a, level, samples=40, seed=0)
print(f"sampled over 40 subsets: {sampled.value:.6f} "
      f"(upper bound only: {sampled.is_upper_bound_only})")
assert sampled.value >= exact.value

# Asking for at least as many samples as there are subsets silently
# becomes exhaustive enumeration, and the answer is exact again.
full = sigma_q_min_sampled(a, level, samples=total, seed=0)
print(f"sampled with {total} samples: {full.value:.6f} (mode={full.mode})")
assert full.value == exact.value
