"""Certificates for the solvers: decay constants, conditions, horizons.

Every operation evaluates one theoretical guarantee for a concrete
(A, beta, q, q0).  The sparsity level ``beta`` is an input assumption,
deliberately decoupled from any particular corruption vector; use
``CorruptedProblem.minimal_beta()`` to infer the smallest feasible level
for a realized instance.

Each constant is computed twice, independently: once from the compact
parametrization (p, r, and the inverse condition numbers) and once from
the raw definition in terms of beta, q, q0 and the singular values.  The
two must agree to 1e-12 relative to the natural term scale of the
expression; disagreement raises, since the forms are algebraically
identical.  Multi-term sums go through compensated summation.

Condition certification is directional.  Conditions have the shape
``lhs < rhs`` where rhs grows with the subset minimum singular value.
A sampled subset minimum only overestimates the true one, so in sampled
mode a satisfied inequality proves nothing (recorded as unknown) while a
failed inequality is a genuine failure.  Only exact mode certifies true.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import (
    DenseMatrix,
    SigmaQMinResult,
    feasible_level,
    frobenius_sq,
    sigma_q_min_exact,
    sigma_q_min_sampled,
    singular_extremes,
    SUBSET_ENUMERATION_CAP,
)
from .problems import ordered_magnitude
from .solvers import InvalidRegimeError

__all__ = [
    "SpectralSummary",
    "RobustParams",
    "BoundRecord",
    "BoundReport",
    "FullRankViolationError",
    "ZeroCorruptionError",
    "RANK_TOLERANCE",
    "FORM_AGREEMENT_RTOL",
    "robust_params",
    "spectral_summary",
    "rk_horizon",
    "qrk_rate_original",
    "qrk_rate_alternative",
    "compare_qrk_rates",
    "qrk_error_horizon",
    "qrk_general_horizon",
    "eh_comparison_condition",
    "timevar_constants",
    "timevar_side_conditions",
    "qrask_coefficient_comparison",
    "dqrk_rate_original",
    "dqrk_rate_alternative",
    "compare_dqrk_rates",
    "dqrk_error_horizon",
    "build_report",
]

RANK_TOLERANCE = 1e-12
FORM_AGREEMENT_RTOL = 1e-12


class FullRankViolationError(ValueError):
    """The matrix is (numerically) rank deficient where full rank is needed."""


class ZeroCorruptionError(ValueError):
    """An all-zero error vector makes the requested comparison vacuous."""


@dataclass(frozen=True)
class SpectralSummary:
    """Singular data of one system at the levels a report needs.

    ``sigma_q_beta_min`` is the subset minimum at level q - beta and
    ``sigma_q0_beta_min`` the one at level q0 - beta (present only when a
    lower quantile is in play).  Dimensions ride along because every
    constant depends on m (and the qRaSK comparison on n).
    """

    m: int
    n: int
    sigma_max: float
    sigma_min: float
    frobenius_sq: float
    sigma_q_beta_min: SigmaQMinResult | None = None
    sigma_q0_beta_min: SigmaQMinResult | None = None

    def __post_init__(self) -> None:
        if min(self.sigma_max, self.sigma_min, self.frobenius_sq) < 0:
            raise ValueError("singular data must be nonnegative")
        if (
            self.sigma_q_beta_min is not None
            and self.sigma_q_beta_min.value > self.sigma_max * (1 + 1e-12) + 1e-12
        ):
            raise ValueError("subset minimum cannot exceed sigma_max")

    def exactness(self, *, need_q0: bool = False) -> bool:
        parts = [self.sigma_q_beta_min]
        if need_q0:
            parts.append(self.sigma_q0_beta_min)
        return all(p is not None and p.mode == "exact" for p in parts)


@dataclass(frozen=True)
class RobustParams:
    """Exact rational parameters of the corruption-aware bounds.

    p is the worst-case fraction of admissible rows that are uncorrupted:
    (q - beta)/q for qrk, (q - q0 - beta)/(q - q0) for dqrk.  r is the
    corruption pressure beta/(1 - q - beta), finite inside the regime
    q + beta < 1.
    """

    beta: Fraction
    q: Fraction
    q0: Fraction | None
    p: Fraction
    r: Fraction


def robust_params(
    beta: Fraction | float,
    q: Fraction | float,
    q0: Fraction | float | None = None,
) -> RobustParams:
    """Validate the regime and derive (p, r) exactly.

    Floats are interpreted as the nearest rational with denominator up to
    10^6 (so 0.8 means 4/5).  Requires 0 <= beta < q < 1 - beta, and for
    the double-quantile variant beta < q0 < q with q - q0 > beta.
    """

    def as_frac(v):
        if isinstance(v, float):
            return Fraction(v).limit_denominator(10**6)
        return Fraction(v)

    b, qq = as_frac(beta), as_frac(q)
    q0q = None if q0 is None else as_frac(q0)
    if not 0 <= b < qq <= 1:
        raise InvalidRegimeError(f"need 0 <= beta < q <= 1, got beta={b}, q={qq}")
    if qq + b >= 1:
        raise InvalidRegimeError(f"need q + beta < 1, got q={qq}, beta={b}")
    if q0q is not None:
        if not b < q0q < qq:
            raise InvalidRegimeError(f"need beta < q0 < q, got q0={q0q}")
        if qq - q0q <= b:
            raise InvalidRegimeError(
                f"need q - q0 > beta, got q - q0 = {qq - q0q}, beta = {b}"
            )
        p = (qq - q0q - b) / (qq - q0q)
    else:
        p = (qq - b) / qq
    r = b / (1 - qq - b)
    return RobustParams(beta=b, q=qq, q0=q0q, p=p, r=r)


def spectral_summary(
    a: DenseMatrix,
    params: RobustParams,
    *,
    sigma_mode: str = "exact",
    samples: int | None = None,
    seed: int = 0,
    cap: int = SUBSET_ENUMERATION_CAP,
) -> SpectralSummary:
    """Compute the singular data a report needs for the given params."""
    smax, smin = singular_extremes(a)
    lvl_q = params.q - params.beta
    kwargs: dict = {}
    if sigma_mode == "exact":
        sq = sigma_q_min_exact(a, lvl_q, cap=cap)
        if params.q0 is not None:
            kwargs["sigma_q0_beta_min"] = sigma_q_min_exact(
                a, params.q0 - params.beta, cap=cap
            )
    elif sigma_mode == "sampled":
        if samples is None or samples < 1:
            raise ValueError("sampled mode requires a positive sample count")
        sq = sigma_q_min_sampled(a, lvl_q, samples, seed)
        if params.q0 is not None:
            kwargs["sigma_q0_beta_min"] = sigma_q_min_sampled(
                a, params.q0 - params.beta, samples, seed + 1
            )
    else:
        raise ValueError(f"unknown sigma mode {sigma_mode!r}")
    return SpectralSummary(
        m=a.m,
        n=a.n,
        sigma_max=smax,
        sigma_min=smin,
        frobenius_sq=frobenius_sq(a),
        sigma_q_beta_min=sq,
        **kwargs,
    )


@dataclass(frozen=True)
class BoundRecord:
    """One evaluated guarantee: named values plus a condition verdict."""

    name: str
    values: dict
    condition_satisfied: bool | None
    condition_mode: str | None
    flags: dict = field(default_factory=dict)

    def value(self, key: str) -> float:
        return self.values[key]

    def to_dict(self) -> dict:
        verdict = {True: "true", False: "false", None: "unknown"}
        return {
            "name": self.name,
            "values": dict(self.values),
            "condition_satisfied": verdict[self.condition_satisfied],
            "condition_mode": self.condition_mode,
            "flags": dict(self.flags),
        }


def _agree(rewritten: float, raw: float, scale: float, what: str) -> None:
    tol = FORM_AGREEMENT_RTOL * max(abs(rewritten), abs(raw), scale)
    if abs(rewritten - raw) > tol:
        raise RuntimeError(
            f"{what}: algebraic forms disagree ({rewritten!r} vs {raw!r})"
        )


def _certify(lhs: float, rhs: float, exact: bool) -> bool | None:
    if exact:
        return bool(lhs < rhs)
    return None if lhs < rhs else False


def _need(summary: SpectralSummary, *, q0: bool = False) -> None:
    if summary.sigma_q_beta_min is None:
        raise ValueError("summary lacks the subset minimum at level q - beta")
    if q0 and summary.sigma_q0_beta_min is None:
        raise ValueError("summary lacks the subset minimum at level q0 - beta")


def _fl(x) -> float:
    return float(x)


def rk_horizon(
    summary: SpectralSummary,
    eta_plus_xi: np.ndarray,
    row_norms: np.ndarray | None = None,
) -> BoundRecord:
    """Plain-solver certificate: geometric decay plus a stall radius.

    decay = 1 - sigma_min^2 / |A|_F^2 and the squared-error plateau is
    (|A|_F^2 / sigma_min^2) * max_j (eta + xi)_j^2 / |a_j|^2.
    """
    if summary.sigma_min < RANK_TOLERANCE * summary.sigma_max:
        raise FullRankViolationError(
            f"sigma_min = {summary.sigma_min!r} is below the full-rank "
            f"threshold {RANK_TOLERANCE!r} * sigma_max"
        )
    eps = np.asarray(eta_plus_xi, dtype=np.float64).ravel()
    norms_sq = (
        np.ones(eps.size)
        if row_norms is None
        else np.asarray(row_norms, dtype=np.float64) ** 2
    )
    smin_sq = summary.sigma_min**2
    decay = 1.0 - smin_sq / summary.frobenius_sq
    worst = float(np.max(eps**2 / norms_sq)) if eps.size else 0.0
    horizon = (summary.frobenius_sq / smin_sq) * worst
    return BoundRecord(
        name="rk_horizon",
        values={"decay_factor": decay, "horizon": horizon},
        condition_satisfied=True,
        condition_mode="exact",
    )


def _qrk_corruption_terms(summary: SpectralSummary, params: RobustParams):
    """The (2*sqrt(r) + r) pressure term in rewritten and raw form."""
    r = _fl(params.r)
    rewritten = math.fsum([2.0 * math.sqrt(r), r])
    b, q = _fl(params.beta), _fl(params.q)
    slack = _fl(1 - params.q - params.beta)
    raw = math.fsum([2.0 * math.sqrt(b) / math.sqrt(slack), b / slack])
    return rewritten, raw


def qrk_rate_original(summary: SpectralSummary, params: RobustParams) -> BoundRecord:
    """Per-step decay constant of the single-quantile solver.

    Expected squared error contracts by (1 - C) per step when the
    condition holds; C couples the subset minimum at level q - beta
    against the corruption pressure carried by sigma_max.
    """
    _need(summary)
    if params.q0 is not None:
        raise InvalidRegimeError("qrk bounds take single-quantile params")
    m = summary.m
    q, b = _fl(params.q), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM2 = summary.sigma_max**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    kappa_hat_inv2 = sq2 / (q * m)

    press, press_raw = _qrk_corruption_terms(summary, params)
    c_rewritten = math.fsum([p * kappa_hat_inv2, -(sM2 / (q * m)) * press])
    qb = _fl(params.q - params.beta)
    c_raw = math.fsum([qb * sq2 / (q * q * m), -(sM2 / (q * m)) * press_raw])
    scale = p * kappa_hat_inv2 + (sM2 / (q * m)) * press
    _agree(c_rewritten, c_raw, scale, "qrk_rate_original C")

    lhs = (1.0 / p) * press
    lhs_raw = (q / qb) * press_raw
    _agree(lhs, lhs_raw, abs(lhs), "qrk_rate_original condition lhs")
    rhs = sq2 / sM2
    exact = summary.exactness()
    return BoundRecord(
        name="qrk_rate_original",
        values={"C": c_rewritten, "condition_lhs": lhs, "condition_rhs": rhs},
        condition_satisfied=_certify(lhs, rhs, exact),
        condition_mode="exact" if exact else "sampled",
    )


def qrk_rate_alternative(summary: SpectralSummary, params: RobustParams) -> BoundRecord:
    """Variant decay constant with a milder corruption penalty."""
    _need(summary)
    if params.q0 is not None:
        raise InvalidRegimeError("qrk bounds take single-quantile params")
    m = summary.m
    q, b = _fl(params.q), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM2 = summary.sigma_max**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    kappa_hat_inv2 = sq2 / (q * m)

    c_rewritten = math.fsum([p * kappa_hat_inv2, -(1.0 / q) * math.fsum([b, 2.0 * sM2 * r / m])])
    qb = _fl(params.q - params.beta)
    slack = _fl(1 - params.q - params.beta)
    c_raw = math.fsum(
        [qb * sq2 / (q * q * m), -(b / q) * math.fsum([1.0, 2.0 * sM2 / (m * slack)])]
    )
    scale = p * kappa_hat_inv2 + (1.0 / q) * (b + 2.0 * sM2 * r / m)
    _agree(c_rewritten, c_raw, scale, "qrk_rate_alternative C")

    lhs = (1.0 / p) * math.fsum([b * m / sM2, 2.0 * r])
    lhs_raw = (q / qb) * math.fsum([b * m / sM2, 2.0 * b / slack])
    _agree(lhs, lhs_raw, abs(lhs), "qrk_rate_alternative condition lhs")
    rhs = sq2 / sM2
    exact = summary.exactness()
    return BoundRecord(
        name="qrk_rate_alternative",
        values={"C": c_rewritten, "condition_lhs": lhs, "condition_rhs": rhs},
        condition_satisfied=_certify(lhs, rhs, exact),
        condition_mode="exact" if exact else "sampled",
    )


def _comparison_hypotheses(summary: SpectralSummary, params: RobustParams) -> bool:
    # r < 4 keeps the threshold denominator positive; past it the gate fails.
    if params.r >= 4:
        return False
    b = _fl(params.beta)
    slack = _fl(1 - params.q - params.beta)
    if b == 0.0:
        return False
    denom = 2.0 * math.sqrt(b) * math.sqrt(slack) - b
    threshold = b * summary.m * slack / denom
    return summary.sigma_max**2 > threshold


def compare_qrk_rates(summary: SpectralSummary, params: RobustParams) -> BoundRecord:
    """Head-to-head of the two qrk decay factors alpha = 1 - C + penalty.

    When r < 4 and sigma_max^2 clears its threshold, the alternative
    penalty is strictly the smaller one, so alpha1 < alpha2.
    """
    _need(summary)
    m = summary.m
    q, b = _fl(params.q), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM2 = summary.sigma_max**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    base = p * sq2 / (q * m)
    press, _ = _qrk_corruption_terms(summary, params)
    alpha1 = math.fsum([1.0, -base, (1.0 / q) * math.fsum([b, 2.0 * sM2 * r / m])])
    alpha2 = math.fsum([1.0, -base, (sM2 / (q * m)) * press])
    hyp = _comparison_hypotheses(summary, params)
    return BoundRecord(
        name="qrk_rate_comparison",
        values={"alpha1": alpha1, "alpha2": alpha2},
        condition_satisfied=hyp,
        condition_mode="exact",
        flags={"alpha1_lt_alpha2": bool(alpha1 < alpha2)},
    )


def _qrk_horizon_c(summary: SpectralSummary, params: RobustParams) -> tuple[float, float, float]:
    """(C, condition_lhs, scale) for the single-quantile horizon bound."""
    m = summary.m
    q, b = _fl(params.q), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM = summary.sigma_max
    sM2 = sM**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    kappa_hat_inv2 = sq2 / (q * m)
    penalty = math.fsum(
        [b, 2.0 * sM2 * r / m, 4.0 * sM * math.sqrt(b * r) / math.sqrt(m)]
    )
    c_rewritten = math.fsum([p * kappa_hat_inv2, -(1.0 / q) * penalty])

    qb = _fl(params.q - params.beta)
    slack = _fl(1 - params.q - params.beta)
    penalty_raw = math.fsum(
        [
            b,
            2.0 * sM2 * b / (m * slack),
            4.0 * b * sM / (math.sqrt(m) * math.sqrt(slack)),
        ]
    )
    c_raw = math.fsum([qb * sq2 / (q * q * m), -(1.0 / q) * penalty_raw])
    scale = p * kappa_hat_inv2 + (1.0 / q) * penalty
    _agree(c_rewritten, c_raw, scale, "qrk_error_horizon C")

    lhs = (1.0 / p) * math.fsum(
        [b * m / sM2, 2.0 * r, 4.0 * math.sqrt(b * m) * math.sqrt(r) / sM]
    )
    lhs_raw = (q / qb) * math.fsum(
        [
            b * m / sM2,
            2.0 * b / slack,
            4.0 * b * math.sqrt(m) / (sM * math.sqrt(slack)),
        ]
    )
    _agree(lhs, lhs_raw, abs(lhs), "qrk_error_horizon condition lhs")
    return c_rewritten, lhs, scale


def qrk_error_horizon(
    summary: SpectralSummary, params: RobustParams, eta_inf: float
) -> BoundRecord:
    """Squared-error plateau of the single-quantile solver under noise.

    horizon = (1/C) * (2 r (1-q)/q + 1) * eta_inf^2, defined when C > 0.
    """
    _need(summary)
    if params.q0 is not None:
        raise InvalidRegimeError("qrk bounds take single-quantile params")
    if eta_inf < 0:
        raise ValueError("eta_inf must be nonnegative")
    c, lhs, _ = _qrk_horizon_c(summary, params)
    rhs = summary.sigma_q_beta_min.value ** 2 / summary.sigma_max**2
    exact = summary.exactness()
    verdict = _certify(lhs, rhs, exact)
    q, r = _fl(params.q), _fl(params.r)
    coef = 2.0 * r * (1.0 - q) / q + 1.0
    values = {"C": c, "coefficient": coef, "condition_lhs": lhs, "condition_rhs": rhs}
    flags = {"non_positive_C": bool(c <= 0.0)}
    if c > 0.0:
        values["horizon"] = (coef / c) * eta_inf * eta_inf
    if verdict is True and params.q > Fraction(1, 2):
        flags["coefficient_below_two"] = bool(coef < 2.0)
    return BoundRecord(
        name="qrk_error_horizon",
        values=values,
        condition_satisfied=verdict,
        condition_mode="exact" if exact else "sampled",
        flags=flags,
    )


def qrk_general_horizon(
    summary: SpectralSummary, params: RobustParams, epsilon: np.ndarray
) -> BoundRecord:
    """Horizon for an arbitrary total error vector epsilon.

    The noise allowance is the (beta*m + 1)-th largest magnitude of
    epsilon: the corruption budget absorbs the beta*m worst entries.
    """
    eps = np.asarray(epsilon, dtype=np.float64).ravel()
    k = int(feasible_level(params.beta, eps.size) * eps.size)
    if k + 1 > eps.size:
        raise InvalidRegimeError("beta*m + 1 exceeds the vector length")
    allowance = ordered_magnitude(eps, k + 1)
    record = qrk_error_horizon(summary, params, allowance)
    values = dict(record.values)
    values["noise_allowance"] = allowance
    return BoundRecord(
        name="qrk_general_horizon",
        values=values,
        condition_satisfied=record.condition_satisfied,
        condition_mode=record.condition_mode,
        flags=dict(record.flags),
    )


def eh_comparison_condition(
    summary: SpectralSummary, params: RobustParams, epsilon: np.ndarray
) -> BoundRecord:
    """When does the quantile horizon bound beat the plain one?

    Verdict: eps_(beta*m+1) / eps_(1) < sqrt(C m / (sigma_min^2 coef)).
    """
    _need(summary)
    eps = np.asarray(epsilon, dtype=np.float64).ravel()
    top = ordered_magnitude(eps, 1)
    if top == 0.0:
        raise ZeroCorruptionError("epsilon is zero; the comparison is vacuous")
    if summary.sigma_min < RANK_TOLERANCE * summary.sigma_max:
        raise FullRankViolationError("comparison needs full column rank")
    c, _, _ = _qrk_horizon_c(summary, params)
    if c <= 0.0:
        raise InvalidRegimeError("comparison requires C > 0")
    k = int(feasible_level(params.beta, eps.size) * eps.size)
    if k + 1 > eps.size:
        raise InvalidRegimeError("beta*m + 1 exceeds the vector length")
    lhs = ordered_magnitude(eps, k + 1) / top
    q, r = _fl(params.q), _fl(params.r)
    coef = 2.0 * r * (1.0 - q) / q + 1.0
    rhs = math.sqrt(c * summary.m / (summary.sigma_min**2 * coef))
    exact = summary.exactness()
    return BoundRecord(
        name="eh_comparison",
        values={"lhs_ratio": lhs, "rhs": rhs},
        condition_satisfied=_certify(lhs, rhs, exact),
        condition_mode="exact" if exact else "sampled",
        flags={"qrk_beats_rk": bool(lhs < rhs)},
    )


def timevar_constants(summary: SpectralSummary, params: RobustParams) -> BoundRecord:
    """Constants of the time-varying-noise analysis, for comparison only.

    Returns phi (its per-step decay), zeta, and the coefficient 1 + zeta m^2
    that multiplies the noise level there; our own coefficient stays
    bounded while this one grows with m.
    """
    _need(summary)
    if params.beta == 0:
        raise InvalidRegimeError("time-varying constants need beta > 0")
    m = summary.m
    q, b = _fl(params.q), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM = summary.sigma_max
    sq2 = summary.sigma_q_beta_min.value ** 2
    s = math.sqrt(_fl(1 - params.beta) / b)
    kappa_hat_inv2 = sq2 / (q * m)
    shared = (sM / (q * m)) * (1.0 / math.sqrt(b * m)) * math.fsum([r, r * r * s])
    phi = math.fsum(
        [
            kappa_hat_inv2 * p,
            -(sM**2 / (q * m)) * math.fsum([2.0 * r * s, r * r * s * s]),
            -shared,
        ]
    )
    zeta = math.fsum([shared, r * r / (q * b * m * m)])
    return BoundRecord(
        name="timevar_constants",
        values={
            "phi": phi,
            "zeta": zeta,
            "coefficient_on_noise_sq": 1.0 + zeta * m * m,
        },
        condition_satisfied=None,
        condition_mode=None,
    )


def timevar_side_conditions(
    summary: SpectralSummary, params: RobustParams
) -> tuple[bool, bool]:
    """The two sufficient conditions under which phi < C (horizon form).

    First: m small against 1/(4 sqrt(beta) sqrt(1-q-beta))
    + sqrt(1-beta)/(4 sqrt(1-q-beta)^3).  Second: r < 1 together with
    sigma_max^2 above (beta m / 2)(1-q-beta)/(sqrt(beta(1-q-beta)) - beta).
    """
    if params.beta == 0:
        raise InvalidRegimeError("time-varying conditions need beta > 0")
    b = _fl(params.beta)
    slack = _fl(1 - params.q - params.beta)
    first = summary.m < (
        1.0 / (4.0 * math.sqrt(b) * math.sqrt(slack))
        + math.sqrt(_fl(1 - params.beta)) / (4.0 * math.sqrt(slack) ** 3)
    )
    if params.r >= 1:
        return first, False
    denom = math.sqrt(b) * math.sqrt(slack) - b
    second = summary.sigma_max**2 > (b * summary.m / 2.0) * slack / denom
    return first, second


def qrask_coefficient_comparison(
    summary: SpectralSummary, params: RobustParams
) -> BoundRecord:
    """Noise coefficient of the sketched competitor vs ours.

    Ours is 2 r (1-q)/q + 1; the competitor's is larger except for at
    most a factor of 4 on its second term, which is the inequality the
    flag checks.
    """
    if params.beta == 0:
        raise InvalidRegimeError("the comparison needs beta > 0")
    m, n = summary.m, summary.n
    q, b = _fl(params.q), _fl(params.beta)
    r = _fl(params.r)
    sM = summary.sigma_max
    slack = _fl(1 - params.q - params.beta)
    ours = 2.0 * r * (1.0 - q) / q + 1.0
    ratio_term = 0.5 * math.fsum([r * (1.0 - b) ** 2 / (q * slack), 1.0])
    qrask = math.fsum(
        [
            (2.0 * r * (1.0 - b) / (q * math.sqrt(b)))
            * (1.0 + r * math.sqrt((1.0 - b) / b))
            * math.sqrt(n / m)
            * sM,
            ratio_term,
        ]
    )
    holds = bool(ours <= 4.0 * ratio_term)
    return BoundRecord(
        name="qrask_coefficient_comparison",
        values={"qrask_coefficient": qrask, "our_coefficient": ours},
        condition_satisfied=holds,
        condition_mode="exact",
        flags={"ratio_bound_holds": holds},
    )


def dqrk_rate_original(summary: SpectralSummary, params: RobustParams) -> BoundRecord:
    """Per-step decay constant of the double-quantile solver."""
    _need(summary, q0=True)
    if params.q0 is None:
        raise InvalidRegimeError("dqrk bounds need double-quantile params")
    m = summary.m
    q, q0, b = _fl(params.q), _fl(params.q0), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM2 = summary.sigma_max**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    sq02 = summary.sigma_q0_beta_min.value ** 2
    gap = _fl(params.q - params.q0)
    kappa_hat_inv2 = sq2 / (q * m)
    kappa0_hat_inv2 = sq02 / (q0 * m)

    press, press_raw = _qrk_corruption_terms(summary, params)
    c_rewritten = math.fsum(
        [
            p * math.fsum([kappa_hat_inv2, kappa0_hat_inv2 / (q * m)]),
            -(sM2 / (gap * m)) * press,
        ]
    )
    top = _fl(params.q - params.q0 - params.beta)
    c_raw = math.fsum(
        [
            top * sq2 / (gap * q * m),
            top * sq02 / (gap * q0 * q * m * m),
            -(sM2 / (gap * m)) * press_raw,
        ]
    )
    scale = p * (kappa_hat_inv2 + kappa0_hat_inv2 / (q * m)) + (sM2 / (gap * m)) * press
    _agree(c_rewritten, c_raw, scale, "dqrk_rate_original C")

    lhs = (q / top) * press
    rhs = math.fsum([sq2 / sM2, sq02 / (sM2 * q0 * m)])
    exact = summary.exactness(need_q0=True)
    return BoundRecord(
        name="dqrk_rate_original",
        values={"C": c_rewritten, "condition_lhs": lhs, "condition_rhs": rhs},
        condition_satisfied=_certify(lhs, rhs, exact),
        condition_mode="exact" if exact else "sampled",
    )


def dqrk_rate_alternative(
    summary: SpectralSummary,
    params: RobustParams,
    *,
    x0_on_hyperplane: bool | None = None,
) -> BoundRecord:
    """Variant dqrk decay constant with the milder corruption penalty.

    The underlying guarantee also assumes the start point lies on one of
    the row hyperplanes; pass what is known about that so the record can
    carry it.
    """
    _need(summary, q0=True)
    if params.q0 is None:
        raise InvalidRegimeError("dqrk bounds need double-quantile params")
    m = summary.m
    q, q0, b = _fl(params.q), _fl(params.q0), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM2 = summary.sigma_max**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    sq02 = summary.sigma_q0_beta_min.value ** 2
    gap = _fl(params.q - params.q0)
    top = _fl(params.q - params.q0 - params.beta)
    slack = _fl(1 - params.q - params.beta)
    kappa_hat_inv2 = sq2 / (q * m)
    kappa0_hat_inv2 = sq02 / (q0 * m)

    c_rewritten = math.fsum(
        [
            p * math.fsum([kappa_hat_inv2, kappa0_hat_inv2 / (q * m)]),
            -(1.0 / gap) * math.fsum([b, 2.0 * sM2 * r / m]),
        ]
    )
    c_raw = math.fsum(
        [
            top * sq2 / (gap * q * m),
            top * sq02 / (gap * q0 * q * m * m),
            -(1.0 / gap) * math.fsum([b, 2.0 * sM2 * b / (m * slack)]),
        ]
    )
    scale = p * (kappa_hat_inv2 + kappa0_hat_inv2 / (q * m)) + (1.0 / gap) * (
        b + 2.0 * sM2 * r / m
    )
    _agree(c_rewritten, c_raw, scale, "dqrk_rate_alternative C")

    lhs = (q / top) * math.fsum([b * m / sM2, 2.0 * r])
    rhs = math.fsum([sq2 / sM2, sq02 / (sM2 * q0 * m)])
    exact = summary.exactness(need_q0=True)
    flags = {}
    if x0_on_hyperplane is not None:
        flags["x0_on_hyperplane"] = bool(x0_on_hyperplane)
    return BoundRecord(
        name="dqrk_rate_alternative",
        values={"C": c_rewritten, "condition_lhs": lhs, "condition_rhs": rhs},
        condition_satisfied=_certify(lhs, rhs, exact),
        condition_mode="exact" if exact else "sampled",
        flags=flags,
    )


def compare_dqrk_rates(summary: SpectralSummary, params: RobustParams) -> BoundRecord:
    """Head-to-head of the two dqrk decay factors, same gate as qrk."""
    _need(summary, q0=True)
    if params.q0 is None:
        raise InvalidRegimeError("dqrk bounds need double-quantile params")
    m = summary.m
    q, q0, b = _fl(params.q), _fl(params.q0), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM2 = summary.sigma_max**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    sq02 = summary.sigma_q0_beta_min.value ** 2
    gap = _fl(params.q - params.q0)
    base = p * math.fsum([sq2 / (q * m), sq02 / (q0 * m * q * m)])
    press, _ = _qrk_corruption_terms(summary, params)
    alpha1 = math.fsum([1.0, -base, (1.0 / gap) * math.fsum([b, 2.0 * sM2 * r / m])])
    alpha2 = math.fsum([1.0, -base, (sM2 / (gap * m)) * press])
    hyp = _comparison_hypotheses(summary, params)
    return BoundRecord(
        name="dqrk_rate_comparison",
        values={"alpha1": alpha1, "alpha2": alpha2},
        condition_satisfied=hyp,
        condition_mode="exact",
        flags={"alpha1_lt_alpha2": bool(alpha1 < alpha2)},
    )


def dqrk_error_horizon(
    summary: SpectralSummary, params: RobustParams, eta_inf: float
) -> BoundRecord:
    """Squared-error plateau of the double-quantile solver under noise.

    The per-step contraction here induces the plateau
    (1/C)(2 r (1-q)/(q-q0) + 1) eta_inf^2, defined when C > 0.
    """
    _need(summary)
    if params.q0 is None:
        raise InvalidRegimeError("dqrk bounds need double-quantile params")
    if eta_inf < 0:
        raise ValueError("eta_inf must be nonnegative")
    m = summary.m
    q, b = _fl(params.q), _fl(params.beta)
    p, r = _fl(params.p), _fl(params.r)
    sM = summary.sigma_max
    sM2 = sM**2
    sq2 = summary.sigma_q_beta_min.value ** 2
    gap = _fl(params.q - params.q0)
    top = _fl(params.q - params.q0 - params.beta)
    slack = _fl(1 - params.q - params.beta)
    kappa_hat_inv2 = sq2 / (q * m)
    penalty = math.fsum(
        [b, 2.0 * sM2 * r / m, 4.0 * sM * math.sqrt(b * r) / math.sqrt(m)]
    )
    c_rewritten = math.fsum([p * kappa_hat_inv2, -(1.0 / gap) * penalty])
    penalty_raw = math.fsum(
        [
            b,
            2.0 * sM2 * b / (m * slack),
            4.0 * b * sM / (math.sqrt(m) * math.sqrt(slack)),
        ]
    )
    c_raw = math.fsum([top * sq2 / (gap * q * m), -(1.0 / gap) * penalty_raw])
    scale = p * kappa_hat_inv2 + (1.0 / gap) * penalty
    _agree(c_rewritten, c_raw, scale, "dqrk_error_horizon C")

    lhs = (q / top) * math.fsum(
        [b * m / sM2, 2.0 * r, 4.0 * math.sqrt(b * m) * math.sqrt(r) / sM]
    )
    rhs = sq2 / sM2
    exact = summary.exactness()
    verdict = _certify(lhs, rhs, exact)
    coef = 2.0 * r * (1.0 - q) / gap + 1.0
    values = {"C": c_rewritten, "coefficient": coef, "condition_lhs": lhs, "condition_rhs": rhs}
    flags = {"non_positive_C": bool(c_rewritten <= 0.0)}
    if c_rewritten > 0.0:
        values["horizon"] = (coef / c_rewritten) * eta_inf * eta_inf
    return BoundRecord(
        name="dqrk_error_horizon",
        values=values,
        condition_satisfied=verdict,
        condition_mode="exact" if exact else "sampled",
        flags=flags,
    )


@dataclass(frozen=True)
class BoundReport:
    """All applicable certificates for one (A, beta, q, q0)."""

    params: RobustParams
    summary: SpectralSummary
    records: tuple[BoundRecord, ...]

    def record(self, name: str) -> BoundRecord:
        for rec in self.records:
            if rec.name == name:
                return rec
        raise KeyError(name)

    def to_dict(self) -> dict:
        sq = self.summary.sigma_q_beta_min
        sq0 = self.summary.sigma_q0_beta_min
        return {
            "schema_version": 1,
            "params": {
                "beta": str(self.params.beta),
                "q": str(self.params.q),
                "q0": None if self.params.q0 is None else str(self.params.q0),
                "p": str(self.params.p),
                "r": str(self.params.r),
            },
            "spectral": {
                "m": self.summary.m,
                "n": self.summary.n,
                "sigma_max": self.summary.sigma_max,
                "sigma_min": self.summary.sigma_min,
                "frobenius_sq": self.summary.frobenius_sq,
                "sigma_q_beta_min": None
                if sq is None
                else {
                    "value": sq.value,
                    "mode": sq.mode,
                    "subsets_examined": sq.subsets_examined,
                    "is_upper_bound_only": sq.is_upper_bound_only,
                },
                "sigma_q0_beta_min": None
                if sq0 is None
                else {
                    "value": sq0.value,
                    "mode": sq0.mode,
                    "subsets_examined": sq0.subsets_examined,
                    "is_upper_bound_only": sq0.is_upper_bound_only,
                },
            },
            "records": [rec.to_dict() for rec in self.records],
        }


def build_report(
    summary: SpectralSummary,
    params: RobustParams,
    *,
    eta_inf: float | None = None,
    epsilon: np.ndarray | None = None,
    row_norms: np.ndarray | None = None,
    x0_on_hyperplane: bool | None = None,
) -> BoundReport:
    """Evaluate every certificate that applies, tolerating regime gaps.

    Operations whose regime preconditions fail are recorded with a
    ``not_applicable`` flag instead of aborting the report.
    """
    records: list[BoundRecord] = []

    def attempt(name: str, thunk) -> None:
        try:
            records.append(thunk())
        except (InvalidRegimeError, ZeroCorruptionError, FullRankViolationError) as exc:
            records.append(
                BoundRecord(
                    name=name,
                    values={},
                    condition_satisfied=None,
                    condition_mode=None,
                    flags={"not_applicable": True, "reason": str(exc)},
                )
            )

    if epsilon is not None:
        attempt("rk_horizon", lambda: rk_horizon(summary, epsilon, row_norms))

    qrk_params = (
        params if params.q0 is None else robust_params(params.beta, params.q)
    )
    attempt("qrk_rate_original", lambda: qrk_rate_original(summary, qrk_params))
    attempt("qrk_rate_alternative", lambda: qrk_rate_alternative(summary, qrk_params))
    attempt("qrk_rate_comparison", lambda: compare_qrk_rates(summary, qrk_params))
    if eta_inf is not None:
        attempt(
            "qrk_error_horizon",
            lambda: qrk_error_horizon(summary, qrk_params, eta_inf),
        )
    if epsilon is not None:
        attempt(
            "qrk_general_horizon",
            lambda: qrk_general_horizon(summary, qrk_params, epsilon),
        )
        attempt(
            "eh_comparison",
            lambda: eh_comparison_condition(summary, qrk_params, epsilon),
        )
    attempt("timevar_constants", lambda: timevar_constants(summary, qrk_params))
    attempt(
        "qrask_coefficient_comparison",
        lambda: qrask_coefficient_comparison(summary, qrk_params),
    )

    if params.q0 is not None:
        attempt("dqrk_rate_original", lambda: dqrk_rate_original(summary, params))
        attempt(
            "dqrk_rate_alternative",
            lambda: dqrk_rate_alternative(
                summary, params, x0_on_hyperplane=x0_on_hyperplane
            ),
        )
        attempt("dqrk_rate_comparison", lambda: compare_dqrk_rates(summary, params))
        if eta_inf is not None:
            attempt(
                "dqrk_error_horizon",
                lambda: dqrk_error_horizon(summary, params, eta_inf),
            )

    return BoundReport(params=params, summary=summary, records=tuple(records))
