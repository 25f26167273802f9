"""Closed-form analysis of solution counts for Model RB instances.

Everything works in terms of the *effective* tightness p_eff = t_nogoods/d^k
realised after rounding, so the formulas line up with what the generator
actually builds.  Counts are handled in natural-log space wherever they can
overflow a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .rb_model import Assignment, RbParams, _check_divisor, derive_sizes

PREDICT_YES = "YES"
PREDICT_NO = "NO"
PREDICT_CRITICAL = "CRITICAL"

DEFAULT_CRITICAL_BAND = 0.005


def _divisor_factor(divisor: float) -> float:
    _check_divisor(divisor)
    return 1.0 if divisor == math.inf else 1.0 - 1.0 / divisor


def critical_tightness(alpha: float, r: float, divisor: float = 2) -> float:
    """Tightness where instances stop having at least d^(n/divisor) solutions.

    Equals 1 - exp(-(alpha/r) * (1 - 1/divisor)); an infinite divisor gives
    the satisfiability threshold 1 - exp(-alpha/r).
    """
    if not alpha > 0 or not r > 0:
        raise ValueError("alpha and r must be positive")
    return -math.expm1(-(alpha / r) * _divisor_factor(divisor))


def critical_density(alpha: float, p: float, divisor: float = 2) -> float:
    """Constraint density where the count drops below d^(n/divisor).

    Equals -alpha * (1 - 1/divisor) / ln(1 - p); inverse of
    critical_tightness in p <-> r.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return -alpha * _divisor_factor(divisor) / math.log1p(-p)


class ExpectedCount(NamedTuple):
    log_expected: float
    expected: float  # math.inf when exp(log_expected) overflows


def expected_count(n: int, d: int, m: int, p_eff: float) -> ExpectedCount:
    """Mean solution count d^n * (1 - p_eff)^m over the instance distribution."""
    if n < 1 or d < 2 or m < 0:
        raise ValueError("need n >= 1, d >= 2, m >= 0")
    if not 0.0 <= p_eff < 1.0:
        raise ValueError("p_eff must lie in [0, 1)")
    log_e = n * math.log(d) + (m * math.log1p(-p_eff) if m else 0.0)
    try:
        linear = math.exp(log_e)
    except OverflowError:
        linear = math.inf
    return ExpectedCount(log_e, linear)


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


class Threshold(NamedTuple):
    """d^(n/divisor) as a float plus the exact pair used for integer tests."""

    value: float
    d_pow_n: int
    divisor: int


def threshold(d: int, n: int, divisor: int = 2) -> Threshold:
    """The count level d^(n/divisor); compare count**divisor >= d_pow_n exactly."""
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    _check_divisor(divisor)
    if divisor == math.inf:
        raise ValueError("threshold needs a finite divisor")
    divisor = int(divisor)
    try:
        value = math.exp(n * math.log(d) / divisor)
    except OverflowError:
        value = math.inf
    return Threshold(value=value, d_pow_n=d ** n, divisor=divisor)


def int_nth_root(x: int, t: int) -> int:
    """floor(x ** (1/t)) by Newton iteration on integers."""
    if x < 0 or t < 1:
        raise ValueError("need x >= 0 and t >= 1")
    if x == 0:
        return 0
    if t == 1:
        return x
    g = 1 << ((x.bit_length() + t - 1) // t)
    while True:
        ng = ((t - 1) * g + x // g ** (t - 1)) // t
        if ng >= g:
            break
        g = ng
    while g ** t > x:
        g -= 1
    while (g + 1) ** t <= x:
        g += 1
    return g


def threshold_ceiling(d: int, n: int, divisor: int = 2) -> int:
    """Smallest integer count meeting the threshold: ceil(d^(n/divisor))."""
    th = threshold(d, n, divisor)
    root = int_nth_root(th.d_pow_n, th.divisor)
    return root if root ** th.divisor == th.d_pow_n else root + 1


# ---------------------------------------------------------------------------
# the moment-based estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    """Point estimate and relative-width interval for a solution count.

    The interval ((1-delta)*E, (1+delta)*E) is carried both linearly and in
    log space so it stays meaningful when E overflows a float.  ``predicted``
    is YES/NO according to the side of the critical tightness the parameter
    point sits on, or CRITICAL inside the configured band around it, where
    the interval guarantee breaks down.
    """

    log_expected: float
    expected: float
    delta: float
    interval_low: float
    interval_high: float
    log_interval_low: float
    log_interval_high: float
    divisor: int
    predicted: str


def ae_count(params: RbParams, delta: float, divisor: int = 2,
             critical_band: float = DEFAULT_CRITICAL_BAND) -> Estimate:
    """Estimate the solution count of a random instance at ``params``.

    Returns the distribution mean E at the effective tightness together with
    the interval ((1-delta)*E, (1+delta)*E).  Away from the critical
    tightness the exact count concentrates in this interval as n grows; the
    CRITICAL prediction flags the band |p_eff - p_cr| <= critical_band where
    no such guarantee holds.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if critical_band < 0:
        raise ValueError("critical_band must be >= 0")
    sizes = derive_sizes(params)
    p_eff = sizes.t_nogoods / sizes.d ** params.k
    log_e, linear = expected_count(params.n, sizes.d, sizes.m, p_eff)
    p_cr = critical_tightness(params.alpha, params.r, divisor)
    if abs(p_eff - p_cr) <= critical_band:
        predicted = PREDICT_CRITICAL
    elif p_eff < p_cr:
        predicted = PREDICT_YES
    else:
        predicted = PREDICT_NO
    low = (1.0 - delta) * linear if linear < math.inf else math.inf
    high = (1.0 + delta) * linear if linear < math.inf else math.inf
    log_low = log_e + (math.log1p(-delta) if delta < 1.0 else -math.inf)
    return Estimate(
        log_expected=log_e,
        expected=linear,
        delta=delta,
        interval_low=low,
        interval_high=high,
        log_interval_low=log_low,
        log_interval_high=log_e + math.log1p(delta),
        divisor=int(divisor),
        predicted=predicted,
    )


# ---------------------------------------------------------------------------
# assignment pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityStats:
    """Agreement between two assignments of the same n variables."""

    similarity_number: int   # positions with equal values, n - hamming
    similarity_degree: float  # similarity_number / n
    hamming: int


def similarity(a: Assignment, b: Assignment) -> SimilarityStats:
    if len(a) != len(b) or not a:
        raise ValueError("assignments must have equal, positive length")
    hamming = sum(1 for x, y in zip(a, b) if x != y)
    s_num = len(a) - hamming
    return SimilarityStats(s_num, s_num / len(a), hamming)


class PairProbabilities(NamedTuple):
    joint_per_constraint: float
    conditional_per_constraint: float


def pair_probabilities(similarity_number: int, n: int, k: int, d: int,
                       p_eff: float) -> PairProbabilities:
    """Per-constraint satisfaction probabilities for an assignment pair.

    For a random constraint, either its scope lands inside the agreement set
    of the pair (probability C(S, k)/C(n, k), both projections equal, one
    allowed-tuple event) or the projections differ and two distinct tuples
    must both be allowed.  Exact at finite d: with A = (1 - p_eff) * d^k
    allowed tuples, the second case has both-allowed probability
    (1 - p_eff) * q with q = (A - 1)/(d^k - 1).
    """
    if not 0 <= similarity_number <= n:
        raise ValueError("similarity_number must lie in [0, n]")
    if k < 2 or k > n or d < 2:
        raise ValueError("need 2 <= k <= n and d >= 2")
    if not 0.0 <= p_eff < 1.0:
        raise ValueError("p_eff must lie in [0, 1)")
    dk = d ** k
    w = math.comb(similarity_number, k) / math.comb(n, k)
    q = ((1.0 - p_eff) * dk - 1.0) / (dk - 1.0)
    joint = w * (1.0 - p_eff) + (1.0 - w) * (1.0 - p_eff) * q
    conditional = w + (1.0 - w) * q
    return PairProbabilities(joint, conditional)


def _log_sum_exp(values: list[float]) -> float:
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(sum(math.exp(v - top) for v in values))


def conditional_expected_count(n: int, k: int, d: int, m: int, p_eff: float) -> float:
    """log of the mean count among instances satisfied by a fixed assignment.

    Sums, over the similarity number S to the fixed assignment, the C(n, S)
    * (d-1)^(n-S) assignments at that similarity weighted by the m-fold
    conditional pair probability.  Computed with log-sum-exp; returns the
    natural log.
    """
    if n < 1 or d < 2 or m < 0 or k < 2 or k > n:
        raise ValueError("need n >= 1, d >= 2, m >= 0, 2 <= k <= n")
    if not 0.0 <= p_eff < 1.0:
        raise ValueError("p_eff must lie in [0, 1)")
    if m == 0 or p_eff == 0.0:
        # every term has conditional probability 1; the sum telescopes to d^n
        return n * math.log(d)
    terms = []
    log_d1 = math.log(d - 1) if d > 1 else 0.0
    for s_num in range(n + 1):
        cond = pair_probabilities(s_num, n, k, d, p_eff).conditional_per_constraint
        if cond <= 0.0:
            continue
        terms.append(math.log(math.comb(n, s_num))
                     + (n - s_num) * log_d1
                     + m * math.log(cond))
    return _log_sum_exp(terms) if terms else -math.inf


def second_moment_ratio(n: int, k: int, d: int, m: int, p_eff: float) -> float:
    """Mean count over conditioned mean count, in (0, 1]; near 1 means the
    count concentrates around its mean."""
    log_e = expected_count(n, d, m, p_eff).log_expected
    log_cond = conditional_expected_count(n, k, d, m, p_eff)
    return math.exp(log_e - log_cond)


# ---------------------------------------------------------------------------
# large-deviation weight of pair similarity
# ---------------------------------------------------------------------------


def h_eval(s: float, n: int, k: int, alpha: float, r: float, p: float) -> float:
    """Log-scale weight of assignment pairs at similarity degree s.

    h(s) = [r * ln(1 + p*s^k/(1-p)) - alpha*s] * n * ln(n).  Negative for all
    s in (0, 1] exactly when pair mass concentrates on near-independent pairs,
    which is what makes the mean-count estimate trustworthy.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if n < 2 or k < 2:
        raise ValueError("need n >= 2 and k >= 2")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not alpha > 0 or not r > 0:
        raise ValueError("alpha and r must be positive")
    inner = r * math.log1p(p * s ** k / (1.0 - p)) - alpha * s
    return inner * n * math.log(n)
