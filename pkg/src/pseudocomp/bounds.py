"""Committee potentials, error bounds and sufficient conditions.

All logarithms are natural.  Calculators that can be outside their range of
validity return :class:`Inapplicable` instead of a number.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .committee import (
    TieRule,
    as_committee,
    balance_parameter,
    is_absolutely_balanced,
    peer_accuracies,
    pseudo_competences,
)
from .errors import DomainError

__all__ = [
    "Inapplicable",
    "BoundReport",
    "ConsistencyConditions",
    "MV_THRESHOLD",
    "log_odds",
    "committee_potential",
    "pseudo_potential",
    "empirical_pseudo_potential",
    "improved_upper",
    "ks_upper",
    "pnb_upper",
    "pnb_lower",
    "balance_constant",
    "ratio_lower_bound",
    "corollary_condition",
    "deviation_ratio",
    "deviation_threshold",
    "deviation_condition",
    "weight_deviation",
    "sampling_constant",
    "high_sampling_bound",
    "block_error_bound",
    "consistency_conditions",
    "confidence_event",
    "bound_report",
]

MV_THRESHOLD = math.sqrt(math.log(2.0) / 8.0)


@dataclass(frozen=True)
class Inapplicable:
    """A bound whose hypotheses do not hold; ``reason`` names the violation."""

    reason: str


def log_odds(p):
    """``log(p / (1 - p))`` with ``+-inf`` at the endpoints."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p) - np.log1p(-p)


def _potential(factor, odds_of):
    factor = np.asarray(factor, dtype=float)
    lo = log_odds(odds_of)
    terms = np.where(factor == 0.0, 0.0, factor * np.where(factor == 0.0, 0.0, lo))
    return float(terms.sum())


def committee_potential(p):
    """``sum_i (p_i - 1/2) log(p_i / q_i)``; ``inf`` if some ``p_i`` is 0 or 1."""
    p = np.asarray(p, dtype=float)
    return _potential(p - 0.5, p)


def pseudo_potential(c, tie=TieRule.FAIR):
    """True advantages times the log-odds of the pseudo competences."""
    c = as_committee(c)
    return _potential(c.eps, pseudo_competences(c, tie))


def empirical_pseudo_potential(p_tilde):
    """Potential with estimated pseudo competences in both factors."""
    p_tilde = np.asarray(p_tilde, dtype=float)
    return _potential(p_tilde - 0.5, p_tilde)


def improved_upper(p):
    """``prod_i sqrt(4 p_i q_i)``: upper bound on the naive Bayes error."""
    p = np.asarray(p, dtype=float)
    return float(np.prod(np.sqrt(4.0 * p * (1.0 - p))))


def ks_upper(phi):
    return math.exp(-phi / 2.0)


def pnb_upper(phi_tilde):
    return math.exp(-phi_tilde / 2.0)


def pnb_lower(phi_tilde):
    """``(3/4) / (1 + exp(2 phi + 4 sqrt(phi)))``, evaluated without overflow."""
    if phi_tilde < 0:
        raise DomainError("the lower bound needs a non-negative potential")
    return 0.75 * float(expit(-(2.0 * phi_tilde + 4.0 * math.sqrt(phi_tilde))))


def balance_constant(x):
    """``C(x) = 4x / ((1 - 4x^2) log((1 + 2x) / (1 - 2x)))``, even in ``x``.

    ``C(0) = 1`` by continuity; a short series is used for ``|x| < 1e-4``.
    Diverges at ``|x| = 1/2``.
    """
    x = abs(float(x))
    if x > 0.5:
        raise DomainError(f"C(x) is defined for |x| <= 1/2, got {x}")
    if x == 0.5:
        return math.inf
    u = 2.0 * x
    if x < 1e-4:
        u2 = u * u
        return 1.0 / ((1.0 - u2) * (1.0 + u2 / 3.0 + u2 * u2 / 5.0))
    return u / ((1.0 - u * u) * math.atanh(u))


def ratio_lower_bound(gamma, a_n):
    """``1 - C(1/2 - gamma) * (1 - a_n) / (a_n - 1/2)``.

    Lower bound on the ratio of pseudo to true potential for an absolutely
    balanced committee whose majority vote has consistency rate ``a_n``.
    """
    if not 0.0 < gamma < 0.5:
        raise DomainError(f"balancing parameter must lie in (0, 1/2), got {gamma}")
    if not 0.0 <= a_n <= 1.0:
        raise DomainError(f"consistency rate must lie in [0, 1], got {a_n}")
    if a_n <= 0.5:
        return Inapplicable(f"consistency rate {a_n} does not exceed 1/2")
    rho = (1.0 - a_n) / (a_n - 0.5)
    return 1.0 - balance_constant(0.5 - gamma) * rho


def corollary_condition(c, delta, gamma, tie=TieRule.FAIR):
    """Sufficient condition for ``pseudo_potential / potential >= 1 - delta``.

    Every expert's peers must satisfy
    ``(1 - p_peer) / (p_peer - 1/2) <= delta / C(1/2 - gamma)``.
    """
    c = as_committee(c)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not is_absolutely_balanced(c, gamma):
        raise DomainError(f"committee is not absolutely balanced at gamma={gamma}")
    p_peer, q_peer = peer_accuracies(c, tie)
    if np.any(p_peer <= 0.5):
        raise DomainError("condition undefined: some peer majority is not better than chance")
    lhs = q_peer / (p_peer - 0.5)
    return bool(np.all(lhs <= delta / balance_constant(0.5 - gamma)))


def deviation_ratio(gamma):
    """``R(gamma) = 2 gamma (1 - gamma) / (1 - 2 gamma)``."""
    if not 0.0 < gamma < 0.5:
        raise DomainError(f"balancing parameter must lie in (0, 1/2), got {gamma}")
    return 2.0 * gamma * (1.0 - gamma) / (1.0 - 2.0 * gamma)


def deviation_threshold(gamma, epsilon):
    """Peer accuracy needed so NB and PNB weights differ by at most ``epsilon/2`` each."""
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return 0.5 + 1.0 / (2.0 + epsilon * deviation_ratio(gamma))


def deviation_condition(c, gamma, epsilon, tie=TieRule.FAIR):
    """True iff ``min_i p_peer_i`` reaches :func:`deviation_threshold`.

    Whenever this holds for an absolutely balanced committee,
    ``weight_deviation(c) <= epsilon * N / 2``.
    """
    c = as_committee(c)
    threshold = deviation_threshold(gamma, epsilon)
    p_peer, _ = peer_accuracies(c, tie)
    return bool(p_peer.min() >= threshold)


def weight_deviation(c, tie=TieRule.FAIR):
    """L1 distance between NB and PNB weight vectors."""
    c = as_committee(c)
    return float(np.abs(log_odds(c.p) - log_odds(pseudo_competences(c, tie))).sum())


def sampling_constant(delta, n, tasks):
    """``(12 / T) log(8 N / delta)``."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return 12.0 / tasks * math.log(8.0 * n / delta)


def high_sampling_bound(phi, n, delta, epsilon):
    """``delta + exp(-(2 phi - epsilon N)^2 / (8 phi))`` without any checks."""
    if phi <= 0:
        return delta + 1.0
    return delta + math.exp(-((2.0 * phi - epsilon * n) ** 2) / (8.0 * phi))


def block_error_bound(phi, n, tasks, delta, epsilon, rho_n=None, gamma=None):
    """Error bound for the block rule after ``tasks`` estimation tasks.

    The ``epsilon`` window and, when ``rho_n`` / ``gamma`` are given, the
    consistency and balance requirements are checked first; the first
    violated one is returned as :class:`Inapplicable`.
    """
    const = sampling_constant(delta, n, tasks)
    upper = min(5.0, 2.0 * phi / n)
    if not epsilon < upper:
        return Inapplicable(f"epsilon={epsilon} is not below min(5, 2 phi / N)={upper}")
    if rho_n is not None:
        lower = (rho_n * const) ** (1.0 / 3.0)
        if not epsilon > lower:
            return Inapplicable(f"epsilon={epsilon} is not above (rho_N C)^(1/3)={lower}")
    if gamma is not None:
        need = const * (2.0 / (math.sqrt(4.0 * epsilon + 1.0) - 1.0)) ** 2
        if not gamma > need:
            return Inapplicable(f"gamma={gamma} is not above {need}")
    return high_sampling_bound(phi, n, delta, epsilon)


@dataclass(frozen=True)
class ConsistencyConditions:
    nb_sum: float
    mv_sum: float
    mv_threshold: float
    both_hold_at_n: bool


def consistency_conditions(p):
    """Finite-``N`` statistics behind the low-sampling consistency result.

    ``nb_sum = sum(eps^2) / sqrt(N)`` should diverge along the sequence; only
    its current value is reported.  ``both_hold_at_n`` checks the majority
    condition ``sum(eps) / sqrt(N) >= sqrt(log(2) / 8)``.
    """
    eps = np.asarray(p, dtype=float) - 0.5
    root = math.sqrt(eps.shape[0]) if eps.shape[0] else 1.0
    mv_sum = float(eps.sum() / root)
    return ConsistencyConditions(
        float((eps**2).sum() / root), mv_sum, MV_THRESHOLD, mv_sum >= MV_THRESHOLD
    )


def confidence_event(p_tilde_tau, delta, tasks_seen=None):
    """Whether ``exp(-phi~(tau) / 2) <= delta / 2`` for the running estimates.

    Compared in log form, ``phi~ >= 2 log(2 / delta)``.  Pass ``tasks_seen``
    to clamp raw estimates the same way the empirical rules do.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    est = np.asarray(p_tilde_tau, dtype=float)
    if not np.all((est >= 0.0) & (est <= 1.0)):
        raise DomainError("estimates must lie in [0, 1]")
    if tasks_seen is not None:
        lo = 1.0 / (tasks_seen + 2)
        est = np.clip(est, lo, 1.0 - lo)
    need = 2.0 * math.log(2.0 / delta)
    return empirical_pseudo_potential(est) >= need * (1.0 - 1e-12)


@dataclass(frozen=True)
class BoundReport:
    """Potentials and bounds for one committee.

    ``vacuous`` lists the probability bounds that are ``>= 1``.
    """

    p: tuple
    tie: str
    phi: float
    phi_tilde: float
    improved_upper: float
    ks_upper: float
    pnb_upper: float
    pnb_lower: float | None
    ratio_lower: float | Inapplicable | None = None
    gamma: float | None = None
    a_n: float | None = None
    vacuous: tuple = field(default=())

    def as_dict(self):
        out = dict(self.__dict__)
        out["vacuous"] = list(self.vacuous)
        out["p"] = list(self.p)
        if isinstance(self.ratio_lower, Inapplicable):
            out["ratio_lower"] = None
            out["ratio_lower_inapplicable"] = self.ratio_lower.reason
        return out


def bound_report(c, tie=TieRule.FAIR, gamma=None, a_n=None):
    """Collect every potential and bound for ``c``.

    ``gamma`` defaults to :func:`balance_parameter` when ``a_n`` is given and
    the committee is balanced.
    """
    c = as_committee(c)
    tie = TieRule.coerce(tie)
    phi = committee_potential(c.p)
    phi_t = pseudo_potential(c, tie) if c.n >= 2 else 0.0
    values = {
        "improved_upper": improved_upper(c.p),
        "ks_upper": ks_upper(phi),
        "pnb_upper": pnb_upper(phi_t),
    }
    lower = pnb_lower(phi_t) if phi_t >= 0 else None
    ratio = None
    if a_n is not None:
        if gamma is None:
            gamma = balance_parameter(c)
        ratio = (
            ratio_lower_bound(gamma, a_n)
            if 0.0 < gamma < 0.5
            else Inapplicable(f"committee is not absolutely balanced (gamma={gamma})")
        )
    vacuous = tuple(name for name, v in values.items() if v >= 1.0)
    return BoundReport(
        p=tuple(float(v) for v in c.p),
        tie=tie.value,
        phi=phi,
        phi_tilde=phi_t,
        pnb_lower=lower,
        ratio_lower=ratio,
        gamma=gamma,
        a_n=a_n,
        vacuous=vacuous,
        **values,
    )
