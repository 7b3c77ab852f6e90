"""Closed-form analytics of a committee with known competences.

A committee is a vector ``p`` of true competences: expert ``i`` reports the
hidden state correctly with probability ``p[i]``, independently of the others
given the state.  Everything here is exact, built on the Poisson-binomial law
of the number of correct experts.

Tie handling follows :class:`TieRule`.  Exact quantities are computed under
the convention that the hidden state is ``+1``; by symmetry of the uniform
prior this is the unconditional value for ``TieRule.FAIR``.  The
deterministic rules give the value conditioned on ``Y = +1``, where a tie
resolved towards ``+1`` counts as correct.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "TieRule",
    "Committee",
    "PeerProfile",
    "ConsistencyRate",
    "validate_committee",
    "as_committee",
    "is_absolutely_balanced",
    "balance_parameter",
    "poisson_binomial_pmf",
    "majority_accuracy",
    "majority_error",
    "peer_accuracy",
    "peer_accuracies",
    "pseudo_competence",
    "pseudo_competences",
    "consistency_rate",
    "ordering_margin",
    "equally_spaced",
]


class TieRule(enum.Enum):
    """How an exactly balanced vote is resolved."""

    FAIR = "fair"
    POSITIVE = "pos"
    NEGATIVE = "neg"

    @property
    def tie_mass(self):
        """Probability that a tie resolves to the true state when ``Y = +1``."""
        return {TieRule.FAIR: 0.5, TieRule.POSITIVE: 1.0, TieRule.NEGATIVE: 0.0}[self]

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise DomainError(f"unknown tie rule {value!r}") from None


@dataclass(frozen=True, eq=False)
class Committee:
    """Validated vector of true competences.

    Use :func:`validate_committee` to build one.
    """

    p: np.ndarray

    @property
    def n(self):
        return self.p.shape[0]

    @property
    def q(self):
        return 1.0 - self.p

    @property
    def eps(self):
        """Signed advantage ``p_i - 1/2`` of each expert."""
        return self.p - 0.5

    @property
    def good(self):
        """True when every expert is strictly better than a fair coin."""
        return bool(np.all(self.p > 0.5))

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Committee(p={self.p.tolist()!r}, good={self.good})"


@dataclass(frozen=True)
class PeerProfile:
    """Majority-vote accuracy of everyone except expert ``index``.

    ``q_peer`` is computed from the lower tail directly rather than as
    ``1 - p_peer`` so it stays accurate when the peers are nearly perfect.
    """

    index: int
    p_peer: float
    q_peer: float

    @property
    def eps_peer(self):
        return self.p_peer - 0.5


class ConsistencyRate(NamedTuple):
    rate: float
    horizon: int
    argmin: int


def validate_committee(p):
    """Check a competence vector and wrap it as a :class:`Committee`.

    Raises
    ------
    DomainError
        If the vector is empty, not one-dimensional, or has an entry outside
        ``[0, 1]`` (NaN included).
    """
    arr = np.array(p, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise DomainError("a committee needs a non-empty 1-d competence vector")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        bad = arr[~((arr >= 0.0) & (arr <= 1.0))]
        raise DomainError(f"competences must lie in [0, 1], got {bad.tolist()}")
    arr.setflags(write=False)
    return Committee(arr)


def as_committee(c):
    return c if isinstance(c, Committee) else validate_committee(c)


def is_absolutely_balanced(c, gamma):
    """True iff every competence lies strictly inside ``(gamma, 1 - gamma)``."""
    c = as_committee(c)
    if not 0.0 < gamma < 0.5:
        raise DomainError(f"balancing parameter must lie in (0, 1/2), got {gamma}")
    return bool(np.all((c.p > gamma) & (c.p < 1.0 - gamma)))


def balance_parameter(c):
    """Supremum of the admissible balancing parameters, ``min_i min(p_i, q_i)``.

    The committee is absolutely balanced for every ``gamma`` below this value.
    """
    c = as_committee(c)
    return float(np.min(np.minimum(c.p, c.q)))


def poisson_binomial_pmf(probs):
    """Distribution of the number of successes among independent Bernoullis.

    Exact iterative convolution, accumulated in extended precision.

    >>> poisson_binomial_pmf([0.6, 0.7]).round(12).tolist()
    [0.12, 0.46, 0.42]
    """
    return _pmf(probs).astype(float)


def _pmf(probs):
    probs = np.asarray(probs, dtype=float).reshape(-1)
    if not np.all((probs >= 0.0) & (probs <= 1.0)):
        raise DomainError("success probabilities must lie in [0, 1]")
    pmf = np.zeros(probs.shape[0] + 1, dtype=np.longdouble)
    pmf[0] = 1.0
    for k, pk in enumerate(probs.astype(np.longdouble), start=1):
        head = pmf[:k].copy()
        pmf[:k] = head * (1 - pk)
        pmf[1 : k + 1] += head * pk
    return pmf


def _vote_split(probs, tie):
    """``(P(majority right), P(majority wrong))`` for the given voters."""
    pmf = _pmf(probs)
    n = pmf.shape[0] - 1
    m = np.longdouble(tie.tie_mass)
    if n % 2:
        half = n // 2
        right = pmf[half + 1 :].sum()
        wrong = pmf[: half + 1].sum()
    else:
        half = n // 2
        right = pmf[half + 1 :].sum() + m * pmf[half]
        wrong = pmf[:half].sum() + (1 - m) * pmf[half]
    return float(right), float(wrong)


def majority_accuracy(c, tie=TieRule.FAIR):
    """Probability that the plain majority vote recovers the hidden state."""
    c = as_committee(c)
    return _vote_split(c.p, TieRule.coerce(tie))[0]


def majority_error(c, tie=TieRule.FAIR):
    """Complement of :func:`majority_accuracy`, summed from the lower tail."""
    c = as_committee(c)
    return _vote_split(c.p, TieRule.coerce(tie))[1]


def _check_index(c, i):
    if c.n < 2:
        raise DomainError("peer quantities need at least two experts")
    if not (isinstance(i, (int, np.integer)) and 0 <= i < c.n):
        raise DomainError(f"expert index {i!r} out of range for N={c.n}")


def peer_accuracy(c, i, tie=TieRule.FAIR):
    """Majority accuracy of the committee with expert ``i`` (0-based) removed.

    >>> peer_accuracy([0.8, 0.7, 0.6], 0).p_peer  # doctest: +ELLIPSIS
    0.65...
    """
    c = as_committee(c)
    _check_index(c, i)
    right, wrong = _vote_split(np.delete(c.p, i), TieRule.coerce(tie))
    return PeerProfile(int(i), right, wrong)


def peer_accuracies(c, tie=TieRule.FAIR):
    """Vectorised :func:`peer_accuracy`: arrays ``(p_peer, q_peer)``."""
    c = as_committee(c)
    if c.n < 2:
        raise DomainError("peer quantities need at least two experts")
    tie = TieRule.coerce(tie)
    split = np.array([_vote_split(np.delete(c.p, i), tie) for i in range(c.n)])
    return split[:, 0], split[:, 1]


def pseudo_competence(c, i, tie=TieRule.FAIR):
    """Probability that expert ``i`` agrees with its peers' majority vote.

    Equals ``p_i * p_peer + q_i * q_peer``; evaluated in the equivalent form
    ``1/2 + (p_i - 1/2) * (p_peer - q_peer)``, which keeps the sign of
    ``p~_i - 1/2`` exact.
    """
    c = as_committee(c)
    prof = peer_accuracy(c, i, tie)
    return float(0.5 + (c.p[i] - 0.5) * (prof.p_peer - prof.q_peer))


def pseudo_competences(c, tie=TieRule.FAIR):
    c = as_committee(c)
    p_peer, q_peer = peer_accuracies(c, tie)
    return 0.5 + (c.p - 0.5) * (p_peer - q_peer)


def consistency_rate(generator, n, horizon, tie=TieRule.FAIR):
    """Finite-horizon rate of consistency.

    ``generator(k)`` must return the competence vector of the size-``k``
    member of a committee sequence.  The result is the minimum of the exact
    majority accuracy over sizes ``n..horizon``; it upper-bounds the true
    infimum over all larger sizes.
    """
    if n < 1:
        raise DomainError("committee size must be positive")
    if horizon < n:
        raise DomainError(f"horizon {horizon} is smaller than the size {n}")
    tie = TieRule.coerce(tie)
    best, arg = np.inf, n
    for k in range(n, horizon + 1):
        acc = majority_accuracy(validate_committee(generator(k)), tie)
        if acc < best:
            best, arg = acc, k
    return ConsistencyRate(float(best), int(horizon), int(arg))


def ordering_margin(c, i, j, tie=TieRule.FAIR):
    """Conditional-probability bracket relating two pseudo competences.

    Returns ``P(V(X without j) = Y | X_i != Y) - P(V(X without j) != Y | X_i = Y)``
    computed over the experts other than ``i`` and ``j``.  When
    ``p_i != p_j`` it equals ``(p~_i - p~_j) / (p_i - p_j)``, so a positive
    value means the pseudo competences order the two experts like the true
    ones.
    """
    c = as_committee(c)
    if c.n < 3:
        raise DomainError("ordering margin needs at least three experts")
    for k in (i, j):
        _check_index(c, k)
    if i == j:
        raise DomainError("ordering margin needs two distinct experts")
    m = TieRule.coerce(tie).tie_mass
    pmf = _pmf(np.delete(c.p, [i, j]))
    s = np.arange(pmf.shape[0])
    voters = c.n - 1
    # expert i wrong: the vote without j has s correct ballots
    right_given_wrong = pmf[2 * s > voters].sum() + m * pmf[2 * s == voters].sum()
    # expert i right: s + 1 correct ballots
    wrong_given_right = pmf[2 * (s + 1) < voters].sum() + (1 - m) * pmf[
        2 * (s + 1) == voters
    ].sum()
    return float(right_given_wrong - wrong_given_right)


def equally_spaced(lo, hi, n):
    """Competences ``lo + k (hi - lo) / (n - 1)`` for ``k = 0..n-1``."""
    if n < 2:
        raise DomainError("equal spacing needs at least two experts")
    if not 0.0 <= lo <= hi <= 1.0:
        raise DomainError(f"interval [{lo}, {hi}] is not inside [0, 1]")
    return np.linspace(lo, hi, n)
