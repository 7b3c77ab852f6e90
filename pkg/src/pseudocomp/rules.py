"""Decision rules as weight vectors plus one weighted-vote evaluator.

Every rule here decides ``sign(sum_i w_i x_i)``; the rules differ only in
where the weights come from:

=====================  ==========================================
majority vote          ``w_i = 1``
naive Bayes (NB)       ``w_i = log(p_i / (1 - p_i))``
linearised NB (LNB)    ``w_i = p_i - 1/2``
pseudo NB (PNB)        log-odds of the closed-form pseudo competence
block rules            log-odds or centred value of estimates
adaptive rule          running estimates, frozen once confident
=====================  ==========================================
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import _rng
from .bounds import confidence_event, empirical_pseudo_potential
from .committee import TieRule, as_committee, pseudo_competences
from .errors import DomainError, MissingRng, ShapeError
from .estimation import EstimatorState, OpinionMatrix, pseudo_estimate, update
from .oracle import TIE_RTOL

__all__ = [
    "WeightMode",
    "Provenance",
    "WeightVector",
    "AdaptiveConfig",
    "AdaptiveOutcome",
    "make_weights",
    "clamp_estimates",
    "nb_weights",
    "lnb_weights",
    "pnb_weights",
    "pseudo_linear_weights",
    "weighted_votes",
    "weighted_vote",
    "as_rule",
    "majority_rule",
    "block_weights",
    "block_aggregate",
    "pnb_decide",
    "adaptive_aggregate",
]


class WeightMode(enum.Enum):
    LOG = "log"
    LINEAR = "linear"
    UNIFORM = "uniform"


class Provenance(enum.Enum):
    UNIFORM = "uniform"
    NB_LOG = "nb_log"
    LINEAR = "linear"
    PSEUDO_LOG = "pseudo_log"
    PSEUDO_LINEAR = "pseudo_linear"
    EMPIRICAL_LOG = "empirical_log"
    EMPIRICAL_LINEAR = "empirical_linear"


_DEFAULT_PROVENANCE = {
    WeightMode.LOG: Provenance.NB_LOG,
    WeightMode.LINEAR: Provenance.LINEAR,
    WeightMode.UNIFORM: Provenance.UNIFORM,
}


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray
    provenance: Provenance

    def __len__(self):
        return self.w.shape[0]

    @property
    def all_zero(self):
        return bool(np.all(self.w == 0.0))


def make_weights(p_like, mode=WeightMode.LOG, provenance=None):
    """Weights from competence-like values in ``[0, 1]``.

    ``LOG`` gives log-odds with ``+inf``/``-inf`` at 1 and 0, ``LINEAR``
    gives ``p - 1/2`` and ``UNIFORM`` gives ones.
    """
    mode = WeightMode(mode)
    p = np.asarray(p_like, dtype=float).reshape(-1)
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise DomainError("weights are built from values in [0, 1]")
    if mode is WeightMode.LOG:
        with np.errstate(divide="ignore"):
            w = np.log(p) - np.log1p(-p)
    elif mode is WeightMode.LINEAR:
        w = p - 0.5
    else:
        w = np.ones_like(p)
    w.setflags(write=False)
    return WeightVector(w, provenance or _DEFAULT_PROVENANCE[mode])


def clamp_estimates(estimates, tasks):
    """Clip estimates from ``tasks`` observations to ``[1/(tasks+2), 1 - 1/(tasks+2)]``."""
    lo = 1.0 / (tasks + 2)
    return np.clip(np.asarray(estimates, dtype=float), lo, 1.0 - lo)


def nb_weights(c):
    return make_weights(as_committee(c).p, WeightMode.LOG, Provenance.NB_LOG)


def lnb_weights(c):
    return make_weights(as_committee(c).p, WeightMode.LINEAR, Provenance.LINEAR)


def pnb_weights(c, tie=TieRule.FAIR):
    """Log-odds of the closed-form pseudo competences."""
    return make_weights(pseudo_competences(c, tie), WeightMode.LOG, Provenance.PSEUDO_LOG)


def pseudo_linear_weights(c, tie=TieRule.FAIR):
    return make_weights(pseudo_competences(c, tie), WeightMode.LINEAR, Provenance.PSEUDO_LINEAR)


def _w(w):
    return np.asarray(w.w if isinstance(w, WeightVector) else w, dtype=float)


def weighted_votes(x, w, tie=TieRule.FAIR, rng=None):
    """Decide every column of ``x`` (``(N,)`` or ``(N, T)``) by weighted vote.

    Infinite weights take precedence: if the infinitely weighted experts do
    not cancel, their signed count decides.  A total within ``TIE_RTOL`` of
    zero is a tie; ``TieRule.FAIR`` settles each tie with one draw from
    ``rng``.
    """
    tie = TieRule.coerce(tie)
    w = _w(w)
    x = np.asarray(x)
    single = x.ndim == 1
    cols = x.reshape(x.shape[0], -1)
    if cols.shape[0] != w.shape[0]:
        raise ShapeError(f"{cols.shape[0]} opinions for {w.shape[0]} weights")
    inf = np.isinf(w)
    w_fin = np.where(inf, 0.0, w)
    score = w_fin @ cols
    tol = TIE_RTOL * np.abs(w_fin).sum()
    decided = np.where(score > tol, 1, np.where(score < -tol, -1, 0)).astype(np.int8)
    if inf.any():
        dom = np.sign(w[inf]) @ cols[inf]
        decided = np.where(dom != 0, np.sign(dom), decided).astype(np.int8)
    ties = decided == 0
    if ties.any():
        if tie is TieRule.POSITIVE:
            decided[ties] = 1
        elif tie is TieRule.NEGATIVE:
            decided[ties] = -1
        else:
            if rng is None:
                raise MissingRng("a fair-coin tie occurred but no random stream was given")
            decided[ties] = rng.integers(0, 2, size=int(ties.sum()), dtype=np.int8) * 2 - 1
    return int(decided[0]) if single else decided


def weighted_vote(x, w, tie=TieRule.FAIR, rng=None):
    """Single-task weighted vote, returning ``+1`` or ``-1``."""
    x = np.asarray(x).reshape(-1)
    return weighted_votes(x, w, tie, rng)


def as_rule(w, tie=TieRule.FAIR):
    """Wrap fixed weights as a ``rule(x, rng)`` callable for the oracle."""
    w = _w(w)
    tie = TieRule.coerce(tie)

    def rule(x, rng):
        return weighted_votes(x, w, tie, rng)

    return rule


def majority_rule(n, tie=TieRule.FAIR):
    return as_rule(np.ones(n), tie)


def block_weights(m, weight_mode=WeightMode.LOG, tie=TieRule.FAIR):
    """Weights from pseudo competences estimated once over the whole block."""
    m = m if isinstance(m, OpinionMatrix) else OpinionMatrix(m)
    est = pseudo_estimate(m, tie)
    mode = WeightMode(weight_mode)
    if mode is WeightMode.LOG:
        return make_weights(clamp_estimates(est, m.n_tasks), mode, Provenance.EMPIRICAL_LOG)
    if mode is WeightMode.LINEAR:
        return make_weights(est, mode, Provenance.EMPIRICAL_LINEAR)
    raise DomainError("block rules use log or linear weights")


def block_aggregate(m, weight_mode=WeightMode.LOG, tie=TieRule.FAIR, seed=0):
    """Estimate, then decide every task of the block with the same weights."""
    m = m if isinstance(m, OpinionMatrix) else OpinionMatrix(m)
    w = block_weights(m, weight_mode, tie)
    return weighted_votes(m.x, w, tie, _rng.stream(seed, _rng.TIES))


def pnb_decide(c, x, tie=TieRule.FAIR, rng=None):
    """Pseudo naive Bayes decision with direct access to the pseudo competences."""
    return weighted_vote(x, pnb_weights(c, tie), tie, rng)


@dataclass(frozen=True)
class AdaptiveConfig:
    """Settings of the adaptive rule.

    ``pre_freeze`` selects how tasks are decided before the weights freeze:
    ``"adaptive"`` uses the running estimates, ``"majority"`` uses the plain
    majority vote.
    """

    delta: float
    weight_mode: WeightMode = WeightMode.LOG
    tie: TieRule = TieRule.FAIR
    pre_freeze: str = "adaptive"

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"confidence target must lie in (0, 1), got {self.delta}")
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))
        object.__setattr__(self, "tie", TieRule.coerce(self.tie))
        if self.weight_mode is WeightMode.UNIFORM:
            raise DomainError("the adaptive rule uses log or linear weights")
        if self.pre_freeze not in ("adaptive", "majority"):
            raise DomainError(f"unknown pre-freeze policy {self.pre_freeze!r}")


@dataclass(frozen=True, eq=False)
class AdaptiveOutcome:
    """Result of :func:`adaptive_aggregate`.

    ``freeze_time`` is the 1-based task index after which the weights stopped
    changing (``None`` if they never froze).  ``phi_trace[k]`` is the
    empirical pseudo potential after ``k + 1`` tasks, recorded up to and
    including the freeze.
    """

    decisions: np.ndarray
    freeze_time: int | None
    frozen_weights: WeightVector | None
    phi_trace: np.ndarray

    @property
    def frozen(self):
        """Per-task flag: was the task decided with the frozen weights?"""
        t = np.arange(1, self.decisions.shape[0] + 1)
        if self.freeze_time is None:
            return np.zeros(t.shape, dtype=bool)
        return t > self.freeze_time


def _columns(stream):
    if isinstance(stream, OpinionMatrix):
        return iter(stream.x.T)
    if isinstance(stream, np.ndarray) and stream.ndim == 2:
        return iter(stream.T)
    return iter(stream)


def _estimate_weights(state, mode):
    est = state.estimates
    if mode is WeightMode.LOG:
        return make_weights(clamp_estimates(est, state.tasks_seen), mode, Provenance.EMPIRICAL_LOG)
    return make_weights(est, mode, Provenance.EMPIRICAL_LINEAR)


def adaptive_aggregate(stream, cfg, seed=0):
    """Decide a stream of tasks while learning pseudo competences on the fly.

    ``stream`` is an :class:`OpinionMatrix`, an ``(N, T)`` array, or an
    iterable of length-``N`` columns.  Task ``t`` is decided with estimates
    from tasks ``1..t-1`` (majority vote when there are none or all weights
    vanish), and only then folded into the estimates.  As soon as the
    empirical pseudo potential makes ``exp(-phi/2) <= delta/2`` the weights
    are frozen and used unchanged for the rest of the stream.
    """
    ties = _rng.stream(seed, _rng.TIES)
    state = None
    frozen = None
    freeze_time = None
    decisions, trace = [], []
    uniform = None
    for t, column in enumerate(_columns(stream), start=1):
        column = np.asarray(column).reshape(-1)
        if state is None:
            state = EstimatorState.fresh(column.shape[0], cfg.tie)
            uniform = make_weights(np.ones(column.shape[0]), WeightMode.UNIFORM)
        if frozen is not None:
            w = frozen
        elif state.tasks_seen == 0 or cfg.pre_freeze == "majority":
            w = uniform
        else:
            w = _estimate_weights(state, cfg.weight_mode)
            if w.all_zero:
                w = uniform
        decisions.append(weighted_vote(column, w, cfg.tie, ties))
        if frozen is not None:
            continue
        state = update(state, column)
        est = clamp_estimates(state.estimates, state.tasks_seen)
        trace.append(empirical_pseudo_potential(est))
        if confidence_event(est, cfg.delta):
            frozen = _estimate_weights(state, cfg.weight_mode)
            freeze_time = t
    return AdaptiveOutcome(
        np.array(decisions, dtype=np.int8), freeze_time, frozen, np.array(trace, dtype=float)
    )
