"""Competence estimates from observed opinions.

Opinions are stored expert-major: ``x[i, t]`` is the ``+1``/``-1`` opinion of
expert ``i`` on task ``t``.
"""

from dataclasses import dataclass

import numpy as np

from .committee import TieRule
from .errors import DomainError, MissingLabels, ShapeError

__all__ = [
    "OpinionMatrix",
    "EstimatorState",
    "agreement_credits",
    "supervised_estimate",
    "pseudo_estimate",
    "update",
]


def _as_pm1(a, what):
    arr = np.asarray(a)
    if arr.size and not np.all((arr == 1) | (arr == -1)):
        raise DomainError(f"{what} entries must be +1 or -1")
    return arr.astype(np.int8)


@dataclass(frozen=True, eq=False)
class OpinionMatrix:
    """``N x T`` block of opinions with optional ground-truth labels."""

    x: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        x = _as_pm1(self.x, "opinion")
        if x.ndim != 2:
            raise ShapeError(f"opinions must form an N x T matrix, got shape {x.shape}")
        object.__setattr__(self, "x", x)
        if self.labels is not None:
            y = _as_pm1(self.labels, "label").reshape(-1)
            if y.shape[0] != x.shape[1]:
                raise ShapeError(f"{y.shape[0]} labels for {x.shape[1]} tasks")
            object.__setattr__(self, "labels", y)

    @property
    def n_experts(self):
        return self.x.shape[0]

    @property
    def n_tasks(self):
        return self.x.shape[1]


def agreement_credits(x, tie=TieRule.FAIR):
    """Per-expert, per-task credit for agreeing with the peers' majority.

    ``x`` is ``(N,)`` or ``(N, T)``.  A strict peer majority gives credit 1
    on agreement and 0 otherwise.  A tied peer vote gives 1/2 under
    ``TieRule.FAIR`` and, for the deterministic rules, credit 1 exactly when
    the expert sided with the favoured label.
    """
    x = np.asarray(x)
    if x.shape[0] < 2:
        raise DomainError("agreement with peers needs at least two experts")
    tie = TieRule.coerce(tie)
    peers = x.sum(axis=0, dtype=np.int64) - x
    if tie is TieRule.FAIR:
        on_tie = np.full(x.shape, 0.5)
    elif tie is TieRule.POSITIVE:
        on_tie = (x == 1).astype(float)
    else:
        on_tie = (x == -1).astype(float)
    return np.where(peers == 0, on_tie, (peers * x > 0).astype(float))


def supervised_estimate(m):
    """Fraction of tasks on which each expert matched the label."""
    if m.labels is None:
        raise MissingLabels("supervised estimates need ground-truth labels")
    if m.n_tasks == 0:
        raise DomainError("need at least one task")
    return (m.x == m.labels[None, :]).mean(axis=1)


def pseudo_estimate(m, tie=TieRule.FAIR):
    """Empirical pseudo competences: agreement frequency with the peer majority."""
    x = m.x if isinstance(m, OpinionMatrix) else OpinionMatrix(m).x
    if x.shape[1] == 0:
        raise DomainError("need at least one task")
    return agreement_credits(x, tie).sum(axis=1) / x.shape[1]


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """Running agreement counts; :func:`update` returns a new state."""

    agree_count: np.ndarray
    tasks_seen: int
    tie: TieRule = TieRule.FAIR

    @classmethod
    def fresh(cls, n_experts, tie=TieRule.FAIR):
        if n_experts < 2:
            raise DomainError("agreement with peers needs at least two experts")
        return cls(np.zeros(n_experts), 0, TieRule.coerce(tie))

    @property
    def n_experts(self):
        return self.agree_count.shape[0]

    @property
    def estimates(self):
        if self.tasks_seen == 0:
            raise DomainError("no tasks seen yet; estimates are undefined")
        return self.agree_count / self.tasks_seen


def update(state, column):
    """Fold one task's opinions into ``state``."""
    column = _as_pm1(column, "opinion").reshape(-1)
    if column.shape[0] != state.n_experts:
        raise ShapeError(f"column has {column.shape[0]} opinions, state tracks {state.n_experts}")
    counts = state.agree_count + agreement_credits(column, state.tie)
    return EstimatorState(counts, state.tasks_seen + 1, state.tie)
