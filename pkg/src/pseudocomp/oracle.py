"""Ground-truth error of threshold rules.

Two routes, deliberately independent of the voting code in :mod:`rules`:

* :func:`exact_error` sums the probability of every correctness pattern
  (``2**N`` of them), so it is limited to ``N <= 24``;
* :func:`mc_error` / :func:`mc_errors` draw tasks from the generative model
  with the package's counter-based streams.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from ._parallel import pmap
from .committee import TieRule, as_committee
from .errors import BudgetError, DomainError

__all__ = [
    "Method",
    "ErrorEstimate",
    "MCResult",
    "EXACT_MAX_N",
    "TIE_RTOL",
    "exact_error",
    "mc_error",
    "mc_errors",
    "draw_tasks",
]

EXACT_MAX_N = 24

# A weighted sum counts as a tie when it is within this fraction of sum(|w|).
TIE_RTOL = 1e-12

_CHUNK_BITS = 16


class Method(enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    stderr: float
    method: Method
    trials: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.method is Method.EXACT and self.stderr != 0.0:
            raise ValueError("exact estimates carry zero standard error")


def _weights_array(w):
    return np.asarray(getattr(w, "w", w), dtype=float)


def _bits(n):
    """All ``2**n`` boolean patterns, row ``k`` being the binary digits of ``k``."""
    k = np.arange(1 << n, dtype=np.int64)[:, None]
    return ((k >> np.arange(n)) & 1).astype(bool)


def exact_error(c, w, tie=TieRule.FAIR):
    """Exact error probability of ``sign(sum_i w_i X_i)``.

    The hidden state is taken as ``+1`` (exact by symmetry), so expert ``i``
    contributes ``+w_i`` when correct and ``-w_i`` otherwise.  Infinite
    weights dominate: the experts carrying them decide by their own signed
    count, and the finite part only matters when that count is zero.  A
    zero total is resolved by ``tie``; ``TieRule.FAIR`` charges half of the
    tie mass as error.

    Raises
    ------
    BudgetError
        For more than :data:`EXACT_MAX_N` experts.
    DomainError
        For NaN weights, a length mismatch, or an infinite weight on an
        expert whose competence is not 0 or 1.
    """
    c = as_committee(c)
    tie = TieRule.coerce(tie)
    w = _weights_array(w)
    if c.n > EXACT_MAX_N:
        raise BudgetError(f"exact enumeration is limited to N <= {EXACT_MAX_N}, got {c.n}")
    if w.shape != c.p.shape:
        raise DomainError(f"{w.shape[0] if w.ndim else 0} weights for {c.n} experts")
    if np.isnan(w).any():
        raise DomainError("weights must not be NaN")
    inf = np.isinf(w)
    if np.any(inf & (c.p > 0.0) & (c.p < 1.0)):
        raise DomainError("infinite weights are only allowed for competences 0 or 1")

    w_fin = np.where(inf, 0.0, w)
    w_inf = np.where(inf, np.sign(w), 0.0)
    tol = TIE_RTOL * np.abs(w_fin).sum()
    wrong_on_tie = 1.0 - tie.tie_mass

    n_lo = min(c.n, _CHUNK_BITS)
    lo, hi = slice(0, n_lo), slice(n_lo, c.n)

    def side(part):
        eta = _bits(part.stop - part.start)
        s = np.where(eta, 1.0, -1.0)
        prob = np.where(eta, c.p[part], c.q[part]).prod(axis=1)
        return s @ w_fin[part], s @ w_inf[part], prob

    lo_fin, lo_inf, lo_prob = side(lo)
    hi_fin, hi_inf, hi_prob = side(hi)

    total = 0.0
    for h_fin, h_inf, h_prob in zip(hi_fin, hi_inf, hi_prob):
        if h_prob == 0.0:
            continue
        fin = lo_fin + h_fin
        dom = lo_inf + h_inf
        loss = np.where(
            dom < 0,
            1.0,
            np.where(
                dom > 0,
                0.0,
                np.where(fin < -tol, 1.0, np.where(fin > tol, 0.0, wrong_on_tie)),
            ),
        )
        total += h_prob * float(loss @ lo_prob)
    return ErrorEstimate(min(max(total, 0.0), 1.0), 0.0, Method.EXACT)


def draw_tasks(p, size, rng):
    """Draw ``size`` tasks: labels ``y`` (size,) and opinions ``x`` (N, size)."""
    y = rng.integers(0, 2, size=size, dtype=np.int8) * 2 - 1
    correct = rng.random((p.shape[0], size)) < p[:, None]
    x = np.where(correct, y, -y).astype(np.int8)
    return y.astype(np.int8), x


@dataclass(frozen=True)
class MCResult:
    """Common-random-number Monte Carlo errors for several rules."""

    trials: int
    seed: int
    wrong: dict
    discord: dict = field(repr=False)

    def estimate(self, name):
        v = self.wrong[name] / self.trials
        return ErrorEstimate(
            v, math.sqrt(v * (1.0 - v) / self.trials), Method.MONTE_CARLO, self.trials, self.seed
        )

    @property
    def estimates(self):
        return {name: self.estimate(name) for name in self.wrong}

    def difference(self, a, b):
        """``(err_a - err_b, stderr)`` using the paired per-task differences."""
        d = (self.wrong[a] - self.wrong[b]) / self.trials
        second = self.discord[frozenset((a, b))] / self.trials
        var = max(second - d * d, 0.0)
        return d, math.sqrt(var / self.trials)


def mc_errors(c, rules, trials, seed):
    """Monte Carlo error of every rule in ``rules`` on shared draws.

    ``rules`` maps names to callables ``rule(x, rng) -> decisions`` where
    ``x`` is an ``(N, b)`` int8 opinion block and ``rng`` a generator for
    tie-breaking.  Tasks are drawn in fixed-size blocks, each from its own
    counter-based stream, so the result depends only on ``(c, rules,
    trials, seed)``.
    """
    c = as_committee(c)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    names = list(rules)

    def run(block):
        b, _, size = block
        y, x = draw_tasks(c.p, size, _rng.stream(seed, _rng.DRAWS, b))
        errs = {}
        for name in names:
            decided = np.asarray(rules[name](x, _rng.stream(seed, _rng.TIES, b)))
            errs[name] = decided != y
        wrong = {name: int(e.sum()) for name, e in errs.items()}
        discord = {
            frozenset((a, bb)): int((errs[a] ^ errs[bb]).sum())
            for i, a in enumerate(names)
            for bb in names[i + 1 :]
        }
        return wrong, discord

    parts = pmap(run, _rng.blocks(int(trials)))
    wrong = {name: sum(part[0][name] for part in parts) for name in names}
    discord = {}
    for part in parts:
        for key, val in part[1].items():
            discord[key] = discord.get(key, 0) + val
    return MCResult(int(trials), int(seed), wrong, discord)


def mc_error(c, rule, trials, seed):
    """Monte Carlo error of one rule; see :func:`mc_errors`."""
    return mc_errors(c, {"rule": rule}, trials, seed).estimate("rule")
