"""Sampling from the opinion model and the figure-reproduction experiments.

Each experiment turns an :class:`ExperimentConfig` into a :class:`ResultTable`
of ``(panel, size, gamma, expert, metric, value, stderr, method)`` rows.
Every random quantity is drawn from streams derived from ``config.seed`` and
the position of the point in the sweep, so a table is reproducible byte for
byte and independent of ``CWL_THREADS``.
"""

import io
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, _rng
from ._parallel import pmap
from .committee import (
    TieRule,
    as_committee,
    equally_spaced,
    majority_error,
    peer_accuracies,
    pseudo_competences,
    validate_committee,
)
from .bounds import committee_potential, improved_upper, ks_upper
from .errors import ConfigError
from .estimation import OpinionMatrix, pseudo_estimate
from .oracle import draw_tasks, exact_error, mc_errors
from .rules import (
    as_rule,
    block_weights,
    lnb_weights,
    majority_rule,
    nb_weights,
    pnb_weights,
    pseudo_linear_weights,
)

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "Row",
    "ResultTable",
    "default_config",
    "generate",
    "run_experiment",
]

EXPERIMENTS = ("pseudo_vs_true", "bound_comparison", "pnb_vs_nb", "balancing_sweep")


def generate(c, tasks, seed):
    """Draw ``tasks`` labelled tasks from the model for committee ``c``.

    Uses the same block streams as :func:`pseudocomp.oracle.mc_errors`, so
    both see identical tasks for a given seed.
    """
    c = as_committee(c)
    if tasks < 1:
        raise ConfigError("need at least one task")
    ys, xs = [], []
    for b, _, size in _rng.blocks(int(tasks)):
        y, x = draw_tasks(c.p, size, _rng.stream(seed, _rng.DRAWS, b))
        ys.append(y)
        xs.append(x)
    return OpinionMatrix(np.concatenate(xs, axis=1), np.concatenate(ys))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment sweep.

    ``panels`` holds ``(name, lo, hi)`` competence intervals with equal
    spacing; the balancing sweep ignores it and uses ``[1/2, 1 - gamma]`` for
    each ``gamma``.  Errors are exact for ``N <= exact_max_n`` and Monte Carlo
    otherwise, ``trials`` tasks per repetition.
    """

    experiment: str
    sizes: tuple = ()
    panels: tuple = ()
    gammas: tuple = ()
    tasks: int = 100_000
    trials: int = 10_000
    repetitions: int = 20
    seed: int = 0
    tie: TieRule = TieRule.FAIR
    exact_max_n: int = 15

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        object.__setattr__(self, "tie", TieRule.coerce(self.tie))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "panels", tuple((str(a), float(b), float(c)) for a, b, c in self.panels))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if any(n < 2 for n in self.sizes):
            raise ConfigError("committee sizes must be at least 2")
        for name, lo, hi in self.panels:
            if not 0.0 <= lo <= hi <= 1.0:
                raise ConfigError(f"panel {name!r} interval [{lo}, {hi}] is not inside [0, 1]")
        if any(not 0.0 < g < 0.5 for g in self.gammas):
            raise ConfigError("balancing parameters must lie in (0, 1/2)")
        if self.tasks < 1 or self.trials < 1 or self.repetitions < 1:
            raise ConfigError("tasks, trials and repetitions must be positive")

    def as_dict(self):
        out = asdict(self)
        out["tie"] = self.tie.value
        out["sizes"] = list(self.sizes)
        out["panels"] = [list(p) for p in self.panels]
        out["gammas"] = list(self.gammas)
        return out


_DEFAULTS = {
    "pseudo_vs_true": dict(sizes=(10,), panels=(("good", 0.5, 0.9), ("mixed", 0.3, 0.9))),
    "bound_comparison": dict(sizes=tuple(range(10, 51)), panels=(("mixed", 0.3, 0.9),)),
    "pnb_vs_nb": dict(
        sizes=(10, 25, 50, 75), panels=(("good", 0.5, 0.9), ("mixed", 0.15, 0.9))
    ),
    "balancing_sweep": dict(
        sizes=tuple(range(2, 51)), gammas=tuple(10.0**-n for n in range(1, 6))
    ),
}


def default_config(experiment, **overrides):
    """Config with the published sweep for ``experiment``, then ``overrides``."""
    if experiment not in _DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    base = dict(_DEFAULTS[experiment])
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(experiment, **base)


@dataclass(frozen=True)
class Row:
    experiment: str
    panel: str
    n_experts: int
    gamma: float | None
    expert: int | None
    metric: str
    value: float
    stderr: float
    method: str


_COLUMNS = ("experiment", "panel", "n_experts", "gamma", "expert", "metric", "value", "stderr", "method")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass(frozen=True)
class ResultTable:
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def select(self, **match):
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]

    def get(self, **match):
        """The single row matching ``match``."""
        found = self.select(**match)
        if len(found) != 1:
            raise KeyError(f"{len(found)} rows match {match}")
        return found[0]

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(_COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(getattr(r, k)) for k in _COLUMNS) + "\n")
        return buf.getvalue()

    def panels(self):
        return sorted({r.panel for r in self.rows}, key=[r.panel for r in self.rows].index)

    def curves(self, panel=None):
        """Plot-ready ``{name: (x, y)}`` series.

        Per-expert metrics are indexed by expert, the rest by committee
        size; balancing-sweep curves are split by ``gamma``.
        """
        out = {}
        for r in self.rows:
            if panel is not None and r.panel != panel:
                continue
            name = f"{r.panel}__{r.metric}"
            if r.gamma is not None:
                name += f"__gamma={r.gamma:g}"
            if r.expert is not None:
                name += f"__n={r.n_experts}"
            x = r.expert if r.expert is not None else r.n_experts
            out.setdefault(name, ([], []))
            out[name][0].append(x)
            out[name][1].append(r.value)
        return out


def _mean_se(values, stderrs):
    values = np.asarray(values, dtype=float)
    if values.shape[0] == 1:
        return float(values[0]), float(stderrs[0])
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.shape[0]))


def _error_rows(cfg, c, panel, gamma, rules, seed_path, extra_pairs=()):
    """Exact or Monte Carlo error rows for ``rules`` (``{name: weights}``)."""
    rows = []
    mk = lambda metric, v, se, method: Row(
        cfg.experiment, panel, c.n, gamma, None, metric, float(v), float(se), method
    )
    if c.n <= cfg.exact_max_n:
        exact = {name: exact_error(c, w, cfg.tie).value for name, w in rules.items()}
        for name, v in exact.items():
            rows.append(mk(f"{name}_error", v, 0.0, "exact"))
        for a, b in extra_pairs:
            rows.append(mk(f"{a}_minus_{b}", exact[a] - exact[b], 0.0, "exact"))
        return rows
    fns = {name: as_rule(w, cfg.tie) for name, w in rules.items()}
    reps = [
        mc_errors(c, fns, cfg.trials, _rng.derive_seed(cfg.seed, *seed_path, r))
        for r in range(cfg.repetitions)
    ]
    for name in rules:
        ests = [res.estimate(name) for res in reps]
        v, se = _mean_se([e.value for e in ests], [e.stderr for e in ests])
        rows.append(mk(f"{name}_error", v, se, "mc"))
    for a, b in extra_pairs:
        diffs = [res.difference(a, b) for res in reps]
        v, se = _mean_se([d[0] for d in diffs], [d[1] for d in diffs])
        rows.append(mk(f"{a}_minus_{b}", v, se, "mc"))
    return rows


def _pseudo_vs_true(cfg):
    def point(job):
        k, (panel, lo, hi), n = job
        c = validate_committee(equally_spaced(lo, hi, n))
        p_peer, _ = peer_accuracies(c, cfg.tie)
        p_tilde = pseudo_competences(c, cfg.tie)
        m = generate(c, cfg.tasks, _rng.derive_seed(cfg.seed, 0, k, n))
        emp = pseudo_estimate(m, cfg.tie)
        rows = []
        for i in range(n):
            base = (cfg.experiment, panel, n, None, i + 1)
            rows += [
                Row(*base, "p", float(c.p[i]), 0.0, "exact"),
                Row(*base, "p_peer", float(p_peer[i]), 0.0, "exact"),
                Row(*base, "p_tilde", float(p_tilde[i]), 0.0, "exact"),
                Row(
                    *base,
                    "p_tilde_empirical",
                    float(emp[i]),
                    math.sqrt(emp[i] * (1 - emp[i]) / cfg.tasks),
                    "mc",
                ),
            ]
        return rows

    return [(k, panel, n) for k, panel in enumerate(cfg.panels) for n in cfg.sizes], point


def _bound_comparison(cfg):
    def point(job):
        k, (panel, lo, hi), n = job
        c = validate_committee(equally_spaced(lo, hi, n))
        phi = committee_potential(c.p)
        mk = lambda metric, v: Row(cfg.experiment, panel, n, None, None, metric, float(v), 0.0, "exact")
        rows = [mk("phi", phi), mk("improved_upper", improved_upper(c.p)), mk("ks_upper", ks_upper(phi))]
        return rows + _error_rows(cfg, c, panel, None, {"nb": nb_weights(c)}, (1, k, n))

    return [(k, panel, n) for k, panel in enumerate(cfg.panels) for n in cfg.sizes], point


def _pnb_vs_nb(cfg):
    def point(job):
        k, (panel, lo, hi), n = job
        c = validate_committee(equally_spaced(lo, hi, n))
        block = generate(c, cfg.tasks, _rng.derive_seed(cfg.seed, 2, k, n, 0))
        rules = {
            "mv": np.ones(n),
            "nb": nb_weights(c),
            "pnb": pnb_weights(c, cfg.tie),
            "pnb_empirical": block_weights(block, "log", cfg.tie),
        }
        rows = [
            Row(cfg.experiment, panel, n, None, None, "mv_error_exact", majority_error(c, cfg.tie), 0.0, "exact")
        ]
        return rows + _error_rows(
            cfg, c, panel, None, rules, (2, k, n, 1),
            extra_pairs=(("pnb", "nb"), ("pnb_empirical", "nb")),
        )

    return [(k, panel, n) for k, panel in enumerate(cfg.panels) for n in cfg.sizes], point


def _balancing_sweep(cfg):
    def point(job):
        k, gamma, n = job
        c = validate_committee(equally_spaced(0.5, 1.0 - gamma, n))
        rules = {
            "nb": nb_weights(c),
            "lnb": lnb_weights(c),
            "pnb": pnb_weights(c, cfg.tie),
            "lpnb": pseudo_linear_weights(c, cfg.tie),
        }
        return _error_rows(
            cfg, c, "balanced", gamma, rules, (3, k, n),
            extra_pairs=(("lnb", "nb"), ("pnb", "nb"), ("lpnb", "nb")),
        )

    return [(k, g, n) for k, g in enumerate(cfg.gammas) for n in cfg.sizes], point


_RUNNERS = {
    "pseudo_vs_true": _pseudo_vs_true,
    "bound_comparison": _bound_comparison,
    "pnb_vs_nb": _pnb_vs_nb,
    "balancing_sweep": _balancing_sweep,
}


def run_experiment(cfg):
    """Run every point of ``cfg`` and collect the rows in sweep order."""
    if isinstance(cfg, str):
        cfg = default_config(cfg)
    if not isinstance(cfg, ExperimentConfig):
        raise ConfigError("run_experiment expects an ExperimentConfig")
    jobs, point = _RUNNERS[cfg.experiment](cfg)
    rows = [row for part in pmap(point, jobs) for row in part]
    meta = {"seed": cfg.seed, "version": __version__, "config": cfg.as_dict()}
    return ResultTable(tuple(rows), meta)


def with_overrides(cfg, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
