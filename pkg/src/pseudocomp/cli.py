"""``pseudocomp`` command line.

Subcommands::

    pseudocomp generate  COMMITTEE --trials T --seed S --out opinions.csv
    pseudocomp aggregate opinions.csv --mode {mv,block-log,block-linear,adaptive}
    pseudocomp analyze   COMMITTEE [--gamma G --delta D --horizon H]
    pseudocomp reproduce EXPERIMENT --out DIR

``COMMITTEE`` is an inline list ``0.6,0.7,0.8``, an equal-spacing recipe
``lo:hi:n`` or ``@path`` to a file of competences.  Every command writing to
``--out`` also writes ``<out>.meta.json`` with the resolved configuration.
Exit status is 0 on success, 2 on bad usage or input, 1 otherwise.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, _rng, sim
from .bounds import (
    Inapplicable,
    block_error_bound,
    bound_report,
    consistency_conditions,
    corollary_condition,
    deviation_condition,
    deviation_threshold,
    weight_deviation,
)
from .committee import (
    TieRule,
    balance_parameter,
    equally_spaced,
    is_absolutely_balanced,
    majority_accuracy,
    peer_accuracies,
    pseudo_competences,
    validate_committee,
)
from .errors import ConfigError, DomainError, ParseError, PseudoCompError
from .estimation import OpinionMatrix
from .rules import AdaptiveConfig, adaptive_aggregate, block_aggregate, weighted_votes

__all__ = ["main", "read_opinions", "write_opinions", "parse_committee"]

MODES = ("mv", "block-log", "block-linear", "adaptive")


def _num(x):
    """17 significant digits, enough to round-trip any double."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, Inapplicable):
        return {"inapplicable": obj.reason}
    return obj


def _dump_json(obj):
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


# --- opinion files ---------------------------------------------------------

_CELLS = {"1": 1, "-1": -1}


def read_opinions(path):
    """Parse an opinion CSV into ``(task_ids, OpinionMatrix)``.

    The header is ``task,expert_1,...,expert_N`` with an optional trailing
    ``label`` column; every cell after the task id is ``1`` or ``-1``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file: expected a header row", line=1)
    header = rows[0]
    has_label = bool(header) and header[-1] == "label"
    experts = header[1:-1] if has_label else header[1:]
    if not header or header[0] != "task":
        raise ParseError("header must start with 'task'", line=1, column=1)
    for k, name in enumerate(experts, start=1):
        if name != f"expert_{k}":
            raise ParseError(f"expected header 'expert_{k}', found {name!r}", line=1, column=k + 1)
    n = len(experts)
    if n == 0:
        raise ParseError("header names no experts", line=1)
    width = len(header)
    tasks, ops, labels = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line=lineno)
        vals = []
        for col, cell in enumerate(row[1:], start=2):
            if cell not in _CELLS:
                raise ParseError(f"opinion must be 1 or -1, found {cell!r}", line=lineno, column=col)
            vals.append(_CELLS[cell])
        tasks.append(row[0])
        ops.append(vals[:n])
        if has_label:
            labels.append(vals[n])
    if not tasks:
        raise ParseError("no task rows after the header", line=2)
    x = np.array(ops, dtype=np.int8).T
    return tasks, OpinionMatrix(x, np.array(labels, dtype=np.int8) if has_label else None)


def write_opinions(path, m, task_ids=None):
    n, t = m.x.shape
    ids = task_ids if task_ids is not None else [str(k) for k in range(1, t + 1)]
    header = ["task"] + [f"expert_{k}" for k in range(1, n + 1)]
    if m.labels is not None:
        header.append("label")
    lines = [",".join(header)]
    body = m.x.T if m.labels is None else np.vstack([m.x, m.labels[None, :]]).T
    for tid, row in zip(ids, body):
        lines.append(tid + "," + ",".join(map(str, row.tolist())))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_committee(spec):
    """Competence vector from ``a,b,c``, ``lo:hi:n`` or ``@file``."""
    text = spec
    if spec.startswith("@"):
        try:
            text = Path(spec[1:]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read committee file: {exc}") from None
        text = ",".join(text.replace(",", " ").split())
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return validate_committee(equally_spaced(float(lo), float(hi), int(n)))
        return validate_committee([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise ConfigError(f"cannot parse committee {spec!r}: {exc}") from None


# --- subcommands -----------------------------------------------------------


def _write(out, text, meta):
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stderr.write(_dump_json(meta))
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    Path(str(out) + ".meta.json").write_text(_dump_json(meta))


def _meta(args, **extra):
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    resolved.update(extra)
    return {"version": __version__, "config": resolved}


def cmd_generate(args):
    if args.out in (None, "-"):
        raise ConfigError("generate needs --out")
    c = parse_committee(args.committee)
    m = sim.generate(c, args.trials, args.seed)
    meta = _meta(args, p=c.p)
    write_opinions(args.out, m)
    Path(str(args.out) + ".meta.json").write_text(_dump_json(meta))


def aggregate(m, mode, tie, weights="log", delta=0.1, seed=0):
    """Library equivalent of ``pseudocomp aggregate``; returns decisions and extras."""
    tie = TieRule.coerce(tie)
    if mode == "mv":
        ties = _rng.stream(seed, _rng.TIES)
        return weighted_votes(m.x, np.ones(m.n_experts), tie, ties), None
    if m.n_experts < 2:
        raise DomainError("pseudo competence modes need at least two experts")
    if mode in ("block-log", "block-linear"):
        return block_aggregate(m, mode.split("-")[1], tie, seed), None
    outcome = adaptive_aggregate(m, AdaptiveConfig(delta, weights, tie), seed)
    return outcome.decisions, outcome


def cmd_aggregate(args):
    tasks, m = read_opinions(args.opinions)
    decisions, outcome = aggregate(m, args.mode, args.tie, args.weights, args.delta, args.seed)
    extra = {"n_experts": m.n_experts, "n_tasks": m.n_tasks}
    if outcome is None:
        lines = ["task,decision"] + [f"{t},{d}" for t, d in zip(tasks, decisions.tolist())]
    else:
        trace = outcome.phi_trace
        frozen = outcome.frozen
        lines = ["task,decision,frozen,phi_tilde"]
        for k, (t, d) in enumerate(zip(tasks, decisions.tolist())):
            phi = _num(trace[k]) if k < trace.shape[0] else ""
            lines.append(f"{t},{d},{int(frozen[k])},{phi}")
        extra["freeze_time"] = outcome.freeze_time
        extra["freeze_task"] = tasks[outcome.freeze_time - 1] if outcome.freeze_time else None
        extra["frozen_weights"] = None if outcome.frozen_weights is None else outcome.frozen_weights.w
    _write(args.out, "\n".join(lines) + "\n", _meta(args, **extra))


def analyze(c, tie=TieRule.FAIR, gamma=None, delta=None, epsilon=None, horizon=None, trials=None):
    """Dictionary report of committee analytics, bounds and condition checks."""
    tie = TieRule.coerce(tie)
    p_peer, _ = peer_accuracies(c, tie) if c.n >= 2 else (np.array([]), None)
    balanced_at = balance_parameter(c)
    if gamma is None and 0.0 < balanced_at < 0.5:
        gamma = balanced_at
    a_n = None
    if horizon is not None:
        # c is read as the size-N member of the equal-spacing sequence on its range
        a_n = min(
            majority_accuracy(validate_committee(equally_spaced(c.p.min(), c.p.max(), k)), tie)
            for k in range(max(c.n, 2), max(horizon, c.n) + 1)
        )
    report = bound_report(c, tie, gamma=gamma, a_n=a_n).as_dict()
    report.update(
        n_experts=c.n,
        eps=c.eps,
        p_peer=p_peer,
        p_tilde=pseudo_competences(c, tie) if c.n >= 2 else [],
        good=c.good,
    )
    checks = {}
    cons = consistency_conditions(c.p)
    checks["consistency"] = dict(cons.__dict__)
    if c.n >= 2:
        checks["weight_deviation"] = weight_deviation(c, tie)
    if gamma is not None and is_absolutely_balanced(c, gamma):
        if delta is not None:
            try:
                checks["corollary"] = corollary_condition(c, delta, gamma, tie)
            except DomainError as exc:
                checks["corollary"] = Inapplicable(str(exc))
        if epsilon is not None:
            checks["deviation_threshold"] = deviation_threshold(gamma, epsilon)
            checks["deviation_condition"] = deviation_condition(c, gamma, epsilon, tie)
    if delta is not None and epsilon is not None and trials is not None:
        rho = None
        if a_n is not None and a_n > 0.5:
            rho = (1.0 - a_n) / (a_n - 0.5)
        checks["block_error_bound"] = block_error_bound(
            report["phi"], c.n, trials, delta, epsilon, rho_n=rho, gamma=gamma
        )
    report["checks"] = checks
    return report


def cmd_analyze(args):
    c = parse_committee(args.committee)
    report = analyze(c, args.tie, args.gamma, args.delta, args.epsilon, args.horizon, args.trials)
    meta = _meta(args, p=c.p)
    report["meta"] = meta
    _write(args.out, _dump_json(report), meta)


def cmd_reproduce(args):
    cfg = sim.default_config(
        args.experiment,
        seed=args.seed,
        tie=args.tie,
        trials=args.trials,
        tasks=args.tasks,
        repetitions=args.repetitions,
        gammas=(args.gamma,) if args.gamma is not None else None,
        sizes=tuple(args.sizes) if args.sizes else None,
        exact_max_n=args.exact_max_n,
    )
    table = sim.run_experiment(cfg)
    out = Path(args.out or f"{args.experiment}_out")
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.experiment}.csv").write_text(table.to_csv())
    for panel in table.panels():
        sub = sim.ResultTable(tuple(table.select(panel=panel)), table.metadata)
        (out / f"{args.experiment}_{panel}.csv").write_text(sub.to_csv())
    plots = out / "plot_data"
    plots.mkdir(exist_ok=True)
    for name, (xs, ys) in table.curves().items():
        body = "".join(f"{x},{_num(y)}\n" for x, y in zip(xs, ys))
        (plots / f"{name}.csv").write_text("x,y\n" + body)
    meta = dict(table.metadata)
    meta["cli"] = _meta(args)["config"]
    (out / f"{args.experiment}.meta.json").write_text(_dump_json(meta))


# --- entry point -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(2)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common(p):
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--tie", choices=[t.value for t in TieRule], default="fair")
    p.add_argument("--out", default=None)


def build_parser():
    parser = _Parser(prog="pseudocomp", description="Unsupervised opinion aggregation with pseudo competences.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw a labelled opinion file from the model")
    g.add_argument("committee")
    g.add_argument("--trials", type=int, default=1000, help="number of tasks")
    _common(g)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("aggregate", help="decide every task of an opinion file")
    a.add_argument("opinions")
    a.add_argument("--mode", choices=MODES, default="block-log")
    a.add_argument("--weights", choices=["log", "linear"], default="log")
    a.add_argument("--delta", type=float, default=0.1)
    _common(a)
    a.set_defaults(func=cmd_aggregate)

    z = sub.add_parser("analyze", help="potentials, bounds and conditions of a committee")
    z.add_argument("committee")
    z.add_argument("--gamma", type=float, default=None)
    z.add_argument("--delta", type=float, default=None)
    z.add_argument("--epsilon", type=float, default=None)
    z.add_argument("--horizon", type=int, default=None)
    z.add_argument("--trials", type=int, default=None, help="estimation tasks for the block bound")
    _common(z)
    z.set_defaults(func=cmd_analyze)

    r = sub.add_parser("reproduce", help="run one of the simulation experiments")
    r.add_argument("experiment")
    r.add_argument("--trials", type=int, default=None)
    r.add_argument("--tasks", type=int, default=None, help="estimation tasks per block")
    r.add_argument("--repetitions", type=int, default=None)
    r.add_argument("--gamma", type=float, default=None)
    r.add_argument("--sizes", type=int, nargs="+", default=None)
    r.add_argument("--exact-max-n", type=int, default=None)
    _common(r)
    r.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (PseudoCompError, ValueError, OSError) as exc:
        sys.stderr.write(f"pseudocomp: {type(exc).__name__}: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"pseudocomp: internal error: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
