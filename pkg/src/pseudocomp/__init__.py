"""Unsupervised opinion aggregation with pseudo competences.

Experts vote ``+1``/``-1`` on hidden binary states.  Without ground truth, an
expert's reliability is measured by how often it agrees with the majority of
its peers (its *pseudo competence*); plugging these estimates into the naive
Bayes log-odds weights gives fully unsupervised aggregation rules.

Modules
-------
committee   exact analytics of a known committee
oracle      exact and Monte Carlo error of any weighted vote
estimation  supervised, pseudo and streaming competence estimates
rules       weight constructions, block and adaptive aggregation
bounds      potentials, error bounds and sufficient conditions
sim         data generation and figure-reproduction experiments
cli         ``pseudocomp`` command line
"""

__version__ = "0.1.0"

from .committee import (  # noqa: E402
    Committee,
    TieRule,
    majority_accuracy,
    peer_accuracy,
    poisson_binomial_pmf,
    pseudo_competence,
    pseudo_competences,
    validate_committee,
)
from .errors import (  # noqa: E402
    BudgetError,
    ConfigError,
    DomainError,
    MissingLabels,
    MissingRng,
    ParseError,
    ShapeError,
)
