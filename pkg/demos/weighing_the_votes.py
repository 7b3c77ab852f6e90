"""Weighted voting with and without knowing who is good.

Naive Bayes weighs each expert by the log-odds of being right.  The pseudo
version plugs in pseudo competences instead, which can be learned from
unlabeled data.  Exact errors and the matching upper bounds are printed
for a few committees.
"""

import numpy as np

from pseudocomp.bounds import bound_report
from pseudocomp.committee import equally_spaced
from pseudocomp.oracle import exact_error
from pseudocomp.rules import lnb_weights, nb_weights, pnb_weights

committees = {
    "good, 9 experts on [0.5, 0.9]": equally_spaced(0.5, 0.9, 9),
    "mixed, 9 experts on [0.3, 0.9]": equally_spaced(0.3, 0.9, 9),
    "mixed, 15 experts on [0.3, 0.9]": equally_spaced(0.3, 0.9, 15),
    "one star, eight coin flips": np.r_[0.95, np.full(8, 0.52)],
}

for name, p in committees.items():
    errors = {
        "majority": exact_error(p, np.ones(p.size)).value,
        "naive Bayes": exact_error(p, nb_weights(p)).value,
        "linear": exact_error(p, lnb_weights(p)).value,
        "pseudo NB": exact_error(p, pnb_weights(p)).value,
    }
    r = bound_report(p)
    print(name)
    for rule, e in errors.items():
        print(f"  {rule:<12} {e:.5f}")
    print(f"  bounds: product {r.improved_upper:.5f}  exp(-phi/2) {r.ks_upper:.5f}")
    print()

# With negative-competence experts the pseudo weights keep the sign right
# but flatten the magnitudes; the price shrinks as the committee grows.
for n in (5, 11, 21):
    p = equally_spaced(0.3, 0.9, n)
    nb = exact_error(p, nb_weights(p)).value
    pnb = exact_error(p, pnb_weights(p)).value
    print(f"N={n:>2}: pseudo NB / NB error = {pnb / nb:.3f}")
