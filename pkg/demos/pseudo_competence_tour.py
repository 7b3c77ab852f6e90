"""How well can experts be graded without any ground truth?

Each expert is scored by how often they agree with the majority of the
others.  That score, the pseudo competence, has a closed form, and this
script compares it with the true competence and with what an unlabeled
data set actually reveals.
"""

import numpy as np

from pseudocomp import sim
from pseudocomp.committee import equally_spaced, majority_accuracy, peer_accuracies, pseudo_competences
from pseudocomp.estimation import pseudo_estimate, supervised_estimate

p = equally_spaced(0.5, 0.9, 10)
p_peer, _ = peer_accuracies(p)
p_tilde = pseudo_competences(p)

print(f"majority of all ten experts is right with probability {majority_accuracy(p):.4f}\n")
print(" expert   true    peers   pseudo")
for i, (a, b, c) in enumerate(zip(p, p_peer, p_tilde), start=1):
    print(f"  {i:>4}   {a:.3f}   {b:.3f}   {c:.4f}")

# The best expert is judged by the weakest peers, so the gap widens toward the top.
print(f"\nlargest under-estimate: {np.max(p - p_tilde):.4f} (expert {np.argmax(p - p_tilde) + 1})")

m = sim.generate(p, 50_000, seed=1)
print("\nfrom 50 000 unlabeled tasks:")
print("  agreement rate", np.round(pseudo_estimate(m), 4))
print("with the labels revealed:")
print("  accuracy      ", np.round(supervised_estimate(m), 4))

# Mixed committees: weak experts get pulled up, strong ones pulled down.
mixed = equally_spaced(0.3, 0.9, 10)
print("\nmixed committee [0.3, 0.9]:")
print("  true  ", np.round(mixed, 3))
print("  pseudo", np.round(pseudo_competences(mixed), 3))
