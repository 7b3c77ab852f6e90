"""Aggregating a stream of tasks with weights learned as it goes.

The adaptive rule decides each task with the current pseudo-competence
estimates, then updates them.  Once the estimated potential is large
enough to promise error at most delta, the weights freeze.  A block rule
that relearns weights from every batch of ten tasks is shown for contrast.
"""

import numpy as np

from pseudocomp import sim
from pseudocomp.committee import pseudo_competences
from pseudocomp.estimation import OpinionMatrix
from pseudocomp.oracle import exact_error
from pseudocomp.rules import AdaptiveConfig, adaptive_aggregate, block_aggregate, nb_weights

p = np.full(15, 0.8)
stream = sim.generate(p, 5_000, seed=7)
out = adaptive_aggregate(stream, AdaptiveConfig(delta=0.1), seed=7)

print(f"weights froze after {out.freeze_time} tasks")
print("frozen weights   ", np.round(out.frozen_weights.w, 3))
pt = pseudo_competences(p)[0]
print(f"log-odds of the exact pseudo competence: {np.log(pt / (1 - pt)):.3f}")
after = out.frozen
print(f"error after freezing: {np.mean(out.decisions[after] != stream.labels[after]):.4f}")
print(f"error with the true naive Bayes weights: {exact_error(p, nb_weights(p)).value:.4f}")

print("\nblock rule, ten tasks per block, competence 0.6:")
for n in (9, 25, 49):
    m = sim.generate(np.full(n, 0.6), 20_000, seed=n)
    wrong = 0
    for b in range(0, 20_000, 10):
        block = OpinionMatrix(m.x[:, b : b + 10], m.labels[b : b + 10])
        wrong += int(np.sum(block_aggregate(block, "linear", seed=b) != block.labels))
    print(f"  N={n:>3}: error {wrong / 20_000:.4f}")
