"""Cross-check the simulator against brute-force exact enumeration.

For a small horizon the full outcome tree is tractable: every draw/atom
sequence is expanded with exact rational probabilities and merged by
composition.  Monte Carlo means must land within a few standard errors.
"""

import math

import numpy as np

from triurn import SimulationPlan, enumerate_exact, exact_mean, run
from triurn.corpus import build

spec = build("E2", delta=1, gamma=1, alpha=1)  # rows (1,1) and (0,1) from (1,0)
n = 4

print(f"exact distribution of the composition after {n} draws:")
for prob, comp in enumerate_exact(spec, n):
    print(f"  P = {str(prob):>8}   X = ({', '.join(str(c) for c in comp)})")

target = exact_mean(spec, n)
print("\nexact mean:", tuple(str(v) for v in target))

plan = SimulationPlan(mode="discrete", steps=n, replicates=200_000, seed=11)
X = np.array([tr.final.X for tr in run(spec, plan)])
for j, label in enumerate(spec.labels):
    m = X[:, j].mean()
    se = X[:, j].std(ddof=1) / math.sqrt(len(X))
    z = f"{(m - float(target[j])) / se:+.2f}" if se > 0 else "exact"
    print(f"monte carlo {label}: {m:.5f}  (exact {float(target[j]):.5f}, z = {z})")
