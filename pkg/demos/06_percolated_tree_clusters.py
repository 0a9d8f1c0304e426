"""Root clusters of percolated preferential-attachment trees, via urns.

Vertices attach to a parent with probability proportional to
alpha * outdegree + 1; each edge is kept with probability p.  The number of
vertices connected to the root through kept edges is a linear functional of
a two-colour urn, and the chain of "k lost edges on the root path" counters
extends it to a ladder of log-corrected scales with exactly proportional
limits.
"""

import numpy as np

from triurn import SimulationPlan, analyze_spec, run
from triurn.corpus import build

ALPHA, P = 1.0, 0.5
spec = build("Epref", alpha=1, p="1/2")
report = analyze_spec(spec)
norm = report.limits[0].discrete
print(f"active-side count grows like n^{norm.n_pow}")

plan = SimulationPlan(mode="discrete", steps=50_000, replicates=400, seed=17)
trajs = run(spec, plan)
X1 = np.array([tr.final.X[0] for tr in trajs])
N1 = np.array([tr.final.N[0] for tr in trajs])
Z = X1 - ALPHA * N1  # root-cluster size: balls minus weight carried by degrees
print(f"cluster/count ratio: {np.mean(Z / X1):.4f} "
      f"(exact limit p/(alpha+p) = {P / (ALPHA + P):.4f})")

# The ladder: counters for k lost edges are asymptotically proportional with
# exact coefficients (1/k!) ((1-p)/(alpha+1))**k.
ladder = build("Eprefk", q=4, alpha=1, p="1/2")
rep = analyze_spec(ladder)
print("\nladder coefficients against the level-0 leader:")
for cl in rep.limits.colours[:3]:
    print(f"  level {cl.colour}: kappa={rep.structure.exponents.kappa[cl.colour]}, "
          f"weight={cl.coefficients.get(0)}")
# level k carries one extra factor (1-p)/(alpha+1) / k each step up.
