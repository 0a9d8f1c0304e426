"""Simulate the coin-flip urn and watch the predicted power law emerge.

Drawing a white ball adds a white ball with probability p, else a black
ball; drawing a black ball always adds a black ball.  The white count grows
like n**p with a Mittag-Leffler limit when started from a single white ball.
"""

import math

import numpy as np

from triurn import SimulationPlan, analyze_spec, run
from triurn.corpus import build
from triurn.verify import MittagLeffler

P = 0.5
spec = build("E2p", p="1/2")
report = analyze_spec(spec)
norm = report.limits[0].discrete
print(f"predicted scale for white: n^{norm.n_pow}")

plan = SimulationPlan(
    mode="discrete",
    steps=100_000,
    replicates=2_000,
    seed=7,
    checkpoints=[10**k for k in range(2, 6)],
)
trajs = run(spec, plan)

law = MittagLeffler(p=P)
print(f"{'n':>8} {'mean X/n^p':>12} {'target':>9} {'2nd moment':>11} {'target':>9}")
for k, n in enumerate(plan.checkpoints):
    z = np.array([tr.checkpoints[k].X[0] for tr in trajs]) / n**P
    print(
        f"{n:>8} {z.mean():>12.4f} {law.moment(1):>9.4f} "
        f"{np.mean(z**2):>11.4f} {law.moment(2):>9.4f}"
    )

# The first moment approaches 2/sqrt(pi) ~ 1.1284 and the second moment 2.
se = np.array([tr.final.X[0] for tr in trajs]).std() / (100_000**P * math.sqrt(2000))
print(f"\nstandard error of the final mean: {se:.4f}")
