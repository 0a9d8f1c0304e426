"""Where almost-sure convergence genuinely fails: the removal counterexamples.

Two urns whose only growth comes from a critical or dying removal colour.
Their marginals converge in law (negative binomial, Poisson) but not along
paths; the analyzer flags them and the verifier routes to distribution
checks only.
"""

import math

import numpy as np

from triurn import SimulationPlan, analyze_spec, run
from triurn.corpus import build
from triurn.verify import (
    NegBinomialDrawLaw,
    PoissonCountLaw,
    check_distribution,
    check_nonconvergence_witness,
)

pm = build("Eplusminus")
report = analyze_spec(pm)
print("analyzer caveats:")
for caveat in report.limits.caveats:
    print("  -", caveat)

t = 20.0
plan = SimulationPlan(mode="continuous", t_max=t, replicates=8000, seed=41)
B = np.array([tr.final.X[1] for tr in run(pm, plan)])
res = check_distribution(B, NegBinomialDrawLaw(t))
print(f"\nblack count at t={t}: mean {B.mean():.2f} (exact {t}), "
      f"negative-binomial fit p = {res.detail['p_value']:.3f}")

witness = check_nonconvergence_witness(pm, t=20.0, replicates=6000, seed=42)
print(
    f"variance of (B(2t) - 2 B(t))/t at t=20: {witness.estimate:.2f} "
    f"(floor {witness.tolerance}); a path limit would force this to zero"
)

mm = build("Eminusminus")
plan = SimulationPlan(mode="continuous", t_max=10.0, replicates=8000, seed=43)
B = np.array([tr.final.X[1] for tr in run(mm, plan)])
res = check_distribution(B, PoissonCountLaw(10.0))
print(f"\npure removal at t=10: mean {B.mean():.4f} "
      f"(exact {1 - math.exp(-10):.4f}), poisson fit p = {res.detail['p_value']:.3f}")

plan = SimulationPlan(mode="discrete", steps=9, replicates=1, seed=44,
                      checkpoints=list(range(1, 10)))
[tr] = run(mm, plan)
print("discrete parity: B_n =", [int(ck.X[1]) for ck in tr.checkpoints],
      "for n = 1..9 (alternates with n, so B_n cannot converge)")
