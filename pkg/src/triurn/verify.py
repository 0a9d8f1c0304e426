"""Closed-form limit laws and Monte Carlo checks against them.

Moment targets are evaluated through the log-Gamma function (relative
accuracy well below 1e-12); distribution targets use chi-square on binned
counts for discrete laws and Kolmogorov-Smirnov for continuous ones.

Check verdicts are deterministic for a fixed seed.  Moment-style checks
pass when |estimate - target| <= max(rel_tol * |target|, 4 * stderr);
distribution checks pass when the p-value is at least 0.01.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg as sla
from scipy import stats
from scipy.special import gammaln

from .limits import AnalysisReport, analyze_spec
from .model import UrnSpec, mean_matrix, rational_str
from .simulate import SimulationPlan, Trajectory, exact_mean, run

__all__ = [
    "InfiniteMomentError",
    "InapplicableCheckError",
    "ExtinctMajorityError",
    "GammaYule",
    "DirichletClassical",
    "BalancedTwoColourMoments",
    "RandomBernoulliMoments",
    "MittagLeffler",
    "NegBinomialDrawLaw",
    "PoissonCountLaw",
    "E3Moments",
    "moment",
    "VerificationResult",
    "check_convergence",
    "check_total_activity",
    "check_moments",
    "check_distribution",
    "check_martingale",
    "check_drawn_ratio",
    "check_oracle_agreement",
    "check_balance_identity",
    "check_parity",
    "check_nonconvergence_witness",
]


class InfiniteMomentError(ValueError):
    """The requested moment order lies outside the law's finite range."""


class InapplicableCheckError(ValueError):
    """The requested check is not meaningful for this spec."""


class ExtinctMajorityError(RuntimeError):
    """Most replicates died although the verdict did not allow for it."""


def _gr(num: list[float], den: list[float], scale: float = 1.0, power: float = 1.0) -> float:
    """scale**power * prod Gamma(num) / prod Gamma(den) via log-Gamma."""
    for a in num + den:
        if a <= 0:
            raise InfiniteMomentError(f"Gamma argument {a} <= 0")
    return math.exp(
        power * math.log(scale) + sum(gammaln(a) for a in num) - sum(gammaln(a) for a in den)
    )


@dataclass(frozen=True)
class GammaYule:
    """Limit of e**(-rate t) X(t) for a single self-reproducing colour.

    Gamma with shape x0/rate and scale rate; mean is exactly x0.  Moments of
    order r exist only for r > -shape (the divergence below that threshold is
    what breaks unbalanced moment convergence).
    """

    shape: float
    scale: float

    def moment(self, r: float) -> float:
        if r <= -self.shape:
            raise InfiniteMomentError(f"order {r} <= -shape {self.shape}")
        return _gr([self.shape + r], [self.shape], self.scale, r)

    def cdf(self, x):
        return stats.gamma.cdf(x, a=self.shape, scale=self.scale)


@dataclass(frozen=True)
class DirichletClassical:
    """Limit proportions of a classical diagonal urn: Dirichlet(x/b)."""

    params: tuple[float, ...]

    def marginal_cdf(self, i: int):
        a = self.params[i]
        b = sum(self.params) - a
        return lambda x: stats.beta.cdf(x, a, b)


@dataclass(frozen=True)
class BalancedTwoColourMoments:
    """Moments of the dominated-colour limit in the balanced two-colour urn.

    Requires alpha = delta + gamma (the balance) with delta, gamma > 0.
    The limit of X_1 / n**(delta/alpha) has
    E Z^r = delta**r * G((x1+x2)/alpha) G(x1/delta + r)
            / (G(x1/delta) G((x1+x2+r delta)/alpha)).
    """

    delta: float
    gamma: float
    alpha: float
    x1: float
    x2: float

    def __post_init__(self):
        if abs(self.alpha - self.delta - self.gamma) > 1e-12 or self.delta <= 0 or self.gamma <= 0:
            raise InapplicableCheckError("law requires alpha == delta + gamma with both positive")

    def moment(self, r: float) -> float:
        d, a, x1, x2 = self.delta, self.alpha, self.x1, self.x2
        return _gr([(x1 + x2) / a, x1 / d + r], [x1 / d, (x1 + x2 + r * d) / a], d, r)


@dataclass(frozen=True)
class RandomBernoulliMoments:
    """Moments for the coin-flip replacement urn (add to own colour w.p. p).

    E Z^r = G(x1+x2) G(x1+r) / (G(x1) G(x1+x2+r p)); the variance exceeds
    that of the averaged urn with the same means.
    """

    p: float
    x1: float
    x2: float

    def moment(self, r: float) -> float:
        return _gr(
            [self.x1 + self.x2, self.x1 + r],
            [self.x1, self.x1 + self.x2 + r * self.p],
        )


@dataclass(frozen=True)
class MittagLeffler:
    """Law with E Z^r = G(r+1)/G(1+rp); root-cluster limit at x = (1, 0)."""

    p: float

    def moment(self, r: float) -> float:
        return _gr([r + 1.0], [1.0 + r * self.p])


@dataclass(frozen=True)
class NegBinomialDrawLaw:
    """Black-ball count at time t for the coin-flip removal urn from (1, 0).

    Negative binomial with 2 successes and success probability 2/(t+2);
    mean exactly t.
    """

    t: float

    @property
    def psucc(self) -> float:
        return 2.0 / (self.t + 2.0)

    def mean(self) -> float:
        return self.t

    def pmf(self, k: int) -> float:
        p = self.psucc
        return (k + 1) * p * p * (1.0 - p) ** k


@dataclass(frozen=True)
class PoissonCountLaw:
    """Black-ball count at time t for the pure-removal urn: Poisson(1 - e^-t)."""

    t: float

    @property
    def mu(self) -> float:
        return 1.0 - math.exp(-self.t)

    def mean(self) -> float:
        return self.mu

    def pmf(self, k: int) -> float:
        return stats.poisson.pmf(k, self.mu)


@dataclass(frozen=True)
class E3Moments:
    """Moments of the middle-colour limit in the balanced three-colour urn.

    For alpha > delta the scale factor is alpha*beta/(alpha-delta); at the
    tie alpha == delta (log-corrected normalization) it is alpha*beta/sigma.
    """

    alpha: float
    beta: float
    delta: float
    sigma: float
    x: tuple[float, float, float]

    def __post_init__(self):
        if self.alpha < self.delta or self.delta <= 0 or self.beta <= 0:
            raise InapplicableCheckError("law requires alpha >= delta > 0 and beta > 0")
        if self.sigma < self.alpha + self.beta:
            raise InapplicableCheckError("balance requires sigma >= alpha + beta")

    def moment(self, r: float) -> float:
        a, b, d, s = self.alpha, self.beta, self.delta, self.sigma
        tot = sum(self.x)
        factor = a * b / (a - d) if a > d else a * b / s
        return _gr([self.x[0] / a + r, tot / s], [self.x[0] / a, (tot + r * a) / s], factor, r)


def moment(law, r: float) -> float:
    """Moment of order r of a closed-form law."""
    return law.moment(r)


# ---------------------------------------------------------------------------
# Results and helpers


@dataclass
class VerificationResult:
    name: str
    kind: str                    # "moment" | "distribution" | "exactness"
    target: float | None
    estimate: float | None
    se: float | None
    tolerance: float | None
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "target": self.target,
            "estimate": self.estimate,
            "se": self.se,
            "tolerance": self.tolerance,
            "verdict": "pass" if self.passed else "fail",
            "detail": self.detail,
        }

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        parts = [f"{self.name}: {verdict}"]
        if self.target is not None:
            parts.append(f"target={self.target:.6g}")
        if self.estimate is not None:
            parts.append(f"estimate={self.estimate:.6g}")
        if self.se is not None:
            parts.append(f"se={self.se:.2g}")
        return "  ".join(parts)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return m, se


def _moment_tolerance(target: float, se: float, rel_tol: float) -> float:
    return max(rel_tol * abs(target), 4.0 * se)


def _final_arrays(trajectories: list[Trajectory]):
    X = np.array([tr.final.X for tr in trajectories])
    N = np.array([tr.final.N for tr in trajectories])
    ok = np.array([tr.status != "extinct" for tr in trajectories])
    return X, N, ok


def _norm_factor(n: float, n_pow: Fraction, log_pow: Fraction) -> float:
    return float(n) ** float(n_pow) * math.log(float(n)) ** float(log_pow)


# ---------------------------------------------------------------------------
# Checks


def check_convergence(
    spec: UrnSpec,
    i: int,
    steps: int,
    replicates: int = 200,
    seed: int = 0,
    rel_tol: float = 0.02,
    workers: int = 1,
    report: AnalysisReport | None = None,
) -> VerificationResult:
    """Normalized colour count at the horizon against its predicted limit.

    Deterministic verdicts are compared to the exact value; random limits
    are checked for stabilization (half-horizon vs horizon) and positivity.
    Statistics condition on colour survival when the verdict allows dying out.
    """
    report = report or analyze_spec(spec)
    cl = report.limits[i]
    norm = cl.discrete
    plan = SimulationPlan(
        mode="discrete",
        steps=steps,
        replicates=replicates,
        seed=seed,
        checkpoints=[steps // 2, steps],
        workers=workers,
    )
    trajs = run(spec, plan)
    alive = [tr for tr in trajs if tr.status != "extinct"]
    extinct_frac = 1.0 - len(alive) / len(trajs)
    if extinct_frac > 0.5 and not cl.verdict.possibly_zero:
        raise ExtinctMajorityError(
            f"{extinct_frac:.0%} of replicates extinct but verdict is {cl.verdict.kind}"
        )

    half = np.array([tr.checkpoints[0].X[i] for tr in alive])
    final = np.array([tr.final.X[i] for tr in alive])
    survival = len(alive) / len(trajs)
    if cl.verdict.possibly_zero:
        keep = final > 0
        survival = float(keep.sum()) / len(trajs)
        half, final = half[keep], final[keep]
    if len(final) == 0:
        return VerificationResult(
            f"convergence[{spec.labels[i]}]", "moment", None, None, None, None, False,
            {"colour": i, "steps": steps, "replicates": replicates, "seed": seed,
             "extinct_fraction": extinct_frac, "survival_fraction": survival,
             "note": "no surviving replicates to measure"},
        )

    z_half = half / _norm_factor(steps // 2, norm.n_pow, norm.log_pow)
    z_final = final / _norm_factor(steps, norm.n_pow, norm.log_pow)
    m, se = _mean_se(z_final)
    detail = {
        "colour": i,
        "steps": steps,
        "replicates": replicates,
        "seed": seed,
        "normalization": norm.to_dict(),
        "extinct_fraction": extinct_frac,
        "survival_fraction": survival,
        "verdict_kind": cl.verdict.kind,
    }
    if cl.verdict.kind == "deterministic_exact":
        target = cl.verdict.value.as_float()
        tol = _moment_tolerance(target, se, rel_tol)
        passed = abs(m - target) <= tol
        return VerificationResult(
            f"convergence[{spec.labels[i]}]", "moment", target, m, se, tol, passed, detail
        )
    # Random limit: the normalized sequence should have settled and be positive.
    m_half, se_half = _mean_se(z_half)
    tol = 0.1 * max(abs(m), 1e-12) + 4.0 * (se + se_half)
    passed = abs(m - m_half) <= tol and m > 0 and float(z_final.min()) > 0
    detail["estimate_half_horizon"] = m_half
    return VerificationResult(
        f"convergence[{spec.labels[i]}]", "moment", None, m, se, tol, passed, detail
    )


def check_total_activity(
    spec: UrnSpec,
    steps: int,
    replicates: int = 200,
    seed: int = 0,
    rel_tol: float = 0.02,
    workers: int = 1,
    report: AnalysisReport | None = None,
) -> VerificationResult:
    """Activity-weighted total over n converges to the global growth rate."""
    report = report or analyze_spec(spec)
    lam_hat = report.structure.exponents.lam_hat
    if lam_hat <= 0:
        raise InapplicableCheckError("total-activity check needs a positive global rate")
    plan = SimulationPlan(
        mode="discrete", steps=steps, replicates=replicates, seed=seed, workers=workers
    )
    trajs = run(spec, plan)
    X, _, ok = _final_arrays(trajs)
    acts = np.array([float(a) for a in spec.activities])
    vals = (X[ok] @ acts) / steps
    m, se = _mean_se(vals)
    target = float(lam_hat)
    tol = _moment_tolerance(target, se, rel_tol)
    return VerificationResult(
        "total_activity", "moment", target, m, se, tol, abs(m - target) <= tol,
        {"steps": steps, "replicates": replicates, "seed": seed},
    )


def check_moments(
    spec: UrnSpec,
    i: int,
    law,
    orders: tuple[float, ...],
    steps: int,
    replicates: int = 2000,
    seed: int = 0,
    rel_tol: float = 0.02,
    workers: int = 1,
    report: AnalysisReport | None = None,
) -> VerificationResult:
    """Empirical moments of the normalized count against a closed-form law.

    Refuses unbalanced specs: without the balance there is no moment
    convergence guarantee, and the diagonal counterexample shows the limit
    may not even have a finite mean.
    """
    report = report or analyze_spec(spec)
    if report.validation.balance is None or report.validation.balance < 0:
        raise InapplicableCheckError(
            "moment checks are restricted to balanced urns: for unbalanced "
            "urns the limit may fail to have finite moments (two-colour "
            "diagonal urn with rates 2 and 1 from (1,1) has an infinite mean)"
        )
    norm = report.limits[i].discrete
    plan = SimulationPlan(
        mode="discrete", steps=steps, replicates=replicates, seed=seed, workers=workers
    )
    trajs = run(spec, plan)
    X, _, ok = _final_arrays(trajs)
    z = X[ok, i] / _norm_factor(steps, norm.n_pow, norm.log_pow)
    sub = []
    passed = True
    worst = None
    for r in orders:
        target = law.moment(r)
        vals = z ** r
        m, se = _mean_se(vals)
        tol = _moment_tolerance(target, se, rel_tol)
        ok_r = abs(m - target) <= tol
        passed &= ok_r
        sub.append(
            {"order": r, "target": target, "estimate": m, "se": se, "tolerance": tol,
             "verdict": "pass" if ok_r else "fail"}
        )
        if worst is None or abs(m - target) / max(tol, 1e-300) > worst[0]:
            worst = (abs(m - target) / max(tol, 1e-300), target, m, se, tol)
    _, target, m, se, tol = worst
    return VerificationResult(
        f"moments[{spec.labels[i]}]", "moment", target, m, se, tol, passed,
        {"orders": list(orders), "per_order": sub, "steps": steps,
         "replicates": replicates, "seed": seed},
    )


def check_distribution(samples: np.ndarray, law, name: str = "distribution",
                       p_threshold: float = 0.01) -> VerificationResult:
    """Goodness of fit: chi-square on binned counts (pmf laws) or KS (cdf laws)."""
    samples = np.asarray(samples)
    if len(samples) < 100:
        raise InapplicableCheckError(f"need at least 100 samples, got {len(samples)}")
    if hasattr(law, "pmf"):
        kmax = int(samples.max())
        ks = np.arange(kmax + 1)
        expected = np.array([law.pmf(int(k)) for k in ks]) * len(samples)
        observed = np.bincount(samples.astype(int), minlength=kmax + 1).astype(float)
        # Fold the upper tail and any sparse bins (expected < 5) together.
        cut = len(expected)
        while cut > 1 and expected[cut - 1:].sum() < 5.0:
            cut -= 1
        obs = np.append(observed[: cut - 1], observed[cut - 1:].sum())
        exp = np.append(expected[: cut - 1], len(samples) - expected[: cut - 1].sum())
        keep = exp >= 5.0
        if not keep.all():
            obs = np.append(obs[keep], obs[~keep].sum())
            exp = np.append(exp[keep], exp[~keep].sum())
        chi2, p = stats.chisquare(obs, exp)
        detail = {"test": "chi-square", "bins": int(len(obs)), "stat": float(chi2),
                  "n": int(len(samples))}
    else:
        cdf = law.cdf if hasattr(law, "cdf") else law
        stat, p = stats.kstest(samples, cdf)
        detail = {"test": "ks", "stat": float(stat), "n": int(len(samples))}
    return VerificationResult(
        name, "distribution", None, None, None, p_threshold, bool(p >= p_threshold),
        {**detail, "p_value": float(p)},
    )


def exact_mean_curve(spec: UrnSpec, times) -> np.ndarray:
    """Exact mean of the continuous-time composition: x0 expm(t M), M = diag(a) r."""
    r = np.array([[float(v) for v in row] for row in mean_matrix(spec)])
    a = np.diag([float(x) for x in spec.activities])
    M = a @ r
    x0 = np.array([float(x) for x in spec.initial])
    return np.array([x0 @ sla.expm(t * M) for t in times])


def check_martingale(
    spec: UrnSpec,
    i: int,
    times: tuple[float, ...],
    replicates: int = 4000,
    seed: int = 0,
    workers: int = 1,
) -> VerificationResult:
    """Means of e**(-rate t) X_i(t) match the exact mean curve at every time.

    For a minimal colour the scaled exact mean is the constant x0, which is
    the martingale property in sample-mean form; for produced colours the
    exact curve comes from the matrix exponential of the weighted means.
    """
    times = tuple(sorted(times))
    from .structure import analyze_structure

    lam = float(analyze_structure(spec).exponents.lam[i])
    plan = SimulationPlan(
        mode="continuous", t_max=times[-1], replicates=replicates, seed=seed,
        checkpoints=list(times), workers=workers,
    )
    trajs = run(spec, plan)
    targets = exact_mean_curve(spec, times)[:, i]
    rows = []
    passed = True
    worst = None
    for k, tt in enumerate(times):
        vals = np.array([tr.checkpoints[k].X[i] for tr in trajs]) * math.exp(-lam * tt)
        m, se = _mean_se(vals)
        target = targets[k] * math.exp(-lam * tt)
        tol = 3.0 * se
        ok = abs(m - target) <= max(tol, 1e-12)
        passed &= ok
        rows.append({"t": tt, "target": target, "estimate": m, "se": se,
                     "verdict": "pass" if ok else "fail"})
        score = abs(m - target) / max(se, 1e-300)
        if worst is None or score > worst[0]:
            worst = (score, target, m, se, tol)
    _, target, m, se, tol = worst
    return VerificationResult(
        f"martingale[{spec.labels[i]}]", "moment", target, m, se, tol, passed,
        {"times": list(times), "per_time": rows, "replicates": replicates, "seed": seed},
    )


def check_drawn_ratio(
    spec: UrnSpec,
    i: int,
    steps: int,
    replicates: int = 200,
    seed: int = 0,
    rel_tol: float = 0.02,
    workers: int = 1,
    report: AnalysisReport | None = None,
) -> VerificationResult:
    """Draw count over ball count converges to activity / peak rate."""
    report = report or analyze_spec(spec)
    e = report.structure.exponents
    if e.lam_star[i] <= 0:
        raise InapplicableCheckError("draw/ball ratio needs a positive peak rate")
    target = float(spec.activities[i] / e.lam_star[i])
    plan = SimulationPlan(
        mode="discrete", steps=steps, replicates=replicates, seed=seed, workers=workers
    )
    trajs = run(spec, plan)
    X, N, ok = _final_arrays(trajs)
    keep = ok & (X[:, i] > 0)
    vals = N[keep, i] / X[keep, i]
    m, se = _mean_se(vals)
    tol = _moment_tolerance(target, se, rel_tol)
    return VerificationResult(
        f"drawn_ratio[{spec.labels[i]}]", "moment", target, m, se, tol,
        abs(m - target) <= tol,
        {"steps": steps, "replicates": replicates, "seed": seed,
         "survival_fraction": float(keep.mean())},
    )


def check_oracle_agreement(
    spec: UrnSpec,
    n: int,
    replicates: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> VerificationResult:
    """Monte Carlo mean at small n against the exact enumeration mean."""
    target = [float(v) for v in exact_mean(spec, n)]
    plan = SimulationPlan(
        mode="discrete", steps=n, replicates=replicates, seed=seed, workers=workers
    )
    trajs = run(spec, plan)
    X = np.array([tr.final.X for tr in trajs])  # extinct paths freeze; keep all
    rows = []
    passed = True
    worst_gap = 0.0
    worst = (0.0, 0.0, 0.0, 0.0)
    for j in range(spec.q):
        m, se = _mean_se(X[:, j])
        tol = 3.0 * se
        gap = abs(m - target[j])
        ok = gap <= max(tol, 1e-12)
        passed &= ok
        rows.append({"colour": j, "target": target[j], "estimate": m, "se": se,
                     "verdict": "pass" if ok else "fail"})
        if gap / max(se, 1e-300) >= worst_gap:
            worst_gap = gap / max(se, 1e-300)
            worst = (target[j], m, se, tol)
    t0, m0, se0, tol0 = worst
    return VerificationResult(
        "oracle_agreement", "moment", t0, m0, se0, tol0, passed,
        {"n": n, "replicates": replicates, "seed": seed, "per_colour": rows},
    )


def check_balance_identity(
    spec: UrnSpec,
    steps: int,
    replicates: int = 20,
    seed: int = 0,
    report: AnalysisReport | None = None,
) -> VerificationResult:
    """a . X_n == a . X_0 + n * balance on every checkpoint of every path.

    Exact (tolerance zero) for integer-valued specs, relative 1e-12 otherwise.
    """
    report = report or analyze_spec(spec)
    beta = report.validation.balance
    if beta is None:
        raise InapplicableCheckError("spec is not balanced")
    plan = SimulationPlan(
        mode="discrete", steps=steps, replicates=replicates, seed=seed,
        checkpoints=list(range(1, min(steps, 64) + 1)) + [steps],
    )
    trajs = run(spec, plan)
    acts = np.array([float(a) for a in spec.activities])
    base = float(spec.total_activity())
    tol = 0.0 if spec.is_integer_valued() else 1e-12
    worst = 0.0
    for tr in trajs:
        for ck in tr.checkpoints + [tr.final]:
            expected = base + ck.n * float(beta)
            err = abs(float(np.dot(acts, ck.X)) - expected)
            if tol > 0 and expected != 0:
                err /= abs(expected)
            worst = max(worst, err)
    return VerificationResult(
        "balance_identity", "exactness", 0.0, worst, None, tol, worst <= tol,
        {"steps": steps, "replicates": replicates, "seed": seed,
         "balance": rational_str(beta)},
    )


def check_parity(
    spec: UrnSpec,
    colour: int,
    steps: int = 2000,
    replicates: int = 5,
    seed: int = 0,
) -> VerificationResult:
    """X[colour] changes by exactly +-1 per draw, so its parity tracks n.

    Checked exactly on every step of every replicate; applicable when every
    atom of every row changes the colour's count by +-1.
    """
    for row in spec.rows:
        for _, vec in row.atoms:
            if abs(vec[colour]) != 1:
                raise InapplicableCheckError(
                    "parity check needs every replacement to move the colour by exactly one"
                )
    base = int(spec.initial[colour])
    plan = SimulationPlan(
        mode="discrete", steps=steps, replicates=replicates, seed=seed,
        checkpoints=list(range(1, steps + 1)),
    )
    violations = 0
    for tr in run(spec, plan):
        for ck in tr.checkpoints:
            if (int(ck.X[colour]) - base) % 2 != ck.n % 2:
                violations += 1
    return VerificationResult(
        f"parity[{spec.labels[colour]}]", "exactness", 0.0, float(violations), None,
        0.0, violations == 0,
        {"steps": steps, "replicates": replicates, "seed": seed},
    )


def check_nonconvergence_witness(
    spec: UrnSpec,
    t: float = 20.0,
    replicates: int = 4000,
    seed: int = 0,
    colour: int = 1,
    floor: float = 0.5,
    workers: int = 1,
) -> VerificationResult:
    """Variance of (X(2t) - 2 X(t)) / t stays away from zero.

    Almost-sure convergence of X(t)/t would force this variance to vanish;
    a strictly positive floor certifies that only distributional convergence
    holds, which is why no almost-sure check is run for such specs.
    """
    plan = SimulationPlan(
        mode="continuous", t_max=2 * t, replicates=replicates, seed=seed,
        checkpoints=[t, 2 * t], workers=workers,
    )
    trajs = run(spec, plan)
    at_t = np.array([tr.checkpoints[0].X[colour] for tr in trajs])
    at_2t = np.array([tr.checkpoints[1].X[colour] for tr in trajs])
    vals = (at_2t - 2.0 * at_t) / t
    var = float(vals.var(ddof=1))
    return VerificationResult(
        "nonconvergence_witness", "moment", None, var, None, floor, var >= floor,
        {"t": t, "replicates": replicates, "seed": seed,
         "note": "variance floor certifies non-degenerate rescaled increments"},
    )
