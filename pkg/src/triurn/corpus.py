"""Built-in example urns: the regression corpus.

Each template materializes a parameterized spec with its documented
constraints enforced, plus a verification bundle matched to what is actually
provable for it (deterministic limits, closed-form moments, marginal laws,
or detection only).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .model import ReplacementRow, SpecError, UrnSpec, parse_rational

__all__ = ["CorpusTemplate", "CORPUS", "resolve", "build", "corpus_names"]

F = Fraction


def _spec(activities, initial, rows, labels, name, params) -> UrnSpec:
    meta = {"template": name, "params": {k: str(v) for k, v in sorted(params.items())}}
    return UrnSpec(
        activities=tuple(F(a) for a in activities),
        initial=tuple(F(x) for x in initial),
        rows=tuple(rows),
        labels=tuple(labels),
        meta=meta,
    )


def _point(*vec) -> ReplacementRow:
    return ReplacementRow.point([F(v) for v in vec])


def _mix(*atoms) -> ReplacementRow:
    return ReplacementRow(
        tuple((F(p), tuple(F(v) for v in vec)) for p, vec in atoms)
    )


def _classical(p: Mapping[str, F]) -> UrnSpec:
    q, b = int(p["q"]), p["b"]
    if q < 2 or b <= 0:
        raise SpecError("classical urn needs q >= 2 colours and b > 0")
    x = [p.get(f"x{i + 1}", F(1)) for i in range(q)]
    rows = [
        _point(*(b if j == i else 0 for j in range(q)))
        for i in range(q)
    ]
    return _spec([1] * q, x, rows, [f"c{i}" for i in range(q)], "Eclassical", p)


def _diagonal(p: Mapping[str, F]) -> UrnSpec:
    alpha, delta = p["alpha"], p["delta"]
    if not (alpha > delta > 0):
        raise SpecError("diagonal counterexample form needs alpha > delta > 0")
    rows = [_point(alpha, 0), _point(0, delta)]
    return _spec([1, 1], [p["x1"], p["x2"]], rows, ["fast", "slow"], "ED", p)


def _e2(p: Mapping[str, F]) -> UrnSpec:
    delta, gamma, alpha = p["delta"], p["gamma"], p["alpha"]
    if delta <= 0 or gamma <= 0:
        raise SpecError("two-colour triangular urn needs delta > 0 and gamma > 0")
    if alpha < 0 and alpha != -1:
        raise SpecError("negative diagonal must be exactly -1")
    rows = [_point(delta, gamma), _point(0, alpha)]
    return _spec([1, 1], [p["x1"], p["x2"]], rows, ["white", "black"], "E2", p)


def _e2x(p: Mapping[str, F]) -> UrnSpec:
    delta, gamma, alpha = p["delta"], p["gamma"], p["alpha"]
    if delta <= 0 or gamma <= 0:
        raise SpecError("needs delta > 0 and gamma > 0")
    rows = [
        _mix((F(1, 2), (2 * delta, gamma)), (F(1, 2), (0, gamma))),
        _point(0, alpha),
    ]
    return _spec([1, 1], [p["x1"], p["x2"]], rows, ["white", "black"], "E2X", p)


def _e2p(p: Mapping[str, F]) -> UrnSpec:
    prob = p["p"]
    if not (0 < prob < 1):
        raise SpecError("coin bias must lie strictly between 0 and 1")
    rows = [
        _mix((prob, (1, 0)), (1 - prob, (0, 1))),
        _point(0, 1),
    ]
    return _spec([1, 1], [p["x1"], p["x2"]], rows, ["white", "black"], "E2p", p)


def _epref(p: Mapping[str, F]) -> UrnSpec:
    alpha, prob = p["alpha"], p["p"]
    if alpha < 0 or not (0 < prob < 1):
        raise SpecError("needs alpha >= 0 and 0 < p < 1")
    rows = [
        _mix((prob, (alpha + 1, 0)), (1 - prob, (alpha, 1))),
        _point(0, alpha + 1),
    ]
    return _spec([1, 1], [1, 0], rows, ["active", "passive"], "Epref", p)


def _eprefneg(p: Mapping[str, F]) -> UrnSpec:
    d, prob = p["d"], p["p"]
    if d.denominator != 1 or d < 2:
        raise SpecError("branching cap d must be an integer >= 2")
    if not (d * prob > 1):
        raise SpecError("needs d * p > 1 (otherwise the active set stays bounded)")
    rows = [
        _mix((prob, (d - 1, 0)), (1 - prob, (-1, d))),
        _point(0, d - 1),
    ]
    return _spec([1, 1], [d, 0], rows, ["active", "passive"], "Eprefneg", p)


def _eprefk(p: Mapping[str, F]) -> UrnSpec:
    q, alpha, prob = int(p["q"]), p["alpha"], p["p"]
    if q < 2 or alpha < 0 or not (0 < prob < 1):
        raise SpecError("needs q >= 2, alpha >= 0, 0 < p < 1")
    rows = []
    for i in range(q - 1):
        keep = [0] * q
        keep[i] = alpha + 1
        move = [0] * q
        move[i] = alpha
        move[i + 1] = 1
        rows.append(_mix((prob, tuple(keep)), (1 - prob, tuple(move))))
    last = [0] * q
    last[q - 1] = alpha + 1
    rows.append(_point(*last))
    x = [1] + [0] * (q - 1)
    return _spec([1] * q, x, rows, [f"level{k}" for k in range(q)], "Eprefk", p)


def _e3(p: Mapping[str, F]) -> UrnSpec:
    a, b, d, s = p["alpha"], p["beta"], p["delta"], p["sigma"]
    if not (a >= d > 0 and b > 0):
        raise SpecError("needs alpha >= delta > 0 and beta > 0")
    if s < a + b or s < d:
        raise SpecError("balance needs sigma >= alpha + beta and sigma >= delta")
    rows = [
        _point(a, b, s - a - b),
        _point(0, d, s - d),
        _point(0, 0, s),
    ]
    return _spec([1, 1, 1], [p["x1"], p["x2"], p["x3"]], rows, ["a", "b", "c"], "E3", p)


def _eplusminus(p: Mapping[str, F]) -> UrnSpec:
    if p["x2"].denominator != 1 or p["x2"] < 0:
        raise SpecError("black start must be a nonnegative integer")
    rows = [
        _point(0, 1),
        _mix((F(1, 2), (0, 1)), (F(1, 2), (0, -1))),
    ]
    return _spec([1, 1], [p["x1"], p["x2"]], rows, ["white", "black"], "Eplusminus", p)


def _eminusminus(p: Mapping[str, F]) -> UrnSpec:
    if p["x2"].denominator != 1 or p["x2"] < 0:
        raise SpecError("black start must be a nonnegative integer")
    rows = [
        _point(0, 1),
        _point(0, -1),
    ]
    return _spec([1, 1], [p["x1"], p["x2"]], rows, ["white", "black"], "Eminusminus", p)


def _ecx0(p: Mapping[str, F]) -> UrnSpec:
    a, b, g, d = p["alpha"], p["beta"], p["gamma"], p["delta"]
    for v in (a, b, g, d):
        if v.denominator != 1 or v <= 0:
            raise SpecError("parameters must be positive integers")
    lam = [a / 2 - 1, b / 2 - 1, g, d]
    if not (lam[3] == lam[0] > lam[1] > lam[2] > 0):
        raise SpecError(
            "needs delta == alpha/2 - 1 > beta/2 - 1 > gamma > 0 "
            f"(got rates {[str(v) for v in lam]})"
        )
    quarter = F(1, 4)

    def bern_row(diag_scale: F, col: int) -> ReplacementRow:
        atoms = []
        for e1 in (0, 1):
            for e2 in (0, 1):
                vec = [F(0)] * 4
                vec[col] = diag_scale * e1 - 1
                vec[2] = F(e2)
                atoms.append((quarter, tuple(vec)))
        return ReplacementRow(tuple(atoms))

    rows = [
        bern_row(a, 0),
        bern_row(b, 1),
        _point(0, 0, g, 0),
        _point(0, 0, 0, d),
    ]
    return _spec([1, 1, 1, 1], [1, 1, 0, 1], rows, ["p", "q", "r", "s"], "EcX0", p)


def _estrict(p: Mapping[str, F]) -> UrnSpec:
    rows = [_point(0, 1), _point(0, 0)]
    return _spec([1, 0], [p["x1"], p["x2"]], rows, ["source", "sink"], "Estrict", p)


@dataclass(frozen=True)
class CorpusTemplate:
    name: str
    summary: str
    defaults: dict[str, Fraction]
    builder: Callable[[Mapping[str, Fraction]], UrnSpec]
    suites: tuple[str, ...]  # applicable verification suites

    def build(self, **overrides) -> UrnSpec:
        params = dict(self.defaults)
        for key, value in overrides.items():
            if key not in params:
                raise SpecError(f"unknown parameter {key!r} for template {self.name}")
            params[key] = parse_rational(value, key)
        return self.builder(params)


CORPUS: dict[str, CorpusTemplate] = {
    t.name: t
    for t in [
        CorpusTemplate(
            "Eclassical",
            "diagonal urn, b of the drawn colour added; Dirichlet proportions",
            {"q": F(2), "b": F(1), "x1": F(1), "x2": F(1)},
            _classical,
            ("convergence", "drawn-ratio", "distribution", "balance"),
        ),
        CorpusTemplate(
            "ED",
            "two independent rates; moments of the slow colour's limit diverge",
            {"alpha": F(2), "delta": F(1), "x1": F(1), "x2": F(1)},
            _diagonal,
            ("convergence", "drawn-ratio"),
        ),
        CorpusTemplate(
            "E2",
            "deterministic triangular two-colour urn ((delta, gamma), (0, alpha))",
            {"delta": F(2), "gamma": F(1), "alpha": F(1), "x1": F(1), "x2": F(0)},
            _e2,
            ("convergence", "drawn-ratio", "activity", "moments", "balance"),
        ),
        CorpusTemplate(
            "E2X",
            "random-replacement twin of E2 with the same mean matrix",
            {"delta": F(2), "gamma": F(1), "alpha": F(1), "x1": F(1), "x2": F(0)},
            _e2x,
            ("convergence", "drawn-ratio", "activity"),
        ),
        CorpusTemplate(
            "E2p",
            "coin-flip urn: drawn white adds white w.p. p else black; balanced",
            {"p": F(1, 2), "x1": F(1), "x2": F(0)},
            _e2p,
            ("convergence", "moments", "balance"),
        ),
        CorpusTemplate(
            "Epref",
            "preferential-attachment root cluster (weight alpha d(v) + 1, bond keep p)",
            {"alpha": F(1), "p": F(1, 2)},
            _epref,
            ("convergence", "drawn-ratio", "balance"),
        ),
        CorpusTemplate(
            "Eprefneg",
            "d-ary recursive tree root cluster (alpha = -1/d), removals on the diagonal",
            {"d": F(3), "p": F(1, 2)},
            _eprefneg,
            ("convergence", "balance"),
        ),
        CorpusTemplate(
            "Eprefk",
            "chain of cluster levels: k passive edges on the root path",
            {"q": F(3), "alpha": F(1), "p": F(1, 2)},
            _eprefk,
            ("convergence", "balance"),
        ),
        CorpusTemplate(
            "E3",
            "balanced three-colour triangular urn with closed-form moments",
            {
                "alpha": F(2), "beta": F(1), "delta": F(1), "sigma": F(4),
                "x1": F(1), "x2": F(0), "x3": F(0),
            },
            _e3,
            ("convergence", "activity", "moments", "balance"),
        ),
        CorpusTemplate(
            "Eplusminus",
            "critical removal urn: black count converges in law only (neg. binomial)",
            {"x1": F(1), "x2": F(0)},
            _eplusminus,
            ("distribution", "martingale", "witness"),
        ),
        CorpusTemplate(
            "Eminusminus",
            "pure-removal urn: Poisson marginal, period-2 parity in discrete time",
            {"x1": F(1), "x2": F(0)},
            _eminusminus,
            ("distribution", "parity"),
        ),
        CorpusTemplate(
            "EcX0",
            "four-colour urn whose middle colour may grow at three different rates",
            {"alpha": F(8), "beta": F(6), "gamma": F(1), "delta": F(3)},
            _ecx0,
            ("detection",),
        ),
        CorpusTemplate(
            "Estrict",
            "strictly triangular: zero diagonal everywhere, pure power-of-n growth",
            {"x1": F(1), "x2": F(0)},
            _estrict,
            ("convergence",),
        ),
    ]
}

_ALIASES = {
    "classical": "Eclassical",
    "diagonal": "ED",
    "E2p1": "E2p",      # percolated recursive tree start x = (1, 0)
    "Epref-": "Eprefneg",
    "E+-": "Eplusminus",
    "E--": "Eminusminus",
    "EcX=0": "EcX0",
    "strict": "Estrict",
}


def resolve(name: str) -> CorpusTemplate:
    key = _ALIASES.get(name, name)
    if key not in CORPUS:
        known = ", ".join(sorted(CORPUS))
        raise SpecError(f"unknown corpus template {name!r}; known: {known}")
    return CORPUS[key]


def build(name: str, **overrides) -> UrnSpec:
    return resolve(name).build(**overrides)


def corpus_names() -> list[str]:
    return sorted(CORPUS)
