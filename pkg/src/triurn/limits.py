"""Limit coefficients, degeneracy classification, and normalizations.

For each leader nu the limit variables of the other colours sharing its peak
rate are exact-rational multiples of the leader's limit.  The coefficient
vector restricted to each kappa stratum is a left eigenvector of the
activity-weighted mean matrix on that stratum; followers are solved in
topological order, subleaders are seeded from the stratum below.  Everything
is a Fraction and the eigenvector residual is checked to be exactly zero.

Classification of each discrete-time limit:

  extinct               peak rate < 0 (the colour dies out)
  deterministic_exact   peak rate 0, or peak rate == global rate with the
                        colour's coefficient vector proportional to the draw
                        counter's (always true with a single top leader)
  absolutely_continuous everything else

A colour whose ancestry contains a minimal subtraction colour can die out
with its whole cone, so its verdict is additionally wrapped "possibly zero".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .model import MeanMatrix, UrnSpec, ValidationReport, mean_matrix, rational_str, validate
from .structure import (
    StructureReport,
    analyze_structure,
    extend_dummy_iota,
    extend_dummy_zero,
)

__all__ = [
    "AnalysisError",
    "ExactValue",
    "exact_value",
    "CoefficientTable",
    "compute_coefficients",
    "Normalization",
    "normalization",
    "LimitVerdict",
    "ColourLimit",
    "LimitReport",
    "classify_limits",
    "predicted_constants_drawn",
    "AnalysisReport",
    "analyze_spec",
]


class AnalysisError(ValueError):
    """Spec outside the supported class, or an internal exactness failure."""


@dataclass(frozen=True)
class ExactValue:
    """coeff * base**exponent with exact rational parts.

    Pure rationals have base None.  Irrational values arise only through a
    rational base raised to a non-integer rational power; they are kept
    symbolic and evaluated to float at reporting time only.
    """

    coeff: Fraction
    base: Fraction | None = None
    exponent: Fraction | None = None

    def as_float(self) -> float:
        v = float(self.coeff)
        if self.base is not None:
            v *= float(self.base) ** float(self.exponent)
        return v

    def exact_str(self) -> str:
        if self.base is None:
            return rational_str(self.coeff)
        return f"{rational_str(self.coeff)}*({rational_str(self.base)})^({rational_str(self.exponent)})"

    def scaled(self, s: Fraction) -> "ExactValue":
        return ExactValue(self.coeff * s, self.base, self.exponent)


def exact_value(coeff: Fraction, base: Fraction | None = None, exponent: Fraction | None = None) -> ExactValue:
    """Normalize: fold integer exponents into the coefficient."""
    coeff = Fraction(coeff)
    if base is None or exponent is None:
        return ExactValue(coeff)
    base, exponent = Fraction(base), Fraction(exponent)
    if coeff == 0 or exponent == 0 or base == 1:
        return ExactValue(coeff)
    if exponent.denominator == 1:
        return ExactValue(coeff * base ** exponent)
    return ExactValue(coeff, base, exponent)


@dataclass(frozen=True)
class CoefficientTable:
    """c[(i, nu)]: weight of leader nu's limit inside colour i's limit.

    Entries that are zero are omitted.  chat(i, nu) is the discrete-time
    companion lam_hat**(-kappa_i) * c(i, nu), exact because kappa is an
    integer; it requires lam_hat > 0.
    """

    q: int
    leaders: tuple[int, ...]
    entries: dict[tuple[int, int], Fraction]
    kappa: tuple[int, ...]
    lam_hat: Fraction

    def c(self, i: int, nu: int) -> Fraction:
        return self.entries.get((i, nu), Fraction(0))

    def chat(self, i: int, nu: int) -> Fraction:
        if self.lam_hat <= 0:
            raise AnalysisError("hat coefficients need a positive global rate")
        return self.lam_hat ** (-self.kappa[i]) * self.c(i, nu)


def compute_coefficients(structure: StructureReport, mean: MeanMatrix, activities) -> CoefficientTable:
    """Blockwise exact solve of every leader's coefficient vector."""
    graph, exps, roles = structure.graph, structure.exponents, structure.roles
    q = graph.q
    acts = tuple(Fraction(a) for a in activities)
    lam, lam_star, kappa = exps.lam, exps.lam_star, exps.kappa
    topo_pos = {c: k for k, c in enumerate(graph.topo_order)}

    entries: dict[tuple[int, int], Fraction] = {}
    leaders = roles.leaders
    for value in sorted({lam[nu] for nu in leaders}):
        block = [i for i in range(q) if lam_star[i] == value]
        strata: dict[int, list[int]] = {}
        for i in block:
            strata.setdefault(kappa[i], []).append(i)
        for level in strata.values():
            level.sort(key=topo_pos.get)
        block_leaders = [nu for nu in leaders if lam[nu] == value]
        for nu in block_leaders:
            c: dict[int, Fraction] = {}
            for level in sorted(strata):
                for i in strata[level]:
                    if lam[i] == value and level == 0:
                        c[i] = Fraction(1 if i == nu else 0)
                    elif lam[i] == value:
                        # Subleader: seeded from the stratum below.
                        c[i] = sum(
                            (
                                acts[j] * mean[j][i] * c[j]
                                for j in strata.get(level - 1, ())
                            ),
                            Fraction(0),
                        ) / level
                    else:
                        c[i] = sum(
                            (
                                acts[j] * mean[j][i] * c[j]
                                for j in strata[level]
                                if j != i and j in c
                            ),
                            Fraction(0),
                        ) / (value - lam[i])
                # Left-eigenvector residual must vanish identically.
                for i in strata[level]:
                    lhs = sum(
                        (acts[j] * mean[j][i] * c[j] for j in strata[level]),
                        Fraction(0),
                    )
                    if lhs != value * c[i]:
                        raise AnalysisError(
                            f"nonzero eigenvector residual at colour {i}, leader {nu}: "
                            f"{lhs} != {value * c[i]} (internal error)"
                        )
            for i, v in c.items():
                if v != 0:
                    entries[(i, nu)] = v

    table = CoefficientTable(
        q=q, leaders=leaders, entries=entries, kappa=kappa, lam_hat=exps.lam_hat
    )
    # The nonzero support must be exactly the leading-ancestor sets, with
    # strictly positive weights; anything else is an internal inconsistency.
    for i in range(q):
        support = {nu for nu in leaders if table.c(i, nu) != 0}
        if support != set(roles.leading_ancestors[i]):
            raise AnalysisError(
                f"coefficient support {sorted(support)} != leading ancestors "
                f"{sorted(roles.leading_ancestors[i])} for colour {i}"
            )
        if any(table.c(i, nu) < 0 for nu in support):
            raise AnalysisError(f"negative coefficient at colour {i}")
    return table


@dataclass(frozen=True)
class Normalization:
    """Exponents of the growth scale for one colour in one mode.

    Discrete modes: X (or the draw count N) over n**n_pow * log(n)**log_pow.
    Continuous modes: over t**t_pow * exp(exp_rate * t).
    """

    mode: str
    n_pow: Fraction | None = None
    log_pow: Fraction | None = None
    t_pow: int | None = None
    exp_rate: Fraction | None = None
    flagged: str | None = None

    def to_dict(self) -> dict:
        if self.mode.endswith("continuous"):
            out = {"t_pow": self.t_pow, "exp_rate": rational_str(self.exp_rate)}
        else:
            out = {"n_pow": rational_str(self.n_pow), "log_pow": rational_str(self.log_pow)}
        if self.flagged:
            out["flagged"] = self.flagged
        return out


def normalization(structure: StructureReport, i: int, mode: str) -> Normalization:
    """Exact normalization exponents for colour i.

    Drawn modes use the draw-counter exponents: the counter inherits the
    colour's peak rate, and its kappa increases by one exactly when that
    peak rate is zero (checkable by extending the spec and recomputing).
    """
    e = structure.exponents
    lam_star, kappa = e.lam_star[i], e.kappa[i]
    if mode == "continuous":
        return Normalization(mode=mode, t_pow=kappa, exp_rate=lam_star)
    if mode == "drawn-continuous":
        k = kappa if lam_star > 0 else kappa + 1
        return Normalization(mode=mode, t_pow=k, exp_rate=lam_star)
    if mode == "discrete":
        if e.lam_hat > 0:
            return Normalization(mode=mode, n_pow=lam_star / e.lam_hat, log_pow=e.gamma[i])
        flag = None
        if e.gamma is None:
            flag = "zero global rate: power-of-n form, no log correction defined"
        return Normalization(
            mode=mode,
            n_pow=Fraction(kappa, e.kappa_hat0),
            log_pow=Fraction(0),
            flagged=flag,
        )
    if mode == "drawn-discrete":
        if lam_star > 0:
            return Normalization(mode=mode, n_pow=lam_star / e.lam_hat, log_pow=e.gamma[i])
        if e.lam_hat > 0:
            return Normalization(mode=mode, n_pow=Fraction(0), log_pow=Fraction(kappa + 1))
        return Normalization(
            mode=mode,
            n_pow=Fraction(kappa + 1, e.kappa_hat0),
            log_pow=Fraction(0),
            flagged="zero global rate: power-of-n form, no log correction defined",
        )
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class LimitVerdict:
    kind: str  # "deterministic_exact" | "absolutely_continuous" | "extinct"
    value: ExactValue | None = None
    possibly_zero: bool = False
    cause: str | None = None
    caveats: tuple[str, ...] = ()


@dataclass(frozen=True)
class ColourLimit:
    colour: int
    label: str
    verdict: LimitVerdict
    discrete: Normalization
    continuous: Normalization
    drawn_discrete: Normalization | None
    drawn_continuous: Normalization | None
    drawn_constant: ExactValue | None      # exact when the limit is deterministic
    drawn_ratio: Fraction | None           # a.s. limit of N/X when peak rate > 0
    coefficients: dict[int, Fraction]      # leader -> discrete-time weight

    def to_dict(self) -> dict:
        v = self.verdict
        out = {
            "colour": self.colour,
            "label": self.label,
            "verdict": v.kind,
            "possibly_zero": v.possibly_zero,
            "normalization": {
                "discrete": self.discrete.to_dict(),
                "continuous": self.continuous.to_dict(),
            },
            "coefficients": {
                str(nu): rational_str(c) for nu, c in sorted(self.coefficients.items())
            },
        }
        if v.value is not None:
            out["value"] = v.value.exact_str()
            out["value_decimal"] = v.value.as_float()
        if v.cause:
            out["cause"] = v.cause
        if v.caveats:
            out["caveats"] = list(v.caveats)
        if self.drawn_discrete is not None:
            out["normalization"]["drawn_discrete"] = self.drawn_discrete.to_dict()
            out["normalization"]["drawn_continuous"] = self.drawn_continuous.to_dict()
        if self.drawn_constant is not None:
            out["drawn_constant"] = self.drawn_constant.exact_str()
        if self.drawn_ratio is not None:
            out["drawn_ratio"] = rational_str(self.drawn_ratio)
        return out


@dataclass(frozen=True)
class LimitReport:
    colours: tuple[ColourLimit, ...]
    caveats: tuple[str, ...]
    counter_value: ExactValue | None  # deterministic draw-counter limit, if any

    def __getitem__(self, i: int) -> ColourLimit:
        return self.colours[i]

    def to_dict(self) -> dict:
        out = {"colours": [c.to_dict() for c in self.colours]}
        if self.caveats:
            out["caveats"] = list(self.caveats)
        if self.counter_value is not None:
            out["counter_value"] = self.counter_value.exact_str()
        return out


def _deterministic_zero_rate(
    ext_table, ext_roles, coeffs: CoefficientTable, initial, i: int
) -> Fraction:
    """Limit of a colour whose peak rate is zero: its leaders never grow, so
    their limits are the initial counts and the combination is exact."""
    return sum(
        (coeffs.c(i, nu) * initial[nu] for nu in ext_roles.leading_ancestors[i]),
        Fraction(0),
    )


def classify_limits(
    spec: UrnSpec,
    structure: StructureReport | None = None,
    coefficients: CoefficientTable | None = None,
    validation: ValidationReport | None = None,
) -> LimitReport:
    """Verdict, exact value, and normalizations for every colour.

    The computation runs on the spec extended with a draw counter so that
    discrete-time constants (ratios against the counter's limit) are exact.
    """
    validation = validation or validate(spec)
    if not validation.hard_ok:
        bad = sorted({v.assumption for v in validation.violations} - {"A7", "A8"})
        raise AnalysisError(f"spec fails required assumptions: {', '.join(bad)}")
    structure = structure or analyze_structure(spec)

    ext = extend_dummy_zero(spec)
    ext_structure = analyze_structure(ext)
    e = ext_structure.exponents
    roles = ext_structure.roles
    graph = ext_structure.graph
    if coefficients is None:
        coefficients = compute_coefficients(ext_structure, mean_matrix(ext), ext.activities)
    q = spec.q
    counter = q  # index of the appended draw counter

    # Counter identities; failure here means an internal bug, not bad input.
    # (At zero global rate the kappa identity needs every rate nonnegative,
    # which the critical-subtraction counterexamples violate; those formal
    # reports already carry caveats.)
    if e.lam_star[counter] != e.lam_hat:
        raise AnalysisError("draw counter peak rate mismatch (internal error)")
    if e.lam_hat > 0 or all(l >= 0 for l in e.lam[:q]):
        expected_kappa = e.kappa_hat if e.lam_hat > 0 else e.kappa_hat0
        if e.kappa[counter] != expected_kappa:
            raise AnalysisError("draw counter kappa mismatch (internal error)")

    report_caveats: list[str] = []
    a7_bad = next((v for v in validation.violations if v.assumption == "A7"), None)
    if a7_bad is not None:
        report_caveats.append(
            "subtraction colour(s) "
            + ", ".join(str(c) for c in a7_bad.colours)
            + " have no growing ancestor: almost-sure limits may fail; "
            "normalizations are formal and only distributional checks apply"
        )

    top_leaders = [nu for nu in roles.leaders if e.lam[nu] == e.lam_hat]
    risky_minimal = validation.subtraction_colours & graph.minimal

    # Deterministic counter limit (needed for values when lam_hat == 0).
    counter_value: ExactValue | None = None
    if e.lam_hat == 0:
        counter_value = exact_value(
            _deterministic_zero_rate(e, roles, coefficients, ext.initial, counter)
        )

    colours: list[ColourLimit] = []
    for i in range(q):
        caveats: list[str] = []
        ls = e.lam_star[i]
        if ls < 0:
            verdict = LimitVerdict(kind="extinct")
        elif ls == 0:
            cx = _deterministic_zero_rate(e, roles, coefficients, ext.initial, i)
            if e.lam_hat > 0:
                value = exact_value(e.lam_hat ** (-e.kappa[i]) * cx)
            elif counter_value.coeff > 0:
                value = exact_value(
                    cx, counter_value.coeff, Fraction(-e.kappa[i], e.kappa_hat0)
                )
            else:
                # Dying urn (all activity can vanish): draws stop eventually
                # and no draw-count normalization exists.
                value = None
                caveats.append("the urn makes finitely many draws; count freezes")
            verdict = LimitVerdict(kind="deterministic_exact", value=value)
        elif ls < e.lam_hat:
            verdict = LimitVerdict(kind="absolutely_continuous")
        else:
            # Peak rate equals the global rate: deterministic exactly when the
            # coefficient vector matches the draw counter's direction.
            proportional = all(
                coefficients.c(i, k) * coefficients.c(counter, l)
                == coefficients.c(i, l) * coefficients.c(counter, k)
                for k in top_leaders
                for l in top_leaders
            )
            if proportional:
                k0 = next(k for k in top_leaders if coefficients.c(counter, k) != 0)
                ratio = coefficients.c(i, k0) / coefficients.c(counter, k0)
                value = exact_value(e.lam_hat ** (e.kappa_hat - e.kappa[i]) * ratio)
                verdict = LimitVerdict(kind="deterministic_exact", value=value)
            else:
                verdict = LimitVerdict(kind="absolutely_continuous")

        hit = sorted(risky_minimal & (graph.ancestors[i] | {i}))
        if hit:
            verdict = LimitVerdict(
                kind=verdict.kind,
                value=verdict.value,
                possibly_zero=True,
                cause=f"minimal subtraction colour(s) {hit} in the ancestry may die out",
                caveats=verdict.caveats,
            )
        if a7_bad is not None and (set(a7_bad.colours) & (graph.ancestors[i] | {i})):
            caveats.append("almost-sure limit not guaranteed (critical subtraction ancestry)")
        if caveats:
            verdict = LimitVerdict(
                kind=verdict.kind,
                value=verdict.value,
                possibly_zero=verdict.possibly_zero,
                cause=verdict.cause,
                caveats=tuple(caveats),
            )

        drawn_d = drawn_c = None
        drawn_constant = None
        drawn_ratio = None
        if spec.activities[i] > 0:
            drawn_d = normalization(structure, i, "drawn-discrete")
            drawn_c = normalization(structure, i, "drawn-continuous")
            drawn_constant, drawn_ratio = _drawn_prediction(spec, structure, i, verdict)

        coeff_out: dict[int, Fraction] = {}
        for nu in roles.leading_ancestors[i]:
            coeff_out[nu] = (
                coefficients.chat(i, nu) if e.lam_hat > 0 else coefficients.c(i, nu)
            )
        colours.append(
            ColourLimit(
                colour=i,
                label=spec.labels[i],
                verdict=verdict,
                discrete=normalization(structure, i, "discrete"),
                continuous=normalization(structure, i, "continuous"),
                drawn_discrete=drawn_d,
                drawn_continuous=drawn_c,
                drawn_constant=drawn_constant,
                drawn_ratio=drawn_ratio,
                coefficients=coeff_out,
            )
        )
    return LimitReport(
        colours=tuple(colours),
        caveats=tuple(report_caveats),
        counter_value=counter_value,
    )


def _drawn_prediction(
    spec: UrnSpec, structure: StructureReport, i: int, verdict: LimitVerdict
):
    """Exact draw-count constant and the N/X ratio limit for colour i."""
    e = structure.exponents
    a = spec.activities[i]
    ls = e.lam_star[i]
    ratio = a / ls if ls > 0 else None
    if verdict.kind != "deterministic_exact" or verdict.value is None:
        return None, ratio
    if ls > 0:
        return verdict.value.scaled(a / ls), ratio
    if e.lam_hat > 0:
        return verdict.value.scaled(a / ((e.kappa[i] + 1) * e.lam_hat)), ratio
    # Zero global rate: one more counter power of the deterministic total.
    v = verdict.value
    if v.base is None:
        # value is rational; attach the counter-power factor explicitly
        ext = extend_dummy_zero(spec)
        ext_structure = analyze_structure(ext)
        coeffs = compute_coefficients(ext_structure, mean_matrix(ext), ext.activities)
        c0 = _deterministic_zero_rate(
            ext_structure.exponents, ext_structure.roles, coeffs, ext.initial, spec.q
        )
        return (
            exact_value(
                v.coeff * a / (e.kappa[i] + 1), c0, Fraction(-1, e.kappa_hat0)
            ),
            ratio,
        )
    return (
        exact_value(
            v.coeff * a / (e.kappa[i] + 1),
            v.base,
            v.exponent - Fraction(1, e.kappa_hat0),
        ),
        ratio,
    )


def predicted_constants_drawn(spec: UrnSpec, i: int) -> ExactValue | str:
    """Exact limit constant for the draw count of colour i.

    Returns the exact value when the colour's own limit is deterministic;
    otherwise a marker recording the exact multiplicative factor, since the
    ratio of draws to balls still converges to activity / peak rate.
    """
    report = classify_limits(spec)
    cl = report[i]
    if cl.drawn_constant is not None:
        return cl.drawn_constant
    e = analyze_structure(spec).exponents
    if e.lam_star[i] > 0:
        factor = spec.activities[i] / e.lam_star[i]
        return f"({rational_str(factor)}) * limit_of_colour_{i}"
    factor = spec.activities[i] / (e.kappa[i] + 1)
    return f"({rational_str(factor)}) * limit_of_colour_{i} (zero peak rate form)"


@dataclass(frozen=True)
class AnalysisReport:
    """Validation + structure + limits, the full analyzer output."""

    spec: UrnSpec
    validation: ValidationReport
    structure: StructureReport
    limits: LimitReport | None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {
            "validation": self.validation.to_dict(),
            "structure": self.structure.to_dict(),
        }
        if self.limits is not None:
            out["limits"] = self.limits.to_dict()
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _dirichlet_note(spec: UrnSpec) -> str | None:
    """Classical urns: proportions converge to a Dirichlet law."""
    if spec.q < 2:
        return None
    if len({spec.activities[i] for i in range(spec.q)}) != 1 or spec.activities[0] <= 0:
        return None
    b = None
    for i, row in enumerate(spec.rows):
        if not row.is_deterministic():
            return None
        vec = row.atoms[0][1]
        if any(vec[j] != 0 for j in range(spec.q) if j != i):
            return None
        if b is None:
            b = vec[i]
        elif vec[i] != b:
            return None
    if b is None or b <= 0:
        return None
    params = "(" + ", ".join(rational_str(x / b) for x in spec.initial) + ")"
    return (
        f"classical diagonal urn: the colour proportions converge almost surely "
        f"to a Dirichlet{params} vector"
    )


def analyze_spec(spec: UrnSpec) -> AnalysisReport:
    """Run validation, structure analysis, and limit classification."""
    validation = validate(spec)
    if not validation.hard_ok:
        # Structure may still be computable (for error reporting), but a
        # failed required assumption voids the rest of the pipe.
        raise AnalysisError(
            "validation failed: "
            + "; ".join(
                f"{v.assumption}: {v.message}"
                for v in validation.violations
                if v.assumption in ("A0", "A1", "A2", "A3", "A5")
            )
        )
    structure = analyze_structure(spec)
    limits = classify_limits(spec, structure=structure, validation=validation)
    notes = []
    note = _dirichlet_note(spec)
    if note:
        notes.append(note)
    if structure.exponents.total_sublinear:
        notes.append(
            "every top-chain colour is active: the total ball count grows "
            "sublinearly and no finer normalization is reported"
        )
    return AnalysisReport(
        spec=spec,
        validation=validation,
        structure=structure,
        limits=limits,
        notes=tuple(notes),
    )
