"""Urn specification: parsing, validation, and exact mean extraction.

An urn is described by a finite colour set 0..q-1, a nonnegative activity
per colour, a nonnegative initial composition, and one replacement law per
colour.  Each replacement law has finite support: a list of (probability,
vector) atoms with exact rational entries.  Drawing a ball of colour i adds
one atom of row i (sampled by its probabilities) to the composition.

All numbers are `fractions.Fraction`; nothing in this module touches binary
floating point, so downstream exponent and coefficient computations can rely
on exact ties and exact equalities.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

__all__ = [
    "SpecError",
    "ReplacementRow",
    "UrnSpec",
    "MeanMatrix",
    "Violation",
    "ValidationReport",
    "parse_rational",
    "rational_str",
    "parse_spec",
    "parse_spec_file",
    "emit_spec",
    "spec_to_dict",
    "spec_from_dict",
    "mean_matrix",
    "mean_urn",
    "validate",
]


class SpecError(ValueError):
    """Malformed urn document.  `path` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


_FRACTION_RE = re.compile(r"^[+-]?\d+/\d+$")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_rational(value: Any, path: str = "") -> Fraction:
    """Convert an int, "num/den" string, or decimal string to an exact Fraction.

    Decimal strings expand in base 10 ("0.1" -> 1/10), never through a float.
    Raw binary floats are rejected so that a lossy conversion cannot slip in
    silently; JSON/TOML loaders in this module hand decimal literals over as
    strings or Fractions already.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise SpecError("expected a number, got a boolean", path)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise SpecError(
            "binary float rejected; write the number as a decimal string", path
        )
    if isinstance(value, str):
        text = value.strip()
        if _FRACTION_RE.match(text):
            num, den = text.split("/")
            if int(den) == 0:
                raise SpecError("zero denominator", path)
            return Fraction(int(num), int(den))
        if _DECIMAL_RE.match(text):
            return Fraction(text)  # exact base-10 expansion
        raise SpecError(f"cannot parse number {value!r}", path)
    raise SpecError(f"cannot parse number of type {type(value).__name__}", path)


def rational_str(x: Fraction) -> str:
    """Canonical string: "7" for integers, lowest-terms "num/den" otherwise."""
    return str(x)


@dataclass(frozen=True)
class ReplacementRow:
    """Finite-support law of one replacement vector.

    atoms: tuple of (probability, vector) with probabilities strictly positive
    and summing exactly to 1; every vector has length q.
    """

    atoms: tuple[tuple[Fraction, tuple[Fraction, ...]], ...]

    def __post_init__(self):
        if not self.atoms:
            raise SpecError("row needs at least one atom")
        total = sum((p for p, _ in self.atoms), Fraction(0))
        if any(p <= 0 for p, _ in self.atoms):
            raise SpecError("atom probabilities must be strictly positive")
        if total != 1:
            raise SpecError(f"probabilities must sum to 1 (got {total})")

    @property
    def width(self) -> int:
        return len(self.atoms[0][1])

    def mean(self) -> tuple[Fraction, ...]:
        q = self.width
        out = [Fraction(0)] * q
        for p, vec in self.atoms:
            for j, v in enumerate(vec):
                out[j] += p * v
        return tuple(out)

    def is_deterministic(self) -> bool:
        return len(self.atoms) == 1

    def is_zero(self) -> bool:
        return all(v == 0 for _, vec in self.atoms for v in vec)

    @staticmethod
    def point(vector: Sequence[Fraction]) -> "ReplacementRow":
        return ReplacementRow(((Fraction(1), tuple(Fraction(v) for v in vector)),))


@dataclass(frozen=True)
class UrnSpec:
    """Complete urn description; immutable and safe to share across threads.

    subtraction_mode records, per colour, which tenability clause is claimed
    for that colour's column: "auto" (infer), "nonneg" (no removals), or
    "integer" (integer column with -1 allowed on the diagonal).
    """

    activities: tuple[Fraction, ...]
    initial: tuple[Fraction, ...]
    rows: tuple[ReplacementRow, ...]
    labels: tuple[str, ...] = ()
    subtraction_mode: tuple[str, ...] = ()
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        q = len(self.activities)
        if not (len(self.initial) == len(self.rows) == q):
            raise SpecError("colours, initial composition, and rows disagree in length")
        for i, row in enumerate(self.rows):
            if row.width != q:
                raise SpecError(f"row vector length {row.width} != {q}", f"rows[{i}]")
        if any(a < 0 for a in self.activities):
            raise SpecError("activities must be >= 0")
        if any(x < 0 for x in self.initial):
            raise SpecError("initial composition must be >= 0")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"c{i}" for i in range(q)))
        elif len(self.labels) != q:
            raise SpecError("labels length mismatch")
        elif len(set(self.labels)) != q:
            raise SpecError("labels must be unique")
        if not self.subtraction_mode:
            object.__setattr__(self, "subtraction_mode", ("auto",) * q)
        elif len(self.subtraction_mode) != q:
            raise SpecError("subtraction_mode length mismatch")
        for m in self.subtraction_mode:
            if m not in ("auto", "nonneg", "integer"):
                raise SpecError(f"unknown subtraction mode {m!r}")

    @property
    def q(self) -> int:
        return len(self.activities)

    def total_activity(self) -> Fraction:
        return sum(
            (a * x for a, x in zip(self.activities, self.initial)), Fraction(0)
        )

    def is_integer_valued(self) -> bool:
        """True when the composition stays integral in every trajectory."""
        if any(x.denominator != 1 for x in self.initial):
            return False
        return all(
            v.denominator == 1 for row in self.rows for _, vec in row.atoms for v in vec
        )

    def scaled(self, s: Fraction) -> "UrnSpec":
        """Multiply every replacement vector and the initial composition by s > 0."""
        s = Fraction(s)
        if s <= 0:
            raise ValueError("scale must be positive")
        rows = tuple(
            ReplacementRow(tuple((p, tuple(s * v for v in vec)) for p, vec in row.atoms))
            for row in self.rows
        )
        return replace(self, rows=rows, initial=tuple(s * x for x in self.initial))


#: q x q matrix of exact expectations, r[i][j] = E(balls of j added on an i-draw).
MeanMatrix = tuple[tuple[Fraction, ...], ...]


def mean_matrix(spec: UrnSpec) -> MeanMatrix:
    """Exact expectation of each replacement row."""
    return tuple(row.mean() for row in spec.rows)


def mean_urn(spec: UrnSpec) -> UrnSpec:
    """Deterministic urn with each row replaced by its expectation.

    Only defined for urns without removals: with subtractions the averaged
    urn would not be a faithful stand-in (tenability may be lost).
    """
    for i, row in enumerate(spec.rows):
        for _, vec in row.atoms:
            if any(v < 0 for v in vec):
                raise SpecError(
                    "mean urn is defined only for nonnegative replacements",
                    f"rows[{i}]",
                )
    rows = tuple(ReplacementRow.point(m) for m in mean_matrix(spec))
    return replace(spec, rows=rows, subtraction_mode=("auto",) * spec.q)


# ---------------------------------------------------------------------------
# Document parsing and canonical emission


def _load_document(text: str) -> Mapping[str, Any]:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return json.loads(text, parse_float=Fraction)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from None
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text, parse_float=Fraction)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"invalid TOML: {exc}") from None


def spec_from_dict(doc: Mapping[str, Any]) -> UrnSpec:
    """Build an UrnSpec from the parsed document structure."""
    if "colours" not in doc:
        raise SpecError("missing required key", "colours")
    if "rows" not in doc:
        raise SpecError("missing required key", "rows")
    colours = doc["colours"]
    if not isinstance(colours, Sequence) or isinstance(colours, (str, bytes)):
        raise SpecError("must be a list", "colours")
    labels, activities, initial, modes = [], [], [], []
    for i, entry in enumerate(colours):
        path = f"colours[{i}]"
        if not isinstance(entry, Mapping):
            raise SpecError("colour entries must be tables", path)
        labels.append(str(entry.get("label", f"c{i}")))
        activities.append(parse_rational(entry.get("activity", 1), f"{path}.activity"))
        initial.append(parse_rational(entry.get("initial", 0), f"{path}.initial"))
        modes.append(str(entry.get("subtraction", "auto")))
    rows_doc = doc["rows"]
    if not isinstance(rows_doc, Sequence) or len(rows_doc) != len(colours):
        raise SpecError("need exactly one row per colour", "rows")
    rows = []
    for i, row_doc in enumerate(rows_doc):
        atoms = []
        if not isinstance(row_doc, Sequence):
            raise SpecError("each row is a list of atoms", f"rows[{i}]")
        for k, atom in enumerate(row_doc):
            path = f"rows[{i}][{k}]"
            if not isinstance(atom, Mapping) or "p" not in atom or "v" not in atom:
                raise SpecError("atom needs fields p and v", path)
            p = parse_rational(atom["p"], f"{path}.p")
            vec = atom["v"]
            if not isinstance(vec, Sequence) or len(vec) != len(colours):
                raise SpecError(f"vector must have length {len(colours)}", f"{path}.v")
            v = tuple(parse_rational(x, f"{path}.v[{j}]") for j, x in enumerate(vec))
            atoms.append((p, v))
        try:
            rows.append(ReplacementRow(tuple(atoms)))
        except SpecError as exc:
            raise SpecError(str(exc), f"rows[{i}]") from None
    meta = doc.get("meta", {})
    if not isinstance(meta, Mapping):
        raise SpecError("must be a table", "meta")
    return UrnSpec(
        activities=tuple(activities),
        initial=tuple(initial),
        rows=tuple(rows),
        labels=tuple(labels),
        subtraction_mode=tuple(modes),
        meta=dict(meta),
    )


def parse_spec(text: str) -> UrnSpec:
    """Parse a TOML or JSON urn document."""
    return spec_from_dict(_load_document(text))


def parse_spec_file(path) -> UrnSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


def spec_to_dict(spec: UrnSpec) -> dict:
    """Canonical document form: every rational as a lowest-terms string."""
    colours = []
    for i in range(spec.q):
        entry = {
            "label": spec.labels[i],
            "activity": rational_str(spec.activities[i]),
            "initial": rational_str(spec.initial[i]),
        }
        if spec.subtraction_mode[i] != "auto":
            entry["subtraction"] = spec.subtraction_mode[i]
        colours.append(entry)
    rows = [
        [
            {"p": rational_str(p), "v": [rational_str(x) for x in vec]}
            for p, vec in row.atoms
        ]
        for row in spec.rows
    ]
    return {"colours": colours, "meta": dict(spec.meta), "rows": rows}


def emit_spec(spec: UrnSpec) -> str:
    """Byte-stable canonical JSON (sorted keys, exact rationals)."""
    return json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    assumption: str
    colours: tuple[int, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking the standing assumptions on a spec.

    Assumption ids: A0 triangular colour graph; A1 positive initial activity;
    A2 zero-activity colours have zero rows; A3 every colour can appear;
    A5 tenability of removals (clause "a": nonnegative column, clause "b":
    integer column with -1 only on the diagonal); A7 subtraction colours
    have positive peak growth rate; A8 no minimal subtraction colour.
    A6 (the urn never runs out of activity) is generally undecidable from the
    spec; `a6_status` records the sufficient condition that applies, if any.
    """

    passed: frozenset[str]
    violations: tuple[Violation, ...]
    balance: Fraction | None
    subtraction_colours: frozenset[int]
    clauses: tuple[str, ...]  # per colour: "a" | "b" | "violation"
    a6_status: str  # "guaranteed-balanced" | "guaranteed-A8" | "runtime-checked"

    def holds(self, assumption: str) -> bool:
        return assumption in self.passed

    def failed(self, assumption: str) -> bool:
        return any(v.assumption == assumption for v in self.violations)

    @property
    def hard_ok(self) -> bool:
        """True when every assumption required for analysis holds.

        A7/A8 failures are soft: reports carry caveats instead.
        """
        return not any(
            v.assumption in ("A0", "A1", "A2", "A3", "A5") for v in self.violations
        )

    def to_dict(self) -> dict:
        return {
            "passed": sorted(self.passed),
            "violations": [
                {"assumption": v.assumption, "colours": list(v.colours), "message": v.message}
                for v in self.violations
            ],
            "balance": None if self.balance is None else rational_str(self.balance),
            "subtraction_colours": sorted(self.subtraction_colours),
            "clauses": list(self.clauses),
            "a6_status": self.a6_status,
        }


def _column_clause(spec: UrnSpec, i: int) -> tuple[str, str | None]:
    """Classify column i under the tenability dichotomy.

    Returns (clause, message): clause "a" when no removal can touch colour i,
    clause "b" when the column is integer-valued with -1 allowed only on the
    diagonal (and the initial count is a nonnegative integer), "violation"
    otherwise.  Exactly one of the three is reported per colour.
    """
    nonneg = all(vec[i] >= 0 for row in spec.rows for _, vec in row.atoms)
    if nonneg:
        return "a", None
    # Clause b: integer column, -1 permitted on the diagonal only.
    for j, row in enumerate(spec.rows):
        for _, vec in row.atoms:
            v = vec[i]
            if v.denominator != 1:
                return (
                    "violation",
                    f"column {i} mixes removals with non-integer value {v}",
                )
            if j == i:
                if v < -1:
                    return (
                        "violation",
                        f"diagonal value {v} < -1; rescale the colour by {-v} "
                        f"(divide column {i} and initial count, multiply its "
                        f"activity) to reduce to a unit removal",
                    )
            elif v < 0:
                return (
                    "violation",
                    f"off-diagonal removal {v} at row {j} is never tenable",
                )
    if spec.initial[i].denominator != 1:
        return "violation", f"column {i} allows removals but x0[{i}] is not an integer"
    return "b", None


def detect_balance(spec: UrnSpec) -> Fraction | None:
    """Common activity-weighted total of every atom of every active row, if any."""
    beta: Fraction | None = None
    for i, row in enumerate(spec.rows):
        if spec.activities[i] == 0:
            continue
        for _, vec in row.atoms:
            s = sum((a * v for a, v in zip(spec.activities, vec)), Fraction(0))
            if beta is None:
                beta = s
            elif s != beta:
                return None
    return beta


def validate(spec: UrnSpec) -> ValidationReport:
    """Check every standing assumption; never raises, reports evidence."""
    passed: set[str] = set()
    violations: list[Violation] = []
    q = spec.q

    def check(assumption: str, ok: bool, colours: Iterable[int], message: str):
        if ok:
            passed.add(assumption)
        else:
            violations.append(Violation(assumption, tuple(colours), message))

    # A1: deterministic start with positive total activity.
    check("A1", spec.total_activity() > 0, range(q), "initial total activity is zero")

    # A2: inactive colours have identically zero replacement rows.
    bad_a2 = [i for i in range(q) if spec.activities[i] == 0 and not spec.rows[i].is_zero()]
    check("A2", not bad_a2, bad_a2, "zero-activity colour has a nonzero row")

    # A3: every colour starts present or can be produced by another colour.
    r = mean_matrix(spec)
    producible = []
    for i in range(q):
        if spec.initial[i] > 0:
            continue
        if any(
            j != i and any(vec[i] > 0 for _, vec in spec.rows[j].atoms)
            for j in range(q)
        ):
            continue
        producible.append(i)
    check("A3", not producible, producible, "colour can never appear in the urn")

    # A5: per-colour tenability dichotomy.
    clauses: list[str] = []
    bad_a5: list[int] = []
    msgs: list[str] = []
    for i in range(q):
        clause, msg = _column_clause(spec, i)
        claimed = spec.subtraction_mode[i]
        if claimed == "nonneg" and clause != "a":
            clause, msg = "violation", f"column {i} claimed nonnegative but is not"
        if claimed == "integer" and clause == "violation":
            pass  # keep the structural message
        clauses.append(clause)
        if clause == "violation":
            bad_a5.append(i)
            msgs.append(msg or "")
    check("A5", not bad_a5, bad_a5, "; ".join(msgs))

    subtraction = frozenset(
        i
        for i in range(q)
        if any(vec[i] < 0 for _, vec in spec.rows[i].atoms)
    )

    balance = detect_balance(spec)

    # A0, A7, A8 need the colour graph and exponents; import here to keep the
    # module dependency one-way for everything else.
    from . import structure

    try:
        graph = structure.build_graph(r, spec.activities)
    except structure.NonTriangularError as exc:
        check("A0", False, exc.cycle, f"colour graph has a cycle: {list(exc.cycle)}")
        a6 = "runtime-checked"
        if balance is not None and balance >= 0:
            a6 = "guaranteed-balanced"
        return ValidationReport(
            frozenset(passed),
            tuple(violations),
            balance,
            subtraction,
            tuple(clauses),
            a6,
        )
    passed.add("A0")

    exps = structure.compute_exponents(graph, r, spec.activities)
    bad_a7 = sorted(i for i in subtraction if exps.lam_star[i] <= 0)
    check(
        "A7",
        not bad_a7,
        bad_a7,
        "subtraction colour with no growing ancestor: limit theory does not "
        "apply (only distributional checks are meaningful)",
    )
    bad_a8 = sorted(subtraction & graph.minimal)
    check(
        "A8",
        not bad_a8,
        bad_a8,
        "minimal subtraction colour may die out; limits hold on survival only",
    )

    if balance is not None and balance >= 0:
        a6 = "guaranteed-balanced"
    elif not bad_a8 and all(k in passed for k in ("A1", "A2", "A3", "A5")):
        a6 = "guaranteed-A8"
    else:
        a6 = "runtime-checked"
    return ValidationReport(
        frozenset(passed),
        tuple(violations),
        balance,
        subtraction,
        tuple(clauses),
        a6,
    )
