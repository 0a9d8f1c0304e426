"""Colour graph, exact growth exponents, and role classification.

The colour graph has an edge i -> j whenever drawing colour i can add balls
of colour j (positive mean off-diagonal entry).  The whole asymptotic theory
applies only when this graph is acyclic; a cycle raises NonTriangularError.

Every exponent here is an exact Fraction or integer:

  lam[i]       self-reinforcement rate, activity(i) * mean diagonal entry
  lam_star[i]  largest lam over i and its ancestors
  kappa[i]     longest ancestor chain attaining lam_star[i], minus one
  lam_hat      global maximum of lam
  kappa_hat    max kappa over colours with lam_star == lam_hat
  kappa_hat0   only when lam_hat == 0: 1 + max kappa over active colours
  gamma[i]     kappa[i] - kappa_hat * lam_star[i] / lam_hat (lam_hat > 0)

Ties in lam change kappa discontinuously, so comparisons are exact; binary
floating point is deliberately absent from this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction

from .model import MeanMatrix, ReplacementRow, UrnSpec, rational_str

__all__ = [
    "NonTriangularError",
    "ColourGraph",
    "ExponentTable",
    "RoleTable",
    "StructureReport",
    "build_graph",
    "compute_exponents",
    "classify_roles",
    "analyze_structure",
    "extend_dummy_zero",
    "extend_dummy_iota",
]


class NonTriangularError(ValueError):
    """The colour graph has a directed cycle; the analysis does not apply."""

    def __init__(self, cycle: tuple[int, ...]):
        self.cycle = cycle
        super().__init__(f"colour graph has a cycle: {list(cycle)}")


@dataclass(frozen=True)
class ColourGraph:
    q: int
    edges: tuple[tuple[int, ...], ...]      # out-neighbours, sorted
    parents: tuple[tuple[int, ...], ...]    # in-neighbours, sorted
    topo_order: tuple[int, ...]
    ancestors: tuple[frozenset[int], ...]   # strict ancestors of each colour
    minimal: frozenset[int]                 # colours with no parents

    def is_ancestor(self, j: int, i: int) -> bool:
        return j in self.ancestors[i]


def build_graph(mean: MeanMatrix, activities) -> ColourGraph:
    """Directed colour graph from the exact mean matrix; rejects cycles."""
    q = len(mean)
    edges = tuple(
        tuple(j for j in range(q) if j != i and mean[i][j] > 0) for i in range(q)
    )
    parents = tuple(
        tuple(j for j in range(q) if j != i and mean[j][i] > 0) for i in range(q)
    )

    # Kahn's algorithm; on failure, walk the leftover subgraph for a witness.
    indeg = [len(parents[i]) for i in range(q)]
    order = [i for i in range(q) if indeg[i] == 0]
    head = 0
    while head < len(order):
        for j in edges[order[head]]:
            indeg[j] -= 1
            if indeg[j] == 0:
                order.append(j)
        head += 1
    if len(order) < q:
        remaining = {i for i in range(q) if i not in set(order)}
        start = min(remaining)
        path, seen = [start], {start}
        while True:
            nxt = next(j for j in edges[path[-1]] if j in remaining)
            if nxt in seen:
                cycle = tuple(path[path.index(nxt):])
                raise NonTriangularError(cycle)
            path.append(nxt)
            seen.add(nxt)

    ancestors = [set() for _ in range(q)]
    for i in order:
        for j in edges[i]:
            ancestors[j].update(ancestors[i])
            ancestors[j].add(i)
    return ColourGraph(
        q=q,
        edges=edges,
        parents=parents,
        topo_order=tuple(order),
        ancestors=tuple(frozenset(s) for s in ancestors),
        minimal=frozenset(i for i in range(q) if not parents[i]),
    )


@dataclass(frozen=True)
class ExponentTable:
    lam: tuple[Fraction, ...]
    lam_star: tuple[Fraction, ...]
    kappa: tuple[int, ...]
    lam_hat: Fraction
    kappa_hat: int
    kappa_hat0: int | None
    gamma: tuple[Fraction, ...] | None
    total_sublinear: bool  # lam_hat == 0 and the ball count grows like o(n)


def _longest_chain_ending(graph: ColourGraph, members: list[int]) -> dict[int, int]:
    """Longest chain (under reachability) through `members`, ending at each.

    members must be closed under nothing in particular; chains may only use
    listed colours.  Returns chain length >= 1 per member.
    """
    member_set = set(members)
    length: dict[int, int] = {}
    for i in graph.topo_order:
        if i not in member_set:
            continue
        best = 0
        for j in graph.ancestors[i]:
            if j in member_set:
                best = max(best, length[j])
        length[i] = best + 1
    return length


def compute_exponents(graph: ColourGraph, mean: MeanMatrix, activities) -> ExponentTable:
    """All growth exponents, exactly, via dynamic programming over the DAG."""
    q = graph.q
    acts = tuple(Fraction(a) for a in activities)
    lam = tuple(acts[i] * mean[i][i] for i in range(q))

    lam_star: list[Fraction] = [Fraction(0)] * q
    for i in graph.topo_order:
        best = lam[i]
        for j in graph.parents[i]:
            if lam_star[j] > best:
                best = lam_star[j]
        lam_star[i] = best

    kappa: list[int] = [0] * q
    for i in range(q):
        v = lam_star[i]
        members = [j for j in range(q) if lam[j] == v and (j == i or graph.is_ancestor(j, i))]
        lengths = _longest_chain_ending(graph, members)
        kappa[i] = max(lengths.values()) - 1  # members is nonempty: v is attained

    lam_hat = max(lam)
    kappa_hat = max((kappa[i] for i in range(q) if lam_star[i] == lam_hat), default=0)
    kappa_hat0 = None
    gamma = None
    total_sublinear = False
    if lam_hat == 0:
        active = [kappa[i] for i in range(q) if acts[i] > 0]
        kappa_hat0 = 1 + max(active) if active else 1
        # The draw count outpaces every colour exactly when the deepest chain
        # ends at an active colour; then the total ball count is o(n).
        total_sublinear = kappa_hat0 > kappa_hat
    else:
        gamma = tuple(
            Fraction(kappa[i]) - Fraction(kappa_hat) * lam_star[i] / lam_hat
            for i in range(q)
        )
    return ExponentTable(
        lam=lam,
        lam_star=tuple(lam_star),
        kappa=tuple(kappa),
        lam_hat=lam_hat,
        kappa_hat=kappa_hat,
        kappa_hat0=kappa_hat0,
        gamma=gamma,
        total_sublinear=total_sublinear,
    )


@dataclass(frozen=True)
class RoleTable:
    """Leader/subleader/follower split and the supporting sets.

    leading_ancestors[i] is the set of leaders whose limit variables span
    colour i's limit (the colour itself for leaders).  blocks maps each
    leader nu to the colours sharing its peak rate, stratified by kappa.
    """

    roles: tuple[str, ...]  # "leader" | "subleader" | "follower"
    leading_ancestors: tuple[frozenset[int], ...]
    blocks: dict[int, dict[int, tuple[int, ...]]]

    @property
    def leaders(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r == "leader")


def classify_roles(exponents: ExponentTable, graph: ColourGraph) -> RoleTable:
    q = graph.q
    lam, lam_star, kappa = exponents.lam, exponents.lam_star, exponents.kappa
    roles = tuple(
        "leader"
        if lam_star[i] == lam[i] and kappa[i] == 0
        else "subleader"
        if lam_star[i] == lam[i]
        else "follower"
        for i in range(q)
    )

    leading: list[frozenset[int]] = []
    for i in range(q):
        if roles[i] == "leader":
            leading.append(frozenset({i}))
            continue
        v = lam_star[i]
        members = [j for j in range(q) if lam[j] == v and (j == i or graph.is_ancestor(j, i))]
        member_set = set(members)
        # Longest chain starting at each member (within the ancestor cone).
        start_len: dict[int, int] = {}
        for j in reversed(graph.topo_order):
            if j not in member_set:
                continue
            best = 0
            for k in member_set:
                if k != j and graph.is_ancestor(j, k):
                    best = max(best, start_len[k])
            start_len[j] = best + 1
        want = kappa[i] + 1
        leading.append(
            frozenset(
                j for j in members if j != i and start_len[j] == want and graph.is_ancestor(j, i)
            )
        )

    blocks: dict[int, dict[int, tuple[int, ...]]] = {}
    for nu in range(q):
        if roles[nu] != "leader":
            continue
        by_kappa: dict[int, list[int]] = {}
        for i in range(q):
            if lam_star[i] == lam[nu]:
                by_kappa.setdefault(kappa[i], []).append(i)
        blocks[nu] = {k: tuple(v) for k, v in sorted(by_kappa.items())}
    return RoleTable(roles=roles, leading_ancestors=tuple(leading), blocks=blocks)


@dataclass(frozen=True)
class StructureReport:
    graph: ColourGraph
    exponents: ExponentTable
    roles: RoleTable

    def to_dict(self) -> dict:
        e, r = self.exponents, self.roles
        per_colour = []
        for i in range(self.graph.q):
            entry = {
                "lambda": rational_str(e.lam[i]),
                "lambda_star": rational_str(e.lam_star[i]),
                "kappa": e.kappa[i],
                "role": r.roles[i],
                "leading_ancestors": sorted(r.leading_ancestors[i]),
            }
            if e.gamma is not None:
                entry["gamma"] = rational_str(e.gamma[i])
            per_colour.append(entry)
        out = {
            "adjacency": [list(out_edges) for out_edges in self.graph.edges],
            "topological_order": list(self.graph.topo_order),
            "minimal_colours": sorted(self.graph.minimal),
            "colours": per_colour,
            "globals": {
                "lambda_hat": rational_str(e.lam_hat),
                "kappa_hat": e.kappa_hat,
                "kappa_hat0": e.kappa_hat0,
            },
        }
        if e.total_sublinear:
            out["globals"]["total_sublinear"] = True
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def analyze_structure(spec: UrnSpec) -> StructureReport:
    """Graph, exponents, and roles in one pass."""
    from .model import mean_matrix

    mean = mean_matrix(spec)
    graph = build_graph(mean, spec.activities)
    exps = compute_exponents(graph, mean, spec.activities)
    return StructureReport(graph=graph, exponents=exps, roles=classify_roles(exps, graph))


def _append_counter(spec: UrnSpec, counted: set[int], label: str) -> UrnSpec:
    """New zero-activity colour receiving one ball whenever a counted colour draws."""
    q = spec.q
    rows = []
    for i in range(q):
        extra = Fraction(1 if i in counted else 0)
        rows.append(
            ReplacementRow(tuple((p, vec + (extra,)) for p, vec in spec.rows[i].atoms))
        )
    rows.append(ReplacementRow.point((Fraction(0),) * (q + 1)))
    base = label
    name, k = base, 1
    while name in spec.labels:
        name, k = f"{base}{k}", k + 1
    return replace(
        spec,
        activities=spec.activities + (Fraction(0),),
        initial=spec.initial + (Fraction(0),),
        rows=tuple(rows),
        labels=spec.labels + (name,),
        subtraction_mode=spec.subtraction_mode + ("auto",),
    )


def extend_dummy_zero(spec: UrnSpec) -> UrnSpec:
    """Append a draw counter: one inert ball added on every draw.

    The new colour's count equals n in the discrete urn, which converts
    continuous-time limits into draw-count normalizations.  Its exponents
    satisfy lam_star = lam_hat and kappa = kappa_hat (or kappa_hat0 when
    lam_hat is zero).
    """
    counted = {i for i in range(spec.q) if spec.activities[i] > 0}
    return _append_counter(spec, counted, "draws")


def extend_dummy_iota(spec: UrnSpec, i: int) -> UrnSpec:
    """Append a per-colour draw counter: one inert ball per draw of colour i.

    The counter's count equals the number of times colour i has been drawn.
    Requires activity(i) > 0 (otherwise the counter stays at zero forever).
    """
    if not (0 <= i < spec.q):
        raise ValueError(f"colour index {i} out of range")
    if spec.activities[i] == 0:
        raise ValueError(f"colour {i} has zero activity and is never drawn")
    return _append_counter(spec, {i}, f"draws_{spec.labels[i]}")
