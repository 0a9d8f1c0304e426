"""Discrete and continuous-time urn simulation, and an exact enumerator.

Randomness protocol
-------------------
Every replicate owns an independent PCG64 stream derived from the master
seed and the replicate index.  Each step consumes a fixed number of uniform
doubles from that stream, in a fixed order:

    continuous mode:  waiting-time uniform, colour uniform, atom uniform
    discrete mode:    colour uniform, atom uniform

The atom uniform is consumed even for single-atom rows, and the waiting time
is derived from its uniform as -log1p(-u) / rate.  Because the protocol is
position-fixed, the batched array engine and the single-step reference
stepper consume identical values, and trajectories are bit-identical across
batch sizes, worker counts, and scheduling orders.

Counts are float64 with an exact-integer fast path: integer-valued specs
stay exactly integral until 2**53, beyond which the trajectory is flagged
approximate.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import UrnSpec

__all__ = [
    "RngPlan",
    "SimulationPlan",
    "UrnState",
    "Checkpoint",
    "Trajectory",
    "NegativeCountError",
    "TreeTooLargeError",
    "step_discrete",
    "step_continuous",
    "run",
    "enumerate_exact",
    "exact_mean",
]

RNG_ALGORITHM = "PCG64"
_EXACT_LIMIT = float(2**53)


class NegativeCountError(RuntimeError):
    """A colour count went below zero: the spec bypassed validation."""


class TreeTooLargeError(RuntimeError):
    """Exact enumeration would exceed the state budget."""


@dataclass(frozen=True)
class RngPlan:
    """Master seed plus the derivation of independent per-replicate streams."""

    master_seed: int

    def stream(self, replicate: int) -> np.random.Generator:
        seq = np.random.SeedSequence([self.master_seed, replicate])
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class SimulationPlan:
    """What to simulate: mode, horizon, replication, recording."""

    mode: str = "discrete"  # "discrete" | "continuous"
    steps: int | None = None
    t_max: float | None = None
    replicates: int = 1
    seed: int = 0
    checkpoints: Sequence[float] | str | None = None  # explicit, "geometric", or None
    n_checkpoints: int = 12
    max_steps: int = 50_000_000
    workers: int = 1
    record_events: bool = False

    def __post_init__(self):
        if self.mode not in ("discrete", "continuous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "discrete" and not self.steps:
            raise ValueError("discrete mode needs steps")
        if self.mode == "continuous" and self.t_max is None:
            raise ValueError("continuous mode needs t_max")

    def rng_plan(self) -> RngPlan:
        return RngPlan(self.seed)

    def checkpoint_grid(self) -> list[float]:
        """Checkpoint times (draw counts in discrete mode), increasing."""
        if isinstance(self.checkpoints, str) and self.checkpoints != "geometric":
            raise ValueError(f"unknown checkpoint schedule {self.checkpoints!r}")
        if self.checkpoints is None:
            return []
        if not isinstance(self.checkpoints, str):
            grid = sorted(float(c) for c in self.checkpoints)
        else:
            # Geometric spacing makes log-corrected normalizations visible.
            end = float(self.steps) if self.mode == "discrete" else float(self.t_max)
            lo = 1.0 if self.mode == "discrete" else end / 2**10
            raw = np.geomspace(max(lo, 1e-9), end, self.n_checkpoints)
            if self.mode == "discrete":
                grid = sorted({float(int(round(g))) for g in raw})
            else:
                grid = sorted(set(float(g) for g in raw))
        if self.mode == "continuous":
            grid = [g for g in grid if g <= self.t_max]
        else:
            grid = [g for g in grid if g <= self.steps]
        return grid


@dataclass
class UrnState:
    """Mutable composition of one replicate."""

    X: np.ndarray            # float64 counts per colour
    N: np.ndarray            # int64 draw counts per colour
    n: int = 0
    t: float = 0.0
    status: str = "running"  # "running" | "extinct"
    extinct_step: int | None = None
    approximate: bool = False

    @staticmethod
    def initial(spec: UrnSpec) -> "UrnState":
        X = np.array([float(x) for x in spec.initial], dtype=np.float64)
        N = np.zeros(spec.q, dtype=np.int64)
        acts = np.array([float(a) for a in spec.activities])
        state = UrnState(X=X, N=N)
        if float((acts * X).sum()) <= 0.0:
            state.status = "extinct"  # no dynamics at all
            state.extinct_step = 0
        return state


@dataclass(frozen=True)
class Checkpoint:
    n: int
    t: float
    X: tuple[float, ...]
    N: tuple[int, ...]


@dataclass
class Trajectory:
    """One simulated path: checkpoints, final state, and provenance."""

    replicate: int
    seed: int
    mode: str
    status: str  # "completed" | "extinct" | "truncated"
    final: Checkpoint
    checkpoints: list[Checkpoint] = field(default_factory=list)
    extinct_step: int | None = None
    approximate: bool = False
    events: list[tuple[float, int, int]] | None = None  # (t, colour, atom index)


@dataclass(frozen=True)
class _CompiledSpec:
    """Float snapshot of a spec for the inner loops.

    Atom tables are padded to the widest row: cum_table entries beyond a
    row's atom count hold 2.0 (never selected by a uniform in [0, 1)), and
    vec_table pads with the row's first atom (clipped away regardless).
    """

    q: int
    activities: np.ndarray
    atom_cum: tuple[np.ndarray, ...]      # per row: cumulative atom probabilities
    atom_vectors: tuple[np.ndarray, ...]  # per row: (n_atoms, q) added vectors
    cum_table: np.ndarray                 # (q, max_atoms)
    vec_table: np.ndarray                 # (q, max_atoms, q)
    atom_count: np.ndarray                # (q,) int64
    max_atoms: int
    integer_valued: bool
    has_subtractions: bool


def _compile(spec: UrnSpec) -> _CompiledSpec:
    acts = np.array([float(a) for a in spec.activities])
    cums, vecs = [], []
    for row in spec.rows:
        probs = np.cumsum([float(p) for p, _ in row.atoms])
        probs[-1] = 1.0  # guard against rounding in the last bin
        cums.append(probs)
        vecs.append(np.array([[float(v) for v in vec] for _, vec in row.atoms]))
    q = spec.q
    counts = np.array([len(c) for c in cums], dtype=np.int64)
    width = int(counts.max())
    cum_table = np.full((q, width), 2.0)
    vec_table = np.empty((q, width, q))
    for i in range(q):
        cum_table[i, : counts[i]] = cums[i]
        vec_table[i] = vecs[i][0]
        vec_table[i, : counts[i]] = vecs[i]
    has_sub = any(v < 0 for row in spec.rows for _, vec in row.atoms for v in vec)
    return _CompiledSpec(
        q=q,
        activities=acts,
        atom_cum=tuple(cums),
        atom_vectors=tuple(vecs),
        cum_table=cum_table,
        vec_table=vec_table,
        atom_count=counts,
        max_atoms=width,
        integer_valued=spec.is_integer_valued(),
        has_subtractions=has_sub,
    )


def _total_rate(compiled: _CompiledSpec, X: np.ndarray) -> float:
    """Total activity as the engines compute it (sequential partial sums)."""
    return float(np.cumsum(compiled.activities * X)[-1])


def _draw(compiled: _CompiledSpec, X: np.ndarray, u_colour: float, u_atom: float):
    """Colour and atom index for one draw; cumulative scan over q colours."""
    weights = compiled.activities * X
    cum = np.cumsum(weights)
    target = u_colour * cum[-1]
    colour = int((cum <= target).sum())
    colour = min(colour, compiled.q - 1)
    row_cum = compiled.atom_cum[colour]
    atom = int(np.searchsorted(row_cum, u_atom, side="right")) if len(row_cum) > 1 else 0
    atom = min(atom, len(row_cum) - 1)
    return colour, atom


def _apply(compiled: _CompiledSpec, state: UrnState, colour: int, atom: int):
    state.X += compiled.atom_vectors[colour][atom]
    if compiled.has_subtractions:
        if float(state.X.min()) < 0.0:
            raise NegativeCountError(f"colour count below zero after drawing {colour}")
    state.N[colour] += 1
    state.n += 1
    if compiled.integer_valued and not state.approximate and state.X.max() > _EXACT_LIMIT:
        state.approximate = True
    if compiled.has_subtractions and float((compiled.activities * state.X).sum()) <= 0.0:
        state.status = "extinct"
        state.extinct_step = state.n


def step_discrete(state: UrnState, spec: UrnSpec, rng: np.random.Generator,
                  _compiled: _CompiledSpec | None = None) -> UrnState:
    """One draw of the discrete urn; consumes exactly two uniforms."""
    if state.status != "running":
        return state
    compiled = _compiled or _compile(spec)
    u_colour = rng.random()
    u_atom = rng.random()
    colour, atom = _draw(compiled, state.X, u_colour, u_atom)
    _apply(compiled, state, colour, atom)
    return state


def step_continuous(state: UrnState, spec: UrnSpec, rng: np.random.Generator,
                    _compiled: _CompiledSpec | None = None) -> UrnState:
    """One event of the embedded continuous-time urn.

    The waiting time is exponential with rate equal to the current total
    activity (rates are constant between draws), then the draw proceeds as in
    discrete time.  Consumes exactly three uniforms.
    """
    if state.status != "running":
        return state
    compiled = _compiled or _compile(spec)
    u_wait = rng.random()
    u_colour = rng.random()
    u_atom = rng.random()
    rate = _total_rate(compiled, state.X)
    state.t += -math.log1p(-u_wait) / rate
    colour, atom = _draw(compiled, state.X, u_colour, u_atom)
    _apply(compiled, state, colour, atom)
    return state


# ---------------------------------------------------------------------------
# Engines


def _run_reference(spec: UrnSpec, plan: SimulationPlan, replicate: int) -> Trajectory:
    """Single-replicate stepper; also records the event log when asked."""
    compiled = _compile(spec)
    rng = plan.rng_plan().stream(replicate)
    state = UrnState.initial(spec)
    grid = plan.checkpoint_grid()
    next_ck = 0
    rows: list[Checkpoint] = []
    events: list[tuple[float, int, int]] | None = [] if plan.record_events else None

    def snap(n=None, t=None) -> Checkpoint:
        return Checkpoint(
            state.n if n is None else n,
            float(state.t if t is None else t),
            tuple(float(v) for v in state.X),
            tuple(int(v) for v in state.N),
        )

    status = "completed"
    while True:
        if state.status != "running":
            status = "extinct"
            break
        if plan.mode == "discrete" and state.n >= plan.steps:
            break
        if state.n >= plan.max_steps:
            status = "truncated"
            break
        if plan.mode == "discrete":
            u_colour = rng.random()
            u_atom = rng.random()
            colour, atom = _draw(compiled, state.X, u_colour, u_atom)
            _apply(compiled, state, colour, atom)
            if events is not None:
                events.append((state.t, colour, atom))
            while next_ck < len(grid) and state.n >= grid[next_ck]:
                rows.append(snap())
                next_ck += 1
        else:
            u_wait = rng.random()
            u_colour = rng.random()
            u_atom = rng.random()
            rate = _total_rate(compiled, state.X)
            t_next = state.t + (-math.log1p(-u_wait) / rate)
            # Composition is constant between events: checkpoint times inside
            # the waiting interval see the current state.
            while next_ck < len(grid) and t_next > grid[next_ck]:
                rows.append(snap(t=grid[next_ck]))
                next_ck += 1
            if t_next > plan.t_max:
                state.t = plan.t_max
                break
            state.t = t_next
            colour, atom = _draw(compiled, state.X, u_colour, u_atom)
            _apply(compiled, state, colour, atom)
            if events is not None:
                events.append((state.t, colour, atom))
    if plan.mode == "continuous":
        # The state freezes after extinction/truncation; remaining checkpoint
        # times still see it.
        while next_ck < len(grid):
            rows.append(snap(t=grid[next_ck]))
            next_ck += 1
        if status == "completed":
            state.t = plan.t_max
    return Trajectory(
        replicate=replicate,
        seed=plan.seed,
        mode=plan.mode,
        status=status,
        final=snap(),
        checkpoints=rows,
        extinct_step=state.extinct_step,
        approximate=state.approximate,
        events=events,
    )


def _run_batch(spec: UrnSpec, plan: SimulationPlan, replicates: Sequence[int]) -> list[Trajectory]:
    """Lockstep array engine over a batch of replicates, one stream each."""
    compiled = _compile(spec)
    R = len(replicates)
    q = compiled.q
    k = 3 if plan.mode == "continuous" else 2
    rng_plan = plan.rng_plan()
    gens = [rng_plan.stream(r) for r in replicates]

    X = np.tile(np.array([float(x) for x in spec.initial]), (R, 1))
    N = np.zeros((R, q), dtype=np.int64)
    n = np.zeros(R, dtype=np.int64)
    t = np.zeros(R)
    active = (X * compiled.activities).sum(axis=1) > 0.0
    extinct_step = np.full(R, -1, dtype=np.int64)
    extinct_step[~active] = 0
    truncated = np.zeros(R, dtype=bool)
    approximate = np.zeros(R, dtype=bool)
    done = ~active

    grid = plan.checkpoint_grid()
    ck_rows: list[list[Checkpoint]] = [[] for _ in range(R)]
    next_ck = np.zeros(R, dtype=np.int64)
    next_mark = np.full(R, grid[0] if grid else np.inf)

    def advance_mark(r: int):
        next_ck[r] += 1
        next_mark[r] = grid[next_ck[r]] if next_ck[r] < len(grid) else np.inf

    def record(r: int, at_time: float | None = None):
        ck_rows[r].append(
            Checkpoint(
                int(n[r]),
                float(t[r]) if at_time is None else float(at_time),
                tuple(float(v) for v in X[r]),
                tuple(int(v) for v in N[r]),
            )
        )

    chunk = max(256, min(4096, (1 << 22) // max(1, R)))
    cap = plan.max_steps
    steps_total = plan.steps if plan.mode == "discrete" else None
    check_cap = plan.mode == "continuous" or cap < steps_total
    multi_atom = compiled.max_atoms > 1
    # Fast path: nothing can deactivate a replicate before the horizon, so no
    # per-step masking is needed at all.
    static_live = (
        plan.mode == "discrete" and not compiled.has_subtractions and not check_cap
    )
    rows_idx = np.arange(R)
    acts = compiled.activities
    steps_done = 0

    while not done.all():
        if plan.mode == "discrete":
            todo = min(chunk, steps_total - steps_done)
        else:
            todo = chunk
        U = np.empty((R, todo, k))
        for ridx in range(R):
            U[ridx] = gens[ridx].random((todo, k))
        live = active & ~done
        for s in range(todo):
            if not static_live:
                live = active & ~done
                if not live.any():
                    break
            cum = np.cumsum(X * acts, axis=1)
            total = cum[:, -1]
            if plan.mode == "continuous":
                with np.errstate(divide="ignore", invalid="ignore"):
                    dt = -np.log1p(-U[:, s, 0]) / np.where(total > 0.0, total, 1.0)
                t_next = t + dt
                # Record states at checkpoint times crossed by the intervals.
                cross = live & (t_next > next_mark)
                while cross.any():
                    for r in np.flatnonzero(cross):
                        record(r, at_time=grid[next_ck[r]])
                        advance_mark(r)
                    cross = live & (t_next > next_mark)
                finishing = live & (t_next > plan.t_max)
                if finishing.any():
                    t[finishing] = plan.t_max
                    done |= finishing
                    live = live & ~finishing
                t[live] = t_next[live]
            colour = (cum <= (U[:, s, k - 2] * total)[:, None]).sum(axis=1)
            np.minimum(colour, q - 1, out=colour)
            if multi_atom:
                pick = (compiled.cum_table[colour] <= U[:, s, k - 1, None]).sum(axis=1)
                np.minimum(pick, compiled.atom_count[colour] - 1, out=pick)
                added = compiled.vec_table[colour, pick]
            else:
                added = compiled.vec_table[colour, 0]
            if static_live:
                X += added
                N[rows_idx, colour] += 1
                n += 1
            else:
                X[live] += added[live]
                N[rows_idx[live], colour[live]] += 1
                n[live] += 1
            if compiled.has_subtractions:
                if float(X[live].min(initial=0.0)) < 0.0:
                    raise NegativeCountError("colour count below zero")
                dead = live & (X @ acts <= 0.0)
                if dead.any():
                    extinct_step[dead] = n[dead]
                    active &= ~dead
                    done |= dead
            if grid and plan.mode == "discrete":
                due = live & (n >= next_mark)  # just-extinct replicates included
                while due.any():
                    for r in np.flatnonzero(due):
                        record(r)
                        advance_mark(r)
                    due = live & (n >= next_mark)
            if check_cap:
                capped = live & ~done & (n >= cap)
                if capped.any():
                    truncated |= capped
                    done |= capped
        if compiled.integer_valued and float(X.max()) > _EXACT_LIMIT:
            approximate |= X.max(axis=1) > _EXACT_LIMIT
        steps_done += todo
        if plan.mode == "discrete" and steps_done >= steps_total:
            break

    out = []
    for ridx, rep in enumerate(replicates):
        if plan.mode == "continuous":
            while next_ck[ridx] < len(grid):
                record(ridx, at_time=grid[next_ck[ridx]])
                advance_mark(ridx)
            if extinct_step[ridx] < 0 and not truncated[ridx]:
                t[ridx] = plan.t_max
        status = (
            "extinct" if extinct_step[ridx] >= 0
            else "truncated" if truncated[ridx]
            else "completed"
        )
        out.append(
            Trajectory(
                replicate=rep,
                seed=plan.seed,
                mode=plan.mode,
                status=status,
                final=Checkpoint(int(n[ridx]), float(t[ridx]),
                                 tuple(float(v) for v in X[ridx]),
                                 tuple(int(v) for v in N[ridx])),
                checkpoints=ck_rows[ridx],
                extinct_step=int(extinct_step[ridx]) if extinct_step[ridx] >= 0 else None,
                approximate=bool(approximate[ridx]),
            )
        )
    return out


def _batch_worker(args) -> list[Trajectory]:
    spec_doc, plan, replicates = args
    from .model import parse_spec

    return _run_batch(parse_spec(spec_doc), plan, replicates)


def run(spec: UrnSpec, plan: SimulationPlan, batch_size: int = 2048) -> list[Trajectory]:
    """Simulate plan.replicates independent paths, ordered by replicate index.

    Results are identical for any worker count, batch size, or scheduling
    order because each replicate's randomness is a pure function of
    (seed, replicate index).
    """
    if plan.record_events:
        return [_run_reference(spec, plan, r) for r in range(plan.replicates)]
    reps = list(range(plan.replicates))
    batches = [reps[i:i + batch_size] for i in range(0, len(reps), batch_size)]
    if plan.workers <= 1 or len(batches) == 1:
        out: list[Trajectory] = []
        for batch in batches:
            out.extend(_run_batch(spec, plan, batch))
        return out
    from .model import emit_spec

    doc = emit_spec(spec)
    with ProcessPoolExecutor(max_workers=plan.workers) as pool:
        results = list(pool.map(_batch_worker, [(doc, plan, b) for b in batches]))
    out = []
    for res in results:
        out.extend(res)
    return out


# ---------------------------------------------------------------------------
# Exact enumeration


def enumerate_exact(
    spec: UrnSpec, n: int, max_states: int = 1_000_000
) -> list[tuple[Fraction, tuple[Fraction, ...]]]:
    """Exact distribution of the composition after n draws.

    Expands every draw/atom sequence with rational probabilities, merging
    equal compositions level by level.  Raises TreeTooLargeError when the
    running state count would exceed max_states.
    """
    dist: dict[tuple[Fraction, ...], Fraction] = {tuple(spec.initial): Fraction(1)}
    acts = spec.activities
    for _ in range(n):
        nxt: dict[tuple[Fraction, ...], Fraction] = {}
        for comp, prob in dist.items():
            total = sum((a * x for a, x in zip(acts, comp)), Fraction(0))
            if total == 0:
                # Extinct path: the composition freezes.
                nxt[comp] = nxt.get(comp, Fraction(0)) + prob
                continue
            for i in range(spec.q):
                w = acts[i] * comp[i]
                if w == 0:
                    continue
                p_draw = w / total
                for p_atom, vec in spec.rows[i].atoms:
                    new = tuple(c + v for c, v in zip(comp, vec))
                    if any(c < 0 for c in new):
                        raise NegativeCountError(
                            f"enumeration reached a negative count via colour {i}"
                        )
                    p = prob * p_draw * p_atom
                    nxt[new] = nxt.get(new, Fraction(0)) + p
                if len(nxt) > max_states:
                    raise TreeTooLargeError(
                        f"more than {max_states} distinct compositions"
                    )
        dist = nxt
    assert sum(dist.values()) == 1
    return [(prob, comp) for comp, prob in sorted(dist.items(), key=lambda kv: kv[0])]


def exact_mean(spec: UrnSpec, n: int, **kw) -> tuple[Fraction, ...]:
    """Componentwise exact mean of the composition after n draws."""
    dist = enumerate_exact(spec, n, **kw)
    q = spec.q
    out = [Fraction(0)] * q
    for prob, comp in dist:
        for j in range(q):
            out[j] += prob * comp[j]
    return tuple(out)
