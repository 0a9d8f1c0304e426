"""Command-line front door: analyze, simulate, verify, corpus.

Exit codes are a stable contract:
  0 success, 1 io/parse error, 2 validation failure, 3 non-triangular spec,
  4 inapplicable check, 5 check failure.

Every flag has an environment override TRIURN_<FLAG> (dashes as underscores,
upper case).  All randomness flows from --seed; when absent a seed is drawn,
printed to stderr, and embedded in every output.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import secrets
import sys
from fractions import Fraction

from . import corpus as corpus_mod
from . import verify as verify_mod
from .limits import AnalysisError, analyze_spec
from .model import SpecError, UrnSpec, emit_spec, parse_spec_file, rational_str
from .simulate import RNG_ALGORITHM, SimulationPlan, run
from .structure import NonTriangularError

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_NONTRIANGULAR = 3
EXIT_INAPPLICABLE = 4
EXIT_CHECK_FAILED = 5

ENV_PREFIX = "TRIURN_"


def _env_default(flag: str, fallback=None, convert=None):
    raw = os.environ.get(ENV_PREFIX + flag.replace("-", "_").upper())
    if raw is None:
        return fallback
    return convert(raw) if convert else raw


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=_env_default("seed", convert=int))
    p.add_argument("--workers", type=int,
                   default=_env_default("workers", 1, convert=int))
    p.add_argument("--out", default=_env_default("out"))


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbits(48)
        print(f"seed not given; using generated seed {seed}", file=sys.stderr)
        return seed
    return int(args.seed)


def _load(path: str) -> UrnSpec:
    try:
        return parse_spec_file(path)
    except FileNotFoundError:
        raise SystemExit2(EXIT_IO, f"cannot read {path}")
    except SpecError as exc:
        raise SystemExit2(EXIT_IO, f"parse error: {exc}")


class SystemExit2(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message


def _spec_hash(spec: UrnSpec) -> str:
    return hashlib.sha256(emit_spec(spec).encode()).hexdigest()[:16]


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    spec = _load(args.spec)
    try:
        report = analyze_spec(spec)
    except NonTriangularError as exc:
        print(f"non-triangular: {exc}", file=sys.stderr)
        return EXIT_NONTRIANGULAR
    except AnalysisError as exc:
        # A cycle detected during validation also lands here; route it.
        if "A0" in str(exc) or "cycle" in str(exc):
            print(f"non-triangular: {exc}", file=sys.stderr)
            return EXIT_NONTRIANGULAR
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    _emit(report.to_json(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _plan_from_args(args, seed: int) -> SimulationPlan:
    checkpoints = None
    if args.checkpoints:
        if args.checkpoints == "geometric":
            checkpoints = "geometric"
        else:
            checkpoints = [float(Fraction(tok)) for tok in args.checkpoints.split(",")]
    return SimulationPlan(
        mode=args.mode,
        steps=args.steps,
        t_max=args.t_max,
        replicates=args.reps,
        seed=seed,
        checkpoints=checkpoints,
        workers=args.workers,
    )


def _write_trajectories(trajs, spec, plan, fmt: str, out: str | None):
    head = {
        "rng": RNG_ALGORITHM,
        "seed": plan.seed,
        "spec_sha256": _spec_hash(spec),
        "mode": plan.mode,
        "replicates": plan.replicates,
    }
    q = spec.q
    if fmt == "csv":
        buf = io.StringIO()
        for key, value in sorted(head.items()):
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf)
        writer.writerow(
            ["replicate", "n", "t"]
            + [f"X_{i}" for i in range(q)]
            + [f"N_{i}" for i in range(q)]
            + ["status"]
        )
        for tr in trajs:
            for ck in tr.checkpoints + [tr.final]:
                writer.writerow(
                    [tr.replicate, ck.n, repr(ck.t)]
                    + [repr(v) for v in ck.X]
                    + [int(v) for v in ck.N]
                    + [tr.status]
                )
        _emit(buf.getvalue(), out)
        return
    rows = []
    for tr in trajs:
        rows.append(
            {
                "replicate": tr.replicate,
                "status": tr.status,
                "extinct_step": tr.extinct_step,
                "approximate": tr.approximate,
                "checkpoints": [
                    {"n": ck.n, "t": ck.t, "X": list(ck.X), "N": list(ck.N)}
                    for ck in tr.checkpoints + [tr.final]
                ],
            }
        )
    if fmt == "jsonl":
        lines = [json.dumps({"header": head}, sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in rows]
        _emit("\n".join(lines) + "\n", out)
    else:
        _emit(json.dumps({"header": head, "trajectories": rows}, sort_keys=True), out)


def cmd_simulate(args) -> int:
    spec = _load(args.spec)
    try:
        report = analyze_spec(spec)
    except NonTriangularError:
        print("non-triangular spec", file=sys.stderr)
        return EXIT_NONTRIANGULAR
    except AnalysisError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    del report
    seed = _resolve_seed(args)
    try:
        plan = _plan_from_args(args, seed)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_IO
    trajs = run(spec, plan)
    _write_trajectories(trajs, spec, plan, args.format, args.out)
    truncated = sum(1 for tr in trajs if tr.status == "truncated")
    if truncated:
        print(f"note: {truncated} replicate(s) truncated at the step cap", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _suite_checks(spec, suites, report, args, seed):
    """Yield (suite, callable) pairs for the requested suites."""
    w = args.workers
    steps = args.steps or 20000
    reps = args.reps or 200
    t_max = args.t_max or 20.0
    tol = args.tol
    meta = dict(spec.meta) if spec.meta else {}
    template = meta.get("template")
    params = {k: Fraction(v) for k, v in meta.get("params", {}).items()}
    e = report.structure.exponents
    kw = {"workers": w, "seed": seed}
    mkw = dict(kw)
    if tol:
        mkw["rel_tol"] = tol

    for suite in suites:
        if suite == "convergence":
            for i in range(spec.q):
                # Log-corrected scales converge at the loglog/log rate, so
                # when the caller did not pin a budget the horizon is raised
                # to 10**6 and the tolerance to 10%, noted in the result.
                slow = report.limits[i].discrete.log_pow != 0
                ckw = dict(mkw)
                csteps = steps
                if slow and args.steps is None:
                    csteps = max(steps, 1_000_000)
                    ckw["rel_tol"] = max(tol or 0.0, 0.10)
                yield suite, lambda i=i, csteps=csteps, ckw=ckw: verify_mod.check_convergence(
                    spec, i, steps=csteps, replicates=reps, report=report, **ckw
                )
        elif suite == "activity":
            # Specs with a log-corrected colour approach the activity law at
            # a 1/log(n) rate; raise the default budget accordingly.
            slow = any(
                report.limits[i].discrete.log_pow != 0 for i in range(spec.q)
            )
            akw = dict(mkw)
            asteps = steps
            if slow and args.steps is None:
                asteps = max(steps, 1_000_000)
                akw["rel_tol"] = max(tol or 0.0, 0.10)
            yield suite, lambda asteps=asteps, akw=akw: verify_mod.check_total_activity(
                spec, steps=asteps, replicates=reps, report=report, **akw
            )
        elif suite == "drawn-ratio":
            for i in range(spec.q):
                if spec.activities[i] > 0 and e.lam_star[i] > 0:
                    yield suite, lambda i=i: verify_mod.check_drawn_ratio(
                        spec, i, steps=steps, replicates=reps, report=report, **mkw
                    )
        elif suite == "balance":
            yield suite, lambda: verify_mod.check_balance_identity(
                spec, steps=min(steps, 4096), replicates=20, seed=seed, report=report
            )
        elif suite == "martingale":
            times = (1.0, 2.0, 4.0)
            for i in sorted(report.structure.graph.minimal):
                yield suite, lambda i=i: verify_mod.check_martingale(
                    spec, i, times, replicates=max(reps, 2000), **kw
                )
        elif suite == "moments":
            if report.validation.balance is None or report.validation.balance < 0:
                raise verify_mod.InapplicableCheckError(
                    "moment checks are restricted to balanced urns: the limit "
                    "of an unbalanced urn may have no finite moments (for the "
                    "two-rate diagonal urn from (1,1) not even the mean exists)"
                )
            law, colour = _moment_law(template, params, spec)
            yield suite, lambda: verify_mod.check_moments(
                spec, colour, law, (1.0, 2.0),
                steps=steps, replicates=max(reps, 2000), report=report, **mkw
            )
        elif suite == "distribution":
            yield suite, lambda: _distribution_check(
                spec, template, params, t_max, max(reps, 4000), seed, w
            )
        elif suite == "witness":
            yield suite, lambda: verify_mod.check_nonconvergence_witness(
                spec, t=t_max, replicates=max(reps, 4000), **kw
            )
        elif suite == "parity":
            yield suite, lambda: verify_mod.check_parity(spec, 1, seed=seed)
        elif suite == "detection":
            continue  # analyze output is the deliverable
        else:
            raise verify_mod.InapplicableCheckError(f"unknown suite {suite!r}")


def _moment_law(template, params, spec):
    """Closed-form moment law for the corpus spec, if one exists."""
    if template == "E2p":
        return (
            verify_mod.RandomBernoulliMoments(
                float(params["p"]), float(params["x1"]), float(params["x2"])
            ),
            0,
        )
    if template == "E2":
        return (
            verify_mod.BalancedTwoColourMoments(
                float(params["delta"]), float(params["gamma"]), float(params["alpha"]),
                float(params["x1"]), float(params["x2"]),
            ),
            0,
        )
    if template == "E3":
        return (
            verify_mod.E3Moments(
                float(params["alpha"]), float(params["beta"]), float(params["delta"]),
                float(params["sigma"]),
                (float(params["x1"]), float(params["x2"]), float(params["x3"])),
            ),
            1,
        )
    raise verify_mod.InapplicableCheckError(
        "no closed-form moment law is known for this spec"
    )


def _distribution_check(spec, template, params, t_max, reps, seed, workers):
    import numpy as np

    if template == "Eplusminus":
        law = verify_mod.NegBinomialDrawLaw(t_max)
        plan = SimulationPlan(mode="continuous", t_max=t_max, replicates=reps,
                              seed=seed, workers=workers)
        trajs = run(spec, plan)
        samples = np.array([tr.final.X[1] for tr in trajs])
        return verify_mod.check_distribution(samples, law, name="negative_binomial_marginal")
    if template == "Eminusminus":
        t10 = min(t_max, 10.0)
        law = verify_mod.PoissonCountLaw(t10)
        plan = SimulationPlan(mode="continuous", t_max=t10, replicates=reps,
                              seed=seed, workers=workers)
        trajs = run(spec, plan)
        samples = np.array([tr.final.X[1] for tr in trajs])
        return verify_mod.check_distribution(samples, law, name="poisson_marginal")
    if template == "Eclassical":
        b = params["b"]
        law = verify_mod.DirichletClassical(
            tuple(float(x / b) for x in spec.initial)
        )
        steps = 4000
        plan = SimulationPlan(mode="discrete", steps=steps, replicates=reps,
                              seed=seed, workers=workers)
        trajs = run(spec, plan)
        X = np.array([tr.final.X for tr in trajs])
        samples = X[:, 0] / X.sum(axis=1)
        return verify_mod.check_distribution(
            samples, law.marginal_cdf(0), name="dirichlet_marginal"
        )
    raise verify_mod.InapplicableCheckError(
        "no closed-form distribution law is known for this spec"
    )


def _applicable(spec, report, suites) -> list[str]:
    """Drop suites a spec cannot support (used for auto/bundle selection)."""
    balanced = report.validation.balance is not None and report.validation.balance >= 0
    e = report.structure.exponents
    out = []
    for suite in suites:
        if suite in ("moments", "balance") and not balanced:
            continue
        if suite == "activity" and e.lam_hat <= 0:
            continue
        if suite == "drawn-ratio" and not any(
            spec.activities[i] > 0 and e.lam_star[i] > 0 for i in range(spec.q)
        ):
            continue
        out.append(suite)
    return out


def _default_suites(spec, report) -> list[str]:
    meta = dict(spec.meta) if spec.meta else {}
    template = meta.get("template")
    if template:
        return _applicable(spec, report, corpus_mod.resolve(template).suites)
    return _applicable(
        spec, report, ["convergence", "activity", "drawn-ratio", "balance"]
    )


def _run_verify(spec, suites, args, seed) -> tuple[list, int]:
    try:
        report = analyze_spec(spec)
    except NonTriangularError:
        return [], EXIT_NONTRIANGULAR
    except AnalysisError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return [], EXIT_VALIDATION
    if suites == ["auto"]:
        suites = _default_suites(spec, report)
    results = []
    code = EXIT_OK
    try:
        for suite, thunk in _suite_checks(spec, suites, report, args, seed):
            result = thunk()
            results.append(result)
            print(str(result), file=sys.stderr)
    except verify_mod.InapplicableCheckError as exc:
        print(f"inapplicable check: {exc}", file=sys.stderr)
        return results, EXIT_INAPPLICABLE
    except verify_mod.ExtinctMajorityError as exc:
        print(f"extinct majority: {exc}", file=sys.stderr)
        return results, EXIT_CHECK_FAILED
    if any(not r.passed for r in results):
        code = EXIT_CHECK_FAILED
    return results, code


def _results_payload(results, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["check", "target", "estimate", "se", "verdict"])
        for r in results:
            writer.writerow(
                [r.name, r.target, r.estimate, r.se, "pass" if r.passed else "fail"]
            )
        return buf.getvalue()
    return json.dumps([r.to_dict() for r in results], sort_keys=True)


def cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    suites = args.suite.split(",") if args.suite else ["auto"]
    if os.path.isdir(args.spec):
        # Batch over a directory of spec documents; aggregate the table.
        paths = sorted(
            p for p in os.listdir(args.spec) if p.endswith((".toml", ".json"))
        )
        if not paths:
            print(f"no spec documents in {args.spec}", file=sys.stderr)
            return EXIT_IO
        all_results = []
        worst = EXIT_OK
        for name in paths:
            spec = _load(os.path.join(args.spec, name))
            results, code = _run_verify(spec, list(suites), args, seed)
            stem = os.path.splitext(name)[0]
            for r in results:
                r.name = f"{stem}:{r.name}"
            all_results.extend(results)
            worst = max(worst, code)
        _emit(_results_payload(all_results, args.format), args.out)
        return worst
    spec = _load(args.spec)
    results, code = _run_verify(spec, suites, args, seed)
    _emit(_results_payload(results, args.format), args.out)
    return code


# ---------------------------------------------------------------------------
# corpus


def cmd_corpus(args) -> int:
    if args.action == "list":
        rows = []
        for name in corpus_mod.corpus_names():
            t = corpus_mod.CORPUS[name]
            defaults = ", ".join(f"{k}={rational_str(v)}" for k, v in sorted(t.defaults.items()))
            rows.append({"name": name, "summary": t.summary, "defaults": defaults,
                         "suites": list(t.suites)})
        _emit(json.dumps(rows, indent=2, sort_keys=True), args.out)
        return EXIT_OK
    # run NAME [--param value ...]
    try:
        template = corpus_mod.resolve(args.name)
        spec = template.build(**args.params)
    except SpecError as exc:
        print(f"corpus: {exc}", file=sys.stderr)
        return EXIT_IO
    seed = _resolve_seed(args)
    try:
        report = analyze_spec(spec)
    except AnalysisError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{template.name}.json"), "w") as fh:
            fh.write(emit_spec(spec))
        with open(os.path.join(args.out, f"{template.name}.analysis.json"), "w") as fh:
            fh.write(report.to_json())
    else:
        print(report.to_json())
    for caveat in report.limits.caveats:
        print(f"caveat: {caveat}", file=sys.stderr)
    suites = args.suite.split(",") if args.suite else _applicable(
        spec, report, template.suites
    )
    results, code = _run_verify(spec, suites, args, seed)
    payload = _results_payload(results, "json")
    if args.out:
        with open(os.path.join(args.out, f"{template.name}.checks.json"), "w") as fh:
            fh.write(payload)
    else:
        print(payload)
    return code


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triurn",
        description="analyze, simulate, and verify triangular urn processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="exact structure and limit report")
    p.add_argument("spec")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run replicated trajectories")
    p.add_argument("spec")
    p.add_argument("--mode", choices=["discrete", "continuous"],
                   default=_env_default("mode", "discrete"))
    p.add_argument("--steps", type=int, default=_env_default("steps", convert=int))
    p.add_argument("--t-max", type=float, dest="t_max",
                   default=_env_default("t-max", convert=float))
    p.add_argument("--reps", type=int, default=_env_default("reps", 1, convert=int))
    p.add_argument("--checkpoints", default=_env_default("checkpoints", "geometric"))
    p.add_argument("--format", choices=["csv", "jsonl", "json"],
                   default=_env_default("format", "csv"))
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run verification suites against predictions")
    p.add_argument("spec")
    p.add_argument("--suite", default=_env_default("suite"))
    p.add_argument("--steps", type=int, default=_env_default("steps", convert=int))
    p.add_argument("--t-max", type=float, dest="t_max",
                   default=_env_default("t-max", convert=float))
    p.add_argument("--reps", type=int, default=_env_default("reps", convert=int))
    p.add_argument("--tol", type=float, default=_env_default("tol", convert=float))
    p.add_argument("--format", choices=["csv", "json"],
                   default=_env_default("format", "json"))
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("corpus", help="list or materialize built-in example urns")
    p.add_argument("action", choices=["list", "run"])
    p.add_argument("name", nargs="?")
    p.add_argument("--steps", type=int, default=_env_default("steps", convert=int))
    p.add_argument("--t-max", type=float, dest="t_max",
                   default=_env_default("t-max", convert=float))
    p.add_argument("--reps", type=int, default=_env_default("reps", convert=int))
    p.add_argument("--tol", type=float, default=_env_default("tol", convert=float))
    p.add_argument("--suite", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    # corpus run accepts template parameters as --name value pairs.
    params = {}
    if args.command == "corpus":
        if args.action == "run" and not args.name:
            parser.error("corpus run needs a template name")
        it = iter(extra)
        for tok in it:
            if not tok.startswith("--"):
                parser.error(f"unexpected argument {tok!r}")
            key = tok[2:].replace("-", "_")
            try:
                params[key] = next(it)
            except StopIteration:
                parser.error(f"missing value for {tok}")
        args.params = params
    elif extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(exc.message, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
