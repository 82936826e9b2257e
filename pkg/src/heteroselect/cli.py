"""Command-line front end: fit user data, run simulation campaigns, verify oracles.

Defaults mirror the benchmark settings (n=1024, theta=2, epsilon=0.01,
delta=3, gamma grid {1, 1.5, 2, 2.5, 3}, 500 repetitions), so a bare
invocation of `table` reproduces the reference experiments.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .estimation import DegenerateVarianceError, Observations, log_likelihood
from .model_space import CollectionConfig, EmptyCollectionError, build_collection
from .oracle_checks import (
    InverseMomentCase,
    lemma10_battery,
    lemma11_battery,
    lemma11_check,
    prop1_sandwich_check,
)
from .selector import PenaltySpec, select
from .simlab import (
    RISK_KINDS,
    SeedPolicy,
    builtin_scenarios,
    convergence_experiment,
    get_scenario,
    lipschitz_scenario,
    ratio_table,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INPUT = 2
EXIT_VERIFY = 3


class InputError(Exception):
    """User-facing problem with input data or flags."""


class VerificationFailure(Exception):
    """One or more verification checks failed."""


def _resolve_seed(args) -> int:
    env = os.environ.get("HETEROSELECT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"HETEROSELECT_SEED must be an integer, got {env!r}") from exc
    return args.seed


def _read_pairs(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != ["y1", "y2"]:
                raise InputError(f"{path}: expected CSV header 'y1,y2', got {header}")
            y1, y2 = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise InputError(f"{path}:{lineno}: expected two columns, got {len(row)}")
                try:
                    a, b = float(row[0]), float(row[1])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: malformed number") from exc
                if not (math.isfinite(a) and math.isfinite(b)):
                    raise InputError(f"{path}:{lineno}: non-finite value")
                y1.append(a)
                y2.append(b)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not y1:
        raise InputError(f"{path}: no data rows")
    return np.array(y1), np.array(y2)


def _power_of_two_length(y1, y2, truncate: bool):
    n = len(y1)
    if n & (n - 1) == 0:
        return y1, y2
    lower = 1 << (n.bit_length() - 1)
    upper = lower * 2
    if not truncate:
        raise InputError(
            f"row count {n} is not a power of two: supply {upper} rows or pass "
            f"--truncate to use the first {lower}"
        )
    print(f"warning: truncating {n} rows to {lower}", file=sys.stderr)
    return y1[:lower], y2[:lower]


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_fit(args) -> int:
    y1, y2 = _read_pairs(args.input)
    y1, y2 = _power_of_two_length(y1, y2, args.truncate)
    obs = Observations(y1=y1, y2=y2)
    cfg = CollectionConfig(obs.n, args.gamma, args.theta, args.epsilon, args.delta)
    collection = build_collection(cfg)
    spec = PenaltySpec(gamma=args.gamma, theta=args.theta, epsilon=args.epsilon)
    result = select(collection, obs, spec)
    chosen_audit = next(a for a in result.per_model if a.model is result.chosen)
    payload = {
        "model": result.chosen.describe(),
        "mean": result.estimate.mean.tolist(),
        "variance": result.estimate.variance.tolist(),
        "criterion": result.criterion_value,
        "penalty": chosen_audit.penalty,
        "likelihood": chosen_audit.likelihood,
    }
    if not args.quiet:
        payload["audit"] = [
            {**a.model.describe(), "likelihood": a.likelihood, "penalty": a.penalty, "criterion": a.criterion}
            for a in result.per_model
        ]
    _write_text(args.output, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"malformed numeric list {text!r}") from exc


def cmd_table(args) -> int:
    seed = _resolve_seed(args)
    if args.scenario == "all":
        scenarios = builtin_scenarios()
    else:
        try:
            scenarios = [get_scenario(name) for name in args.scenario.split(",")]
        except KeyError as exc:
            raise InputError(str(exc)) from exc
    grid = _parse_floats(args.gamma_grid)
    if not grid:
        raise InputError("empty gamma grid")
    cells = ratio_table(
        scenarios,
        grid,
        n=args.n,
        reps=args.reps,
        seeds=SeedPolicy(seed),
        kind=args.kind,
        theta=args.theta,
        epsilon=args.epsilon,
        delta=args.delta,
    )
    if args.format == "json":
        text = json.dumps(
            [
                {"scenario": c.scenario, "gamma": c.gamma, "ratio": c.ratio, "std_error": c.std_error}
                for c in cells
            ],
            indent=2,
        ) + "\n"
    else:
        lines = ["scenario,gamma,ratio,std_error"]
        lines += [f"{c.scenario},{c.gamma!r},{c.ratio!r},{c.std_error!r}" for c in cells]
        text = "\n".join(lines) + "\n"
    _write_text(args.output, text)
    return EXIT_OK


def cmd_convergence(args) -> int:
    seed = _resolve_seed(args)
    scenario = lipschitz_scenario()
    n_grid = [int(v) for v in _parse_floats(args.n_grid)]
    try:
        result = convergence_experiment(
            scenario,
            n_grid,
            reps=args.reps,
            seeds=SeedPolicy(seed),
            theta=args.theta,
            epsilon=args.epsilon,
            delta=args.delta,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.format == "json":
        text = json.dumps(
            {
                "points": [
                    {"n": p.n, "normalized_risk": p.normalized_risk, "std_error": p.std_error}
                    for p in result.points
                ],
                "slope": result.slope,
            },
            indent=2,
        ) + "\n"
    else:
        lines = ["n,normalized_risk,std_error"]
        lines += [f"{p.n},{p.normalized_risk!r},{p.std_error!r}" for p in result.points]
        lines += [f"# slope,{result.slope!r}"]
        text = "\n".join(lines) + "\n"
    _write_text(args.output, text)
    print(f"fitted log-log slope: {result.slope:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    seeds = SeedPolicy(seed)
    kappa = args.kappa
    checks = []

    exact = lemma11_check(
        InverseMomentCase(a=np.zeros(4), b=np.ones(4)),
        reps=max(args.reps, 100_000),
        seeds=seeds.namespaced(0),
        kappa=kappa,
    )
    exact_ok = exact.holds and abs(exact.mc_estimate - 0.5) <= 4.0 * exact.std_error
    checks.append(
        {
            "name": "inverse_moment_exact_chi_square",
            "passed": bool(exact_ok),
            "mc_estimate": exact.mc_estimate,
            "bound": exact.bound,
            "std_error": exact.std_error,
        }
    )

    battery = lemma11_battery(50, reps=max(args.reps // 10, 10_000), seeds=seeds.namespaced(1), kappa=kappa)
    checks.append(
        {
            "name": "inverse_moment_random_battery",
            "passed": all(r.holds for r in battery),
            "cases": len(battery),
            "failures": sum(not r.holds for r in battery),
        }
    )

    spectrum = lemma10_battery(100, n=64, seeds=seeds.namespaced(2))
    checks.append(
        {
            "name": "compressed_spectrum_battery",
            "passed": all(r.holds for r in spectrum),
            "cases": len(spectrum),
            "failures": sum(not r.holds for r in spectrum),
        }
    )

    entries = prop1_sandwich_check(
        get_scenario("M1"),
        n=args.n,
        reps=max(args.reps // 50, 2000),
        seeds=seeds.namespaced(3),
        theta=args.theta,
        epsilon=args.epsilon,
        delta=args.delta,
    )
    checks.append(
        {
            "name": "risk_sandwich_m1",
            "passed": all(e.holds for e in entries),
            "models": len(entries),
            "failures": sum(not e.holds for e in entries),
        }
    )

    passed = all(c["passed"] for c in checks)
    _write_text(args.output, json.dumps({"passed": passed, "checks": checks}, indent=2) + "\n")
    if not passed:
        raise VerificationFailure(
            ", ".join(c["name"] for c in checks if not c["passed"]) + " failed"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heteroselect",
        description="Mean/variance estimation by penalized model selection, with a simulation lab.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, needs_seed=True):
        p.add_argument("--n", type=int, default=1024, help="sample size (power of two)")
        p.add_argument("--gamma", type=float, default=2.0, help="variance-ratio bound")
        p.add_argument("--theta", type=float, default=2.0)
        p.add_argument("--epsilon", type=float, default=0.01)
        p.add_argument("--delta", type=float, default=3.0)
        p.add_argument("--output", default=None, help="output path (default stdout)")
        if needs_seed:
            p.add_argument("--seed", type=int, default=0, help="master seed (HETEROSELECT_SEED overrides)")

    p_fit = sub.add_parser("fit", help="select a model for a y1,y2 CSV file")
    add_common(p_fit, needs_seed=False)
    p_fit.add_argument("--input", required=True, help="CSV with header y1,y2")
    p_fit.add_argument("--truncate", action="store_true", help="truncate to the largest power of two")
    p_fit.add_argument("--quiet", action="store_true", help="omit the per-model audit table")
    p_fit.set_defaults(func=cmd_fit)

    p_table = sub.add_parser("table", help="risk-ratio table over scenarios and gamma values")
    add_common(p_table)
    p_table.add_argument("--scenario", default="all", help="comma-separated scenario names or 'all'")
    p_table.add_argument("--gamma-grid", default="1,1.5,2,2.5,3")
    p_table.add_argument("--reps", type=int, default=500)
    p_table.add_argument("--kind", choices=RISK_KINDS, default="kullback")
    p_table.add_argument("--format", choices=("csv", "json"), default="csv")
    p_table.set_defaults(func=cmd_table)

    p_conv = sub.add_parser("convergence", help="normalized-risk decay along a grid of sample sizes")
    add_common(p_conv)
    p_conv.add_argument("--n-grid", default="256,512,1024,2048,4096,8192,16384")
    p_conv.add_argument("--reps", type=int, default=100)
    p_conv.add_argument("--format", choices=("csv", "json"), default="csv")
    p_conv.set_defaults(func=cmd_convergence)

    p_verify = sub.add_parser("verify", help="run the verification oracle batteries")
    add_common(p_verify)
    p_verify.add_argument("--reps", type=int, default=100_000)
    p_verify.add_argument("--kappa", type=float, default=1.0 + 2.0 * math.exp(-1.0))
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, EmptyCollectionError, DegenerateVarianceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
