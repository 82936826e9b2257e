"""Simulation lab: scenarios, seeded data generation and Monte Carlo risk studies.

Every experiment runs on deterministic per-replication RNG substreams so that
results are reproducible bit-for-bit and independent of execution order.
Common random numbers are shared across compared configurations (all models of
a collection, all gamma values of a table row) to reduce ratio variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

import numpy as np

from .estimation import (
    DegenerateVarianceError,
    Estimate,
    Observations,
    TruthSpec,
    fit,
    kl_divergence,
)
from .model_space import CollectionConfig, Model, build_collection, is_power_of_two
from .selector import PenaltySpec, select

RISK_KINDS = ("kullback", "quadratic_mean", "quadratic_variance")

#: Fraction of replications allowed to be redrawn due to degenerate variances.
DEGENERATE_BUDGET = 1e-3

_MAX_REDRAWS = 8


@dataclass(frozen=True)
class Scenario:
    """A pair of functions on [0, 1] sampled at i/n, with its variance-ratio bound."""

    name: str
    mean_fn: Callable[[np.ndarray], np.ndarray]
    var_fn: Callable[[np.ndarray], np.ndarray]
    true_gamma: float

    def truth(self, n: int) -> TruthSpec:
        if not is_power_of_two(n):
            raise ValueError(f"n must be a power of two, got {n}")
        x = np.arange(1, n + 1) / n
        s = np.asarray(self.mean_fn(x), dtype=float) * np.ones(n)
        sigma = np.asarray(self.var_fn(x), dtype=float) * np.ones(n)
        if np.any(sigma <= 0):
            raise ValueError(f"scenario {self.name}: variance function not positive on the grid")
        ratio = sigma.max() / sigma.min()
        if ratio > self.true_gamma * (1.0 + 1e-9):
            raise ValueError(
                f"scenario {self.name}: sampled variance ratio {ratio:.4f} exceeds "
                f"true_gamma={self.true_gamma}"
            )
        return TruthSpec(s=s, sigma=sigma)


@dataclass(frozen=True)
class HolderScenario(Scenario):
    """A scenario with known smoothness exponents and Hölder constants."""

    alpha_mean: float = 1.0
    alpha_var: float = 1.0
    const_mean: float = 1.0
    const_var: float = 1.0


@dataclass(frozen=True)
class RiskReport:
    estimate: float
    std_error: float
    replications: int
    kind: str
    degenerate: int = 0


@dataclass(frozen=True)
class SeedPolicy:
    """Deterministic substream derivation from a master seed.

    Replication r draws from the stream keyed (prefix..., r); namespacing
    extends the prefix so nested experiments never collide.
    """

    master_seed: int
    prefix: tuple[int, ...] = ()

    def stream(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=self.prefix + key))

    def namespaced(self, *key: int) -> "SeedPolicy":
        return replace(self, prefix=self.prefix + key)


@dataclass(frozen=True)
class SelectionTarget:
    """Run the full selection pipeline each replication instead of a fixed model."""

    collection: Sequence[Model]
    spec: PenaltySpec


Target = Union[Model, SelectionTarget]


def builtin_scenarios() -> list[Scenario]:
    """The four benchmark scenarios M1-M4."""

    def m1_mean(x):
        return np.select([x < 0.25, x < 0.5, x < 0.75], [4.0, 0.0, 2.0], default=1.0)

    def m1_var(x):
        return np.where(x < 0.5, 2.0, 1.0)

    return [
        Scenario("M1", m1_mean, m1_var, true_gamma=2.0),
        Scenario(
            "M2",
            lambda x: 1.0 + np.sin(2.0 * np.pi * x + np.pi / 3.0),
            lambda x: np.ones_like(x),
            true_gamma=1.0,
        ),
        Scenario(
            "M3",
            lambda x: 1.5 * x,
            lambda x: 0.5 + 2.0 * np.sin(4.0 * np.pi * np.minimum(x, 0.5) ** 2) / 3.0,
            true_gamma=7.0 / 3.0,
        ),
        Scenario(
            "M4",
            lambda x: 1.0 + np.sin(4.0 * np.pi * np.minimum(x, 0.5)),
            lambda x: (3.0 + np.sin(2.0 * np.pi * x)) / 2.0,
            true_gamma=2.0,
        ),
    ]


def lipschitz_scenario() -> HolderScenario:
    """A smooth benchmark with Lipschitz mean and variance, for rate experiments."""
    return HolderScenario(
        name="lipschitz",
        mean_fn=lambda x: x,
        var_fn=lambda x: 1.0 + 0.5 * x,
        true_gamma=1.5,
        alpha_mean=1.0,
        alpha_var=1.0,
        const_mean=1.0,
        const_var=0.5,
    )


def get_scenario(name: str) -> Scenario:
    for sc in builtin_scenarios() + [lipschitz_scenario()]:
        if sc.name.lower() == name.lower():
            return sc
    raise KeyError(f"unknown scenario {name!r}")


def sample(scenario: Scenario, n: int, rng: np.random.Generator) -> Observations:
    """Draw the two replicates; the first n normal draws feed y1, the next n feed y2."""
    truth = scenario.truth(n)
    z = rng.standard_normal(2 * n)
    sd = np.sqrt(truth.sigma)
    return Observations(y1=truth.s + sd * z[:n], y2=truth.s + sd * z[n:])


def _loss(est: Estimate, truth: TruthSpec, kind: str) -> float:
    if kind == "kullback":
        return kl_divergence(truth, est.mean, est.variance)
    if kind == "quadratic_mean":
        return float(np.sum((truth.s - est.mean) ** 2))
    if kind == "quadratic_variance":
        return float(np.sum((truth.sigma - est.variance) ** 2))
    raise ValueError(f"unknown risk kind {kind!r}")


def _check_kind(kind: str) -> None:
    if kind not in RISK_KINDS:
        raise ValueError(f"kind must be one of {RISK_KINDS}, got {kind!r}")


def _replicate(scenario, n, seeds, r, evaluate):
    """Run one replication, redrawing on degenerate variances.

    Returns (value, redraws).  The redraw stream is keyed (r, attempt) so the
    base stream (r,) stays untouched for clean replications.
    """
    for attempt in range(_MAX_REDRAWS):
        key = (r,) if attempt == 0 else (r, attempt)
        obs = sample(scenario, n, seeds.stream(*key))
        try:
            return evaluate(obs), attempt
        except DegenerateVarianceError:
            continue
    raise DegenerateVarianceError(
        f"replication {r}: degenerate variance persisted across {_MAX_REDRAWS} redraws"
    )


def _check_budget(degenerate: int, reps: int) -> None:
    if degenerate > DEGENERATE_BUDGET * reps:
        raise DegenerateVarianceError(
            f"{degenerate} degenerate replications out of {reps} exceed the "
            f"{DEGENERATE_BUDGET:.1%} budget"
        )


def _aggregate(losses: np.ndarray, kind: str, degenerate: int) -> RiskReport:
    reps = len(losses)
    se = float(losses.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return RiskReport(
        estimate=float(losses.mean()),
        std_error=se,
        replications=reps,
        kind=kind,
        degenerate=degenerate,
    )


def mc_risk(
    scenario: Scenario,
    n: int,
    target: Target,
    reps: int,
    seeds: SeedPolicy,
    kind: str = "kullback",
) -> RiskReport:
    """Monte Carlo risk of a fixed model or of the full selection pipeline."""
    _check_kind(kind)
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    truth = scenario.truth(n)
    if isinstance(target, SelectionTarget):
        def evaluate(obs):
            return _loss(select(target.collection, obs, target.spec).estimate, truth, kind)
    else:
        def evaluate(obs):
            return _loss(fit(target, obs), truth, kind)

    losses = np.empty(reps)
    degenerate = 0
    for r in range(reps):
        losses[r], redraws = _replicate(scenario, n, seeds, r, evaluate)
        degenerate += redraws
    _check_budget(degenerate, reps)
    return _aggregate(losses, kind, degenerate)


def risk_profile(
    scenario: Scenario,
    n: int,
    collection: Sequence[Model],
    reps: int,
    seeds: SeedPolicy,
    kind: str = "kullback",
) -> list[RiskReport]:
    """Per-model risk reports on shared seeds (common random numbers).

    A replication whose draw is degenerate for any model is redrawn for all of
    them, so every model sees exactly the same observations.
    """
    _check_kind(kind)
    if not collection:
        raise ValueError("empty model collection")
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    truth = scenario.truth(n)

    def evaluate(obs):
        return np.array([_loss(fit(m, obs), truth, kind) for m in collection])

    losses = np.empty((reps, len(collection)))
    degenerate = 0
    for r in range(reps):
        losses[r], redraws = _replicate(scenario, n, seeds, r, evaluate)
        degenerate += redraws
    _check_budget(degenerate, reps)
    return [_aggregate(losses[:, j], kind, degenerate) for j in range(len(collection))]


def oracle_risk(
    scenario: Scenario,
    n: int,
    collection: Sequence[Model],
    reps: int,
    seeds: SeedPolicy,
    kind: str = "kullback",
) -> tuple[Model, RiskReport]:
    """The model with the smallest estimated risk on shared seeds, with its report."""
    reports = risk_profile(scenario, n, collection, reps, seeds, kind)
    best = min(range(len(collection)), key=lambda j: (reports[j].estimate, j))
    return collection[best], reports[best]


@dataclass(frozen=True)
class RatioCell:
    scenario: str
    gamma: float
    ratio: float
    std_error: float


def ratio_table(
    scenarios: Sequence[Scenario],
    gamma_grid: Sequence[float],
    n: int,
    reps: int,
    seeds: SeedPolicy,
    kind: str = "kullback",
    theta: float = 2.0,
    epsilon: float = 0.01,
    delta: float = 3.0,
) -> list[RatioCell]:
    """Selection-risk / oracle-risk ratios per scenario and penalty gamma.

    The oracle is estimated once per scenario over the collection built with
    the scenario's true gamma; each grid gamma drives both the collection
    filters and the penalty of the selection run.  All runs of one scenario
    share the same replication seeds.
    """
    _check_kind(kind)
    if not gamma_grid:
        raise ValueError("empty gamma grid")
    cells = []
    for i, sc in enumerate(scenarios):
        sc_seeds = seeds.namespaced(i)
        oracle_coll = build_collection(CollectionConfig(n, sc.true_gamma, theta, epsilon, delta))
        _, oracle = oracle_risk(sc, n, oracle_coll, reps, sc_seeds, kind)
        for g in gamma_grid:
            coll = build_collection(CollectionConfig(n, g, theta, epsilon, delta))
            spec = PenaltySpec(gamma=g, theta=theta, epsilon=epsilon)
            rep = mc_risk(sc, n, SelectionTarget(coll, spec), reps, sc_seeds, kind)
            ratio = rep.estimate / oracle.estimate
            se = abs(ratio) * math.sqrt(
                (rep.std_error / rep.estimate) ** 2 + (oracle.std_error / oracle.estimate) ** 2
            )
            cells.append(RatioCell(scenario=sc.name, gamma=g, ratio=ratio, std_error=se))
    return cells


def selection_frequency(
    scenario: Scenario,
    n: int,
    predicate: Callable[[Model], bool],
    reps: int,
    seeds: SeedPolicy,
    gamma: float | None = None,
    theta: float = 2.0,
    epsilon: float = 0.01,
    delta: float = 3.0,
) -> float:
    """Fraction of replications whose selected model satisfies the predicate."""
    if reps < 1000:
        raise ValueError(f"reps must be >= 1000 for a meaningful frequency, got {reps}")
    g = scenario.true_gamma if gamma is None else gamma
    collection = build_collection(CollectionConfig(n, g, theta, epsilon, delta))
    spec = PenaltySpec(gamma=g, theta=theta, epsilon=epsilon)

    def evaluate(obs):
        return 1.0 if predicate(select(collection, obs, spec).chosen) else 0.0

    hits = 0.0
    degenerate = 0
    for r in range(reps):
        value, redraws = _replicate(scenario, n, seeds, r, evaluate)
        hits += value
        degenerate += redraws
    _check_budget(degenerate, reps)
    return hits / reps


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    normalized_risk: float
    std_error: float


@dataclass(frozen=True)
class ConvergenceResult:
    points: tuple[ConvergencePoint, ...]
    slope: float


def rate_threshold(scenario: HolderScenario, n: int, epsilon: float) -> float:
    """Smallest admissible n for the rate experiment with this smooth scenario."""
    sigma_star = float(scenario.truth(n).sigma.min())
    l1, l2 = scenario.const_mean, scenario.const_var
    return max(
        (2.0 * sigma_star**2 / (l1**2 * sigma_star + l2**2)) ** 2,
        math.exp(4.0 * (1.0 + epsilon) ** 2),
    )


def convergence_experiment(
    scenario: HolderScenario,
    n_grid: Sequence[int],
    reps: int,
    seeds: SeedPolicy,
    gamma: float | None = None,
    theta: float = 2.0,
    epsilon: float = 0.01,
    delta: float = 3.0,
) -> ConvergenceResult:
    """Normalized Kullback risk of the selected estimator along a grid of sample sizes.

    Fits the least-squares slope of log risk against log(n / (log n)^(1+epsilon));
    for smoothness alpha = min(alpha_mean, alpha_var) the rate theory predicts a
    slope of -2*alpha/(2*alpha + 1).
    """
    n_grid = list(n_grid)
    if len(n_grid) < 2:
        raise ValueError("n_grid needs at least two points to fit a slope")
    if any(not is_power_of_two(n) for n in n_grid):
        raise ValueError("n_grid entries must be powers of two")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    threshold = rate_threshold(scenario, n_grid[0], epsilon)
    if n_grid[0] < threshold:
        raise ValueError(f"n_grid starts below the admissible threshold {threshold:.1f}")
    g = scenario.true_gamma if gamma is None else gamma
    points = []
    for j, n in enumerate(n_grid):
        coll = build_collection(CollectionConfig(n, g, theta, epsilon, delta))
        spec = PenaltySpec(gamma=g, theta=theta, epsilon=epsilon)
        rep = mc_risk(scenario, n, SelectionTarget(coll, spec), reps, seeds.namespaced(j), "kullback")
        points.append(
            ConvergencePoint(n=n, normalized_risk=rep.estimate / n, std_error=rep.std_error / n)
        )
    xs = np.array([math.log(p.n / math.log(p.n) ** (1.0 + epsilon)) for p in points])
    ys = np.array([math.log(p.normalized_risk) for p in points])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return ConvergenceResult(points=tuple(points), slope=slope)
