"""Seeded Monte-Carlo trials, aggregation, parameter sweeps and output files.

Each trial ``k`` draws all of its randomness from
``SeedSequence(seed, spawn_key=(k,))`` split into three PCG64 streams
(graph instances, measurement noise, attack-set choice), so a trial's
output depends only on the master seed and its index. All estimators in a
trial see the same graphs and measurements.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attack import (
    AttackScenario,
    NoAttack,
    apply_attack,
    random_compromised_agents,
    random_compromised_set,
)
from .errors import AllStreamsCompromised, DegenerateSeries, NonFinite
from .estimator import STEPS, EstimatorState, SaturationMonitor, WeightSchedule
from .graph import NetworkModel, algebraic_connectivity, max_laplacian_eigenvalue, sample_instance
from .measurement import MeasurementModel, as_parameter, stacked_clean_measurement
from .resilience import check_resilience

ESTIMATORS = ("sage", "baseline")
METRICS = ("max_rmse", "mean_rmse", "consensus_residual", "saturated_frac")
CSV_HEADER = ("trial", "iter", "estimator") + METRICS
QUANTILES = (0.05, 0.95)


@dataclass(frozen=True)
class AttackPlan:
    """How each trial picks its compromised streams.

    Exactly one of ``agents``, ``streams``, ``random_agents``, ``random_streams``
    may be set; none means no attack. Random plans redraw the set per trial.
    """

    strategy: object = field(default_factory=NoAttack)
    agents: tuple | None = None
    streams: tuple | None = None
    random_agents: int | None = None
    random_streams: int | None = None

    def __post_init__(self):
        given = [x for x in (self.agents, self.streams, self.random_agents, self.random_streams) if x is not None]
        if len(given) > 1:
            raise ValueError("an attack plan selects streams in exactly one way")

    @property
    def is_random(self) -> bool:
        return self.random_agents is not None or self.random_streams is not None

    @property
    def by_agent(self) -> bool:
        return self.agents is not None or self.random_agents is not None

    def with_count(self, count) -> "AttackPlan":
        """Random plan of the same kind (agents or streams) with ``count`` picks."""
        if self.by_agent:
            return AttackPlan(self.strategy, random_agents=count)
        return AttackPlan(self.strategy, random_streams=count)

    def scenario(self, model, rng) -> AttackScenario:
        if self.agents is not None:
            return AttackScenario.for_agents(model, self.agents, self.strategy)
        if self.streams is not None:
            return AttackScenario(self.streams, self.strategy)
        if self.random_agents is not None:
            chosen = random_compromised_agents(model.n_agents, self.random_agents, rng)
            return AttackScenario.for_agents(model, chosen, self.strategy)
        if self.random_streams is not None:
            return AttackScenario(random_compromised_set(model.n_streams, self.random_streams, rng), self.strategy)
        return AttackScenario((), self.strategy)


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    network: NetworkModel
    model: MeasurementModel
    theta: np.ndarray
    schedule: WeightSchedule
    attack: AttackPlan = field(default_factory=AttackPlan)
    iterations: int = 1000
    trials: int = 1
    seed: int = 0
    stride: int = 10
    estimators: tuple = ESTIMATORS
    check_saturation: bool = True
    description: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", as_parameter(self.theta, self.model.m_dim))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.iterations < 1 or self.trials < 1 or self.stride < 1:
            raise ValueError("iterations, trials and stride must be >= 1")
        if self.network.base.n_vertices != self.model.n_agents:
            raise ValueError("network and measurement model disagree on the number of agents")
        unknown = set(self.estimators) - set(STEPS)
        if unknown or not self.estimators:
            raise ValueError(f"unknown estimators {sorted(unknown)}; choose from {sorted(STEPS)}")

    def replace(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)

    def sample_iters(self) -> np.ndarray:
        it = np.arange(0, self.iterations + 1, self.stride)
        if it[-1] != self.iterations:
            it = np.append(it, self.iterations)
        return it


def trial_rngs(seed, trial_index):
    """Independent (graph, noise, attack) generators of one trial."""
    ss = np.random.SeedSequence(seed, spawn_key=(trial_index,))
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(3))


def state_metrics(X, theta, gains=None):
    """``(max_rmse, mean_rmse, consensus_residual, saturated_frac)`` of estimates ``X``."""
    err = np.sqrt(np.sum((X - theta) ** 2, axis=1))
    resid = float(np.sqrt(np.sum((X - X.mean(axis=0)) ** 2)))
    sat = 0.0 if gains is None or gains.size == 0 else float(np.count_nonzero(gains < 1.0)) / gains.size
    return float(err.max()), float(err.mean()), resid, sat


@dataclass(eq=False)
class TrialResult:
    trial: int
    iters: np.ndarray
    metrics: dict  # estimator -> metric -> series over iters
    compromised: np.ndarray
    saturation_checks: int = 0
    saturation_violations: int = 0
    final_estimates: dict = field(default_factory=dict)
    states: dict | None = None  # estimator -> (len(iters), N, M), when kept

    def series(self, estimator, metric="max_rmse") -> np.ndarray:
        return self.metrics[estimator][metric]


def run_trial(config: SimulationConfig, trial_index: int, keep_states=False) -> TrialResult:
    """Run ``config.iterations`` synchronous rounds of every configured estimator."""
    graph_rng, noise_rng, attack_rng = trial_rngs(config.seed, trial_index)
    model, theta, sched = config.model, config.theta, config.schedule
    scenario = config.attack.scenario(model, attack_rng)
    iters = config.sample_iters()
    record_at = set(int(t) for t in iters)
    monitor = SaturationMonitor() if config.check_saturation else None

    states = {e: EstimatorState.initial(model) for e in config.estimators}
    steps = {e: STEPS[e] for e in config.estimators}
    series = {e: {m: np.empty(len(iters)) for m in METRICS} for e in config.estimators}
    kept = {e: np.empty((len(iters), model.n_agents, model.m_dim)) for e in config.estimators} if keep_states else None
    signal = model.signal(theta)
    attacked = scenario.size > 0 and not isinstance(scenario.strategy, NoAttack)

    def record(slot):
        for e, st in states.items():
            X = st.estimates
            if not np.all(np.isfinite(X)):
                raise NonFinite(st.t)
            vals = state_metrics(X, theta, st.gains)
            for m, v in zip(METRICS, vals):
                series[e][m][slot] = v
            if kept is not None:
                kept[e][slot] = X

    slot = 0
    record(slot)
    for t in range(config.iterations):
        graph = sample_instance(config.network, graph_rng)
        y = stacked_clean_measurement(model, theta, noise_rng, signal)
        if attacked:
            y = apply_attack(scenario, t, y, theta, model)
        for e in states:
            states[e] = steps[e](states[e], sched, graph, y, model, monitor)
        if t + 1 in record_at:
            slot += 1
            record(slot)

    return TrialResult(
        trial=trial_index,
        iters=iters,
        metrics=series,
        compromised=scenario.compromised,
        saturation_checks=monitor.checks if monitor else 0,
        saturation_violations=monitor.violations if monitor else 0,
        final_estimates={e: st.estimates for e, st in states.items()},
        states=kept,
    )


def _run_one(args):
    config, k = args
    return run_trial(config, k)


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("SAGE_THREADS")
    return max(1, int(env)) if env else 1


@dataclass(eq=False)
class ExperimentResult:
    config: SimulationConfig
    trials: list  # TrialResult, ordered by trial index

    @property
    def iters(self) -> np.ndarray:
        return self.trials[0].iters

    def stack(self, estimator, metric="max_rmse") -> np.ndarray:
        """``(trials, len(iters))`` array of one metric."""
        return np.vstack([tr.series(estimator, metric) for tr in self.trials])

    def aggregate(self, estimator, metric="max_rmse") -> dict:
        data = self.stack(estimator, metric)
        lo, hi = np.quantile(data, QUANTILES, axis=0)
        return {
            "mean": data.mean(axis=0),
            "median": np.median(data, axis=0),
            "q05": lo,
            "q95": hi,
        }

    def at(self, t, estimator, metric="max_rmse", stat="median") -> float:
        pos = np.flatnonzero(self.iters == t)
        if not pos.size:
            raise KeyError(f"iteration {t} was not sampled")
        return float(self.aggregate(estimator, metric)[stat][pos[0]])

    def final(self, estimator, metric="max_rmse") -> np.ndarray:
        return self.stack(estimator, metric)[:, -1]

    @property
    def saturation_violations(self) -> int:
        return sum(tr.saturation_violations for tr in self.trials)

    @property
    def saturation_checks(self) -> int:
        return sum(tr.saturation_checks for tr in self.trials)


def run_experiment(config: SimulationConfig, workers=None, order=None) -> ExperimentResult:
    """Run all trials (in ``order`` if given) and collect them by trial index.

    ``workers`` defaults to ``$SAGE_THREADS`` or 1. The result does not
    depend on the worker count or the execution order.
    """
    indices = list(range(config.trials)) if order is None else [int(k) for k in order]
    if sorted(indices) != list(range(config.trials)):
        raise ValueError("order must be a permutation of the trial indices")
    n = _workers(workers)
    if n > 1 and len(indices) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_one, [(config, k) for k in indices]))
    else:
        results = [run_trial(config, k) for k in indices]
    results.sort(key=lambda tr: tr.trial)
    return ExperimentResult(config, results)


def _final_row(result, estimator):
    final = result.final(estimator)
    lo, hi = np.quantile(final, QUANTILES)
    return {
        "estimator": estimator,
        "mean": float(final.mean()),
        "median": float(np.median(final)),
        "q05": float(lo),
        "q95": float(hi),
    }


def sweep_gamma(config: SimulationConfig, gammas, workers=None) -> list[dict]:
    """Final max-RMSE statistics for each threshold scale ``Gamma``."""
    gammas = list(gammas)
    if not gammas:
        raise ValueError("no Gamma values given")
    rows = []
    for g in gammas:
        res = run_experiment(config.replace(schedule=config.schedule.replace(Gamma=float(g))), workers)
        rows += [{"Gamma": float(g), **_final_row(res, e)} for e in config.estimators]
    return rows


def sweep_attack_count(config: SimulationConfig, counts, workers=None) -> list[dict]:
    """Final max-RMSE statistics per number of compromised agents (or streams).

    Every trial draws a fresh compromised set; trials with equal index share
    seeds across counts, which makes their sets nested.
    """
    counts = list(counts)
    if not counts:
        raise ValueError("no attack counts given")
    rows = []
    for c in counts:
        res = run_experiment(config.replace(attack=config.attack.with_count(int(c))), workers)
        rows += [{"count": int(c), **_final_row(res, e)} for e in config.estimators]
    return rows


def decay_slope(t, values=None) -> float:
    """Least-squares slope of ``log(value)`` against ``log(t + 1)`` over the
    last half of the samples. Accepts two arrays or one sequence of pairs."""
    if values is None:
        pairs = np.asarray(t, dtype=float)
        t, values = pairs[:, 0], pairs[:, 1]
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-D arrays of equal length")
    if len(v) < 10:
        raise ValueError("decay_slope needs at least 10 samples")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise DegenerateSeries("values must be finite and positive")
    half = len(v) // 2
    slope, _ = np.polyfit(np.log(t[half:] + 1.0), np.log(v[half:]), 1)
    return float(slope)


def write_metrics_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for tr in result.trials:
            for i, t in enumerate(tr.iters):
                for e in result.config.estimators:
                    w.writerow([tr.trial, int(t), e] + [repr(float(tr.metrics[e][m][i])) for m in METRICS])


def resilience_summary(config, compromised):
    try:
        return check_resilience(config.model, compromised).to_dict()
    except AllStreamsCompromised:
        return None


def summary_dict(result: ExperimentResult) -> dict:
    cfg = result.config
    base_L = cfg.network.mean_laplacian() / max(1e-300, 1.0 - cfg.network.link_failure_prob)
    out = {
        "config": cfg.description,
        "derived": {
            "n_agents": cfg.model.n_agents,
            "m_dim": cfg.model.m_dim,
            "n_streams": cfg.model.n_streams,
            "n_edges": cfg.network.base.n_edges,
            "lambda2_mean_laplacian": algebraic_connectivity(cfg.network.mean_laplacian()),
            "lambda_max_base": max_laplacian_eigenvalue(base_L),
            "schedule": dict(cfg.schedule.__dict__),
            "theta_norm": float(np.linalg.norm(cfg.theta)),
            "rng": "numpy PCG64 via SeedSequence(seed, spawn_key=(trial,)).spawn(3)",
        },
        "iters": result.iters.tolist(),
        "saturation": {"checks": result.saturation_checks, "violations": result.saturation_violations},
        "aggregates": {},
        "final_max_rmse": {e: _final_row(result, e) for e in cfg.estimators},
        "resilience": resilience_summary(cfg, result.trials[0].compromised),
        "attack_random_per_trial": cfg.attack.is_random,
    }
    for e in cfg.estimators:
        out["aggregates"][e] = {
            m: {k: v.tolist() for k, v in result.aggregate(e, m).items()} for m in METRICS
        }
    return out


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(result, out / "metrics.csv")
    (out / "summary.json").write_text(json.dumps(summary_dict(result), indent=2, sort_keys=True) + "\n")
    return out


def write_sweep_csv(rows, path) -> None:
    if not rows:
        raise ValueError("empty sweep")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
