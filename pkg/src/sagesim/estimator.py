"""Consensus+innovations estimators with and without saturating gains.

One synchronous round, for every agent ``n``::

    ybar_n(t)  = running mean of y_n(0..t)
    r_n        = ybar_n(t) - H_n x_n(t)                       # innovation
    x_n(t+1)   = x_n(t) - beta_t * sum_{l ~ n} (x_n(t) - x_l(t))
                          + alpha_t * H_n^T K_n(t) r_n

SAGE uses ``K_n(t) = diag(min(1, gamma_t / |r_p|))`` so that no scaled
innovation component exceeds ``gamma_t``; the baseline uses ``K_n = I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGraph, DimensionMismatch, InvalidSchedule
from .graph import Graph, max_laplacian_eigenvalue
from .measurement import MeasurementModel, RunningAverage, update_running_average

GUIDELINE_A = 1.0
GUIDELINE_TAU1 = 0.26
GUIDELINE_TAU2 = 0.001
GUIDELINE_TAU_GAMMA = 0.25


@dataclass(frozen=True)
class WeightSchedule:
    """Decaying weights ``alpha_t = a/(t+1)^tau1``, ``beta_t = b/(t+1)^tau2``
    and threshold ``gamma_t = Gamma/(t+1)^tau_gamma``.

    Requires ``0 < tau2 < tau1 < 1`` and ``0 < tau_gamma < min(1/2, tau1 - tau2)``.
    """

    a: float
    tau1: float
    b: float
    tau2: float
    Gamma: float
    tau_gamma: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.Gamma > 0):
            raise InvalidSchedule("a, b and Gamma must be positive")
        if not 0 < self.tau2 < self.tau1 < 1:
            raise InvalidSchedule(f"need 0 < tau2 < tau1 < 1, got tau1={self.tau1}, tau2={self.tau2}")
        bound = min(0.5, self.tau1 - self.tau2)
        if not 0 < self.tau_gamma < bound:
            raise InvalidSchedule(f"need 0 < tau_gamma < {bound:.6g}, got {self.tau_gamma}")

    def alpha(self, t) -> float:
        return self.a / (t + 1.0) ** self.tau1

    def beta(self, t) -> float:
        return self.b / (t + 1.0) ** self.tau2

    def gamma(self, t) -> float:
        return self.Gamma / (t + 1.0) ** self.tau_gamma

    def replace(self, **changes) -> "WeightSchedule":
        return WeightSchedule(**{**self.__dict__, **changes})


def alpha(sched: WeightSchedule, t) -> float:
    return sched.alpha(t)


def beta(sched: WeightSchedule, t) -> float:
    return sched.beta(t)


def gamma(sched: WeightSchedule, t) -> float:
    return sched.gamma(t)


def recommended_weights(L, Gamma) -> WeightSchedule:
    """Guideline schedule for the no-failure Laplacian ``L``: ``a = 1``,
    ``b = 1 / lambda_max(L)``, ``tau1 = 0.26``, ``tau2 = 0.001``,
    ``tau_gamma = 0.25``. ``Gamma`` has no rule and must be supplied."""
    lam = max_laplacian_eigenvalue(L)
    if lam <= 1e-12:
        raise DegenerateGraph("largest Laplacian eigenvalue is zero (no edges)")
    return WeightSchedule(GUIDELINE_A, GUIDELINE_TAU1, 1.0 / lam, GUIDELINE_TAU2, Gamma, GUIDELINE_TAU_GAMMA)


def saturating_gain(innovation, gamma_t):
    """``min(1, gamma_t / |innovation|)``, elementwise; 1 where the innovation is 0."""
    # gamma / max(|r|, gamma) is exactly 1 below the threshold and never divides by 0
    k = gamma_t / np.maximum(np.abs(innovation), gamma_t)
    return k if np.ndim(k) else float(k)


@dataclass(eq=False)
class EstimatorState:
    """Estimates ``x_n(t)`` (rows of ``estimates``), the stacked running mean of
    all measurement streams, and the gains used in the step that produced it."""

    estimates: np.ndarray
    average: RunningAverage
    t: int = 0
    gains: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, model: MeasurementModel) -> "EstimatorState":
        return cls(np.zeros((model.n_agents, model.m_dim)), RunningAverage.empty(model.n_streams))

    def running_average(self, model, n) -> np.ndarray:
        return self.average.mean[model.offsets[n]:model.offsets[n + 1]]

    def mean_estimate(self) -> np.ndarray:
        return self.estimates.mean(axis=0)


@dataclass
class SaturationMonitor:
    """Counts violations of ``|k r| <= gamma_t`` and ``0 < k <= 1``."""

    checks: int = 0
    violations: int = 0

    def record(self, gains, scaled, gamma_t):
        bad = (np.abs(scaled) > gamma_t) | (gains <= 0.0) | (gains > 1.0)
        self.checks += gains.size
        self.violations += int(np.count_nonzero(bad))


def laplacian_apply(graph: Graph, X) -> np.ndarray:
    """``L(graph) @ X`` without forming ``L``; row ``n`` is ``sum_l (x_n - x_l)``."""
    N, M = X.shape
    if not graph.n_edges:
        return np.zeros_like(X)
    u, v = graph.endpoints
    diff = X.take(u, axis=0) - X.take(v, axis=0)
    if M <= 8:
        out = np.empty_like(X)
        for m in range(M):
            d = diff[:, m]
            out[:, m] = np.bincount(u, d, N) - np.bincount(v, d, N)
        return out
    # one scatter-add over flattened (vertex, component) slots
    slots = (np.concatenate([u, v]) * M)[:, None] + np.arange(M)
    vals = np.concatenate([diff, -diff])
    return np.bincount(slots.ravel(), weights=vals.ravel(), minlength=N * M).reshape(N, M)


def _step(state, sched, graph, y, model, saturate, monitor):
    X = state.estimates
    y = np.asarray(y, dtype=float)
    if y.shape != (model.n_streams,):
        raise DimensionMismatch(f"measurement length {y.shape} != ({model.n_streams},)")
    if X.shape != (model.n_agents, model.m_dim) or graph.n_vertices != model.n_agents:
        raise DimensionMismatch("state, graph and model disagree on N or M")

    t = state.t
    avg = update_running_average(state.average, y)
    innovation = avg.mean - model.predict(X)
    if saturate:
        g_t = sched.gamma(t)
        gains = saturating_gain(innovation, g_t)
        # equals gains * innovation, but exactly bounded by g_t
        scaled = np.clip(innovation, -g_t, g_t)
        if monitor is not None:
            monitor.record(gains, scaled, g_t)
    else:
        gains = np.ones_like(innovation)
        scaled = innovation
    correction = model.back_project(scaled)
    X_new = X - sched.beta(t) * laplacian_apply(graph, X) + sched.alpha(t) * correction
    return EstimatorState(X_new, avg, t + 1, gains)


def sage_step(state, sched, graph, y, model, monitor=None) -> EstimatorState:
    """One synchronous SAGE round driven by the attacked measurement ``y(t)``."""
    return _step(state, sched, graph, y, model, True, monitor)


def baseline_step(state, sched, graph, y, model, monitor=None) -> EstimatorState:
    """Same round with unit gains (plain consensus+innovations)."""
    return _step(state, sched, graph, y, model, False, monitor)


STEPS = {"sage": sage_step, "baseline": baseline_step}


def consensus_residual(state) -> float:
    """Frobenius norm of the estimates' deviation from their across-agent mean."""
    X = state.estimates if isinstance(state, EstimatorState) else np.asarray(state)
    return float(np.linalg.norm(X - X.mean(axis=0)))
