"""Heterogeneous linear measurement models.

Every agent ``n`` observes ``y_n(t) = H_n theta + w_n(t)``. Rows of all
agents are stacked in agent order into one ``(P, M)`` matrix; stream ``p``
is row ``p`` of that stack (0-based). Rows are normalized to unit length
when the model is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, ZeroRowError

ZERO_ROW_TOL = 1e-12


def normalize_rows(raw):
    """Scale every row of ``raw`` to unit l2 norm.

    Returns ``(normalized, scale)`` with ``scale[:, None] * raw == normalized``.
    Raises ZeroRowError on a row whose norm is below 1e-12.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    norms = np.linalg.norm(raw, axis=1)
    bad = np.flatnonzero(norms < ZERO_ROW_TOL)
    if bad.size:
        raise ZeroRowError(int(bad[0]))
    scale = 1.0 / norms
    return raw * scale[:, None], scale


class MeasurementModel:
    """Stacked, row-normalized measurement model.

    Parameters
    ----------
    m_dim : int
        Dimension ``M`` of the unknown parameter.
    agent_matrices : sequence of array_like
        Raw ``(P_n, M)`` matrix per agent. ``P_n = 0`` is allowed.
    noise_stddevs : float or array_like
        Standard deviation of each raw stream, either one value for every
        stream, one value per agent, or one value per stream. Values are
        rescaled together with their rows.

    Models whose rows are all canonical basis vectors ("selectors") keep
    only the selected column of every stream; ``H`` is then built on first
    access. Use :meth:`from_selectors` to create one without a dense matrix.
    """

    def __init__(self, m_dim, agent_matrices, noise_stddevs=0.0):
        self.m_dim = int(m_dim)
        if self.m_dim < 1:
            raise ValueError("m_dim must be positive")
        mats = []
        for n, raw in enumerate(agent_matrices):
            raw = np.asarray(raw, dtype=float)
            if raw.size == 0:
                raw = np.empty((0, self.m_dim))
            elif raw.ndim == 1:
                raw = raw[None, :]
            if raw.ndim != 2 or raw.shape[1] != self.m_dim:
                raise DimensionMismatch(f"agent {n}: rows must have length {self.m_dim}")
            mats.append(raw)
        if not mats:
            raise ValueError("at least one agent is required")
        try:
            H, scale = normalize_rows(np.vstack(mats))
        except ZeroRowError as exc:
            raise ZeroRowError(exc.row) from None
        self._setup([len(m) for m in mats], scale, noise_stddevs)
        H.setflags(write=False)
        self.__dict__["H"] = H
        self.columns = _selector_columns(H)

    @classmethod
    def from_selectors(cls, m_dim, agent_columns, noise_stddevs=0.0) -> "MeasurementModel":
        """Model where stream ``p`` of agent ``n`` reads component ``agent_columns[n][p]``."""
        self = object.__new__(cls)
        self.m_dim = int(m_dim)
        cols = [np.asarray(c, dtype=np.int64).ravel() for c in agent_columns]
        if not cols:
            raise ValueError("at least one agent is required")
        flat = np.concatenate(cols)
        if flat.size and (flat.min() < 0 or flat.max() >= self.m_dim):
            raise DimensionMismatch(f"selected components must lie in [0, {self.m_dim})")
        self._setup([len(c) for c in cols], np.ones(len(flat)), noise_stddevs)
        flat.setflags(write=False)
        self.columns = flat
        return self

    def _setup(self, sizes, scale, noise_stddevs):
        sizes = np.asarray(sizes, dtype=np.int64)
        if sizes.sum() < 1:
            raise ValueError("the model has no measurement streams")
        self.n_agents = len(sizes)
        self.stream_counts = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.n_streams = int(self.offsets[-1])
        self.scale = scale
        self._all_agents_measure = bool(np.all(sizes > 0))
        self.owner = np.repeat(np.arange(self.n_agents), sizes)
        self.noise_stddevs = scale * self._expand_stddevs(noise_stddevs)
        for arr in (self.scale, self.owner, self.noise_stddevs, self.offsets, self.stream_counts):
            arr.setflags(write=False)

    def _expand_stddevs(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            out = np.full(self.n_streams, float(s))
        elif s.shape == (self.n_agents,) and self.n_agents != self.n_streams:
            out = np.repeat(s, self.stream_counts)
        elif s.shape == (self.n_streams,):
            out = s.copy()
        else:
            raise DimensionMismatch("noise_stddevs must be a scalar, per agent, or per stream")
        if np.any(out < 0) or not np.all(np.isfinite(out)):
            raise ValueError("noise standard deviations must be finite and nonnegative")
        return out

    @property
    def is_selector(self) -> bool:
        return self.columns is not None

    @cached_property
    def H(self) -> np.ndarray:
        """Dense ``(P, M)`` stack of unit rows."""
        H = np.zeros((self.n_streams, self.m_dim))
        H[np.arange(self.n_streams), self.columns] = 1.0
        H.setflags(write=False)
        return H

    def rows(self, streams):
        """Measurement vectors of ``streams``; sparse for large selector blocks."""
        streams = np.asarray(streams, dtype=np.int64)
        k = len(streams)
        if not self.is_selector:
            return self.H[streams]
        if k * self.m_dim <= 1 << 20:
            out = np.zeros((k, self.m_dim))
            out[np.arange(k), self.columns[streams]] = 1.0
            return out
        return sparse.csr_matrix((np.ones(k), (np.arange(k), self.columns[streams])), shape=(k, self.m_dim))

    def signal(self, theta) -> np.ndarray:
        """Noise-free stacked measurement ``H theta``."""
        theta = np.asarray(theta, dtype=float)
        return theta[self.columns] if self.is_selector else self.H @ theta

    def predict(self, X) -> np.ndarray:
        """Per-stream prediction ``h_p . x_{owner(p)}`` for agent estimates ``X`` (N, M)."""
        if self.is_selector:
            return X[self.owner, self.columns]
        return np.einsum("pm,pm->p", self.H, X.take(self.owner, axis=0))

    def back_project(self, values) -> np.ndarray:
        """``(N, M)`` array whose row ``n`` is ``sum_{p of n} values_p h_p``."""
        if self.is_selector:
            flat = self.owner * self.m_dim + self.columns
            return np.bincount(flat, values, self.n_agents * self.m_dim).reshape(self.n_agents, self.m_dim)
        return self.sum_by_agent(self.H * values[:, None])

    @cached_property
    def aggregator(self):
        """Sparse ``N x P`` matrix summing stream rows into their owning agent."""
        P = self.n_streams
        return sparse.csr_matrix((np.ones(P), (self.owner, np.arange(P))), shape=(self.n_agents, P))

    def sum_by_agent(self, rows) -> np.ndarray:
        """Sum per-stream rows into an ``(N, ...)`` array indexed by owning agent."""
        if self._all_agents_measure:
            return np.add.reduceat(rows, self.offsets[:-1], axis=0)
        return np.asarray(self.aggregator @ rows)

    def agent_matrix(self, n) -> np.ndarray:
        return self.H[self.offsets[n]:self.offsets[n + 1]]

    @property
    def agent_matrices(self) -> list[np.ndarray]:
        return [self.agent_matrix(n) for n in range(self.n_agents)]

    def with_noise(self, noise_stddevs) -> "MeasurementModel":
        """Same rows, new normalized-domain noise levels."""
        if self.is_selector:
            cols = [self.columns[self.offsets[n]:self.offsets[n + 1]] for n in range(self.n_agents)]
            return MeasurementModel.from_selectors(self.m_dim, cols, noise_stddevs)
        return MeasurementModel(self.m_dim, self.agent_matrices, noise_stddevs)

    def agent_streams(self, agents) -> np.ndarray:
        """All stream indices owned by the given agents."""
        return np.concatenate(
            [np.arange(self.offsets[n], self.offsets[n + 1]) for n in agents] or [np.empty(0, np.int64)]
        ).astype(np.int64)

    def __repr__(self):
        return f"MeasurementModel(M={self.m_dim}, N={self.n_agents}, P={self.n_streams})"


def _selector_columns(H):
    """Column index per row when every row is a canonical basis vector, else None."""
    cols = np.argmax(H, axis=1)
    e = np.zeros_like(H)
    e[np.arange(len(H)), cols] = 1.0
    if not np.array_equal(H, e):
        return None
    cols.setflags(write=False)
    return cols


def as_parameter(value, m_dim=None) -> np.ndarray:
    theta = np.array(value, dtype=float).ravel()
    if m_dim is not None and theta.shape != (m_dim,):
        raise DimensionMismatch(f"parameter must have length {m_dim}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter entries must be finite")
    theta.setflags(write=False)
    return theta


def stream_index_map(model: MeasurementModel) -> dict[int, range]:
    """Agent ``n`` owns streams ``offsets[n] .. offsets[n+1]-1``."""
    off = model.offsets
    return {n: range(int(off[n]), int(off[n + 1])) for n in range(model.n_agents)}


def clean_measurement(model, n, theta, rng) -> np.ndarray:
    """One noisy, unattacked measurement of agent ``n``."""
    sl = slice(model.offsets[n], model.offsets[n + 1])
    mean = model.signal(theta)[sl]
    return mean + rng.standard_normal(len(mean)) * model.noise_stddevs[sl]


def stacked_clean_measurement(model, theta, rng, signal=None) -> np.ndarray:
    """All ``P`` streams at once; ``signal`` may carry a cached ``H @ theta``."""
    if signal is None:
        signal = model.signal(theta)
    return signal + rng.standard_normal(model.n_streams) * model.noise_stddevs


def snr_to_stddev(model, theta, snr_db) -> float:
    """Network-wide noise level for a local SNR given in dB.

    Uses the mean per-stream signal power:
    ``sigma^2 = mean_p (h_p . theta)^2 / 10^(snr_db / 10)``. For a single agent
    this is ``||H_n theta||^2 / (P_n 10^(snr_db/10))``.
    """
    power = float(np.mean(model.signal(theta) ** 2))
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


@dataclass(frozen=True, eq=False)
class RunningAverage:
    """Arithmetic mean of the ``t`` samples absorbed so far."""

    t: int
    mean: np.ndarray

    @classmethod
    def empty(cls, size) -> "RunningAverage":
        return cls(0, np.zeros(size))


def update_running_average(avg: RunningAverage, y) -> RunningAverage:
    y = np.asarray(y, dtype=float)
    if y.shape != avg.mean.shape:
        raise DimensionMismatch(f"sample shape {y.shape} != running mean shape {avg.mean.shape}")
    t = avg.t
    return RunningAverage(t + 1, (t * avg.mean + y) / (t + 1))


def window_indices(grid_w, grid_h, half_span, position) -> np.ndarray:
    """Flat pixel indices within Chebyshev distance ``half_span`` of ``position``.

    ``position`` is ``[x, y]`` (column, row); pixels are numbered row-major,
    ``index = y * grid_w + x``. The window is clipped at the grid border.
    """
    x, y = (int(c) for c in position)
    if not (0 <= x < grid_w and 0 <= y < grid_h):
        raise ValueError(f"position {position} outside the {grid_w}x{grid_h} grid")
    xs = np.arange(max(0, x - half_span), min(grid_w, x + half_span + 1))
    ys = np.arange(max(0, y - half_span), min(grid_h, y + half_span + 1))
    return (ys[:, None] * grid_w + xs[None, :]).ravel()


def window_rows(grid_w, grid_h, half_span, position) -> np.ndarray:
    """Canonical-basis selector rows for a clipped pixel window."""
    idx = window_indices(grid_w, grid_h, half_span, position)
    rows = np.zeros((len(idx), grid_w * grid_h))
    rows[np.arange(len(idx)), idx] = 1.0
    return rows


def model_from_dict(doc) -> MeasurementModel:
    """Build a model from its JSON form.

    ``{"m_dim": M, "agents": [{"rows": [[...], ...], "noise_stddev": s}, ...]}``;
    an agent may give ``{"window": {"grid_w", "grid_h", "half_span", "position"}}``
    in place of ``rows``.
    """
    m_dim = int(doc["m_dim"])
    agents = doc["agents"]
    windows = [a.get("window") for a in agents]
    blocks, stds = [], []
    for i, (agent, w) in enumerate(zip(agents, windows)):
        if w is not None:
            if w["grid_w"] * w["grid_h"] != m_dim:
                raise DimensionMismatch(f"agent {i}: window grid does not match m_dim={m_dim}")
            blocks.append(window_indices(w["grid_w"], w["grid_h"], w["half_span"], w["position"]))
        else:
            blocks.append(np.asarray(agent["rows"], dtype=float).reshape(-1, m_dim))
        s = agent.get("noise_stddev", 0.0)
        stds.append(np.broadcast_to(np.asarray(s, dtype=float), (len(blocks[-1]),)))
    noise = np.concatenate(stds)
    if all(w is not None for w in windows):
        return MeasurementModel.from_selectors(m_dim, blocks, noise)
    mats = [b if w is None else window_rows(w["grid_w"], w["grid_h"], w["half_span"], w["position"])
            for b, w in zip(blocks, windows)]
    return MeasurementModel(m_dim, mats, noise)


def model_to_dict(model: MeasurementModel) -> dict:
    agents = []
    for n in range(model.n_agents):
        sl = slice(model.offsets[n], model.offsets[n + 1])
        s = model.noise_stddevs[sl]
        agents.append({
            "rows": model.H[sl].tolist(),
            "noise_stddev": float(s[0]) if s.size and np.all(s == s[0]) else s.tolist(),
        })
    return {"m_dim": model.m_dim, "agents": agents}
