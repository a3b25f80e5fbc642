"""JSON configuration documents for :class:`~sagesim.harness.SimulationConfig`.

A document has five blocks::

    {
      "network":     {"kind": "geometric", "n": 50, "radius": 0.3, "seed": 1,
                      "link_failure_prob": 0.1},
      "measurement": {"homogeneous": {"n_agents": 50, "rows": [[1, 0], [0, 1]]},
                      "theta": [1, 1], "snr_db": -13},
      "attack":      {"strategy": {"kind": "scaled", "factor": -3}, "random_agents": 10},
      "weights":     {"Gamma": 5},
      "run":         {"iterations": 2000, "trials": 100, "seed": 0, "stride": 10}
    }

Network kinds: ``geometric`` (random points in the unit square, redrawn
with the next seed until connected unless ``require_connected`` is false),
``points`` (explicit coordinates plus ``radius``), ``edges`` (``n`` and a
0-based ``edges`` list) and ``edge_list`` (``path`` to a 1-based edge-list
file). Measurement takes either a full ``model`` document (see
:func:`~sagesim.measurement.model_from_dict`) or ``homogeneous`` rows shared
by all agents; noise is ``noise_stddev`` (for the raw rows) or ``snr_db`` (one network-wide
standard deviation from the mean signal power). ``theta`` is a list or
``{"random_integers": {"low", "high", "seed"}}``. Missing weights fall back
to the guideline schedule; ``b`` null means ``1 / lambda_max(L)``.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from .attack import strategy_from_dict
from .estimator import (
    GUIDELINE_A,
    GUIDELINE_TAU1,
    GUIDELINE_TAU2,
    GUIDELINE_TAU_GAMMA,
    WeightSchedule,
)
from .graph import (
    Graph,
    NetworkModel,
    connected_random_geometric,
    geometric_graph,
    laplacian,
    max_laplacian_eigenvalue,
    random_geometric,
    read_edge_list,
)
from .harness import AttackPlan, SimulationConfig
from .measurement import MeasurementModel, model_from_dict, snr_to_stddev

_RUN_KEYS = ("iterations", "trials", "seed", "stride", "estimators", "check_saturation")


def network_from_dict(doc, base_dir=None) -> tuple[NetworkModel, dict]:
    """Return the network model and facts worth recording (e.g. the seed used)."""
    kind = doc.get("kind", "geometric")
    info = {}
    if kind == "geometric":
        n, radius, seed = int(doc["n"]), float(doc["radius"]), int(doc.get("seed", 0))
        if doc.get("require_connected", True):
            g, used = connected_random_geometric(n, radius, seed, int(doc.get("max_tries", 1000)))
            info["graph_seed_used"] = used
        else:
            g = random_geometric(n, radius, seed)
    elif kind == "points":
        g = geometric_graph(np.asarray(doc["points"], dtype=float), float(doc["radius"]))
    elif kind == "edges":
        g = Graph(int(doc["n"]), np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2))
    elif kind == "edge_list":
        path = Path(doc["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        g = read_edge_list(path)
    else:
        raise ValueError(f"unknown network kind {kind!r}")
    return NetworkModel(g, float(doc.get("link_failure_prob", 0.0))), info


def theta_from_spec(spec, m_dim) -> np.ndarray:
    if isinstance(spec, dict):
        r = spec["random_integers"]
        rng = np.random.default_rng(int(r.get("seed", 0)))
        return rng.integers(int(r["low"]), int(r["high"]), size=m_dim, endpoint=True).astype(float)
    return np.asarray(spec, dtype=float).ravel()


def measurement_from_dict(doc) -> tuple[MeasurementModel, np.ndarray, dict]:
    if "model" in doc:
        model = model_from_dict(doc["model"])
    elif "homogeneous" in doc:
        h = doc["homogeneous"]
        rows = np.asarray(h["rows"], dtype=float)
        rows = rows.reshape(-1, rows.shape[-1]) if rows.ndim > 1 else rows[None]
        model = MeasurementModel(rows.shape[1], [rows] * int(h["n_agents"]))
    else:
        raise ValueError("measurement needs a 'model' or 'homogeneous' block")
    theta = theta_from_spec(doc["theta"], model.m_dim)
    info = {}
    if "snr_db" in doc and "noise_stddev" in doc:
        raise ValueError("give snr_db or noise_stddev, not both")
    if "snr_db" in doc:
        sigma = snr_to_stddev(model, theta, float(doc["snr_db"]))
        model = model.with_noise(sigma)
        info["noise_stddev"] = sigma
    elif "noise_stddev" in doc:
        # given for the raw rows, like the per-agent values of a model document
        model = model.with_noise(model.scale * float(doc["noise_stddev"]))
    return model, theta, info


def attack_from_dict(doc) -> AttackPlan:
    if not doc:
        return AttackPlan()
    strategy = strategy_from_dict(doc.get("strategy", {"kind": "none"}))
    return AttackPlan(
        strategy,
        agents=tuple(doc["compromised_agents"]) if "compromised_agents" in doc else None,
        streams=tuple(doc["compromised_streams"]) if "compromised_streams" in doc else None,
        random_agents=doc.get("random_agents"),
        random_streams=doc.get("random_streams"),
    )


def schedule_from_dict(doc, network: NetworkModel) -> WeightSchedule:
    b = doc.get("b")
    if b is None:
        b = 1.0 / max_laplacian_eigenvalue(laplacian(network.base))
    return WeightSchedule(
        a=float(doc.get("a", GUIDELINE_A)),
        tau1=float(doc.get("tau1", GUIDELINE_TAU1)),
        b=float(b),
        tau2=float(doc.get("tau2", GUIDELINE_TAU2)),
        Gamma=float(doc["Gamma"]),
        tau_gamma=float(doc.get("tau_gamma", GUIDELINE_TAU_GAMMA)),
    )


def config_from_dict(doc, base_dir=None, **overrides) -> SimulationConfig:
    """Build a config; keyword ``overrides`` replace fields of the ``run`` block."""
    network, net_info = network_from_dict(doc["network"], base_dir)
    model, theta, meas_info = measurement_from_dict(doc["measurement"])
    run = {k: v for k, v in doc.get("run", {}).items() if k in _RUN_KEYS}
    given = {k: v for k, v in overrides.items() if v is not None}
    run.update(given)
    if "estimators" in run:
        run["estimators"] = tuple(run["estimators"])
    description = copy.deepcopy(doc)
    description.setdefault("run", {}).update(given)
    description["resolved"] = {**net_info, **meas_info}
    return SimulationConfig(
        network=network,
        model=model,
        theta=theta,
        schedule=schedule_from_dict(doc.get("weights", {}), network),
        attack=attack_from_dict(doc.get("attack")),
        description=description,
        **run,
    )


def load_config(path, **overrides) -> SimulationConfig:
    path = Path(path)
    return config_from_dict(json.loads(path.read_text()), base_dir=path.parent, **overrides)
