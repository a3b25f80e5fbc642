"""Preset experiment documents (desk-scale and full-size).

``python -m sagesim.scenarios DIR`` writes each preset to ``DIR/<name>.json``.
Full-size presets reproduce the original problem sizes and take hours.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np


def homogeneous_doc(n=50, radius=0.36, graph_seed=1, snr_db=-13.0, attacked=10, Gamma=5.0,
                    iterations=2000, trials=100, seed=2024, stride=10, b=None) -> dict:
    """Agents with ``H_n = I_2``; attacked agents report ``-3 theta + noise``."""
    return {
        "name": "homogeneous",
        "network": {"kind": "geometric", "n": n, "radius": radius, "seed": graph_seed, "link_failure_prob": 0.1},
        "measurement": {
            "homogeneous": {"n_agents": n, "rows": [[1.0, 0.0], [0.0, 1.0]]},
            "theta": [1.0, 1.0],
            "snr_db": snr_db,
        },
        "attack": {"strategy": {"kind": "scaled", "factor": -3.0}, "random_agents": attacked},
        "weights": {"a": 1.0, "tau1": 0.26, "b": b, "tau2": 0.001, "Gamma": Gamma, "tau_gamma": 0.25},
        "run": {"iterations": iterations, "trials": trials, "seed": seed, "stride": stride},
    }


# Four clusters of co-located agents; each cluster's window covers one quadrant
# of the 10 x 10 grid, so every cell is seen by exactly four agents.
DESK_FIELD_CENTERS = ((2, 2), (7, 2), (2, 7), (7, 7))


def field_doc(grid=10, centers=DESK_FIELD_CENTERS, per_center=4, half_span=2, radius=0.55,
              noise_stddev=10.0, attacked=2, Gamma=25.0, iterations=2000, trials=50, seed=7,
              stride=10, theta_seed=11, b=None, positions=None) -> dict:
    """Selector (window) measurements of a ``grid x grid`` field in ``[0, 255]``;
    attacked agents report 255 on every stream."""
    if positions is None:
        positions = [list(c) for c in centers for _ in range(per_center)]
    agents = [
        {"window": {"grid_w": grid, "grid_h": grid, "half_span": half_span, "position": list(p)},
         "noise_stddev": noise_stddev}
        for p in positions
    ]
    return {
        "name": "field",
        "network": {
            "kind": "points",
            "points": [[p[0] / grid, p[1] / grid] for p in positions],
            "radius": radius,
            "link_failure_prob": 0.1,
        },
        "measurement": {
            "model": {"m_dim": grid * grid, "agents": agents},
            "theta": {"random_integers": {"low": 0, "high": 255, "seed": theta_seed}},
        },
        "attack": {"strategy": {"kind": "constant", "value": 255.0}, "random_agents": attacked},
        "weights": {"a": 1.0, "tau1": 0.26, "b": b, "tau2": 0.001, "Gamma": Gamma, "tau_gamma": 0.25},
        "run": {"iterations": iterations, "trials": trials, "seed": seed, "stride": stride},
    }


def scalar_doc(n=11, radius=0.5, graph_seed=3, sigma=0.5, attacked=5, target=-9.0, Gamma=1.0,
               iterations=20000, trials=20, seed=5, stride=100) -> dict:
    """One scalar stream per agent; the first ``attacked`` agents report the fake value."""
    return {
        "name": "scalar",
        "network": {"kind": "geometric", "n": n, "radius": radius, "seed": graph_seed, "link_failure_prob": 0.1},
        "measurement": {"homogeneous": {"n_agents": n, "rows": [[1.0]]}, "theta": [1.0], "noise_stddev": sigma},
        "attack": {"strategy": {"kind": "fixed_target", "target": [target]}, "compromised_agents": list(range(attacked))},
        "weights": {"Gamma": Gamma},
        "run": {"iterations": iterations, "trials": trials, "seed": seed, "stride": stride},
    }


def consensus_doc(n=50, radius=0.36, graph_seed=1, value=1e3, iterations=10000, trials=20, seed=99,
                  stride=100, Gamma=5.0) -> dict:
    """Every stream reports ``value``. Agent ``n`` measures the single direction
    at angle ``pi n / N``, so agents' innovations differ and agreement is
    produced by the consensus term alone (with identical rows every agent
    would follow the same trajectory and the residual would be zero)."""
    doc = homogeneous_doc(n=n, radius=radius, graph_seed=graph_seed, iterations=iterations, trials=trials,
                          seed=seed, stride=stride, Gamma=Gamma)
    phi = np.pi * np.arange(n) / n
    doc["name"] = "consensus"
    doc["measurement"] = {
        "model": {"m_dim": 2, "agents": [{"rows": [[float(np.cos(a)), float(np.sin(a))]]} for a in phi]},
        "theta": [1.0, 1.0],
        "noise_stddev": 1.0,
    }
    doc["attack"] = {"strategy": {"kind": "constant", "value": value}, "compromised_agents": list(range(n))}
    return doc


def full_homogeneous_doc() -> dict:
    """Original size: 500 agents, 100 attacked, 500 trials."""
    doc = homogeneous_doc(n=500, radius=0.1, attacked=100, iterations=1000, trials=500, b=0.0337)
    doc["name"] = "homogeneous_full"
    return doc


def full_field_doc(layout_seed=3) -> dict:
    """Original size: 100 x 100 grid, 100 randomly placed agents with 45 x 45
    windows, 10 attacked, noise variance 100, Gamma = 100."""
    rng = np.random.default_rng(layout_seed)
    positions = rng.integers(0, 100, size=(100, 2)).tolist()
    doc = field_doc(grid=100, half_span=22, radius=0.2, attacked=10, Gamma=100.0, iterations=1000,
                    trials=500, b=0.0494, positions=positions)
    doc["name"] = "field_full"
    return doc


PRESETS = {
    "homogeneous": homogeneous_doc,
    "field": field_doc,
    "scalar": scalar_doc,
    "consensus": consensus_doc,
    "homogeneous_full": full_homogeneous_doc,
    "field_full": full_field_doc,
}


def write_presets(out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, make in PRESETS.items():
        path = out / f"{name}.json"
        path.write_text(json.dumps(make(), indent=1) + "\n")
        paths.append(path)
    return paths


if __name__ == "__main__":
    for p in write_presets(sys.argv[1] if len(sys.argv) > 1 else "configs"):
        print(p)
