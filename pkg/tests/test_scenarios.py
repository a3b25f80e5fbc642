import json
from pathlib import Path

import numpy as np
import pytest

import sagesim
from sagesim.config import config_from_dict, load_config
from sagesim.harness import run_experiment
from sagesim.scenarios import PRESETS, full_field_doc, full_homogeneous_doc

CONFIG_DIR = Path(sagesim.__file__).parent / "configs"


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_shipped_config_matches_preset(name):
    shipped = json.loads((CONFIG_DIR / f"{name}.json").read_text())
    assert shipped == json.loads(json.dumps(PRESETS[name]()))
    load_config(CONFIG_DIR / f"{name}.json", iterations=1, trials=1)


def test_full_homogeneous_shape():
    cfg = config_from_dict(full_homogeneous_doc())
    assert cfg.model.n_agents == 500 and cfg.schedule.b == 0.0337 and cfg.schedule.Gamma == 5.0
    assert cfg.attack.random_agents == 100 and cfg.trials == 500


def test_full_field_shape():
    cfg = config_from_dict(full_field_doc())
    m = cfg.model
    assert m.m_dim == 10_000 and m.n_agents == 100 and m.is_selector
    assert m.stream_counts.max() == 45 * 45
    assert np.all((cfg.theta >= 0) & (cfg.theta <= 255))
    assert cfg.schedule.b == 0.0494 and cfg.schedule.Gamma == 100.0


@pytest.mark.slow
@pytest.mark.parametrize("make", [full_homogeneous_doc, full_field_doc])
def test_full_size_smoke(make):
    cfg = config_from_dict(make()).replace(trials=1, iterations=300, stride=100)
    res = run_experiment(cfg)
    assert res.at(300, "sage") < res.at(300, "baseline")
    assert res.saturation_violations == 0
