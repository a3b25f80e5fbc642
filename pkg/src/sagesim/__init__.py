"""Simulator for resilient distributed parameter estimation under measurement attacks.

Agents on a randomly failing communication graph estimate a shared parameter
with a consensus+innovations recursion. SAGE saturates each innovation
component at a decaying threshold; the baseline uses unit gains.
"""

from .attack import (
    AttackScenario,
    ConstantValue,
    CustomTimeSeries,
    FixedTarget,
    NoAttack,
    ScaledParameter,
    apply_attack,
    random_compromised_set,
)
from .config import config_from_dict, load_config
from .estimator import (
    EstimatorState,
    SaturationMonitor,
    WeightSchedule,
    baseline_step,
    consensus_residual,
    recommended_weights,
    sage_step,
    saturating_gain,
)
from .graph import (
    Graph,
    NetworkModel,
    algebraic_connectivity,
    is_connected,
    laplacian,
    random_geometric,
    sample_instance,
)
from .harness import (
    AttackPlan,
    ExperimentResult,
    SimulationConfig,
    TrialResult,
    decay_slope,
    run_experiment,
    run_trial,
    sweep_attack_count,
    sweep_gamma,
)
from .measurement import MeasurementModel, RunningAverage, update_running_average
from .resilience import (
    ResilienceReport,
    check_resilience,
    delta_A,
    grammian,
    is_globally_observable,
    is_sparse_observable,
    max_tolerable_s,
)

__version__ = "0.1.0"
