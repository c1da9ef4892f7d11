"""Desk-scale laboratory for quadrotor inverted ceiling landings.

Planar (x, z, pitch) simulation of a small quadrotor approaching a
ceiling, policy-gradient learning of trigger/flip sensory-motor pairs,
a two-stage landing policy (one-class SVM trigger plus a small action
network), sweep and evaluation tooling, and bench system-identification
utilities for inertia, battery compensation, and motor lag.
"""

__version__ = "0.1.0"

from .dynamics import MotorCommand, QuadParams, QuadState, step_dynamics
from .control import ApproachCondition, ControllerGains, execute_flip, track_trajectory
from .sensing import SensorConfig, SensoryState, sense
from .legs import LEG_DESIGNS, LegConfig, impact_window
from .contact import ContactState, LandingOutcome, Phase, classify_landing, detect_contact
from .reward import RewardBreakdown, RewardConfig, compute_reward
from .ephe import (
    DomainRandomization,
    EpheConfig,
    PolicyParams,
    SearchDistribution,
    ephe_update,
    learn_condition,
    randomize_inertia,
    select_elites,
)
from .ocsvm import OcSvmModel, decision_function, train_ocsvm
from .actionnet import ActionNet, train_action_net
from .policy import (
    LandingRecord,
    Normalizer,
    TrainedPolicy,
    act,
    load_policy,
    run_two_stage,
    save_policy,
    train_action,
    train_trigger,
    train_two_stage,
    trigger_decision,
)
from .rollout import RolloutConfig, RolloutResult, fixed_pair_policy, run_rollout
from .harness import (
    SweepDataset,
    SweepSpec,
    evaluate_policy_grid,
    filter_training_set,
    load_dataset_rows,
    run_sweep,
    save_dataset,
)
from .sysid import (
    BatteryCompParams,
    PendulumSetup,
    compensate_pwm,
    estimate_inertia,
    fit_thrust_voltage,
    fit_time_constant,
)
