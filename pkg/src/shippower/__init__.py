"""Hybrid physics + machine-learning prediction of vessel main-engine power.

The calm-water baseline comes from sea-trial power curves (a power law per
draft condition, linearly interpolated in draft). Data-driven regressors,
either boosted trees or networks, model the full power directly (pure mode)
or only the deviation from the baseline (hybrid mode). A physics-informed
variant additionally penalizes the network's speed derivative away from the
propeller-law slope.
"""

from .baseline import (
    PowerCurve,
    SeaTrialBaseline,
    SeaTrialPoint,
    baseline_power,
    baseline_power_dV,
    estimate_propeller_coefficient,
    fit_baseline_from_sea_trials,
    fit_power_curve,
    hybrid_predict,
    load_baseline,
    residual_derivative_target,
    save_baseline,
)
from .dataio import (
    DatasetSplit,
    FeatureVector,
    GeneratorConfig,
    StandardScaler,
    VoyageRecord,
    default_generator_config,
    engineer_features,
    fit_scaler,
    generate_synthetic,
    load_csv,
    save_csv,
    split_dataset,
)
from .errors import (
    ConfigError,
    DegenerateFitError,
    DomainError,
    IngestionError,
    ModeMismatchError,
    StateError,
    TrainingDivergedError,
)
from .gbt import GbtConfig, GbtModel, gbt_predict, gbt_train
from .harness import (
    ExperimentConfig,
    MetricsReport,
    PRESETS,
    SweepReport,
    SweepScenario,
    compute_metrics,
    metrics_report,
    monotonicity_score,
    random_search,
    run_sweep,
    train_experiment,
)
from .models import RegressorModel, load_model, save_model
from .neural import AdamState, MlpConfig, MlpParams, adam_step, init_adam, init_mlp, \
    mlp_forward, mlp_grad_params, mlp_input_derivative, nn_train
from .pinn import PinnConfig, data_loss, physics_loss, pinn_train, total_loss

__version__ = "0.1.0"
