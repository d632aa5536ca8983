"""Physics-regularized training objective.

The total loss is data misfit plus a weighted derivative penalty:

    total = data + lambda * physics

Data misfit is the mean squared error in standardized target units. The
physics term penalizes the deviation of the network's speed derivative from
the propeller-law slope 3*c*V^2 (pure mode) or from that slope minus the
calm-water baseline's own derivative (hybrid mode, where the network models
only the residual). The physics term is a *sum* over the batch, not a mean,
so the batch size scales its effective weight; both conventions are kept
exactly as defined.

Derivative comparisons happen in physical units (kW per knot): the
network's standardized derivative is chain-ruled by sigma_P / sigma_V
before being compared with the target.
"""

from __future__ import annotations

import numpy as np

from .baseline import SeaTrialBaseline, residual_derivative_target
from .dataio import StandardScaler, V_DIM, T_DIM
from .errors import ConfigError, DomainError
from .neural import (
    MlpConfig,
    MlpParams,
    _backward,
    _forward_cache,
    fit_loop,
    mlp_grad_params,
    mse_loss,
)

from dataclasses import dataclass

__all__ = [
    "PinnConfig",
    "data_loss",
    "physics_loss",
    "total_loss",
    "total_loss_and_grad",
    "pinn_train",
    "physics_targets",
]

DEFAULT_LAMBDA_PHYS = 100.0


@dataclass(frozen=True)
class PinnConfig:
    c_prop: float
    mode: str = "hybrid"  # "pure" or "hybrid"
    lambda_phys: float = DEFAULT_LAMBDA_PHYS

    def __post_init__(self):
        if self.lambda_phys < 0.0:
            raise ConfigError(f"lambda_phys must be >= 0, got {self.lambda_phys}")
        if not (self.c_prop > 0.0):
            raise ConfigError(f"c_prop must be > 0, got {self.c_prop}")
        if self.mode not in ("pure", "hybrid"):
            raise ConfigError(f"mode must be 'pure' or 'hybrid', got {self.mode!r}")

    def to_dict(self) -> dict:
        return {
            "c_prop": self.c_prop,
            "mode": self.mode,
            "lambda_phys": self.lambda_phys,
        }


def data_loss(params: MlpParams, x_std, y_std) -> float:
    """Mean squared prediction error in standardized target units."""
    x_std = np.asarray(x_std, dtype=float)
    if x_std.size == 0:
        raise DomainError("data loss needs a non-empty batch")
    return mse_loss(params, x_std, y_std)


def physics_targets(
    cfg: PinnConfig,
    v_kn: np.ndarray,
    draft_m: np.ndarray,
    baseline: SeaTrialBaseline | None,
) -> np.ndarray:
    """Per-sample derivative target in kW per knot."""
    if cfg.mode == "pure":
        return 3.0 * cfg.c_prop * v_kn**2
    if baseline is None:
        raise ConfigError("hybrid physics loss requires a calm-water baseline")
    return np.asarray(
        residual_derivative_target(baseline, cfg.c_prop, v_kn, draft_m), dtype=float
    )


def _physical_inputs(x_std: np.ndarray, feature_scaler: StandardScaler):
    phys = feature_scaler.inverse_transform(x_std)
    return phys[:, V_DIM], phys[:, T_DIM]


def physics_loss(
    params: MlpParams,
    x_std,
    cfg: PinnConfig,
    baseline: SeaTrialBaseline | None,
    feature_scaler: StandardScaler,
    target_scaler: StandardScaler,
) -> float:
    """Summed squared derivative mismatch over the batch, physical units."""
    x_std = np.asarray(x_std, dtype=float)
    if x_std.size == 0:
        raise DomainError("physics loss needs a non-empty batch")
    v_kn, draft_m = _physical_inputs(x_std, feature_scaler)
    g = physics_targets(cfg, v_kn, draft_m, baseline)
    _, _, _, _, ty = _forward_cache(params, x_std, tangent_dim=V_DIM)
    scale = float(target_scaler.scale_[0]) / float(feature_scaler.scale_[V_DIM])
    resid = scale * ty - g
    return float(np.sum(resid**2))


def total_loss(
    params: MlpParams,
    x_std,
    y_std,
    cfg: PinnConfig,
    baseline: SeaTrialBaseline | None,
    feature_scaler: StandardScaler,
    target_scaler: StandardScaler,
) -> float:
    """data + lambda * physics; with lambda = 0 this is exactly the data loss."""
    d = data_loss(params, x_std, y_std)
    if cfg.lambda_phys == 0.0:
        return d
    p = physics_loss(params, x_std, cfg, baseline, feature_scaler, target_scaler)
    return d + cfg.lambda_phys * p


def total_loss_and_grad(
    params: MlpParams,
    x_std,
    y_std,
    cfg: PinnConfig,
    baseline: SeaTrialBaseline | None,
    feature_scaler: StandardScaler,
    target_scaler: StandardScaler,
):
    """Total loss, its exact parameter gradients, and the two components.

    One forward pass carries the speed tangent; one backward pass carries
    both the prediction adjoint (data term) and the tangent adjoint
    (physics term).
    """
    x_std = np.asarray(x_std, dtype=float)
    y_std = np.asarray(y_std, dtype=float)
    if x_std.size == 0:
        raise DomainError("loss needs a non-empty batch")

    if cfg.lambda_phys == 0.0:
        loss, grads = mlp_grad_params(params, x_std, y_std)
        return loss, grads, {"data_loss": loss, "physics_loss": 0.0}

    v_kn, draft_m = _physical_inputs(x_std, feature_scaler)
    g = physics_targets(cfg, v_kn, draft_m, baseline)
    hs, tas, ths, pred, ty = _forward_cache(params, x_std, tangent_dim=V_DIM)

    resid_data = pred - y_std
    d_loss = float(np.mean(resid_data**2))
    dldy = 2.0 * resid_data / y_std.size

    scale = float(target_scaler.scale_[0]) / float(feature_scaler.scale_[V_DIM])
    resid_phys = scale * ty - g
    p_loss = float(np.sum(resid_phys**2))
    dldty = cfg.lambda_phys * 2.0 * resid_phys * scale

    grads = _backward(params, hs, tas, ths, dldy, dldty)
    total = d_loss + cfg.lambda_phys * p_loss
    return total, grads, {"data_loss": d_loss, "physics_loss": p_loss}


def pinn_train(
    train,
    val,
    mlp_config: MlpConfig,
    pinn_config: PinnConfig,
    learning_rate: float,
    epochs: int = 1000,
    baseline: SeaTrialBaseline | None = None,
    feature_scaler: StandardScaler | None = None,
    target_scaler: StandardScaler | None = None,
):
    """Adam on the total loss; collocation points are the training batch.

    Returns (params, history) where each history row logs the data and
    physics components separately alongside the total. With lambda_phys = 0
    the run is identical to plain MSE training under the same seed.
    """
    if pinn_config.mode == "hybrid" and baseline is None:
        raise ConfigError("hybrid training requires a calm-water baseline")
    if pinn_config.lambda_phys > 0.0 and (feature_scaler is None or target_scaler is None):
        raise ConfigError("physics loss requires the feature and target scalers")

    x, y = train
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xv, yv = val
    xv = np.asarray(xv, dtype=float)
    yv = np.asarray(yv, dtype=float)

    def loss_grad(params, idx):
        return total_loss_and_grad(
            params, x[idx], y[idx], pinn_config, baseline,
            feature_scaler, target_scaler,
        )

    def val_loss(params):
        return mse_loss(params, xv, yv)

    return fit_loop(loss_grad, val_loss, mlp_config, learning_rate, epochs, x.shape[0])
