"""Trained-regressor wrapper shared by the boosted-tree and network families.

A RegressorModel bundles the fitted estimator with the feature and target
scalers it was trained under, plus its training mode: a "pure" model predicts
total shaft power directly, a "residual" model predicts the correction on
top of the calm-water baseline (which hybrid models carry along so their
total prediction is self-contained).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import SeaTrialBaseline, baseline_from_json, baseline_power, baseline_to_json
from .dataio import FeatureVector, StandardScaler
from .errors import ConfigError, IngestionError
from .gbt import GbtModel, gbt_from_dict, gbt_predict, gbt_to_dict
from .neural import MlpParams, mlp_forward, params_from_dict, params_to_dict
from .pinn import PinnConfig

__all__ = ["RegressorModel", "save_model", "load_model"]

FAMILIES = ("gbt", "nn", "pinn")


@dataclass
class RegressorModel:
    family: str
    mode: str  # "pure" or "residual"
    feature_scaler: StandardScaler
    target_scaler: StandardScaler
    gbt_model: GbtModel | None = None
    mlp_params: MlpParams | None = None
    pinn_config: PinnConfig | None = None
    baseline: SeaTrialBaseline | None = None  # residual models keep theirs
    split_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.mode not in ("pure", "residual"):
            raise ConfigError(f"unknown model mode {self.mode!r}")
        if self.family == "gbt" and self.gbt_model is None:
            raise ConfigError("gbt family requires a trained tree ensemble")
        if self.family in ("nn", "pinn") and self.mlp_params is None:
            raise ConfigError(f"{self.family} family requires trained parameters")

    def predict(self, x_matrix) -> np.ndarray:
        """Model output in physical units: total kW for pure models,
        residual kW for residual models."""
        x = np.asarray(x_matrix, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        z = self.feature_scaler.transform(x)
        if self.family == "gbt":
            out_std = gbt_predict(self.gbt_model, z)
        else:
            out_std = mlp_forward(self.mlp_params, z)
        out = self.target_scaler.inverse_transform(np.atleast_1d(out_std))
        return float(out[0]) if single else out

    def predict_one(self, fv: FeatureVector) -> float:
        return self.predict(fv.as_array())

    def predict_total(self, x_matrix) -> np.ndarray:
        """Total power prediction in kW; residual models add their baseline."""
        x = np.asarray(x_matrix, dtype=float)
        single = x.ndim == 1
        xb = x[None, :] if single else x
        out = self.predict(xb)
        if self.mode == "residual":
            if self.baseline is None:
                raise ConfigError("residual model is missing its baseline")
            out = np.asarray(
                baseline_power(self.baseline, xb[:, 0], xb[:, 1]), dtype=float
            ) + out
        return float(out[0]) if single else out


def _model_to_dict(m: RegressorModel) -> dict:
    doc = {
        "family": m.family,
        "mode": m.mode,
        "split_seed": m.split_seed,
        "feature_scaler": m.feature_scaler.to_dict(),
        "target_scaler": m.target_scaler.to_dict(),
    }
    if m.family == "gbt":
        doc["gbt"] = gbt_to_dict(m.gbt_model)
    else:
        doc["mlp"] = params_to_dict(m.mlp_params)
    if m.pinn_config is not None:
        doc["pinn"] = m.pinn_config.to_dict()
    if m.baseline is not None:
        doc["baseline"] = json.loads(baseline_to_json(m.baseline))
    return doc


def save_model(m: RegressorModel, path) -> None:
    Path(path).write_text(json.dumps(_model_to_dict(m), indent=2) + "\n")


def load_model(path) -> RegressorModel:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text())
        family = doc["family"]
        model = RegressorModel(
            family=family,
            mode=doc["mode"],
            feature_scaler=StandardScaler.from_dict(doc["feature_scaler"]),
            target_scaler=StandardScaler.from_dict(doc["target_scaler"]),
            gbt_model=gbt_from_dict(doc["gbt"]) if family == "gbt" else None,
            mlp_params=params_from_dict(doc["mlp"]) if family != "gbt" else None,
            pinn_config=PinnConfig(**doc["pinn"]) if "pinn" in doc else None,
            baseline=(
                baseline_from_json(json.dumps(doc["baseline"]))
                if "baseline" in doc
                else None
            ),
            split_seed=int(doc.get("split_seed", 0)),
        )
        return model
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise IngestionError(f"malformed model file {path}: {exc}") from exc
