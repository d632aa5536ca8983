"""Experiment orchestration: training runs, metrics, search, and sweeps.

Six model variants exist (pure/hybrid crossed with GBT, NN, PINN).
Hybrid variants subtract the calm-water baseline from the measured power
and learn only the residual; their total prediction adds the baseline back.
Published hyperparameter presets ship under the names table2-*/table3-*/
table4-* so any variant can be reproduced with one flag.

Hyperparameter search is a seeded uniform random search over the discrete
grids, scored by test-split RMSE. Scoring on the test split mirrors the
original study's selection objective; it leaks test data into model choice
and should not be copied into production workflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baseline import (
    SeaTrialBaseline,
    baseline_power,
    estimate_propeller_coefficient,
)
from .dataio import (
    DatasetSplit,
    StandardScaler,
    V_DIM,
    fit_scaler,
)
from .errors import ConfigError, DomainError, ModeMismatchError
from .gbt import GbtConfig, gbt_train
from .models import RegressorModel
from .neural import MlpConfig, nn_train
from .pinn import DEFAULT_LAMBDA_PHYS, PinnConfig, pinn_train

__all__ = [
    "ExperimentConfig",
    "TrainResult",
    "MetricsReport",
    "SweepScenario",
    "SweepRow",
    "SweepReport",
    "PRESETS",
    "SEARCH_SPACES",
    "train_experiment",
    "compute_metrics",
    "metrics_report",
    "random_search",
    "run_sweep",
    "monotonicity_score",
    "sweep_to_csv",
    "write_sweep_svg",
]

N_FEATURES = 5

# Published tuned hyperparameters, one preset per column of the original
# result tables: table2 = boosted trees, table3 = plain network,
# table4 = physics-informed network.
PRESETS: dict[str, dict] = {
    "table2-baseline": {
        "family": "gbt",
        "mode": "pure",
        "hyperparams": {
            "learning_rate": 0.25,
            "max_depth": 10,
            "n_estimators": 40,
            "l1_alpha": 1.0,
            "l2_lambda": 0.0,
        },
    },
    "table2-hybrid": {
        "family": "gbt",
        "mode": "hybrid",
        "hyperparams": {
            "learning_rate": 0.1,
            "max_depth": 10,
            "n_estimators": 500,
            "l1_alpha": 1.0,
            "l2_lambda": 100.0,
        },
    },
    "table3-baseline": {
        "family": "nn",
        "mode": "pure",
        "hyperparams": {
            "learning_rate": 1e-4,
            "hidden_layers": 6,
            "neurons_per_layer": 256,
        },
    },
    "table3-hybrid": {
        "family": "nn",
        "mode": "hybrid",
        "hyperparams": {
            "learning_rate": 3e-4,
            "hidden_layers": 4,
            "neurons_per_layer": 64,
        },
    },
    "table4-baseline": {
        "family": "pinn",
        "mode": "pure",
        "hyperparams": {
            "learning_rate": 1e-4,
            "hidden_layers": 8,
            "neurons_per_layer": 256,
        },
    },
    "table4-hybrid": {
        "family": "pinn",
        "mode": "hybrid",
        "hyperparams": {
            "learning_rate": 3e-4,
            "hidden_layers": 6,
            "neurons_per_layer": 256,
        },
    },
}

# Discrete search grids for the built-in random search.
SEARCH_SPACES: dict[str, dict[str, list]] = {
    "gbt": {
        "learning_rate": [0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
        "max_depth": list(range(3, 11)),
        "n_estimators": list(range(5, 501)),
        "l1_alpha": [0.0, 1.0, 100.0],
        "l2_lambda": [0.0, 1.0, 100.0],
    },
    "nn": {
        "learning_rate": [1e-2, 1e-3, 3e-4, 1e-4],
        "neurons_per_layer": [64, 128, 256],
        "hidden_layers": [4, 6, 8],
    },
}
SEARCH_SPACES["pinn"] = SEARCH_SPACES["nn"]


@dataclass(frozen=True)
class ExperimentConfig:
    family: str  # gbt | nn | pinn
    mode: str  # pure | hybrid
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0
    epochs: int = 1000
    lambda_phys: float = DEFAULT_LAMBDA_PHYS

    def __post_init__(self):
        if self.family not in ("gbt", "nn", "pinn"):
            raise ConfigError(f"unknown family {self.family!r}")
        if self.mode not in ("pure", "hybrid"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")


@dataclass
class TrainResult:
    model: RegressorModel
    history: list[dict] | None  # None for tree models
    c_prop: float | None  # set for the physics-informed family


def _residualize(y_kw, x, baseline: SeaTrialBaseline):
    """Measured power minus the calm-water baseline, in physical kW."""
    base = np.asarray(baseline_power(baseline, x[:, 0], x[:, 1]), dtype=float)
    return np.asarray(y_kw, dtype=float) - base


def train_experiment(
    split: DatasetSplit,
    config: ExperimentConfig,
    baseline: SeaTrialBaseline | None = None,
) -> TrainResult:
    """Fit one model variant on a prepared dataset split."""
    if config.mode == "hybrid" and baseline is None:
        raise ConfigError("hybrid mode requires a fitted calm-water baseline")

    x_train, y_train = split.arrays("train")
    x_val, y_val = split.arrays("validation")

    if config.mode == "hybrid":
        t_train = _residualize(y_train, x_train, baseline)
        t_val = _residualize(y_val, x_val, baseline)
    else:
        t_train = y_train
        t_val = y_val

    feature_scaler = fit_scaler(x_train)
    target_scaler = fit_scaler(t_train)
    xz = feature_scaler.transform(x_train)
    yz = target_scaler.transform(t_train)
    xvz = feature_scaler.transform(x_val)
    yvz = target_scaler.transform(t_val)

    model_mode = "residual" if config.mode == "hybrid" else "pure"
    hp = dict(config.hyperparams)
    history = None
    c_prop = None
    gbt_model = None
    mlp_params = None
    pinn_cfg = None

    if config.family == "gbt":
        gbt_cfg = GbtConfig(**hp)
        gbt_model = gbt_train((xz, yz), gbt_cfg, seed=config.seed, mode=model_mode)
    else:
        lr = hp.pop("learning_rate", 1e-3)
        mlp_cfg = MlpConfig(
            input_dim=N_FEATURES,
            hidden_layers=int(hp.pop("hidden_layers", 4)),
            neurons_per_layer=int(hp.pop("neurons_per_layer", 64)),
            seed=config.seed,
        )
        if hp:
            raise ConfigError(f"unknown hyperparameters for {config.family}: {sorted(hp)}")
        if config.family == "nn":
            mlp_params, history = nn_train((xz, yz), (xvz, yvz), mlp_cfg, lr, config.epochs)
        else:
            c_prop = estimate_propeller_coefficient(x_train[:, 0], y_train)
            pinn_cfg = PinnConfig(
                c_prop=c_prop, mode=config.mode, lambda_phys=config.lambda_phys
            )
            mlp_params, history = pinn_train(
                (xz, yz),
                (xvz, yvz),
                mlp_cfg,
                pinn_cfg,
                lr,
                config.epochs,
                baseline=baseline,
                feature_scaler=feature_scaler,
                target_scaler=target_scaler,
            )

    model = RegressorModel(
        family=config.family,
        mode=model_mode,
        feature_scaler=feature_scaler,
        target_scaler=target_scaler,
        gbt_model=gbt_model,
        mlp_params=mlp_params,
        pinn_config=pinn_cfg,
        baseline=baseline if config.mode == "hybrid" else None,
        split_seed=split.seed,
    )
    return TrainResult(model=model, history=history, c_prop=c_prop)


# -- metrics -------------------------------------------------------------------


@dataclass
class MetricsReport:
    """MAE/RMSE per split, in kW."""

    per_split: dict[str, dict[str, float]]

    def __post_init__(self):
        for name, entry in self.per_split.items():
            if not (entry["rmse_kw"] >= entry["mae_kw"] >= 0.0):
                raise DomainError(f"inconsistent metrics for split {name}: {entry}")

    def to_dict(self) -> dict:
        return self.per_split


def compute_metrics(model: RegressorModel, x, y_kw) -> dict[str, float]:
    """MAE and RMSE of the model's total-power prediction, physical kW."""
    y_kw = np.asarray(y_kw, dtype=float)
    if y_kw.size == 0:
        raise DomainError("cannot compute metrics on an empty split")
    pred = model.predict_total(x)
    err = pred - y_kw
    return {
        "mae_kw": float(np.mean(np.abs(err))),
        "rmse_kw": float(np.sqrt(np.mean(err**2))),
    }


def metrics_report(model: RegressorModel, split: DatasetSplit) -> MetricsReport:
    per_split = {}
    for name in ("train", "validation", "test"):
        x, y = split.arrays(name)
        per_split[name] = compute_metrics(model, x, y)
    return MetricsReport(per_split=per_split)


# -- hyperparameter search -----------------------------------------------------


def random_search(space: dict[str, list], n_trials: int, seed: int, objective):
    """Seeded uniform random search over a discrete space.

    ``objective(config_dict)`` returns the score to minimize. Returns
    (best_config, trials) where trials is the full log in draw order; ties
    keep the earliest trial.
    """
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    if not space or any(len(v) == 0 for v in space.values()):
        raise ConfigError("search space must have at least one value per parameter")
    rng = np.random.default_rng(seed)
    trials = []
    best = None
    for i in range(n_trials):
        cfg = {k: values[int(rng.integers(len(values)))] for k, values in space.items()}
        score = float(objective(cfg))
        trials.append({"trial": i, "config": cfg, "objective": score})
        if best is None or score < best["objective"]:
            best = trials[-1]
    return best["config"], trials


def hpo_log_to_csv(trials: list[dict]) -> str:
    keys = sorted(trials[0]["config"].keys())
    lines = [",".join(["trial"] + keys + ["objective"])]
    for t in trials:
        cells = [str(t["trial"])] + [repr(t["config"][k]) for k in keys]
        cells.append(repr(t["objective"]))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# -- extrapolation sweep -------------------------------------------------------


@dataclass(frozen=True)
class SweepScenario:
    """Grid definition: one draft, one wind speed, a few wind directions,
    and a dense speed range."""

    draft_condition: str = "ballast"
    wind_speed_kn: float = 5.0
    trim_m: float = 0.0
    directions_deg: tuple[float, ...] = (0.0, 90.0, 180.0)
    speed_start_kn: float = 8.0
    speed_stop_kn: float = 17.0
    speed_step_kn: float = 0.5

    def speeds(self) -> np.ndarray:
        n = int(round((self.speed_stop_kn - self.speed_start_kn) / self.speed_step_kn)) + 1
        return self.speed_start_kn + self.speed_step_kn * np.arange(n)

    def draft(self, baseline: SeaTrialBaseline) -> float:
        if self.draft_condition == "ballast":
            return baseline.t_ballast
        if self.draft_condition == "laden":
            return baseline.t_laden
        raise ConfigError(f"unknown draft condition {self.draft_condition!r}")


@dataclass
class SweepRow:
    direction_deg: float
    speed_kn: float
    baseline_kw: float
    pure_kw: float
    hybrid_kw: float
    nearest_train_dist: float
    nearest_test_dist: float
    # marker coordinates for plotting
    nearest_train_speed_kn: float
    nearest_train_power_kw: float
    nearest_test_speed_kn: float
    nearest_test_power_kw: float


@dataclass
class SweepReport:
    draft_condition: str
    draft_m: float
    wind_speed_kn: float
    trim_m: float
    rows: list[SweepRow]

    def column(self, name: str, direction: float | None = None) -> np.ndarray:
        rows = [
            r for r in self.rows if direction is None or r.direction_deg == direction
        ]
        return np.array([getattr(r, name) for r in rows], dtype=float)

    def directions(self) -> list[float]:
        seen: list[float] = []
        for r in self.rows:
            if r.direction_deg not in seen:
                seen.append(r.direction_deg)
        return seen


def _nearest(z_grid: np.ndarray, z_data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and distance to the closest data row, standardized space."""
    d2 = ((z_grid[:, None, :] - z_data[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, np.sqrt(d2[np.arange(z_grid.shape[0]), idx])


def run_sweep(
    pure_model: RegressorModel,
    hybrid_model: RegressorModel,
    baseline: SeaTrialBaseline,
    split: DatasetSplit,
    scenario: SweepScenario = SweepScenario(),
) -> SweepReport:
    """Predict both models over the (direction, speed) grid and annotate
    each point with its nearest training and test samples."""
    if pure_model.mode != "pure":
        raise ModeMismatchError("sweep needs a pure-mode model in the pure slot")
    if hybrid_model.mode != "residual":
        raise ModeMismatchError("sweep needs a residual-mode model in the hybrid slot")
    draft = scenario.draft(baseline)
    speeds = scenario.speeds()
    if speeds.size < 2:
        raise ConfigError("sweep needs at least 2 speeds")

    x_train, y_train = split.arrays("train")
    x_test, y_test = split.arrays("test")
    scaler = pure_model.feature_scaler
    z_train = scaler.transform(x_train)
    z_test = scaler.transform(x_test)

    rows: list[SweepRow] = []
    for direction in scenario.directions_deg:
        wx = scenario.wind_speed_kn * math.cos(math.radians(direction))
        wy = scenario.wind_speed_kn * math.sin(math.radians(direction))
        grid = np.column_stack(
            [
                speeds,
                np.full_like(speeds, draft),
                np.full_like(speeds, scenario.trim_m),
                np.full_like(speeds, wx),
                np.full_like(speeds, wy),
            ]
        )
        base_kw = np.asarray(baseline_power(baseline, grid[:, 0], grid[:, 1]), dtype=float)
        pure_kw = pure_model.predict(grid)
        resid_kw = hybrid_model.predict(grid)
        hybrid_kw = base_kw + resid_kw

        z_grid = scaler.transform(grid)
        train_idx, train_dist = _nearest(z_grid, z_train)
        test_idx, test_dist = _nearest(z_grid, z_test)

        for j in range(speeds.size):
            rows.append(
                SweepRow(
                    direction_deg=float(direction),
                    speed_kn=float(speeds[j]),
                    baseline_kw=float(base_kw[j]),
                    pure_kw=float(pure_kw[j]),
                    hybrid_kw=float(hybrid_kw[j]),
                    nearest_train_dist=float(train_dist[j]),
                    nearest_test_dist=float(test_dist[j]),
                    nearest_train_speed_kn=float(x_train[train_idx[j], V_DIM]),
                    nearest_train_power_kw=float(y_train[train_idx[j]]),
                    nearest_test_speed_kn=float(x_test[test_idx[j], V_DIM]),
                    nearest_test_power_kw=float(y_test[test_idx[j]]),
                )
            )
    return SweepReport(
        draft_condition=scenario.draft_condition,
        draft_m=float(draft),
        wind_speed_kn=scenario.wind_speed_kn,
        trim_m=scenario.trim_m,
        rows=rows,
    )


def monotonicity_score(
    report: SweepReport, column: str, speed_min: float | None = None,
    speed_max: float | None = None,
) -> float:
    """Fraction of consecutive speed steps (within each direction) where the
    column strictly increases; optionally restricted to a speed band."""
    increases = 0
    pairs = 0
    for direction in report.directions():
        rows = [r for r in report.rows if r.direction_deg == direction]
        rows.sort(key=lambda r: r.speed_kn)
        if speed_min is not None:
            rows = [r for r in rows if r.speed_kn >= speed_min]
        if speed_max is not None:
            rows = [r for r in rows if r.speed_kn <= speed_max]
        values = [getattr(r, column) for r in rows]
        for a, b in zip(values[:-1], values[1:]):
            pairs += 1
            if b > a:
                increases += 1
    if pairs == 0:
        raise DomainError("monotonicity score needs at least 2 speeds per direction")
    return increases / pairs


SWEEP_CSV_HEADER = (
    "direction_deg,speed_kn,baseline_kw,pure_kw,hybrid_kw,"
    "nearest_train_dist,nearest_test_dist"
)


def sweep_to_csv(report: SweepReport) -> str:
    lines = [SWEEP_CSV_HEADER]
    for r in report.rows:
        lines.append(
            ",".join(
                repr(v)
                for v in (
                    r.direction_deg,
                    r.speed_kn,
                    r.baseline_kw,
                    r.pure_kw,
                    r.hybrid_kw,
                    r.nearest_train_dist,
                    r.nearest_test_dist,
                )
            )
        )
    return "\n".join(lines) + "\n"


# -- sweep figure (hand-written SVG, no plotting dependency) --------------------

_PANEL_W = 520
_PANEL_H = 240
_MARGIN_L = 70
_MARGIN_R = 20
_MARGIN_T = 34
_MARGIN_B = 40


def _svg_path(xs, ys) -> str:
    steps = [f"{'M' if i == 0 else 'L'} {x:.2f} {y:.2f}" for i, (x, y) in enumerate(zip(xs, ys))]
    return " ".join(steps)


def write_sweep_svg(report: SweepReport, path) -> None:
    """One panel per wind direction: baseline, pure, and hybrid power-speed
    curves plus nearest train (circles) and test (triangles) samples."""
    directions = report.directions()
    width = _PANEL_W + _MARGIN_L + _MARGIN_R
    height = (_PANEL_H + _MARGIN_T + _MARGIN_B) * len(directions)

    all_powers: list[float] = []
    for r in report.rows:
        all_powers += [r.baseline_kw, r.pure_kw, r.hybrid_kw,
                       r.nearest_train_power_kw, r.nearest_test_power_kw]
    speeds_all = [r.speed_kn for r in report.rows] + [
        r.nearest_train_speed_kn for r in report.rows
    ] + [r.nearest_test_speed_kn for r in report.rows]
    x_lo, x_hi = min(speeds_all), max(speeds_all)
    y_lo, y_hi = min(all_powers), max(all_powers)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo -= y_pad
    y_hi += y_pad

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    for p, direction in enumerate(directions):
        oy = p * (_PANEL_H + _MARGIN_T + _MARGIN_B) + _MARGIN_T

        def sx(v):
            return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * _PANEL_W

        def sy(v, oy=oy):
            return oy + _PANEL_H - (v - y_lo) / (y_hi - y_lo) * _PANEL_H

        rows = sorted(
            (r for r in report.rows if r.direction_deg == direction),
            key=lambda r: r.speed_kn,
        )
        parts.append(
            f'<text x="{_MARGIN_L}" y="{oy - 12}" font-weight="bold">'
            f"wind {report.wind_speed_kn:g} kn from {direction:g} deg, "
            f"{report.draft_condition} draft {report.draft_m:g} m</text>"
        )
        parts.append(
            f'<rect x="{_MARGIN_L}" y="{oy}" width="{_PANEL_W}" height="{_PANEL_H}" '
            'fill="none" stroke="#888"/>'
        )
        # axis ticks
        for k in range(5):
            xv = x_lo + k * (x_hi - x_lo) / 4
            yv = y_lo + k * (y_hi - y_lo) / 4
            parts.append(
                f'<text x="{sx(xv):.1f}" y="{oy + _PANEL_H + 16}" '
                f'text-anchor="middle">{xv:.1f}</text>'
            )
            parts.append(
                f'<text x="{_MARGIN_L - 6}" y="{sy(yv) + 4:.1f}" '
                f'text-anchor="end">{yv:.0f}</text>'
            )
        parts.append(
            f'<text x="{_MARGIN_L + _PANEL_W / 2}" y="{oy + _PANEL_H + 32}" '
            'text-anchor="middle">speed through water [kn]</text>'
        )
        for name, color in (
            ("baseline_kw", "#555555"),
            ("pure_kw", "#d62728"),
            ("hybrid_kw", "#2ca02c"),
        ):
            xs = [sx(r.speed_kn) for r in rows]
            ys = [sy(getattr(r, name)) for r in rows]
            parts.append(
                f'<path d="{_svg_path(xs, ys)}" fill="none" stroke="{color}" '
                'stroke-width="1.6"/>'
            )
        for r in rows:
            parts.append(
                f'<circle cx="{sx(r.nearest_train_speed_kn):.1f}" '
                f'cy="{sy(r.nearest_train_power_kw):.1f}" r="2.4" fill="#1f77b4"/>'
            )
            tx, ty_ = sx(r.nearest_test_speed_kn), sy(r.nearest_test_power_kw)
            parts.append(
                f'<path d="M {tx:.1f} {ty_ - 3.4:.1f} L {tx - 3:.1f} {ty_ + 2.6:.1f} '
                f'L {tx + 3:.1f} {ty_ + 2.6:.1f} Z" fill="#e6b400"/>'
            )
        lx = _MARGIN_L + 8
        for label, color in (
            ("baseline", "#555555"),
            ("pure", "#d62728"),
            ("hybrid", "#2ca02c"),
        ):
            parts.append(
                f'<line x1="{lx}" y1="{oy + 12}" x2="{lx + 18}" y2="{oy + 12}" '
                f'stroke="{color}" stroke-width="1.6"/>'
            )
            parts.append(f'<text x="{lx + 22}" y="{oy + 16}">{label}</text>')
            lx += 90

    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
