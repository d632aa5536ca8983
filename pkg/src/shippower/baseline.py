"""Calm-water baseline physics.

Sea trials measure speed/power points at the ballast and laden drafts. Each
condition follows a power law P = c * V**n whose coefficients come from an
ordinary least-squares fit in log-log space. Intermediate drafts are handled
by linear interpolation between the two fitted curves, which keeps the
baseline exact at both trial conditions. The speed derivative of the
baseline is available in closed form and feeds the physics-informed
training targets.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateFitError, DomainError, IngestionError, ModeMismatchError

__all__ = [
    "SeaTrialPoint",
    "PowerCurve",
    "SeaTrialBaseline",
    "fit_power_curve",
    "baseline_power",
    "baseline_power_dV",
    "hybrid_predict",
    "residual_derivative_target",
    "estimate_propeller_coefficient",
    "load_sea_trials",
    "fit_baseline_from_sea_trials",
    "baseline_to_json",
    "baseline_from_json",
    "load_baseline",
    "save_baseline",
]

SEA_TRIAL_HEADER = ["condition", "draft_m", "speed_kn", "power_kw"]


@dataclass(frozen=True)
class SeaTrialPoint:
    """One measured speed/power pair from a sea trial."""

    speed_kn: float
    power_kw: float

    def __post_init__(self):
        if not (self.speed_kn > 0.0):
            raise DomainError(f"sea-trial speed must be > 0, got {self.speed_kn}")
        if not (self.power_kw > 0.0):
            raise DomainError(f"sea-trial power must be > 0, got {self.power_kw}")


@dataclass(frozen=True)
class PowerCurve:
    """Fitted power-law curve P = c * V**n for one draft condition."""

    c: float
    n: float

    def __post_init__(self):
        if not (self.c > 0.0):
            raise DomainError(f"power-law coefficient c must be > 0, got {self.c}")

    def evaluate(self, v_kn):
        """Power in kW at speed ``v_kn``. Accepts scalars or arrays."""
        _require_positive_speed(v_kn)
        return self.c * np.asarray(v_kn, dtype=float) ** self.n

    def derivative(self, v_kn):
        """dP/dV in kW per knot: n * c * V**(n-1)."""
        _require_positive_speed(v_kn)
        return self.n * self.c * np.asarray(v_kn, dtype=float) ** (self.n - 1.0)


@dataclass(frozen=True)
class SeaTrialBaseline:
    """Ballast and laden power curves plus their drafts.

    Immutable; all evaluation methods are pure functions and safe to call
    concurrently.
    """

    ballast_curve: PowerCurve
    laden_curve: PowerCurve
    t_ballast: float
    t_laden: float

    def __post_init__(self):
        if not (self.t_ballast < self.t_laden):
            raise DomainError(
                f"ballast draft ({self.t_ballast} m) must be below laden draft "
                f"({self.t_laden} m)"
            )

    def draft_weight(self, draft_m):
        """Interpolation weight w = (T - T_b) / (T_l - T_b); unclamped."""
        return (np.asarray(draft_m, dtype=float) - self.t_ballast) / (
            self.t_laden - self.t_ballast
        )

    def power(self, v_kn, draft_m):
        return baseline_power(self, v_kn, draft_m)

    def power_dV(self, v_kn, draft_m):
        return baseline_power_dV(self, v_kn, draft_m)


def _require_positive_speed(v_kn):
    v = np.asarray(v_kn, dtype=float)
    if np.any(v <= 0.0):
        raise DomainError("speed must be > 0 kn")


def fit_power_curve(points: list[SeaTrialPoint]) -> PowerCurve:
    """Fit P = c * V**n by ordinary least squares on (ln V, ln P).

    The exponent n is the OLS slope and c = exp(intercept). Requires at
    least two points with distinct speeds; raises DegenerateFitError
    otherwise. Noiseless power-law data is recovered to machine precision.
    """
    if len(points) < 2:
        raise DegenerateFitError("need at least 2 sea-trial points")
    speeds = np.array([p.speed_kn for p in points], dtype=float)
    powers = np.array([p.power_kw for p in points], dtype=float)
    if np.unique(speeds).size < 2:
        raise DegenerateFitError("need at least 2 distinct speeds to fit a power law")

    x = np.log(speeds)
    y = np.log(powers)
    x_mean = x.mean()
    y_mean = y.mean()
    dx = x - x_mean
    slope = float(np.dot(dx, y - y_mean) / np.dot(dx, dx))
    intercept = y_mean - slope * x_mean
    return PowerCurve(c=math.exp(intercept), n=slope)


def baseline_power(b: SeaTrialBaseline, v_kn, draft_m):
    """Calm-water power at (V, T): draft-linear blend of the two curves.

    Returns (1 - w) * P_b(V) + w * P_l(V) with w = (T - T_b) / (T_l - T_b).
    Drafts outside [T_b, T_l] extrapolate linearly. At T = T_b and T = T_l
    the result equals the respective curve exactly.
    """
    _require_positive_speed(v_kn)
    w = b.draft_weight(draft_m)
    return (1.0 - w) * b.ballast_curve.evaluate(v_kn) + w * b.laden_curve.evaluate(v_kn)


def baseline_power_dV(b: SeaTrialBaseline, v_kn, draft_m):
    """Speed derivative of the calm-water baseline, kW per knot."""
    _require_positive_speed(v_kn)
    w = b.draft_weight(draft_m)
    return (1.0 - w) * b.ballast_curve.derivative(v_kn) + w * b.laden_curve.derivative(
        v_kn
    )


def residual_derivative_target(b: SeaTrialBaseline, c_prop: float, v_kn, draft_m):
    """Propeller-law derivative minus the baseline's: the residual model's
    speed-derivative target.

    3 * c_prop * V**2 - d(baseline)/dV. When the baseline itself satisfies
    the propeller law (both curves equal to c_prop * V**3) this vanishes.
    """
    _require_positive_speed(v_kn)
    v = np.asarray(v_kn, dtype=float)
    return 3.0 * c_prop * v**2 - baseline_power_dV(b, v_kn, draft_m)


def estimate_propeller_coefficient(speeds_kn, powers_kw) -> float:
    """Least-squares coefficient of P on V**3: sum(P * V^3) / sum(V^6).

    A single deterministic estimate of the propeller-law constant, fit on
    whatever sample is passed in (normally the training split).
    """
    v = np.asarray(speeds_kn, dtype=float)
    p = np.asarray(powers_kw, dtype=float)
    _require_positive_speed(v)
    if v.size == 0:
        raise DomainError("cannot estimate propeller coefficient from empty data")
    v3 = v**3
    return float(np.dot(p, v3) / np.dot(v3, v3))


def hybrid_predict(b: SeaTrialBaseline, residual, features) -> float:
    """Baseline power plus the residual model's correction, in kW.

    ``residual`` must be a model trained on residual targets (its ``mode``
    is checked); ``features`` is a FeatureVector. The composition is purely
    additive: no clipping or blending.
    """
    if getattr(residual, "mode", None) != "residual":
        raise ModeMismatchError(
            "hybrid prediction requires a residual-mode model, got mode="
            f"{getattr(residual, 'mode', None)!r}"
        )
    base = baseline_power(b, features.stw_kn, features.draft_m)
    return float(base) + float(residual.predict_one(features))


# -- sea-trial file and baseline serialization --------------------------------


def load_sea_trials(path) -> dict[str, tuple[float, list[SeaTrialPoint]]]:
    """Read a sea-trial CSV into {condition: (draft_m, points)}.

    Expected header: condition,draft_m,speed_kn,power_kw with condition in
    {ballast, laden}. The draft must be constant within each condition.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"sea-trial file not found: {path}")
    out: dict[str, tuple[float, list[SeaTrialPoint]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SEA_TRIAL_HEADER:
            raise IngestionError(
                f"bad sea-trial header {header!r}, expected {SEA_TRIAL_HEADER!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise IngestionError(f"row {lineno}: expected 4 fields, got {len(row)}")
            condition = row[0].strip()
            if condition not in ("ballast", "laden"):
                raise IngestionError(
                    f"row {lineno}: column 'condition': unknown value {condition!r}"
                )
            try:
                draft = float(row[1])
                point = SeaTrialPoint(speed_kn=float(row[2]), power_kw=float(row[3]))
            except DomainError as exc:
                raise IngestionError(f"row {lineno}: {exc}") from exc
            except ValueError as exc:
                raise IngestionError(f"row {lineno}: unparsable number: {exc}") from exc
            if condition in out:
                prev_draft, pts = out[condition]
                if prev_draft != draft:
                    raise IngestionError(
                        f"row {lineno}: column 'draft_m': inconsistent draft for "
                        f"{condition} ({draft} vs {prev_draft})"
                    )
                pts.append(point)
            else:
                out[condition] = (draft, [point])
    return out


def fit_baseline_from_sea_trials(path) -> SeaTrialBaseline:
    """Fit both power curves from a sea-trial CSV and assemble the baseline."""
    trials = load_sea_trials(path)
    for condition in ("ballast", "laden"):
        if condition not in trials:
            raise IngestionError(f"sea-trial file has no {condition} rows")
    t_b, ballast_points = trials["ballast"]
    t_l, laden_points = trials["laden"]
    return SeaTrialBaseline(
        ballast_curve=fit_power_curve(ballast_points),
        laden_curve=fit_power_curve(laden_points),
        t_ballast=t_b,
        t_laden=t_l,
    )


def baseline_to_json(b: SeaTrialBaseline) -> str:
    doc = {
        "ballast": {"c": b.ballast_curve.c, "n": b.ballast_curve.n, "draft_m": b.t_ballast},
        "laden": {"c": b.laden_curve.c, "n": b.laden_curve.n, "draft_m": b.t_laden},
    }
    return json.dumps(doc, indent=2) + "\n"


def baseline_from_json(text: str) -> SeaTrialBaseline:
    try:
        doc = json.loads(text)
        ballast = doc["ballast"]
        laden = doc["laden"]
        return SeaTrialBaseline(
            ballast_curve=PowerCurve(c=float(ballast["c"]), n=float(ballast["n"])),
            laden_curve=PowerCurve(c=float(laden["c"]), n=float(laden["n"])),
            t_ballast=float(ballast["draft_m"]),
            t_laden=float(laden["draft_m"]),
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise IngestionError(f"malformed baseline JSON: {exc}") from exc


def save_baseline(b: SeaTrialBaseline, path) -> None:
    Path(path).write_text(baseline_to_json(b))


def load_baseline(path) -> SeaTrialBaseline:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"baseline file not found: {path}")
    return baseline_from_json(path.read_text())
