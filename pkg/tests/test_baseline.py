import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shippower.baseline import (
    PowerCurve,
    SeaTrialBaseline,
    SeaTrialPoint,
    baseline_from_json,
    baseline_power,
    baseline_power_dV,
    baseline_to_json,
    estimate_propeller_coefficient,
    fit_baseline_from_sea_trials,
    fit_power_curve,
    hybrid_predict,
    residual_derivative_target,
)
from shippower.errors import DegenerateFitError, DomainError, IngestionError, ModeMismatchError

from conftest import rel_err


# -- power-law fitting ----------------------------------------------------------


def test_fit_exact_cubic():
    points = [SeaTrialPoint(v, 2.0 * v**3) for v in (8.0, 10.0, 12.0, 14.0)]
    curve = fit_power_curve(points)
    assert abs(curve.c - 2.0) < 1e-9
    assert abs(curve.n - 3.0) < 1e-9


def test_fit_rejects_no_speed_variation():
    points = [SeaTrialPoint(10.0, 1000.0), SeaTrialPoint(10.0, 1000.0)]
    with pytest.raises(DegenerateFitError):
        fit_power_curve(points)


def test_fit_rejects_single_point():
    with pytest.raises(DegenerateFitError):
        fit_power_curve([SeaTrialPoint(10.0, 1000.0)])


def test_fit_rejects_nonpositive_values():
    with pytest.raises(DomainError):
        SeaTrialPoint(-1.0, 100.0)
    with pytest.raises(DomainError):
        SeaTrialPoint(10.0, 0.0)


def test_fit_noisy_powerlaw_matches_independent_ols():
    # P = 0.85 * V^3.2 times exp(eps), eps ~ N(0, 0.01^2), seed 42.
    rng = np.random.default_rng(42)
    speeds = np.array([7.0, 9.0, 11.0, 13.0, 15.0, 17.0])
    eps = rng.normal(0.0, 0.01, speeds.size)
    powers = 0.85 * speeds**3.2 * np.exp(eps)

    # independent oracle: textbook summed-moments OLS with fsum accumulation
    x = [math.log(v) for v in speeds]
    y = [math.log(p) for p in powers]
    n = len(x)
    sx, sy = math.fsum(x), math.fsum(y)
    sxy = math.fsum(xi * yi for xi, yi in zip(x, y))
    sxx = math.fsum(xi * xi for xi in x)
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    c_oracle = math.exp((sy - slope * sx) / n)

    curve = fit_power_curve(
        [SeaTrialPoint(v, p) for v, p in zip(speeds, powers)]
    )
    assert rel_err(curve.n, slope) < 1e-12
    assert rel_err(curve.c, c_oracle) < 1e-12
    # frozen oracle outputs for this seed
    assert rel_err(curve.n, 3.1845607519139056) < 1e-12
    assert rel_err(curve.c, 0.8792749457932972) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    c=st.floats(0.1, 10.0),
    n=st.floats(2.0, 4.0),
)
def test_fit_round_trips_noiseless_curves(c, n):
    speeds = np.array([6.0, 8.5, 10.0, 12.0, 15.5, 18.0])
    points = [SeaTrialPoint(v, c * v**n) for v in speeds]
    curve = fit_power_curve(points)
    assert rel_err(curve.c, c) < 1e-9
    assert rel_err(curve.n, n) < 1e-9


# -- draft interpolation --------------------------------------------------------


def test_power_at_ballast_draft_is_exact(demo_baseline):
    b = demo_baseline
    v = np.array([6.0, 9.0, 14.0, 19.0])
    assert np.array_equal(baseline_power(b, v, b.t_ballast), b.ballast_curve.evaluate(v))
    assert np.array_equal(baseline_power(b, v, b.t_laden), b.laden_curve.evaluate(v))


def test_power_at_midpoint_draft_is_mean(demo_baseline):
    b = demo_baseline
    mid = (b.t_ballast + b.t_laden) / 2.0
    v = 11.0
    expected = (b.ballast_curve.evaluate(v) + b.laden_curve.evaluate(v)) / 2.0
    assert rel_err(baseline_power(b, v, mid), expected) < 1e-15


def test_power_hand_evaluated_interpolation(demo_baseline):
    # w = (8 - 5) / (12 - 5) = 3/7; independent calculator gives 23328/7 kW
    assert rel_err(baseline_power(demo_baseline, 12.0, 8.0), 23328.0 / 7.0) < 1e-14


def test_power_rejects_nonpositive_speed(demo_baseline):
    with pytest.raises(DomainError):
        baseline_power(demo_baseline, 0.0, 8.0)
    with pytest.raises(DomainError):
        baseline_power_dV(demo_baseline, -2.0, 8.0)


def test_draft_order_validated():
    with pytest.raises(DomainError):
        SeaTrialBaseline(PowerCurve(1.0, 3.0), PowerCurve(2.0, 3.0), 12.0, 5.0)


_MIXED = SeaTrialBaseline(PowerCurve(1.8, 3.05), PowerCurve(2.6, 3.1), 6.5, 12.5)


@settings(max_examples=60, deadline=None)
@given(
    v=st.floats(1.0, 25.0),
    t=st.floats(2.0, 16.0),
)
def test_power_is_affine_in_draft(v, t):
    dt = 1.3
    p0 = baseline_power(_MIXED, v, t)
    p1 = baseline_power(_MIXED, v, t + dt)
    p2 = baseline_power(_MIXED, v, t + 2 * dt)
    assert abs(p0 - 2 * p1 + p2) / max(abs(p1), 1.0) < 1e-9


def test_power_monotonic_in_speed(mixed_baseline):
    rng = np.random.default_rng(5)
    v = np.linspace(1.0, 25.0, 400)
    for _ in range(20):
        t = rng.uniform(mixed_baseline.t_ballast, mixed_baseline.t_laden)
        p = np.asarray(baseline_power(mixed_baseline, v, t))
        assert np.all(np.diff(p) > 0.0)


# -- speed derivative -----------------------------------------------------------


def test_derivative_of_identical_curves(demo_baseline):
    b = SeaTrialBaseline(PowerCurve(2.0, 3.0), PowerCurve(2.0, 3.0), 5.0, 12.0)
    for t in (5.0, 8.0, 12.0, 14.0):
        assert rel_err(baseline_power_dV(b, 10.0, t), 3.0 * 2.0 * 100.0) < 1e-12


def test_derivative_hand_evaluated():
    b = SeaTrialBaseline(PowerCurve(1.0, 3.0), PowerCurve(2.0, 3.1), 5.0, 12.0)
    assert rel_err(baseline_power_dV(b, 10.0, 12.0), 2.0 * 3.1 * 10.0**2.1) < 1e-14


def test_derivative_matches_finite_differences(mixed_baseline):
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(200):
        v = rng.uniform(1.0, 24.0)
        t = rng.uniform(4.0, 14.0)
        fd = (
            baseline_power(mixed_baseline, v + h, t)
            - baseline_power(mixed_baseline, v - h, t)
        ) / (2.0 * h)
        assert rel_err(baseline_power_dV(mixed_baseline, v, t), fd) < 1e-6


# -- residual derivative target -------------------------------------------------


def test_residual_target_vanishes_when_baseline_satisfies_propeller_law():
    c = 2.0
    b = SeaTrialBaseline(PowerCurve(c, 3.0), PowerCurve(c, 3.0), 5.0, 12.0)
    v = np.linspace(2.0, 20.0, 50)
    assert np.max(np.abs(residual_derivative_target(b, c, v, 5.0))) < 1e-9


def test_residual_target_hand_evaluated(demo_baseline):
    mid = (demo_baseline.t_ballast + demo_baseline.t_laden) / 2.0
    # dV at the midpoint draft is 600 kW/kn at V = 10; 3*2*100 - 600 = 0
    assert abs(residual_derivative_target(demo_baseline, 2.0, 10.0, mid)) < 1e-10
    # perturbing the coefficient to 2.1 leaves 3*0.1*100 = 30
    assert rel_err(residual_derivative_target(demo_baseline, 2.1, 10.0, mid), 30.0) < 1e-10


def test_residual_target_identity(mixed_baseline):
    rng = np.random.default_rng(11)
    v = rng.uniform(1.0, 25.0, 1000)
    t = rng.uniform(4.0, 15.0, 1000)
    c_prop = 2.3
    lhs = residual_derivative_target(mixed_baseline, c_prop, v, t) + baseline_power_dV(
        mixed_baseline, v, t
    )
    assert rel_err(lhs, 3.0 * c_prop * v**2) < 1e-10


# -- propeller coefficient estimate ---------------------------------------------


def test_propeller_coefficient_recovers_exact_cubic():
    v = np.array([8.0, 10.0, 12.0, 14.0, 16.0])
    assert rel_err(estimate_propeller_coefficient(v, 2.7 * v**3), 2.7) < 1e-12


def test_propeller_coefficient_matches_naive_formula():
    rng = np.random.default_rng(13)
    v = rng.uniform(6.0, 16.0, 100)
    p = 2.0 * v**3 + rng.normal(0.0, 50.0, 100)
    naive = math.fsum(pi * vi**3 for pi, vi in zip(p, v)) / math.fsum(vi**6 for vi in v)
    assert rel_err(estimate_propeller_coefficient(v, p), naive) < 1e-12


# -- hybrid composition ---------------------------------------------------------


class _StubModel:
    def __init__(self, value, mode="residual"):
        self.value = value
        self.mode = mode

    def predict_one(self, fv):
        return self.value


def _fv(v, t):
    from shippower.dataio import FeatureVector

    return FeatureVector(stw_kn=v, draft_m=t, trim_m=0.0, wind_x_kn=0.0, wind_y_kn=0.0)


def test_hybrid_predict_zero_residual(demo_baseline):
    fv = _fv(11.0, 9.0)
    expected = float(baseline_power(demo_baseline, 11.0, 9.0))
    assert hybrid_predict(demo_baseline, _StubModel(0.0), fv) == expected


def test_hybrid_predict_constant_shift(demo_baseline):
    fv = _fv(11.0, 9.0)
    base = float(baseline_power(demo_baseline, 11.0, 9.0))
    assert hybrid_predict(demo_baseline, _StubModel(500.0), fv) == base + 500.0


def test_hybrid_predict_rejects_pure_model(demo_baseline):
    with pytest.raises(ModeMismatchError):
        hybrid_predict(demo_baseline, _StubModel(0.0, mode="pure"), _fv(11.0, 9.0))


# -- serialization and sea-trial ingestion --------------------------------------


def test_baseline_json_round_trip(mixed_baseline):
    text = baseline_to_json(mixed_baseline)
    again = baseline_from_json(text)
    assert again == mixed_baseline
    doc = json.loads(text)
    assert set(doc) == {"ballast", "laden"}
    assert set(doc["ballast"]) == {"c", "n", "draft_m"}


def test_sea_trial_csv_fit(tmp_path):
    path = tmp_path / "trials.csv"
    lines = ["condition,draft_m,speed_kn,power_kw"]
    for v in (8.0, 10.0, 12.0, 14.0):
        lines.append(f"ballast,6.5,{v},{1.5 * v**3}")
        lines.append(f"laden,12.5,{v},{2.5 * v**3.2}")
    path.write_text("\n".join(lines) + "\n")
    b = fit_baseline_from_sea_trials(path)
    assert rel_err(b.ballast_curve.c, 1.5) < 1e-9
    assert rel_err(b.ballast_curve.n, 3.0) < 1e-9
    assert rel_err(b.laden_curve.n, 3.2) < 1e-9
    assert b.t_ballast == 6.5 and b.t_laden == 12.5


def test_sea_trial_csv_rejects_bad_rows(tmp_path):
    path = tmp_path / "trials.csv"
    path.write_text(
        "condition,draft_m,speed_kn,power_kw\n"
        "ballast,6.5,10,2000\n"
        "cruising,6.5,12,3000\n"
    )
    with pytest.raises(IngestionError, match="row 3"):
        fit_baseline_from_sea_trials(path)


def test_sea_trial_csv_requires_both_conditions(tmp_path):
    path = tmp_path / "trials.csv"
    path.write_text(
        "condition,draft_m,speed_kn,power_kw\nballast,6.5,10,2000\nballast,6.5,12,3000\n"
    )
    with pytest.raises(IngestionError, match="laden"):
        fit_baseline_from_sea_trials(path)


def test_power_curve_requires_positive_coefficient():
    with pytest.raises(DomainError):
        PowerCurve(c=-1.0, n=3.0)
