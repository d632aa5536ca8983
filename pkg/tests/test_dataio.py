import math
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shippower.baseline import PowerCurve, SeaTrialBaseline, baseline_power
from shippower.dataio import (
    GeneratorConfig,
    StandardScaler,
    VoyageRecord,
    default_generator_config,
    engineer_features,
    features_matrix,
    fit_scaler,
    generate_synthetic,
    load_csv,
    save_csv,
    split_dataset,
)
from shippower.errors import ConfigError, DomainError, IngestionError, StateError

from conftest import rel_err


def _record(**overrides):
    base = dict(
        t_utc=datetime(2024, 1, 1, tzinfo=timezone.utc),
        power_kw=5000.0,
        stw_kn=12.5,
        draft_m=7.2,
        trim_m=-0.5,
        wind_speed_kn=5.0,
        wind_dir_deg=90.0,
    )
    base.update(overrides)
    return VoyageRecord(**base)


# -- record invariants and feature engineering ----------------------------------


def test_record_rejects_out_of_range_wind_direction():
    with pytest.raises(DomainError):
        _record(wind_dir_deg=370.0)
    with pytest.raises(DomainError):
        _record(wind_dir_deg=-1.0)


def test_record_rejects_nonpositive_speed():
    with pytest.raises(DomainError):
        _record(stw_kn=0.0)


def test_features_head_wind():
    fv = engineer_features(_record(wind_speed_kn=5.0, wind_dir_deg=0.0))
    assert fv.wind_x_kn == 5.0
    assert fv.wind_y_kn == 0.0


def test_features_beam_wind():
    fv = engineer_features(_record(wind_speed_kn=5.0, wind_dir_deg=90.0))
    assert abs(fv.wind_x_kn) < 1e-12 * 5.0
    assert rel_err(fv.wind_y_kn, 5.0) < 1e-12


def test_features_following_wind():
    fv = engineer_features(_record(wind_speed_kn=5.0, wind_dir_deg=180.0))
    assert rel_err(fv.wind_x_kn, -5.0) < 1e-12
    assert abs(fv.wind_y_kn) < 1e-12 * 5.0


@settings(max_examples=100, deadline=None)
@given(
    wts=st.floats(0.0, 60.0),
    wtd=st.floats(0.0, 360.0, exclude_max=True),
)
def test_wind_energy_preserved(wts, wtd):
    fv = engineer_features(_record(wind_speed_kn=wts, wind_dir_deg=wtd))
    assert abs(fv.wind_x_kn**2 + fv.wind_y_kn**2 - wts**2) <= 1e-12 * max(wts**2, 1e-12)


# -- splitting -------------------------------------------------------------------


def _records(n):
    return [
        _record(
            t_utc=datetime(2024, 1, 1, tzinfo=timezone.utc),
            stw_kn=10.0 + (i % 7) * 0.5,
        )
        for i in range(n)
    ]


def test_split_sizes_small():
    split = split_dataset(_records(10), seed=0)
    assert (len(split.train_idx), len(split.val_idx), len(split.test_idx)) == (8, 1, 1)


def test_split_sizes_large():
    split = split_dataset(_records(40000), seed=3)
    sizes = (len(split.train_idx), len(split.val_idx), len(split.test_idx))
    assert sizes == (32000, 4000, 4000)


def test_split_partition_and_determinism():
    records = _records(101)
    s1 = split_dataset(records, seed=9)
    s2 = split_dataset(records, seed=9)
    assert np.array_equal(s1.train_idx, s2.train_idx)
    assert np.array_equal(s1.val_idx, s2.val_idx)
    assert np.array_equal(s1.test_idx, s2.test_idx)
    merged = np.concatenate([s1.train_idx, s1.val_idx, s1.test_idx])
    assert sorted(merged.tolist()) == list(range(101))


def test_split_rejects_bad_fractions():
    with pytest.raises(ConfigError):
        split_dataset(_records(20), fractions=(0.5, 0.2, 0.2), seed=0)


def test_split_rejects_tiny_dataset():
    with pytest.raises(ConfigError):
        split_dataset(_records(9), seed=0)


# -- scaler ----------------------------------------------------------------------


def test_scaler_hand_moments():
    s = fit_scaler(np.array([1.0, 2.0, 3.0]))
    assert s.mean_[0] == 2.0
    assert rel_err(s.scale_[0], math.sqrt(2.0 / 3.0)) < 1e-15  # population std
    assert s.transform(np.array([2.0]))[0] == 0.0


def test_scaler_round_trip():
    rng = np.random.default_rng(21)
    x = rng.normal(3.0, 10.0, size=(40, 5))
    s = fit_scaler(x)
    assert rel_err(s.inverse_transform(s.transform(x)), x) < 1e-12


def test_scaler_training_split_is_standardized():
    rng = np.random.default_rng(22)
    x = rng.uniform(-5.0, 20.0, size=(200, 3))
    z = fit_scaler(x).transform(x)
    assert np.max(np.abs(z.mean(axis=0))) < 1e-10
    assert np.max(np.abs(z.std(axis=0) - 1.0)) < 1e-10


def test_scaler_constant_column_passes_through():
    x = np.column_stack([np.full(10, 4.2), np.arange(10.0)])
    s = fit_scaler(x)
    z = s.transform(x)
    assert np.all(z[:, 0] == 0.0)
    assert rel_err(s.inverse_transform(z), x) < 1e-15


def test_scaler_requires_fit_first():
    with pytest.raises(StateError):
        StandardScaler().transform(np.ones(3))


def test_scaler_serialization_round_trip():
    s = fit_scaler(np.random.default_rng(23).normal(size=(30, 4)))
    s2 = StandardScaler.from_dict(s.to_dict())
    x = np.random.default_rng(24).normal(size=(5, 4))
    assert np.array_equal(s.transform(x), s2.transform(x))


# -- synthetic generator ---------------------------------------------------------


def _calm_config(**overrides):
    cfg = default_generator_config(
        n_records=50,
        a_wind_kw_per_kn2=0.0,
        a_trim_kw_per_m2=0.0,
        a_age_kw_per_day=0.0,
        noise_sigma_kw=0.0,
        sparse_speed_threshold=None,
    )
    return replace(cfg, **overrides)


def test_generator_degenerate_equals_baseline():
    cfg = _calm_config()
    records, components = generate_synthetic(cfg, seed=1)
    for r, c in zip(records, components):
        expected = float(baseline_power(cfg.baseline, r.stw_kn, r.draft_m))
        assert r.power_kw == expected
        assert c.baseline_kw == expected
        assert c.wind_kw == c.trim_kw == c.aging_kw == c.noise_kw == 0.0


def test_generator_deterministic_output(tmp_path):
    cfg = default_generator_config(n_records=80)
    r1, _ = generate_synthetic(cfg, seed=7)
    r2, _ = generate_synthetic(cfg, seed=7)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_csv(r1, p1)
    save_csv(r2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_generator_wind_term_head_wind():
    # 5-kn head wind with coefficient 3 adds exactly 3 * 25 * 1 = 75 kW
    cfg = _calm_config(
        a_wind_kw_per_kn2=3.0,
        wind_speed_range=(5.0, 5.0),
        wind_dir_range=(0.0, 0.0),
    )
    records, _ = generate_synthetic(cfg, seed=2)
    for r in records:
        base = float(baseline_power(cfg.baseline, r.stw_kn, r.draft_m))
        assert rel_err(r.power_kw - base, 75.0) < 1e-12


def test_generator_components_sum_bitwise():
    cfg = default_generator_config(n_records=200)
    records, components = generate_synthetic(cfg, seed=5)
    for r, c in zip(records, components):
        assert c.total() == r.power_kw


def test_generator_sparse_band():
    cfg = default_generator_config(
        n_records=400, sparse_speed_threshold=14.0, sparse_keep_prob=0.0
    )
    records, _ = generate_synthetic(cfg, seed=3)
    assert max(r.stw_kn for r in records) <= 14.0

    cfg_full = replace(cfg, sparse_keep_prob=1.0)
    records_full, _ = generate_synthetic(cfg_full, seed=3)
    assert max(r.stw_kn for r in records_full) > 14.0


def test_generator_rejects_empty_range():
    with pytest.raises(ConfigError):
        default_generator_config(speed_range=(12.0, 8.0))


def test_generator_config_json_round_trip():
    cfg = default_generator_config(n_records=123, sparse_speed_threshold=13.0)
    again = GeneratorConfig.from_dict(cfg.to_dict())
    assert again == cfg


# -- CSV round trip --------------------------------------------------------------


def test_csv_single_row(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text(
        "timestamp_utc,power_kw,stw_kn,draft_m,trim_m,wind_speed_kn,wind_dir_deg\n"
        "2024-01-01T00:00:00Z,5000,12.5,7.2,-0.5,5,90\n"
    )
    records = load_csv(path)
    assert len(records) == 1
    r = records[0]
    assert r.t_utc == datetime(2024, 1, 1, tzinfo=timezone.utc)
    assert (r.power_kw, r.stw_kn, r.draft_m) == (5000.0, 12.5, 7.2)
    assert (r.trim_m, r.wind_speed_kn, r.wind_dir_deg) == (-0.5, 5.0, 90.0)


def test_csv_round_trip_exact(tmp_path):
    records, _ = generate_synthetic(default_generator_config(n_records=100), seed=11)
    path = tmp_path / "data.csv"
    save_csv(records, path)
    again = load_csv(path)
    assert len(again) == 100
    for a, b in zip(records, again):
        assert a.t_utc == b.t_utc  # second resolution
        assert a.power_kw == b.power_kw
        assert a.stw_kn == b.stw_kn
        assert a.draft_m == b.draft_m
        assert a.trim_m == b.trim_m
        assert a.wind_speed_kn == b.wind_speed_kn
        assert a.wind_dir_deg == b.wind_dir_deg


def test_csv_reports_row_and_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "timestamp_utc,power_kw,stw_kn,draft_m,trim_m,wind_speed_kn,wind_dir_deg\n"
        "2024-01-01T00:00:00Z,5000,12.5,7.2,-0.5,5,90\n"
        "2024-01-01T00:05:00Z,5000,12.5,7.2,-0.5,5,370\n"
    )
    with pytest.raises(IngestionError, match="row 3"):
        load_csv(path)


def test_csv_reports_unparsable_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        "timestamp_utc,power_kw,stw_kn,draft_m,trim_m,wind_speed_kn,wind_dir_deg\n"
        "2024-01-01T00:00:00Z,oops,12.5,7.2,-0.5,5,90\n"
    )
    with pytest.raises(IngestionError, match="power_kw"):
        load_csv(path)


def test_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(IngestionError, match="header"):
        load_csv(path)


def test_features_matrix_matches_engineered(tmp_path):
    records, _ = generate_synthetic(default_generator_config(n_records=20), seed=13)
    mat = features_matrix(records)
    assert mat.shape == (20, 5)
    for i, r in enumerate(records):
        assert np.array_equal(mat[i], engineer_features(r).as_array())
