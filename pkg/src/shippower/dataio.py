"""Operational dataset handling.

Voyage records carry one timestamped operational sample each: main-engine
power, speed through water, mean draft, trim, and true wind speed and
direction. Wind is decomposed into longitudinal/transverse components
(Wx, Wy) before modeling, inputs and targets are standardized on the
training split, and the 80/10/10 split is deterministic given a seed.

A synthetic voyage generator stands in for real in-service data: it adds
known wind, trim, and aging effects plus Gaussian noise on top of a
calm-water baseline and logs every ground-truth component so downstream
tests can compare predictions against exact truth.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .baseline import SeaTrialBaseline, baseline_from_json, baseline_power, baseline_to_json
from .errors import ConfigError, DomainError, IngestionError, StateError

__all__ = [
    "VoyageRecord",
    "FeatureVector",
    "StandardScaler",
    "DatasetSplit",
    "GeneratorConfig",
    "GroundTruthComponents",
    "FEATURE_NAMES",
    "V_DIM",
    "T_DIM",
    "load_csv",
    "save_csv",
    "engineer_features",
    "features_matrix",
    "targets",
    "split_dataset",
    "generate_synthetic",
    "fit_scaler",
    "save_components_csv",
    "load_components_csv",
    "default_generator_config",
]

DATASET_HEADER = [
    "timestamp_utc",
    "power_kw",
    "stw_kn",
    "draft_m",
    "trim_m",
    "wind_speed_kn",
    "wind_dir_deg",
]

COMPONENTS_HEADER = [
    "row",
    "baseline_kw",
    "wind_kw",
    "trim_kw",
    "aging_kw",
    "noise_kw",
    "total_kw",
]

# Model input order is fixed: speed, draft, trim, wind components.
FEATURE_NAMES = ["stw_kn", "draft_m", "trim_m", "wind_x_kn", "wind_y_kn"]
V_DIM = 0
T_DIM = 1


@dataclass(frozen=True)
class VoyageRecord:
    """One operational sample."""

    t_utc: datetime
    power_kw: float
    stw_kn: float
    draft_m: float
    trim_m: float
    wind_speed_kn: float
    wind_dir_deg: float

    def __post_init__(self):
        if not (self.stw_kn > 0.0):
            raise DomainError(f"stw_kn must be > 0, got {self.stw_kn}")
        if not (self.power_kw >= 0.0):
            raise DomainError(f"power_kw must be >= 0, got {self.power_kw}")
        if not (self.draft_m > 0.0):
            raise DomainError(f"draft_m must be > 0, got {self.draft_m}")
        if not (self.wind_speed_kn >= 0.0):
            raise DomainError(f"wind_speed_kn must be >= 0, got {self.wind_speed_kn}")
        if not (0.0 <= self.wind_dir_deg < 360.0):
            raise DomainError(
                f"wind_dir_deg must lie in [0, 360), got {self.wind_dir_deg}"
            )


@dataclass(frozen=True)
class FeatureVector:
    """Model inputs for one record: (V, T, trim, Wx, Wy)."""

    stw_kn: float
    draft_m: float
    trim_m: float
    wind_x_kn: float
    wind_y_kn: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.stw_kn, self.draft_m, self.trim_m, self.wind_x_kn, self.wind_y_kn],
            dtype=float,
        )


def engineer_features(r: VoyageRecord) -> FeatureVector:
    """Decompose wind into components: Wx = WTS*cos(WTD), Wy = WTS*sin(WTD).

    The direction is stored in degrees and converted to radians before the
    trigonometry.
    """
    wtd_rad = math.radians(r.wind_dir_deg)
    return FeatureVector(
        stw_kn=r.stw_kn,
        draft_m=r.draft_m,
        trim_m=r.trim_m,
        wind_x_kn=r.wind_speed_kn * math.cos(wtd_rad),
        wind_y_kn=r.wind_speed_kn * math.sin(wtd_rad),
    )


def features_matrix(records: list[VoyageRecord]) -> np.ndarray:
    """Stack engineered features into an (N, 5) array."""
    out = np.empty((len(records), len(FEATURE_NAMES)), dtype=float)
    for i, r in enumerate(records):
        fv = engineer_features(r)
        out[i, 0] = fv.stw_kn
        out[i, 1] = fv.draft_m
        out[i, 2] = fv.trim_m
        out[i, 3] = fv.wind_x_kn
        out[i, 4] = fv.wind_y_kn
    return out


def targets(records: list[VoyageRecord]) -> np.ndarray:
    return np.array([r.power_kw for r in records], dtype=float)


# -- standardization -----------------------------------------------------------


class StandardScaler:
    """Per-dimension standardization z = (x - mean) / std.

    Uses the population standard deviation (divide by N). Dimensions whose
    std is exactly zero pass through unscaled (std treated as 1), so
    constant columns transform to all zeros and round-trip exactly.
    """

    def __init__(self):
        self.mean_ = None
        self.scale_ = None
        self._ndim = None

    def fit(self, x) -> "StandardScaler":
        x = np.asarray(x, dtype=float)
        self._ndim = x.ndim
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] == 0:
            raise DomainError("cannot fit scaler on empty data")
        constant = x.min(axis=0) == x.max(axis=0)
        # a truly constant column keeps its exact value as the mean, so it
        # transforms to exact zeros rather than rounding residue
        self.mean_ = np.where(constant, x[0], x.mean(axis=0))
        std = x.std(axis=0)
        self.scale_ = np.where(constant | (std == 0.0), 1.0, std)
        return self

    def _check_fitted(self):
        if self.mean_ is None:
            raise StateError("scaler used before fit")

    def transform(self, x):
        self._check_fitted()
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1 and self._ndim == 1
        x2 = x[:, None] if x.ndim == 1 else x
        z = (x2 - self.mean_) / self.scale_
        return z[:, 0] if squeeze else z

    def inverse_transform(self, z):
        self._check_fitted()
        z = np.asarray(z, dtype=float)
        squeeze = z.ndim == 1 and self._ndim == 1
        z2 = z[:, None] if z.ndim == 1 else z
        x = z2 * self.scale_ + self.mean_
        return x[:, 0] if squeeze else x

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "mean": self.mean_.tolist(),
            "scale": self.scale_.tolist(),
            "ndim": self._ndim,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StandardScaler":
        s = cls()
        s.mean_ = np.asarray(doc["mean"], dtype=float)
        s.scale_ = np.asarray(doc["scale"], dtype=float)
        s._ndim = int(doc["ndim"])
        return s


def fit_scaler(train) -> StandardScaler:
    """Fit a scaler on the training split only."""
    return StandardScaler().fit(train)


# -- splitting -----------------------------------------------------------------


@dataclass
class DatasetSplit:
    """Deterministic train/validation/test partition of a record list."""

    records: list[VoyageRecord]
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    fractions: tuple[float, float, float]
    seed: int

    def _pairs(self, idx) -> list[tuple[FeatureVector, float]]:
        return [
            (engineer_features(self.records[i]), self.records[i].power_kw) for i in idx
        ]

    @property
    def train(self):
        return self._pairs(self.train_idx)

    @property
    def validation(self):
        return self._pairs(self.val_idx)

    @property
    def test(self):
        return self._pairs(self.test_idx)

    def arrays(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) arrays for 'train', 'validation', or 'test'."""
        idx = {
            "train": self.train_idx,
            "validation": self.val_idx,
            "test": self.test_idx,
        }[which]
        recs = [self.records[i] for i in idx]
        return features_matrix(recs), targets(recs)

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "fractions": list(self.fractions),
            "train": self.train_idx.tolist(),
            "validation": self.val_idx.tolist(),
            "test": self.test_idx.tolist(),
        }


def split_dataset(
    records: list[VoyageRecord],
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Shuffle uniformly with the seeded generator, then cut at the fraction
    boundaries. Every record lands in exactly one split."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    n = len(records)
    if n < 10:
        raise ConfigError(f"need at least 10 records to split, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    i1 = int(round(n * fractions[0]))
    i2 = int(round(n * (fractions[0] + fractions[1])))
    return DatasetSplit(
        records=records,
        train_idx=perm[:i1],
        val_idx=perm[i1:i2],
        test_idx=perm[i2:],
        fractions=tuple(fractions),
        seed=seed,
    )


# -- synthetic generation ------------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for the synthetic voyage generator.

    Power is assembled as baseline + wind + trim + aging + noise, where
      wind  = a_wind * WTS^2 * (1 + cos(WTD)) / 2   (head wind costs most)
      trim  = a_trim * trim^2
      aging = a_age * days elapsed since the first record
      noise ~ N(0, noise_sigma^2)

    Speeds above ``sparse_speed_threshold`` are kept only with probability
    ``sparse_keep_prob``, producing an undersampled high-speed band for
    extrapolation studies. Set the threshold to None to disable.
    """

    baseline: SeaTrialBaseline
    n_records: int = 1000
    speed_range: tuple[float, float] = (8.0, 17.0)
    draft_range: tuple[float, float] | None = None
    trim_range: tuple[float, float] = (-1.5, 1.5)
    wind_speed_range: tuple[float, float] = (0.0, 20.0)
    wind_dir_range: tuple[float, float] = (0.0, 360.0)
    a_wind_kw_per_kn2: float = 3.0
    a_trim_kw_per_m2: float = 40.0
    a_age_kw_per_day: float = 1.0
    noise_sigma_kw: float = 75.0
    sparse_speed_threshold: float | None = 14.0
    sparse_keep_prob: float = 0.05
    start_utc: datetime = field(
        default_factory=lambda: datetime(2024, 1, 1, tzinfo=timezone.utc)
    )
    cadence_s: float = 300.0

    def __post_init__(self):
        if self.n_records < 1:
            raise ConfigError("n_records must be >= 1")
        ranges = {
            "speed_range": self.speed_range,
            "trim_range": self.trim_range,
            "wind_speed_range": self.wind_speed_range,
            "wind_dir_range": self.wind_dir_range,
        }
        if self.draft_range is not None:
            ranges["draft_range"] = self.draft_range
        for name, (lo, hi) in ranges.items():
            if lo > hi:
                raise ConfigError(f"{name} is empty: ({lo}, {hi})")
        if self.speed_range[0] <= 0.0:
            raise ConfigError("speed_range must be strictly positive")
        if self.draft_range is not None and self.draft_range[0] <= 0.0:
            raise ConfigError("draft_range must be strictly positive")
        if self.wind_speed_range[0] < 0.0:
            raise ConfigError("wind_speed_range must be non-negative")
        if not (0.0 <= self.wind_dir_range[0] < 360.0 and self.wind_dir_range[1] <= 360.0):
            raise ConfigError("wind_dir_range must lie within [0, 360)")
        if self.noise_sigma_kw < 0.0:
            raise ConfigError("noise_sigma_kw must be >= 0")
        if self.sparse_speed_threshold is not None and not (
            0.0 <= self.sparse_keep_prob <= 1.0
        ):
            raise ConfigError("sparse_keep_prob must lie in [0, 1]")
        if self.cadence_s <= 0.0:
            raise ConfigError("cadence_s must be > 0")

    def effective_draft_range(self) -> tuple[float, float]:
        if self.draft_range is not None:
            return self.draft_range
        return (self.baseline.t_ballast, self.baseline.t_laden)

    def to_dict(self) -> dict:
        return {
            "baseline": json.loads(baseline_to_json(self.baseline)),
            "n_records": self.n_records,
            "speed_range": list(self.speed_range),
            "draft_range": list(self.draft_range) if self.draft_range else None,
            "trim_range": list(self.trim_range),
            "wind_speed_range": list(self.wind_speed_range),
            "wind_dir_range": list(self.wind_dir_range),
            "a_wind_kw_per_kn2": self.a_wind_kw_per_kn2,
            "a_trim_kw_per_m2": self.a_trim_kw_per_m2,
            "a_age_kw_per_day": self.a_age_kw_per_day,
            "noise_sigma_kw": self.noise_sigma_kw,
            "sparse_speed_threshold": self.sparse_speed_threshold,
            "sparse_keep_prob": self.sparse_keep_prob,
            "start_utc": format_timestamp(self.start_utc),
            "cadence_s": self.cadence_s,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        kwargs = dict(doc)
        kwargs["baseline"] = baseline_from_json(json.dumps(doc["baseline"]))
        for key in ("speed_range", "draft_range", "trim_range", "wind_speed_range",
                    "wind_dir_range"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        if "start_utc" in kwargs:
            kwargs["start_utc"] = parse_timestamp(kwargs["start_utc"])
        return cls(**kwargs)


@dataclass(frozen=True)
class GroundTruthComponents:
    """Exact additive decomposition of one generated power value."""

    baseline_kw: float
    wind_kw: float
    trim_kw: float
    aging_kw: float
    noise_kw: float

    def total(self) -> float:
        # Same summation order the generator uses; bitwise-reproducible.
        return (
            ((self.baseline_kw + self.wind_kw) + self.trim_kw) + self.aging_kw
        ) + self.noise_kw


def generate_synthetic(
    config: GeneratorConfig, seed: int = 0
) -> tuple[list[VoyageRecord], list[GroundTruthComponents]]:
    """Draw a deterministic synthetic voyage dataset.

    Returns the records plus the logged ground-truth components, index
    aligned. Rare draws whose total power would go negative get their noise
    term redrawn so every record satisfies the schema invariants.
    """
    rng = np.random.default_rng(seed)
    n = config.n_records
    b = config.baseline

    v = rng.uniform(*config.speed_range, n)
    if config.sparse_speed_threshold is not None:
        thr = config.sparse_speed_threshold
        keep_u = rng.uniform(0.0, 1.0, n)
        lo = config.speed_range[0]
        v_low = rng.uniform(lo, min(thr, config.speed_range[1]), n)
        drop = (v > thr) & (keep_u >= config.sparse_keep_prob)
        v = np.where(drop, v_low, v)
    draft = rng.uniform(*config.effective_draft_range(), n)
    trim = rng.uniform(*config.trim_range, n)
    wts = rng.uniform(*config.wind_speed_range, n)
    wtd = rng.uniform(*config.wind_dir_range, n)
    noise = rng.normal(0.0, config.noise_sigma_kw, n)

    base_kw = np.asarray(baseline_power(b, v, draft), dtype=float)
    wind_kw = config.a_wind_kw_per_kn2 * wts**2 * (1.0 + np.cos(np.radians(wtd))) / 2.0
    trim_kw = config.a_trim_kw_per_m2 * trim**2
    days = np.arange(n, dtype=float) * (config.cadence_s / 86400.0)
    aging_kw = config.a_age_kw_per_day * days

    records: list[VoyageRecord] = []
    components: list[GroundTruthComponents] = []
    for i in range(n):
        eps = noise[i]
        total = (((base_kw[i] + wind_kw[i]) + trim_kw[i]) + aging_kw[i]) + eps
        retries = 0
        while total < 0.0:
            eps = rng.normal(0.0, config.noise_sigma_kw)
            total = (((base_kw[i] + wind_kw[i]) + trim_kw[i]) + aging_kw[i]) + eps
            retries += 1
            if retries > 100:
                raise ConfigError(
                    "generator cannot produce non-negative power; "
                    "baseline too low for the configured noise level"
                )
        t = config.start_utc + timedelta(seconds=i * config.cadence_s)
        records.append(
            VoyageRecord(
                t_utc=t,
                power_kw=float(total),
                stw_kn=float(v[i]),
                draft_m=float(draft[i]),
                trim_m=float(trim[i]),
                wind_speed_kn=float(wts[i]),
                wind_dir_deg=float(wtd[i]),
            )
        )
        components.append(
            GroundTruthComponents(
                baseline_kw=float(base_kw[i]),
                wind_kw=float(wind_kw[i]),
                trim_kw=float(trim_kw[i]),
                aging_kw=float(aging_kw[i]),
                noise_kw=float(eps),
            )
        )
    return records, components


def default_generator_config(**overrides) -> GeneratorConfig:
    """A plausible handysize-bulker setup used by the command-line tool
    when no generator config file is given."""
    from .baseline import PowerCurve  # local import keeps module top tidy

    base = SeaTrialBaseline(
        ballast_curve=PowerCurve(c=1.8, n=3.05),
        laden_curve=PowerCurve(c=2.6, n=3.1),
        t_ballast=6.5,
        t_laden=12.5,
    )
    cfg = GeneratorConfig(baseline=base)
    return replace(cfg, **overrides) if overrides else cfg


# -- CSV I/O -------------------------------------------------------------------


def format_timestamp(t: datetime) -> str:
    return t.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    t = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if t.tzinfo is None:
        raise ValueError(f"timestamp {text!r} lacks a timezone")
    return t.astimezone(timezone.utc)


def save_csv(records: list[VoyageRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for r in records:
            writer.writerow(
                [
                    format_timestamp(r.t_utc),
                    repr(r.power_kw),
                    repr(r.stw_kn),
                    repr(r.draft_m),
                    repr(r.trim_m),
                    repr(r.wind_speed_kn),
                    repr(r.wind_dir_deg),
                ]
            )


def load_csv(path) -> list[VoyageRecord]:
    """Parse a voyage dataset CSV; rows violating the schema raise an
    IngestionError naming the offending row and column."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"dataset file not found: {path}")
    records: list[VoyageRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DATASET_HEADER:
            raise IngestionError(
                f"bad dataset header {header!r}, expected {DATASET_HEADER!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(DATASET_HEADER):
                raise IngestionError(
                    f"row {lineno}: expected {len(DATASET_HEADER)} fields, "
                    f"got {len(row)}"
                )
            try:
                t = parse_timestamp(row[0])
            except ValueError as exc:
                raise IngestionError(
                    f"row {lineno}: column 'timestamp_utc': {exc}"
                ) from exc
            values = {}
            for col, raw in zip(DATASET_HEADER[1:], row[1:]):
                try:
                    values[col] = float(raw)
                except ValueError as exc:
                    raise IngestionError(
                        f"row {lineno}: column '{col}': unparsable number {raw!r}"
                    ) from exc
            try:
                records.append(VoyageRecord(t_utc=t, **values))
            except DomainError as exc:
                raise IngestionError(f"row {lineno}: {exc}") from exc
    return records


def save_components_csv(components: list[GroundTruthComponents], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPONENTS_HEADER)
        for i, c in enumerate(components):
            writer.writerow(
                [
                    i,
                    repr(c.baseline_kw),
                    repr(c.wind_kw),
                    repr(c.trim_kw),
                    repr(c.aging_kw),
                    repr(c.noise_kw),
                    repr(c.total()),
                ]
            )


def load_components_csv(path) -> list[GroundTruthComponents]:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"components file not found: {path}")
    out: list[GroundTruthComponents] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != COMPONENTS_HEADER:
            raise IngestionError(f"bad components header {header!r}")
        for row in reader:
            if not row:
                continue
            out.append(
                GroundTruthComponents(
                    baseline_kw=float(row[1]),
                    wind_kw=float(row[2]),
                    trim_kw=float(row[3]),
                    aging_kw=float(row[4]),
                    noise_kw=float(row[5]),
                )
            )
    return out
