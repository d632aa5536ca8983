"""Command-line entry point.

Subcommands cover the full pipeline: generate synthetic voyage data, fit
the sea-trial baseline, train/evaluate any of the six model variants, run
hyperparameter search, export the extrapolation sweep, and run the fast
verification suite.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error. All outputs land inside --out-dir.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .baseline import fit_baseline_from_sea_trials, load_baseline, save_baseline
from .dataio import (
    GeneratorConfig,
    default_generator_config,
    generate_synthetic,
    load_csv,
    save_components_csv,
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
)
from .harness import (
    PRESETS,
    SEARCH_SPACES,
    ExperimentConfig,
    SweepScenario,
    hpo_log_to_csv,
    metrics_report,
    random_search,
    run_sweep,
    sweep_to_csv,
    train_experiment,
    write_sweep_svg,
)
from .models import load_model, save_model
from .neural import history_to_csv
from .verify import run_checks

USAGE_ERROR = 2
CHECK_FAILURE = 1

GBT_FLAGS = ("learning_rate", "max_depth", "n_estimators", "l1_alpha",
             "l2_lambda", "min_samples_leaf", "base_score")
NET_FLAGS = ("learning_rate", "hidden_layers", "neurons_per_layer")


def _out_path(out_dir: str, name: str) -> Path:
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    p = root / name
    if not p.resolve().is_relative_to(root.resolve()):
        raise ConfigError(f"output name {name!r} escapes the output directory")
    return p


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out-dir", default=".", help="directory for all outputs")

    parser = argparse.ArgumentParser(
        prog="shippower",
        description="Hybrid physics + ML vessel main-engine power prediction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common],
                       help="generate a synthetic voyage dataset")
    p.add_argument("--config", help="generator config JSON (defaults built in)")
    p.add_argument("--n", type=int, help="override the record count")

    p = sub.add_parser("fit-baseline", parents=[common],
                       help="fit calm-water power curves from a sea-trial CSV")
    p.add_argument("--sea-trials", required=True, help="sea-trial CSV path")
    p.add_argument("--out", default="baseline.json")

    p = sub.add_parser("train", parents=[common], help="train one model variant")
    p.add_argument("--data", required=True, help="voyage dataset CSV")
    p.add_argument("--family", choices=["gbt", "nn", "pinn"])
    p.add_argument("--mode", choices=["pure", "hybrid"])
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="published hyperparameter preset")
    p.add_argument("--baseline", help="baseline JSON (required for hybrid mode)")
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lambda-phys", type=float, default=100.0,
                   help="physics-loss weight for the pinn family")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--n-estimators", type=int)
    p.add_argument("--l1-alpha", type=float)
    p.add_argument("--l2-lambda", type=float)
    p.add_argument("--min-samples-leaf", type=int)
    p.add_argument("--base-score", type=float)
    p.add_argument("--hidden-layers", type=int)
    p.add_argument("--neurons-per-layer", type=int)
    p.add_argument("--out", default="model.json")

    p = sub.add_parser("evaluate", parents=[common],
                       help="MAE/RMSE per split for a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="metrics.json")

    p = sub.add_parser("hpo", parents=[common],
                       help="seeded random hyperparameter search")
    p.add_argument("--data", required=True)
    p.add_argument("--family", required=True, choices=["gbt", "nn", "pinn"])
    p.add_argument("--mode", required=True, choices=["pure", "hybrid"])
    p.add_argument("--baseline")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--epochs", type=int, default=1000)

    p = sub.add_parser("sweep", parents=[common],
                       help="power-speed extrapolation sweep for a model pair")
    p.add_argument("--pure", required=True, help="pure-mode model JSON")
    p.add_argument("--hybrid", required=True, help="hybrid-mode model JSON")
    p.add_argument("--baseline", help="baseline JSON (default: the hybrid model's)")
    p.add_argument("--data", required=True)
    p.add_argument("--condition", default="ballast", choices=["ballast", "laden"])
    p.add_argument("--wind-speed", type=float, default=5.0)
    p.add_argument("--trim", type=float, default=0.0)
    p.add_argument("--directions", default="0,90,180",
                   help="comma-separated wind directions in degrees")
    p.add_argument("--speed-start", type=float, default=8.0)
    p.add_argument("--speed-stop", type=float, default=17.0)
    p.add_argument("--speed-step", type=float, default=0.5)

    p = sub.add_parser("verify", parents=[common],
                       help="run the fast oracle checks")
    p.add_argument("--baseline", help="also validate this baseline JSON file")

    return parser


def _cmd_gen_data(args) -> int:
    if args.config is not None:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise ConfigError(f"generator config file not found: {cfg_path}")
        try:
            cfg = GeneratorConfig.from_dict(json.loads(cfg_path.read_text()))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"malformed generator config {cfg_path}: {exc}") from exc
    else:
        cfg = default_generator_config()
    if args.n is not None:
        from dataclasses import replace

        cfg = replace(cfg, n_records=args.n)

    records, components = generate_synthetic(cfg, seed=args.seed)
    split = split_dataset(records, seed=args.seed)

    save_csv(records, _out_path(args.out_dir, "dataset.csv"))
    save_components_csv(components, _out_path(args.out_dir, "components.csv"))
    _out_path(args.out_dir, "split_manifest.json").write_text(
        json.dumps(split.manifest()) + "\n"
    )
    print(f"wrote {len(records)} records to {Path(args.out_dir) / 'dataset.csv'}")
    return 0


def _cmd_fit_baseline(args) -> int:
    b = fit_baseline_from_sea_trials(args.sea_trials)
    out = _out_path(args.out_dir, args.out)
    save_baseline(b, out)
    print(
        f"ballast: c={b.ballast_curve.c:.6g} n={b.ballast_curve.n:.6g} "
        f"(draft {b.t_ballast:g} m)"
    )
    print(
        f"laden:   c={b.laden_curve.c:.6g} n={b.laden_curve.n:.6g} "
        f"(draft {b.t_laden:g} m)"
    )
    print(f"wrote {out}")
    return 0


def _gather_hyperparams(args, family: str) -> dict:
    flags = GBT_FLAGS if family == "gbt" else NET_FLAGS
    out = {}
    for name in flags:
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    return out


def _cmd_train(args) -> int:
    family, mode = args.family, args.mode
    hyper: dict = {}
    if args.preset:
        preset = PRESETS[args.preset]
        if family is not None and family != preset["family"]:
            raise ConfigError(
                f"--family {family} conflicts with preset {args.preset} "
                f"({preset['family']})"
            )
        if mode is not None and mode != preset["mode"]:
            raise ConfigError(
                f"--mode {mode} conflicts with preset {args.preset} ({preset['mode']})"
            )
        family = preset["family"]
        mode = preset["mode"]
        hyper = dict(preset["hyperparams"])
    if family is None or mode is None:
        raise ConfigError("either --preset or both --family and --mode are required")
    hyper.update(_gather_hyperparams(args, family))

    records = load_csv(args.data)
    split = split_dataset(records, seed=args.seed)
    baseline = load_baseline(args.baseline) if args.baseline else None
    if mode == "hybrid" and baseline is None:
        raise ConfigError("hybrid mode requires --baseline")

    cfg = ExperimentConfig(
        family=family,
        mode=mode,
        hyperparams=hyper,
        seed=args.seed,
        epochs=args.epochs,
        lambda_phys=args.lambda_phys,
    )
    result = train_experiment(split, cfg, baseline)
    out = _out_path(args.out_dir, args.out)
    save_model(result.model, out)
    if result.history is not None:
        hist_path = _out_path(args.out_dir, "loss_history.csv")
        hist_path.write_text(history_to_csv(result.history))
        final = result.history[-1]
        print(
            f"epoch {final['epoch']}: train_loss={final['train_loss']:.6g} "
            f"val_loss={final['val_loss']:.6g}"
        )
    if result.c_prop is not None:
        print(f"propeller coefficient estimate: {result.c_prop:.6g}")
    print(f"wrote {out}")
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    records = load_csv(args.data)
    split = split_dataset(records, seed=model.split_seed)
    report = metrics_report(model, split)
    out = _out_path(args.out_dir, args.out)
    out.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    for name, entry in report.to_dict().items():
        print(f"{name}: MAE {entry['mae_kw']:.2f} kW, RMSE {entry['rmse_kw']:.2f} kW")
    print(f"wrote {out}")
    return 0


def _cmd_hpo(args) -> int:
    records = load_csv(args.data)
    split = split_dataset(records, seed=args.seed)
    baseline = load_baseline(args.baseline) if args.baseline else None
    if args.mode == "hybrid" and baseline is None:
        raise ConfigError("hybrid mode requires --baseline")
    x_test, y_test = split.arrays("test")

    def objective(trial_cfg: dict) -> float:
        cfg = ExperimentConfig(
            family=args.family,
            mode=args.mode,
            hyperparams=trial_cfg,
            seed=args.seed,
            epochs=args.epochs,
        )
        model = train_experiment(split, cfg, baseline).model
        return harness.compute_metrics(model, x_test, y_test)["rmse_kw"]

    best, trials = random_search(
        SEARCH_SPACES[args.family], args.trials, args.seed, objective
    )
    _out_path(args.out_dir, "hpo_log.csv").write_text(hpo_log_to_csv(trials))
    best_path = _out_path(args.out_dir, "best_config.json")
    best_path.write_text(json.dumps(best, indent=2) + "\n")
    print(f"best config (test RMSE objective): {best}")
    print(f"wrote {best_path}")
    return 0


def _cmd_sweep(args) -> int:
    pure = load_model(args.pure)
    hybrid = load_model(args.hybrid)
    if args.baseline:
        baseline = load_baseline(args.baseline)
    elif hybrid.baseline is not None:
        baseline = hybrid.baseline
    else:
        raise ConfigError("no baseline: pass --baseline or a hybrid model that embeds one")
    records = load_csv(args.data)
    split = split_dataset(records, seed=pure.split_seed)
    scenario = SweepScenario(
        draft_condition=args.condition,
        wind_speed_kn=args.wind_speed,
        trim_m=args.trim,
        directions_deg=tuple(float(d) for d in args.directions.split(",")),
        speed_start_kn=args.speed_start,
        speed_stop_kn=args.speed_stop,
        speed_step_kn=args.speed_step,
    )
    report = run_sweep(pure, hybrid, baseline, split, scenario)
    csv_path = _out_path(args.out_dir, "sweep.csv")
    csv_path.write_text(sweep_to_csv(report))
    write_sweep_svg(report, _out_path(args.out_dir, "sweep.svg"))
    print(f"wrote {csv_path} and sweep.svg ({len(report.rows)} grid points)")
    return 0


def _cmd_verify(args) -> int:
    checks = run_checks(baseline_path=args.baseline)
    width = max(len(c.name) for c in checks)
    failures = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{c.name:<{width}}  {status}  {c.detail}")
        failures += 0 if c.passed else 1
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return CHECK_FAILURE if failures else 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "fit-baseline": _cmd_fit_baseline,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "hpo": _cmd_hpo,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (
        ConfigError,
        IngestionError,
        DomainError,
        DegenerateFitError,
        ModeMismatchError,
        StateError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
