"""Fast self-checks wiring the numerical core to independent oracles.

Each check recomputes an expected value by a route independent of the code
under test: closed-form algebra, finite differences, or hand-worked small
cases. The command-line ``verify`` subcommand prints one line per check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseline import (
    PowerCurve,
    SeaTrialBaseline,
    SeaTrialPoint,
    baseline_power,
    baseline_power_dV,
    fit_power_curve,
    load_baseline,
    residual_derivative_target,
)
from .dataio import StandardScaler, fit_scaler
from .gbt import GbtConfig, gbt_train
from .neural import (
    MlpConfig,
    init_mlp,
    mlp_forward,
    mlp_grad_params,
    mlp_input_derivative,
)
from .pinn import PinnConfig, total_loss, total_loss_and_grad

__all__ = ["CheckResult", "run_checks", "max_rel_err", "fd_param_gradients"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def max_rel_err(a, b, floor: float = 1e-8) -> float:
    """Largest elementwise |a - b| / max(|a|, |b|, floor)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def fd_param_gradients(loss_fn, params, step: float = 1e-6) -> list[np.ndarray]:
    """Central finite differences of a scalar loss over every parameter."""
    grads = []
    for arr in params.arrays():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn(params)
            flat[i] = orig - step
            down = loss_fn(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * step)
        grads.append(g)
    return grads


def _demo_baseline() -> SeaTrialBaseline:
    return SeaTrialBaseline(
        ballast_curve=PowerCurve(c=1.5, n=3.0),
        laden_curve=PowerCurve(c=2.5, n=3.2),
        t_ballast=5.0,
        t_laden=12.0,
    )


def _check_power_law_fit() -> CheckResult:
    points = [SeaTrialPoint(v, 2.0 * v**3) for v in (8.0, 10.0, 12.0, 14.0)]
    curve = fit_power_curve(points)
    err = max(abs(curve.c - 2.0) / 2.0, abs(curve.n - 3.0) / 3.0)
    return CheckResult("power_law_fit_recovery", err < 1e-9, f"rel err {err:.2e}")


def _check_endpoints(b: SeaTrialBaseline, label: str) -> CheckResult:
    rng = np.random.default_rng(1)
    v = rng.uniform(4.0, 20.0, 200)
    err_b = max_rel_err(baseline_power(b, v, b.t_ballast), b.ballast_curve.evaluate(v))
    err_l = max_rel_err(baseline_power(b, v, b.t_laden), b.laden_curve.evaluate(v))
    err = max(err_b, err_l)
    return CheckResult(label, err < 1e-12, f"rel err {err:.2e}")


def _check_affinity(b: SeaTrialBaseline, label: str) -> CheckResult:
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        v = rng.uniform(4.0, 20.0)
        t0 = rng.uniform(b.t_ballast - 1.0, b.t_laden)
        dt = rng.uniform(0.1, 2.0)
        p = [baseline_power(b, v, t0 + k * dt) for k in range(3)]
        second = p[0] - 2.0 * p[1] + p[2]
        worst = max(worst, abs(second) / max(abs(p[1]), 1.0))
    return CheckResult(label, worst < 1e-9, f"second difference {worst:.2e}")


def _check_propeller_identity() -> CheckResult:
    b = _demo_baseline()
    rng = np.random.default_rng(3)
    v = rng.uniform(4.0, 20.0, 1000)
    t = rng.uniform(b.t_ballast, b.t_laden, 1000)
    c_prop = 2.1
    lhs = residual_derivative_target(b, c_prop, v, t) + baseline_power_dV(b, v, t)
    rhs = 3.0 * c_prop * v**2
    err = max_rel_err(lhs, rhs)
    return CheckResult("propeller_identity", err < 1e-10, f"rel err {err:.2e}")


def _check_mlp_gradient() -> CheckResult:
    cfg = MlpConfig(input_dim=3, hidden_layers=2, neurons_per_layer=5, seed=11)
    params = init_mlp(cfg)
    rng = np.random.default_rng(12)
    x = rng.normal(size=(6, 3))
    y = rng.normal(size=6)
    _, grads = mlp_grad_params(params, x, y)
    fd = fd_param_gradients(lambda p: float(np.mean((mlp_forward(p, x) - y) ** 2)), params)
    err = max(max_rel_err(g, f, floor=1e-4) for g, f in zip(grads, fd))
    return CheckResult("mlp_param_gradient_fd", err < 1e-6, f"rel err {err:.2e}")


def _check_input_derivative() -> CheckResult:
    cfg = MlpConfig(input_dim=4, hidden_layers=2, neurons_per_layer=6, seed=13)
    params = init_mlp(cfg)
    rng = np.random.default_rng(14)
    x = rng.normal(size=4)
    step = 1e-6
    worst = 0.0
    for dim in range(4):
        ad = mlp_input_derivative(params, x, dim)
        xp = x.copy()
        xp[dim] += step
        xm = x.copy()
        xm[dim] -= step
        fd = (mlp_forward(params, xp) - mlp_forward(params, xm)) / (2.0 * step)
        worst = max(worst, max_rel_err(ad, fd, floor=1e-4))
    return CheckResult("mlp_input_derivative_fd", worst < 1e-6, f"rel err {worst:.2e}")


def _check_pinn_gradient() -> CheckResult:
    cfg = MlpConfig(input_dim=5, hidden_layers=2, neurons_per_layer=4, seed=15)
    params = init_mlp(cfg)
    rng = np.random.default_rng(16)
    x_phys = np.column_stack(
        [
            rng.uniform(8.0, 14.0, 4),
            rng.uniform(5.0, 12.0, 4),
            rng.uniform(-1.0, 1.0, 4),
            rng.normal(0.0, 3.0, 4),
            rng.normal(0.0, 3.0, 4),
        ]
    )
    fs = fit_scaler(x_phys)
    y = rng.normal(size=4)
    ts = StandardScaler().fit(rng.normal(size=16))
    b = _demo_baseline()
    pc = PinnConfig(c_prop=0.02, mode="hybrid", lambda_phys=0.5)
    xz = fs.transform(x_phys)
    _, grads, _ = total_loss_and_grad(params, xz, y, pc, b, fs, ts)
    fd = fd_param_gradients(lambda p: total_loss(p, xz, y, pc, b, fs, ts), params)
    err = max(max_rel_err(g, f, floor=1e-3) for g, f in zip(grads, fd))
    return CheckResult("pinn_total_gradient_fd", err < 1e-4, f"rel err {err:.2e}")


def _check_scaler() -> CheckResult:
    rng = np.random.default_rng(17)
    x = rng.normal(5.0, 3.0, size=(50, 4))
    x[:, 2] = 7.5  # constant column passes through
    s = fit_scaler(x)
    z = s.transform(x)
    err_rt = max_rel_err(s.inverse_transform(z), x)
    mean_ok = float(np.max(np.abs(z.mean(axis=0)))) < 1e-10
    nonconst = [0, 1, 3]
    std_ok = float(np.max(np.abs(z[:, nonconst].std(axis=0) - 1.0))) < 1e-10
    ok = err_rt < 1e-12 and mean_ok and std_ok and np.all(z[:, 2] == 0.0)
    return CheckResult("scaler_round_trip", bool(ok), f"round-trip rel err {err_rt:.2e}")


def _check_gbt_hand_example() -> CheckResult:
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0.0, 0.0, 10.0, 10.0])
    plain = gbt_train(
        (x, y), GbtConfig(learning_rate=1.0, max_depth=1, n_estimators=1), mode="pure"
    )
    reg = gbt_train(
        (x, y),
        GbtConfig(learning_rate=1.0, max_depth=1, n_estimators=1, l2_lambda=2.0),
        mode="pure",
    )
    ok = (
        np.array_equal(plain.predict(x), y)
        and np.array_equal(reg.predict(x), np.array([2.5, 2.5, 7.5, 7.5]))
        and plain.trees[0].threshold[0] == 2.5
    )
    leaves = sorted(float(v) for v in plain.trees[0].value[plain.trees[0].feature < 0])
    return CheckResult("gbt_hand_example", bool(ok), f"leaf weights {leaves}")


def run_checks(baseline_path=None) -> list[CheckResult]:
    b = _demo_baseline()
    checks = [
        _check_power_law_fit(),
        _check_endpoints(b, "baseline_endpoint_exactness"),
        _check_affinity(b, "draft_affinity"),
        _check_propeller_identity(),
        _check_mlp_gradient(),
        _check_input_derivative(),
        _check_pinn_gradient(),
        _check_scaler(),
        _check_gbt_hand_example(),
    ]
    if baseline_path is not None:
        try:
            loaded = load_baseline(baseline_path)
            checks.append(_check_endpoints(loaded, "baseline_file_endpoints"))
            checks.append(_check_affinity(loaded, "baseline_file_affinity"))
        except Exception as exc:  # corrupted file is a failed check, not a crash
            checks.append(CheckResult("baseline_file_endpoints", False, str(exc)))
    return checks
