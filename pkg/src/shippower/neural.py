"""Fully-connected network with hand-rolled differentiation.

The engine keeps three differentiation paths, all exact:

* reverse mode over the batch for parameter gradients of data losses;
* forward mode for the derivative of the scalar output with respect to one
  input dimension (a tangent vector rides along with the primal values);
* reverse mode *through* the forward-mode tangent, used when a loss term
  depends on the input derivative itself. The tangent of a tanh layer is
  t_out = (1 - h^2) * (t_in @ W^T), so its backward pass carries a second
  adjoint stream and contributes extra terms through h.

Everything is float64 numpy. Layers are affine + tanh, ending in a linear
scalar output. An identity activation is accepted so tests can build exactly
linear networks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, TrainingDivergedError

__all__ = [
    "MlpConfig",
    "MlpParams",
    "AdamState",
    "init_mlp",
    "init_adam",
    "adam_step",
    "mlp_forward",
    "mlp_forward_with_tangent",
    "mlp_grad_params",
    "mlp_input_derivative",
    "nn_train",
    "mse_loss",
    "params_to_dict",
    "params_from_dict",
]

ACTIVATIONS = ("tanh", "identity")

# Above this many training rows, fall back to minibatches of fixed size.
FULL_BATCH_LIMIT = 5000
MINIBATCH_SIZE = 512


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_layers: int
    neurons_per_layer: int
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigError("input_dim must be >= 1")
        if self.hidden_layers < 1:
            raise ConfigError("hidden_layers must be >= 1")
        if self.neurons_per_layer < 1:
            raise ConfigError("neurons_per_layer must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f"activation must be one of {ACTIVATIONS}, got {self.activation!r}"
            )

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_layers": self.hidden_layers,
            "neurons_per_layer": self.neurons_per_layer,
            "activation": self.activation,
            "seed": self.seed,
        }


@dataclass
class MlpParams:
    """Weight matrices (out x in) and bias vectors, one pair per layer;
    the last layer maps to a single output with no activation."""

    config: MlpConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(
            config=self.config,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(a * a)) for a in self.arrays())))


def init_mlp(config: MlpConfig, rng: np.random.Generator | None = None) -> MlpParams:
    """Glorot-uniform weights, zero biases, from the seeded generator."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    dims = (
        [config.input_dim]
        + [config.neurons_per_layer] * config.hidden_layers
        + [1]
    )
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(config=config, weights=weights, biases=biases)


def _check_input(params: MlpParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != params.config.input_dim:
        raise DomainError(
            f"input dimension mismatch: expected {params.config.input_dim}, "
            f"got {x.shape[1]}"
        )
    return x


def _forward_cache(params: MlpParams, x: np.ndarray, tangent_dim: int | None):
    """Run the network, optionally carrying a tangent in one input dimension.

    Returns (hs, tas, ths, y, ty): post-activation values per layer
    (hs[0] is the input), pre-activation tangents, post-activation tangents,
    and the scalar outputs. Tangent entries are None when not requested.
    """
    act = params.config.activation
    n_hidden = len(params.weights) - 1
    hs = [x]
    tas: list[np.ndarray | None] = [None]
    ths: list[np.ndarray | None] = [None]
    th = None
    if tangent_dim is not None:
        if not (0 <= tangent_dim < params.config.input_dim):
            raise DomainError(f"tangent dimension {tangent_dim} out of range")
        th = np.zeros_like(x)
        th[:, tangent_dim] = 1.0
        ths[0] = th

    h = x
    for k in range(n_hidden):
        w, b = params.weights[k], params.biases[k]
        a = h @ w.T + b
        h = np.tanh(a) if act == "tanh" else a
        hs.append(h)
        if th is not None:
            ta = th @ w.T
            th = (1.0 - h * h) * ta if act == "tanh" else ta
            tas.append(ta)
            ths.append(th)
        else:
            tas.append(None)
            ths.append(None)

    w_out, b_out = params.weights[-1], params.biases[-1]
    y = (h @ w_out.T + b_out)[:, 0]
    ty = (th @ w_out.T)[:, 0] if th is not None else None
    return hs, tas, ths, y, ty


def _zero_grads(params: MlpParams) -> list[np.ndarray]:
    return [np.zeros_like(a) for a in params.arrays()]


def _backward(
    params: MlpParams,
    hs: list[np.ndarray],
    tas: list,
    ths: list,
    dldy: np.ndarray | None,
    dldty: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Accumulate parameter gradients for adjoints on the output (dldy) and
    on the output's input-tangent (dldty).

    The dldty stream is what differentiates a derivative-penalty loss: it
    flows back through the tangent chain and, because the tanh tangent
    factor (1 - h^2) depends on the primal h, it also injects adjoints into
    the primal stream at every layer.
    """
    act = params.config.activation
    n_layers = len(params.weights)
    grads = _zero_grads(params)

    h_last = hs[-1]
    w_out = params.weights[-1]
    gy = dldy[:, None] if dldy is not None else None
    gty = dldty[:, None] if dldty is not None else None

    dw_out = np.zeros_like(w_out)
    db_out = np.zeros_like(params.biases[-1])
    gh = np.zeros_like(h_last)
    gth = None
    if gy is not None:
        dw_out += gy.T @ h_last
        db_out += gy.sum(axis=0)
        gh = gh + gy @ w_out
    if gty is not None:
        th_last = ths[-1]
        dw_out += gty.T @ th_last
        gth = gty @ w_out
    grads[2 * (n_layers - 1)] = dw_out
    grads[2 * (n_layers - 1) + 1] = db_out

    for k in range(n_layers - 2, -1, -1):
        h = hs[k + 1]
        h_prev = hs[k]
        w = params.weights[k]
        if act == "tanh":
            s = 1.0 - h * h
        else:
            s = np.ones_like(h)

        gta = None
        if gth is not None:
            gta = gth * s
            if act == "tanh":
                # tangent factor s = 1 - h^2 pulls the tangent adjoint
                # into the primal stream: d(s)/dh = -2h
                gh = gh + gth * tas[k + 1] * (-2.0 * h)

        ga = gh * s
        dw = ga.T @ h_prev
        db = ga.sum(axis=0)
        gh = ga @ w
        if gta is not None:
            dw += gta.T @ ths[k]
            gth = gta @ w
        grads[2 * k] = dw
        grads[2 * k + 1] = db

    return grads


def mlp_forward(params: MlpParams, x):
    """Scalar network output; accepts a single vector or an (n, d) batch."""
    xb = _check_input(params, x)
    _, _, _, y, _ = _forward_cache(params, xb, tangent_dim=None)
    return float(y[0]) if np.asarray(x).ndim == 1 else y


def mlp_forward_with_tangent(params: MlpParams, x, dim: int):
    """Output and its raw derivative with respect to input dimension ``dim``
    (both in the network's own standardized units)."""
    xb = _check_input(params, x)
    _, _, _, y, ty = _forward_cache(params, xb, tangent_dim=dim)
    if np.asarray(x).ndim == 1:
        return float(y[0]), float(ty[0])
    return y, ty


def mlp_input_derivative(params: MlpParams, x, dim: int, input_scaler=None):
    """d(output)/d(input ``dim``) by forward-mode tangent propagation.

    When the inputs were standardized, pass the feature scaler: the raw
    standardized-space tangent is chain-ruled by 1/sigma_dim so the result
    is per physical unit of that input.
    """
    xb = _check_input(params, x)
    _, _, _, _, ty = _forward_cache(params, xb, tangent_dim=dim)
    if input_scaler is not None:
        ty = ty / input_scaler.scale_[dim]
    return float(ty[0]) if np.asarray(x).ndim == 1 else ty


def mse_loss(params: MlpParams, x, y) -> float:
    """Mean squared error of the network on (x, y)."""
    pred = mlp_forward(params, _check_input(params, x))
    y = np.asarray(y, dtype=float)
    return float(np.mean((pred - y) ** 2))


def mlp_grad_params(params: MlpParams, x, y) -> tuple[float, list[np.ndarray]]:
    """MSE loss and its exact reverse-mode parameter gradients."""
    xb = _check_input(params, x)
    y = np.asarray(y, dtype=float)
    hs, tas, ths, pred, _ = _forward_cache(params, xb, tangent_dim=None)
    resid = pred - y
    loss = float(np.mean(resid**2))
    dldy = 2.0 * resid / y.size
    grads = _backward(params, hs, tas, ths, dldy)
    return loss, grads


# -- Adam ----------------------------------------------------------------------


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None


def init_adam(params: MlpParams, learning_rate: float) -> AdamState:
    arrays = params.arrays()
    return AdamState(
        learning_rate=learning_rate,
        m=[np.zeros_like(a) for a in arrays],
        v=[np.zeros_like(a) for a in arrays],
    )


def adam_step(state: AdamState, params: MlpParams, grads: list[np.ndarray]) -> MlpParams:
    """One bias-corrected Adam update. Mutates ``state`` and ``params`` in
    place and returns ``params``."""
    arrays = params.arrays()
    if len(grads) != len(arrays):
        raise DomainError("gradient list does not match parameter shapes")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for i, (a, g) in enumerate(zip(arrays, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        a -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


# -- training loop -------------------------------------------------------------


def _epoch_batches(n: int, rng: np.random.Generator):
    """Row-index batches for one epoch: the whole set when small, otherwise
    a fresh without-replacement shuffle cut into fixed-size minibatches."""
    if n <= FULL_BATCH_LIMIT:
        yield np.arange(n)
        return
    perm = rng.permutation(n)
    for lo in range(0, n, MINIBATCH_SIZE):
        yield perm[lo : lo + MINIBATCH_SIZE]


def fit_loop(loss_grad_fn, val_loss_fn, config: MlpConfig, learning_rate: float,
             epochs: int, n_train: int):
    """Shared Adam loop for the plain and physics-regularized networks.

    ``loss_grad_fn(params, idx)`` returns (loss, grads, extras); extras are
    scalar components merged into the history row (batch-size weighted).
    Losses are recorded before each update, so epoch 1 reflects the
    initialization.
    """
    rng = np.random.default_rng(config.seed)
    params = init_mlp(config, rng)
    state = init_adam(params, learning_rate)
    history: list[dict] = []
    for epoch in range(1, epochs + 1):
        total = 0.0
        weight = 0
        extras_sum: dict[str, float] = {}
        for idx in _epoch_batches(n_train, rng):
            loss, grads, extras = loss_grad_fn(params, idx)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, params.norm())
            adam_step(state, params, grads)
            total += loss * idx.size
            weight += idx.size
            for key, val in extras.items():
                extras_sum[key] = extras_sum.get(key, 0.0) + val * idx.size
        row = {"epoch": epoch, "train_loss": total / weight}
        for key, val in extras_sum.items():
            row[key] = val / weight
        row["val_loss"] = val_loss_fn(params)
        history.append(row)
    return params, history


def nn_train(train, val, config: MlpConfig, learning_rate: float, epochs: int = 1000):
    """Plain MSE training; returns (params, per-epoch loss history).

    Expects standardized inputs and targets. Runs the fixed number of epochs
    with no scheduling or early stopping; deterministic given the config
    seed.
    """
    x, y = train
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xv, yv = val
    xv = np.asarray(xv, dtype=float)
    yv = np.asarray(yv, dtype=float)

    def loss_grad(params, idx):
        loss, grads = mlp_grad_params(params, x[idx], y[idx])
        return loss, grads, {}

    def val_loss(params):
        return mse_loss(params, xv, yv)

    return fit_loop(loss_grad, val_loss, config, learning_rate, epochs, x.shape[0])


# -- serialization -------------------------------------------------------------


def params_to_dict(params: MlpParams) -> dict:
    return {
        "config": params.config.to_dict(),
        "layers": [
            {
                "out_dim": w.shape[0],
                "in_dim": w.shape[1],
                "weight": w.tolist(),
                "bias": b.tolist(),
            }
            for w, b in zip(params.weights, params.biases)
        ],
    }


def params_from_dict(doc: dict) -> MlpParams:
    config = MlpConfig(**doc["config"])
    weights = [np.asarray(layer["weight"], dtype=float) for layer in doc["layers"]]
    biases = [np.asarray(layer["bias"], dtype=float) for layer in doc["layers"]]
    params = MlpParams(config=config, weights=weights, biases=biases)
    expected = (
        [config.input_dim]
        + [config.neurons_per_layer] * config.hidden_layers
        + [1]
    )
    for k, (w, b) in enumerate(zip(weights, biases)):
        if w.shape != (expected[k + 1], expected[k]) or b.shape != (expected[k + 1],):
            raise DomainError(f"layer {k} shape mismatch in serialized parameters")
    return params


def params_to_json(params: MlpParams) -> str:
    return json.dumps(params_to_dict(params), indent=2) + "\n"


def history_to_csv(history: list[dict]) -> str:
    """Loss history as CSV; columns are epoch, train_loss, any extra
    components, then val_loss."""
    if not history:
        return "epoch,train_loss,val_loss\n"
    keys = list(history[0].keys())
    lines = [",".join(keys)]
    for row in history:
        lines.append(",".join(repr(row[k]) if k != "epoch" else str(row[k]) for k in keys))
    return "\n".join(lines) + "\n"
