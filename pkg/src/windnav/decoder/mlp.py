"""From-scratch MLP for wind-field decoding: ReLU hidden layers, linear
output, mean-squared-error loss with L2 weight regularization, trained
by plain mini-batch gradient descent.

Inputs are scaled to order one: ranges by 1/d_max, winds by 1/10 m/s.
The feature layout is [ranges..., W_up, W_robot]; either wind block can
be excluded for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergenceError
from .dataset import GridSpec, LocalWindField, WindDataset

WIND_SCALE = 10.0  # m/s


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 8192
    lr: float = 1e-3
    weight_decay: float = 0.002  # lambda in the regularized loss
    holdout_frac: float = 0.1
    seed: int = 0


@dataclass
class MlpModel:
    weights: list          # W_l: (n_in, n_out) per layer
    biases: list           # b_l: (n_out,)
    spec: GridSpec
    include_upstream: bool = True
    include_robot: bool = True
    history: dict = field(default_factory=dict)

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def n_params(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_model(spec: GridSpec, hidden=(256, 256, 256), include_upstream=True,
               include_robot=True, seed=0):
    n_in = spec.n_rays + 2 * int(include_upstream) + 2 * int(include_robot)
    n_out = 2 * spec.side * spec.side
    sizes = [n_in, *hidden, n_out]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / a), (a, b)))
        biases.append(np.zeros(b))
    return MlpModel(weights=weights, biases=biases, spec=spec,
                    include_upstream=include_upstream, include_robot=include_robot)


def features(model: MlpModel, ranges, winds):
    """Scaled input features for a batch: (M, n_in)."""
    cols = [np.atleast_2d(ranges) / model.spec.d_max]
    winds = np.atleast_2d(winds)
    if model.include_upstream:
        cols.append(winds[:, 0:2] / WIND_SCALE)
    if model.include_robot:
        cols.append(winds[:, 2:4] / WIND_SCALE)
    return np.hstack(cols)


def _forward_batch(model: MlpModel, x):
    """Returns (output, activations); activations[l] is layer l's input."""
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if l == last else np.maximum(z, 0.0)
        acts.append(h)
    return h, acts


def predict_batch(model: MlpModel, ranges, winds):
    out, _ = _forward_batch(model, features(model, ranges, winds))
    return out


def mlp_forward(model: MlpModel, ranges, w_up, w_robot):
    """Single-example forward pass returning a LocalWindField."""
    ranges = np.asarray(ranges, dtype=float)
    if ranges.shape[-1] != model.spec.n_rays:
        raise ValueError(f"expected {model.spec.n_rays} ranges, got {ranges.shape[-1]}")
    winds = np.concatenate([np.asarray(w_up, float), np.asarray(w_robot, float)])
    out = predict_batch(model, ranges[None, :], winds[None, :])[0]
    return LocalWindField.from_flat(out, model.spec.window, model.spec.delta)


def loss_and_grads(model: MlpModel, x, z, weight_decay):
    """Regularized MSE loss and its exact gradients.

    loss = mean_i ||z_i - out_i||^2 + (lambda/2) * sum(theta^2) over all
    weights and biases.
    """
    m = x.shape[0]
    out, acts = _forward_batch(model, x)
    err = out - z
    data_loss = float(np.sum(err**2)) / m
    reg = sum(float(np.sum(w**2)) for w in model.weights)
    reg += sum(float(np.sum(b**2)) for b in model.biases)
    loss = data_loss + 0.5 * weight_decay * reg

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = 2.0 * err / m
    for l in range(len(model.weights) - 1, -1, -1):
        grads_w[l] = acts[l].T @ delta + weight_decay * model.weights[l]
        grads_b[l] = delta.sum(axis=0) + weight_decay * model.biases[l]
        if l > 0:
            delta = (delta @ model.weights[l].T) * (acts[l] > 0.0)
    return loss, grads_w, grads_b


def evaluate_loss(model: MlpModel, ds: WindDataset, weight_decay=0.0):
    x = features(model, ds.ranges, ds.winds)
    out, _ = _forward_batch(model, x)
    data = float(np.sum((out - ds.targets) ** 2)) / len(ds)
    if weight_decay:
        reg = sum(float(np.sum(w**2)) for w in model.weights)
        reg += sum(float(np.sum(b**2)) for b in model.biases)
        data += 0.5 * weight_decay * reg
    return data


def train(ds: WindDataset, cfg: TrainConfig, hidden=(256, 256, 256),
          include_upstream=True, include_robot=True, holdout: WindDataset = None,
          verbose=False):
    """Mini-batch gradient descent; deterministic per cfg.seed.

    Reports per-epoch train and holdout loss in model.history.  A
    non-finite loss aborts with TrainingDivergenceError carrying the
    last finite checkpoint.
    """
    if len(ds) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    if holdout is None:
        idx = rng.permutation(len(ds))
        n_hold = max(1, int(len(ds) * cfg.holdout_frac))
        holdout = ds.subset(idx[:n_hold])
        ds = ds.subset(idx[n_hold:])

    model = init_model(ds.spec, hidden, include_upstream, include_robot, seed=cfg.seed)
    x_all = features(model, ds.ranges, ds.winds)
    z_all = ds.targets
    m = len(ds)
    history = {"train_loss": [], "holdout_loss": []}
    last_good = None

    for epoch in range(cfg.epochs):
        order = rng.permutation(m)
        epoch_loss = 0.0
        for start in range(0, m, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            loss, gw, gb = loss_and_grads(model, x_all[sel], z_all[sel], cfg.weight_decay)
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"loss became non-finite in epoch {epoch}", checkpoint=last_good
                )
            for l in range(len(model.weights)):
                model.weights[l] -= cfg.lr * gw[l]
                model.biases[l] -= cfg.lr * gb[l]
            epoch_loss += loss * len(sel)
        history["train_loss"].append(epoch_loss / m)
        history["holdout_loss"].append(evaluate_loss(model, holdout))
        last_good = ([w.copy() for w in model.weights], [b.copy() for b in model.biases])
        if verbose:
            print(
                f"epoch {epoch}: train {history['train_loss'][-1]:.5f} "
                f"holdout {history['holdout_loss'][-1]:.5f}"
            )
    model.history = history
    return model


# --- model file ---------------------------------------------------------------


def save_model(model: MlpModel, path):
    arrays = {}
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    meta = np.array(
        [
            len(model.weights),
            model.spec.n_rays,
            model.spec.side,
            model.spec.window,
            model.spec.delta,
            model.spec.d_max,
            int(model.include_upstream),
            int(model.include_robot),
        ],
        dtype=float,
    )
    np.savez(path, meta=meta, **arrays)


def load_model(path):
    data = np.load(path)
    meta = data["meta"]
    n_layers = int(meta[0])
    spec = GridSpec(window=float(meta[3]), delta=float(meta[4]),
                    n_rays=int(meta[1]), d_max=float(meta[5]))
    return MlpModel(
        weights=[data[f"w{i}"] for i in range(n_layers)],
        biases=[data[f"b{i}"] for i in range(n_layers)],
        spec=spec,
        include_upstream=bool(meta[6]),
        include_robot=bool(meta[7]),
    )
