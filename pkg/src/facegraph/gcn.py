"""Graph convolutional classifier with hand-rolled backpropagation.

The propagation rule per layer is sigma(A_hat @ H @ W), where A_hat is the
symmetric degree normalization of the binary adjacency with self-loops added
through the identity. A mean-pool readout over nodes feeds an affine softmax
head, trained with cross-entropy, Adam with decoupled weight decay and a
cosine learning-rate schedule.

Everything runs in double precision and is deterministic given the seed: the
same generator drives initialization, epoch shuffling and dropout masks in a
fixed order, so identical configs and data reproduce identical parameter
trajectories bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import (
    CacheMismatchError,
    CheckpointError,
    InvalidInputError,
    NumericError,
)
from .graphs import GraphSample
from .metrics import MetricsReport, compute_metrics, confusion

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "ForwardCache",
    "GcnConfig",
    "GcnModel",
    "Gradients",
    "TrainConfig",
    "adam_step",
    "backward",
    "cross_entropy",
    "evaluate",
    "forward",
    "gcn_layer",
    "graph_embedding",
    "init_adam",
    "init_model",
    "load_checkpoint",
    "lr_schedule",
    "normalize_adjacency",
    "predict",
    "readout",
    "save_checkpoint",
    "train",
]

CHECKPOINT_FORMAT = "facegraph-checkpoint"
CHECKPOINT_VERSION = 1

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    return (x > 0.0).astype(float)


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x):
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return cdf + x * pdf


def _elu(x):
    return np.where(x > 0.0, x, np.expm1(x))


def _elu_grad(x):
    return np.where(x > 0.0, 1.0, np.exp(x))


# name -> (function, derivative w.r.t. the pre-activation)
ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "gelu": (_gelu, _gelu_grad),
    "elu": (_elu, _elu_grad),
}


@dataclass
class GcnConfig:
    """Architecture knobs. Hidden width 256 and dropout 0.2 are the defaults."""

    in_dim: int
    num_classes: int
    hidden_dim: int = 256
    num_layers: int = 2
    activation: str = "relu"
    dropout_rate: float = 0.2

    def __post_init__(self):
        if self.in_dim < 1 or self.num_classes < 1:
            raise InvalidInputError("in_dim and num_classes must be >= 1")
        if self.hidden_dim < 1 or self.num_layers < 1:
            raise InvalidInputError("hidden_dim and num_layers must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise InvalidInputError(
                f"activation must be one of {sorted(ACTIVATIONS)}, got {self.activation!r}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidInputError("dropout_rate must lie in [0, 1)")

    def layer_dims(self) -> list[int]:
        return [self.in_dim] + [self.hidden_dim] * self.num_layers


@dataclass
class GcnModel:
    config: GcnConfig
    layer_weights: list[np.ndarray]   # layer l maps dims[l] -> dims[l + 1]
    readout_weight: np.ndarray        # num_classes x dims[-1]
    readout_bias: np.ndarray          # num_classes


@dataclass
class TrainConfig:
    """Optimizer, schedule and regularization settings."""

    epochs: int
    batch_size: int = 16
    lr_init: float = 1e-3
    lr_min: float = 1e-4
    weight_decay: float = 5e-4
    seed: int = 1000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidInputError("epochs must be >= 0")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if self.lr_init <= 0.0 or self.lr_min <= 0.0 or self.lr_min > self.lr_init:
            raise InvalidInputError("need 0 < lr_min <= lr_init")
        if self.weight_decay < 0.0:
            raise InvalidInputError("weight_decay must be >= 0")


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization of the adjacency with self-loops added.

    Degrees come from the self-looped adjacency, so they are at least 1 and
    isolated nodes are safe. The outer-product form keeps the result exactly
    symmetric for symmetric input.
    """
    adj = np.asarray(adjacency, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise InvalidInputError("adjacency must be square")
    with_loops = adj + np.eye(adj.shape[0])
    inv_sqrt_degree = 1.0 / np.sqrt(with_loops.sum(axis=1))
    return with_loops * np.outer(inv_sqrt_degree, inv_sqrt_degree)


def gcn_layer(norm_adj: np.ndarray, node_feats: np.ndarray, weight: np.ndarray,
              activation: str) -> np.ndarray:
    """One propagation step: sigma(A_hat @ H @ W)."""
    a_hat = np.asarray(norm_adj, dtype=float)
    h = np.asarray(node_feats, dtype=float)
    w = np.asarray(weight, dtype=float)
    if a_hat.shape[1] != h.shape[0] or h.shape[1] != w.shape[0]:
        raise InvalidInputError(
            f"dimension mismatch: A_hat {a_hat.shape}, H {h.shape}, W {w.shape}"
        )
    act, _ = ACTIVATIONS[activation]
    return act(a_hat @ h @ w)


def readout(node_feats: np.ndarray) -> np.ndarray:
    """Graph-level vector: column-wise mean over nodes (permutation invariant)."""
    h = np.asarray(node_feats, dtype=float)
    if h.ndim != 2 or h.shape[0] < 1:
        raise InvalidInputError("readout needs a nonempty 2-D node feature matrix")
    return h.mean(axis=0)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(config: GcnConfig, rng_or_seed) -> GcnModel:
    """Glorot-uniform initialized model; biases start at zero."""
    rng = (rng_or_seed if isinstance(rng_or_seed, np.random.Generator)
           else np.random.default_rng(rng_or_seed))
    dims = config.layer_dims()
    layer_weights = [_glorot(rng, dims[l], dims[l + 1])
                     for l in range(config.num_layers)]
    readout_weight = _glorot(rng, config.num_classes, dims[-1])
    readout_bias = np.zeros(config.num_classes)
    return GcnModel(config=config, layer_weights=layer_weights,
                    readout_weight=readout_weight, readout_bias=readout_bias)


@dataclass
class ForwardCache:
    """Intermediate values one backward pass needs, tied to the exact parameters."""

    layer_weights: list[np.ndarray]
    readout_weight: np.ndarray
    readout_bias: np.ndarray
    norm_adj: np.ndarray
    aggregated: list[np.ndarray]     # A_hat @ H per layer
    preactivations: list[np.ndarray]
    dropout_masks: list
    embedding: np.ndarray
    probabilities: np.ndarray


def forward(model: GcnModel, sample: GraphSample, mode: str = "eval",
            rng: np.random.Generator | None = None,
            norm_adj: np.ndarray | None = None):
    """Class probabilities for one graph, plus the cache for backprop.

    In train mode, inverted dropout is applied to every hidden activation
    except the final layer's, drawing masks from ``rng``; eval mode is fully
    deterministic. Pass ``norm_adj`` to reuse a precomputed normalization.
    """
    if mode not in ("train", "eval"):
        raise InvalidInputError(f"mode must be 'train' or 'eval', got {mode!r}")
    config = model.config
    h = np.asarray(sample.features, dtype=float)
    if h.ndim != 2 or h.shape[1] != config.in_dim:
        raise InvalidInputError(
            f"sample features have shape {h.shape}, model expects N x {config.in_dim}"
        )
    use_dropout = mode == "train" and config.dropout_rate > 0.0
    if use_dropout and rng is None:
        raise InvalidInputError("train-mode forward with dropout needs an rng")
    a_hat = normalize_adjacency(sample.adjacency) if norm_adj is None else norm_adj

    act, _ = ACTIVATIONS[config.activation]
    aggregated = []
    preactivations = []
    masks = []
    keep = 1.0 - config.dropout_rate
    for layer, weight in enumerate(model.layer_weights):
        m = a_hat @ h
        z = m @ weight
        h = act(z)
        if use_dropout and layer < config.num_layers - 1:
            mask = (rng.random(h.shape) < keep) / keep
            h = h * mask
        else:
            mask = None
        aggregated.append(m)
        preactivations.append(z)
        masks.append(mask)

    embedding = h.mean(axis=0)
    logits = model.readout_weight @ embedding + model.readout_bias
    probabilities = _softmax(logits)
    cache = ForwardCache(
        layer_weights=list(model.layer_weights),
        readout_weight=model.readout_weight,
        readout_bias=model.readout_bias,
        norm_adj=a_hat,
        aggregated=aggregated,
        preactivations=preactivations,
        dropout_masks=masks,
        embedding=embedding,
        probabilities=probabilities,
    )
    return probabilities, cache


def cross_entropy(labels_onehot: np.ndarray, probabilities: np.ndarray) -> float:
    """Mean negative log-likelihood; probabilities clamped to [1e-12, 1]."""
    y = np.asarray(labels_onehot, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    if y.shape != p.shape or y.ndim != 2:
        raise InvalidInputError(
            f"label matrix {y.shape} and prediction matrix {p.shape} must match"
        )
    clamped = np.clip(p, 1e-12, 1.0)
    return float(-np.mean(np.sum(y * np.log(clamped), axis=1)))


@dataclass
class Gradients:
    layer_weights: list[np.ndarray]
    readout_weight: np.ndarray
    readout_bias: np.ndarray


def backward(model: GcnModel, cache: ForwardCache,
             logit_grad: np.ndarray) -> Gradients:
    """Analytic gradients of all parameters given the loss gradient at the logits.

    For softmax plus cross-entropy that upstream gradient is simply
    probabilities minus the one-hot label (scaled by the batch weighting).
    Dropout masks recorded in the cache are reused exactly. The cache must
    come from a forward pass against the very same parameter arrays;
    :func:`adam_step` replaces arrays, so a stale cache is detected.
    """
    same = (len(cache.layer_weights) == len(model.layer_weights)
            and all(c is m for c, m in zip(cache.layer_weights, model.layer_weights))
            and cache.readout_weight is model.readout_weight
            and cache.readout_bias is model.readout_bias)
    if not same:
        raise CacheMismatchError(
            "forward cache does not match the model's current parameters"
        )
    dlogits = np.asarray(logit_grad, dtype=float)
    grad_readout_weight = np.outer(dlogits, cache.embedding)
    grad_readout_bias = dlogits.copy()

    n_nodes = cache.norm_adj.shape[0]
    d_embedding = model.readout_weight.T @ dlogits
    dh = np.repeat((d_embedding / n_nodes)[None, :], n_nodes, axis=0)

    _, act_grad = ACTIVATIONS[model.config.activation]
    grads = [None] * len(model.layer_weights)
    for layer in range(len(model.layer_weights) - 1, -1, -1):
        mask = cache.dropout_masks[layer]
        if mask is not None:
            dh = dh * mask
        dz = dh * act_grad(cache.preactivations[layer])
        grads[layer] = cache.aggregated[layer].T @ dz
        if layer > 0:
            dh = cache.norm_adj.T @ (dz @ model.layer_weights[layer].T)
    return Gradients(layer_weights=grads, readout_weight=grad_readout_weight,
                     readout_bias=grad_readout_bias)


@dataclass
class AdamState:
    step: int
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: list[np.ndarray], beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(step=0,
                     first_moment=[np.zeros_like(p) for p in params],
                     second_moment=[np.zeros_like(p) for p in params],
                     beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState,
              lr: float, weight_decay: float):
    """One bias-corrected Adam update with decoupled weight decay.

    Decay shrinks the parameters by lr * weight_decay before the moment-based
    update, so it never enters the Adam moments. Returns fresh arrays; the
    inputs are left untouched.
    """
    if len(params) != len(grads):
        raise InvalidInputError("params and grads must be parallel lists")
    t = state.step + 1
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    new_params = []
    new_m = []
    new_v = []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if weight_decay != 0.0:
            p = p * (1.0 - lr * weight_decay)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        update = (m / bias1) / (np.sqrt(v / bias2) + state.eps)
        new_params.append(p - lr * update)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(step=t, first_moment=new_m, second_moment=new_v,
                                 beta1=state.beta1, beta2=state.beta2, eps=state.eps)


def lr_schedule(epoch: int, total_epochs: int, config: TrainConfig) -> float:
    """Cosine annealing from lr_init at epoch 0 down to lr_min at the last epoch."""
    if not 0 <= epoch < total_epochs:
        raise InvalidInputError(f"epoch {epoch} outside [0, {total_epochs})")
    if total_epochs == 1:
        return config.lr_init
    span = config.lr_init - config.lr_min
    return config.lr_min + 0.5 * span * (1.0 + math.cos(math.pi * epoch / (total_epochs - 1)))


def _model_params(model: GcnModel) -> list[np.ndarray]:
    return [*model.layer_weights, model.readout_weight, model.readout_bias]


def _set_model_params(model: GcnModel, params: list[np.ndarray]) -> None:
    n_layers = model.config.num_layers
    model.layer_weights = list(params[:n_layers])
    model.readout_weight = params[n_layers]
    model.readout_bias = params[n_layers + 1]


def _flat_grads(g: Gradients) -> list[np.ndarray]:
    return [*g.layer_weights, g.readout_weight, g.readout_bias]


def train(dataset: list[GraphSample], model_config: GcnConfig,
          train_config: TrainConfig):
    """Mini-batch training loop; returns the model and the per-epoch history.

    Every epoch shuffles with the seeded generator, walks the batches in
    order, accumulates per-sample gradients sequentially and applies one Adam
    step per batch at the scheduled learning rate. The batch loss is the mean
    cross-entropy over the batch. History rows report the mean loss and
    accuracy over the samples as seen during the epoch (dropout active).
    """
    if not dataset:
        raise InvalidInputError("training dataset is empty")
    num_classes = model_config.num_classes
    for k, sample in enumerate(dataset):
        if sample.features.shape[1] != model_config.in_dim:
            raise InvalidInputError(
                f"sample {k} has feature dim {sample.features.shape[1]}, "
                f"model expects {model_config.in_dim}"
            )
        if not 0 <= sample.label < num_classes:
            raise InvalidInputError(
                f"sample {k} has label {sample.label}, outside [0, {num_classes})"
            )

    rng = np.random.default_rng(train_config.seed)
    model = init_model(model_config, rng)
    norm_adjs = [normalize_adjacency(s.adjacency) for s in dataset]
    onehots = np.eye(num_classes)[[s.label for s in dataset]]
    state = init_adam(_model_params(model), train_config.adam_beta1,
                      train_config.adam_beta2, train_config.adam_eps)

    n = len(dataset)
    history = []
    for epoch in range(train_config.epochs):
        lr = lr_schedule(epoch, train_config.epochs, train_config)
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, train_config.batch_size):
            batch = order[start:start + train_config.batch_size]
            scale = 1.0 / len(batch)
            grad_total = [np.zeros_like(p) for p in _model_params(model)]
            for idx in batch:
                probs, cache = forward(model, dataset[idx], mode="train", rng=rng,
                                       norm_adj=norm_adjs[idx])
                label = dataset[idx].label
                loss_sum += -math.log(max(float(probs[label]), 1e-12))
                correct += int(np.argmax(probs) == label)
                sample_grads = backward(model, cache, (probs - onehots[idx]) * scale)
                for total, g in zip(grad_total, _flat_grads(sample_grads)):
                    total += g
            new_params, state = adam_step(_model_params(model), grad_total, state,
                                          lr, train_config.weight_decay)
            _set_model_params(model, new_params)
        mean_loss = loss_sum / n
        if not math.isfinite(mean_loss):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        history.append({"epoch": epoch, "lr": lr, "loss": mean_loss,
                        "accuracy": correct / n})
    return model, history


def predict(model: GcnModel, samples: list[GraphSample]):
    """Predicted class indices and the full probability matrix (eval mode).

    Ties in the probabilities resolve to the lowest class index.
    """
    probs = np.empty((len(samples), model.config.num_classes))
    for k, sample in enumerate(samples):
        probs[k], _ = forward(model, sample, mode="eval")
    return probs.argmax(axis=1), probs


def graph_embedding(model: GcnModel, sample: GraphSample) -> np.ndarray:
    """Readout-layer embedding of one graph in eval mode."""
    _, cache = forward(model, sample, mode="eval")
    return cache.embedding


def evaluate(model: GcnModel, samples: list[GraphSample]) -> MetricsReport:
    """Full metrics report (loss, accuracy, macro-F1, WAR, UAR) on labeled graphs."""
    if not samples:
        raise InvalidInputError("cannot evaluate an empty sample list")
    num_classes = model.config.num_classes
    for k, sample in enumerate(samples):
        if not 0 <= sample.label < num_classes:
            raise InvalidInputError(
                f"sample {k} has label {sample.label}, outside [0, {num_classes})"
            )
    labels = np.array([s.label for s in samples])
    predictions, probs = predict(model, samples)
    loss = cross_entropy(np.eye(model.config.num_classes)[labels], probs)
    matrix = confusion(labels, predictions, model.config.num_classes)
    return compute_metrics(matrix, loss)


def _matrix_doc(array: np.ndarray) -> dict:
    return {"shape": list(array.shape), "data": array.ravel().tolist()}


def _matrix_from_doc(doc, name: str) -> np.ndarray:
    try:
        return np.asarray(doc["data"], dtype=float).reshape(doc["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed matrix entry {name!r}") from exc


def save_checkpoint(path, model: GcnModel, preprocess: dict | None = None,
                    optimizer: AdamState | None = None) -> None:
    """Write model weights (and optionally optimizer state) as versioned JSON.

    Matrices are stored row-major with declared shapes. JSON float text
    round-trips doubles exactly, so save then load reproduces every weight
    bit for bit, and the byte stream is deterministic for identical weights.
    """
    config = model.config
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": {
            "in_dim": config.in_dim,
            "num_classes": config.num_classes,
            "hidden_dim": config.hidden_dim,
            "num_layers": config.num_layers,
            "activation": config.activation,
            "dropout_rate": config.dropout_rate,
        },
        "layer_weights": [_matrix_doc(w) for w in model.layer_weights],
        "readout_weight": _matrix_doc(model.readout_weight),
        "readout_bias": _matrix_doc(model.readout_bias),
    }
    if preprocess is not None:
        doc["preprocess"] = preprocess
    if optimizer is not None:
        doc["optimizer"] = {
            "step": optimizer.step,
            "beta1": optimizer.beta1,
            "beta2": optimizer.beta2,
            "eps": optimizer.eps,
            "first_moment": [_matrix_doc(m) for m in optimizer.first_moment],
            "second_moment": [_matrix_doc(v) for v in optimizer.second_moment],
        }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")


def load_checkpoint(path):
    """Read a checkpoint; returns (model, meta) where meta may carry
    'preprocess' and 'optimizer' entries."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {doc.get('version')}")
    try:
        config = GcnConfig(**doc["config"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: malformed config section") from exc
    model = GcnModel(
        config=config,
        layer_weights=[_matrix_from_doc(w, f"layer_weights[{i}]")
                       for i, w in enumerate(doc.get("layer_weights", []))],
        readout_weight=_matrix_from_doc(doc.get("readout_weight"), "readout_weight"),
        readout_bias=_matrix_from_doc(doc.get("readout_bias"), "readout_bias"),
    )
    if len(model.layer_weights) != config.num_layers:
        raise CheckpointError(f"{path}: expected {config.num_layers} layer matrices")
    meta = {"preprocess": doc.get("preprocess")}
    if "optimizer" in doc:
        opt = doc["optimizer"]
        meta["optimizer"] = AdamState(
            step=int(opt["step"]),
            first_moment=[_matrix_from_doc(m, "first_moment")
                          for m in opt["first_moment"]],
            second_moment=[_matrix_from_doc(v, "second_moment")
                           for v in opt["second_moment"]],
            beta1=float(opt["beta1"]), beta2=float(opt["beta2"]),
            eps=float(opt["eps"]),
        )
    else:
        meta["optimizer"] = None
    return model, meta
