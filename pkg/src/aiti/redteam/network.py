"""Small feed-forward classifiers with exact analytic input gradients.

Everything here is plain numpy so the chain rule stays auditable: the attack
code needs dLoss/dInput, and the test suite cross-checks it against central
finite differences.  Final layer is always identity (logits); probabilities
come from a log-sum-exp stabilized softmax.
"""

from dataclasses import dataclass, replace
from pathlib import Path
import json

import numpy as np

from aiti.redteam.data import Dataset

ACTIVATIONS = ("identity", "relu", "tanh")


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged: non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "identity"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("layer weights must be a 2-D matrix")
        if b.shape != (w.shape[0],):
            raise ValueError("bias length must equal the layer output width")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_width(self) -> int:
        return self.weights.shape[1]

    @property
    def out_width(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class DifferentiableClassifier:
    layers: tuple
    n_classes: int
    name: str = "classifier"

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("classifier needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_width != nxt.in_width:
                raise ValueError("layer widths do not chain")
        if layers[-1].out_width != self.n_classes:
            raise ValueError("final layer width must equal n_classes")
        if layers[-1].activation != "identity":
            raise ValueError("final layer must emit raw logits (identity)")
        object.__setattr__(self, "layers", layers)

    @property
    def in_width(self) -> int:
        return self.layers[0].in_width


def new_classifier(widths, activation: str = "tanh", name: str = "classifier") -> DifferentiableClassifier:
    """Zero-weight classifier with the given layer widths.

    widths = (in, hidden..., out); hidden layers use `activation`, the final
    layer is identity.  `train` replaces the weights, so zero init here just
    fixes the architecture.
    """
    widths = tuple(int(w) for w in widths)
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    layers = []
    for i, (w_in, w_out) in enumerate(zip(widths, widths[1:])):
        act = "identity" if i == len(widths) - 2 else activation
        layers.append(Layer(np.zeros((w_out, w_in)), np.zeros(w_out), act))
    return DifferentiableClassifier(layers=tuple(layers), n_classes=widths[-1], name=name)


# ---------------------------------------------------------------------------
# Forward / loss / gradients
# ---------------------------------------------------------------------------


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "identity":
        return z
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_prime(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "identity":
        return np.ones_like(z)
    if activation == "relu":
        return (z > 0.0).astype(np.float64)
    return 1.0 - np.tanh(z) ** 2


def _check_input(model: DifferentiableClassifier, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.in_width,):
        raise ValueError(f"input width {x.shape} does not match model width {model.in_width}")
    return x


def _forward_batch(model: DifferentiableClassifier, xs: np.ndarray):
    """Run the network on (n, in) inputs, keeping pre-activations for backprop."""
    pre = []
    a = xs
    for layer in model.layers:
        z = a @ layer.weights.T + layer.bias
        pre.append(z)
        a = _activate(z, layer.activation)
    return a, pre


def forward(model: DifferentiableClassifier, x) -> np.ndarray:
    """Logits for a single input vector."""
    x = _check_input(model, x)
    logits, _ = _forward_batch(model, x[None, :])
    return logits[0]


def predict(model: DifferentiableClassifier, x) -> int:
    """Argmax class; ties go to the lowest class index."""
    return int(np.argmax(forward(model, x)))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    # Shift by the max logit so exp never overflows.
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_label(model: DifferentiableClassifier, y: int) -> int:
    y = int(y)
    if not 0 <= y < model.n_classes:
        raise ValueError(f"label {y} outside [0, {model.n_classes})")
    return y


def cross_entropy_loss(model: DifferentiableClassifier, x, y: int) -> float:
    """-log softmax(logits)[y], stabilized by the max-logit shift."""
    x = _check_input(model, x)
    y = _check_label(model, y)
    logits = forward(model, x)
    return float(-_log_softmax(logits)[y])


def _backprop_to_input(model: DifferentiableClassifier, xs: np.ndarray, ys: np.ndarray):
    """Batched dLoss/dInput plus the per-layer deltas and activations.

    Returns (input_grads, deltas, activations) where deltas[i] is dL/dz_i for
    layer i and activations[i] is the input seen by layer i.
    """
    logits, pre = _forward_batch(model, xs)
    probs = np.exp(_log_softmax(logits))
    delta = probs
    delta[np.arange(len(ys)), ys] -= 1.0

    acts = [xs]
    for layer, z in zip(model.layers[:-1], pre[:-1]):
        acts.append(_activate(z, layer.activation))

    deltas = [None] * len(model.layers)
    deltas[-1] = delta
    for i in range(len(model.layers) - 1, 0, -1):
        upstream = deltas[i] @ model.layers[i].weights
        deltas[i - 1] = upstream * _activate_prime(pre[i - 1], model.layers[i - 1].activation)
    input_grads = deltas[0] @ model.layers[0].weights
    return input_grads, deltas, acts


def input_gradient(model: DifferentiableClassifier, x, y: int) -> np.ndarray:
    """Exact dCrossEntropy/dx via backprop through every layer."""
    x = _check_input(model, x)
    y = _check_label(model, y)
    grads, _, _ = _backprop_to_input(model, x[None, :], np.array([y]))
    return grads[0]


def finite_difference_gradient(model: DifferentiableClassifier, x, y: int, h: float = 1e-5) -> np.ndarray:
    """Central differences per coordinate: (L(x+h e_i) - L(x-h e_i)) / 2h."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = _check_input(model, x)
    grad = np.zeros_like(x)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] = x[i] + h
        up = cross_entropy_loss(model, bumped, y)
        bumped[i] = x[i] - h
        down = cross_entropy_loss(model, bumped, y)
        grad[i] = (up - down) / (2.0 * h)
    return grad


# ---------------------------------------------------------------------------
# Training: seeded Xavier init + full-batch gradient descent
# ---------------------------------------------------------------------------


def mean_loss(model: DifferentiableClassifier, dataset: Dataset) -> float:
    logits, _ = _forward_batch(model, dataset.features)
    logp = _log_softmax(logits)
    return float(-logp[np.arange(dataset.n_samples), dataset.labels].mean())


def accuracy(model: DifferentiableClassifier, dataset: Dataset) -> float:
    logits, _ = _forward_batch(model, dataset.features)
    return float((logits.argmax(axis=1) == dataset.labels).mean())


def _xavier_init(model: DifferentiableClassifier, seed: int) -> DifferentiableClassifier:
    rng = np.random.default_rng(seed)
    layers = []
    for layer in model.layers:
        limit = np.sqrt(6.0 / (layer.in_width + layer.out_width))
        w = rng.uniform(-limit, limit, size=layer.weights.shape)
        layers.append(Layer(w, np.zeros(layer.out_width), layer.activation))
    return replace(model, layers=tuple(layers))


def train(
    model: DifferentiableClassifier,
    dataset: Dataset,
    learning_rate: float = 0.5,
    epochs: int = 200,
    seed: int = 0,
) -> DifferentiableClassifier:
    """Full-batch gradient descent on mean cross-entropy.

    The input model only fixes the architecture: weights are re-initialized
    Xavier-uniform from `seed` so the result is a pure function of
    (architecture, dataset, learning_rate, epochs, seed).  The input model is
    left untouched.  epochs=0 returns the freshly initialized model.
    """
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    if dataset.n_features != model.in_width:
        raise ValueError("dataset width does not match model input width")
    if dataset.n_classes > model.n_classes:
        raise ValueError("dataset has more classes than the model emits")

    current = _xavier_init(model, seed)
    n = dataset.n_samples
    xs, ys = dataset.features, dataset.labels
    # Overflow to inf is the divergence signal we test for, not a bug.
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            if not np.isfinite(mean_loss(current, dataset)):
                raise TrainingDivergedError(epoch)
            _, deltas, acts = _backprop_to_input(current, xs, ys)
            layers = []
            for layer, delta, a_in in zip(current.layers, deltas, acts):
                grad_w = delta.T @ a_in / n
                grad_b = delta.mean(axis=0)
                layers.append(
                    Layer(
                        layer.weights - learning_rate * grad_w,
                        layer.bias - learning_rate * grad_b,
                        layer.activation,
                    )
                )
            current = replace(current, layers=tuple(layers))
        if not np.isfinite(mean_loss(current, dataset)):
            raise TrainingDivergedError(epochs)
    return current


# ---------------------------------------------------------------------------
# Model file format
# ---------------------------------------------------------------------------


def model_to_dict(model: DifferentiableClassifier) -> dict:
    return {
        "name": model.name,
        "n_classes": model.n_classes,
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in layer.weights],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
    }


def model_from_dict(doc: dict) -> DifferentiableClassifier:
    try:
        layers = tuple(
            Layer(
                np.array(spec["weights"], dtype=np.float64),
                np.array(spec["bias"], dtype=np.float64),
                spec.get("activation", "identity"),
            )
            for spec in doc["layers"]
        )
        return DifferentiableClassifier(
            layers=layers, n_classes=int(doc["n_classes"]), name=str(doc.get("name", "classifier"))
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model document: {exc}") from exc


def save_model(model: DifferentiableClassifier, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> DifferentiableClassifier:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
