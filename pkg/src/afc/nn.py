"""Small dense network used to measure how quantized activations affect accuracy.

Training always uses the exact activation; the quantized tables are only
swapped in at inference time, without retraining.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from afc.fixed_point import FixedPointFormat
from afc.funcref import ActivationSpec
from afc.tabulator import DEFAULT_CONVENTION, QuantizedFunctionTable, SamplingConvention, build_table, reference_eval_array

CHECKPOINT_FORMAT = "afc-mlp"
CHECKPOINT_VERSION = 1

DEFAULT_VARIANTS = ("tanh_5_4", "tanh_7_4", "tanh_7_6", "selu_8_5")


class TrainingDiverged(RuntimeError):
    pass


# -- data --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    split: np.ndarray  # True marks a test row
    n_classes: int

    def __post_init__(self):
        if self.X.ndim != 2 or len(self.X) != len(self.y) or len(self.y) != len(self.split):
            raise ValueError("features, labels and split tags must have matching rows")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def train(self) -> tuple[np.ndarray, np.ndarray]:
        m = ~self.split
        return self.X[m], self.y[m]

    def test(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[self.split], self.y[self.split]

    def to_csv(self, header: str | None = None) -> str:
        """Rows in order; the train/test split is recomputed from the seed on load."""
        buf = io.StringIO()
        if header:
            buf.write(header.rstrip("\n") + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(self.dim)] + ["label"])
        for row, label in zip(self.X, self.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, test_fraction: float = 0.25, seed: int = 42) -> "Dataset":
        """Read ``f0,...,f{D-1},label`` rows; an optional ``split`` column keeps a stored split."""
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.reader(lines)
        head = next(reader)
        has_split = head[-1] == "split"
        label_col = len(head) - (2 if has_split else 1)
        if head[label_col] != "label":
            raise ValueError("dataset CSV needs a 'label' column after the features")
        X, y, split = [], [], []
        for row in reader:
            X.append([float(v) for v in row[:label_col]])
            y.append(int(row[label_col]))
            if has_split:
                split.append(row[-1] == "test")
        X = np.asarray(X, dtype=np.float64).reshape(len(y), label_col)
        y = np.asarray(y, dtype=np.int64)
        if has_split:
            split_arr = np.asarray(split, dtype=bool)
        else:
            split_arr = _random_split(len(y), test_fraction, np.random.default_rng(seed))
        return cls(X, y, split_arr, int(y.max()) + 1 if len(y) else 0)


def _random_split(n: int, test_fraction: float, rng: np.random.Generator) -> np.ndarray:
    split = np.zeros(n, dtype=bool)
    split[rng.permutation(n)[: int(round(n * test_fraction))]] = True
    return split


def _blob_centres(rng: np.random.Generator, count: int, dim: int, min_dist: float, box: float) -> np.ndarray:
    """Uniform centres in ``[-box, box]^dim``, redrawn until pairwise ``min_dist`` apart."""
    centres = []
    for _ in range(10_000):
        c = rng.uniform(-box, box, size=dim)
        if all(np.linalg.norm(c - o) >= min_dist for o in centres):
            centres.append(c)
            if len(centres) == count:
                return np.asarray(centres)
    raise ValueError("cannot place that many separated blobs; lower min_dist or blobs_per_class")


def generate_synthetic(
    seed: int = 42,
    classes: int = 3,
    dim: int = 2,
    n: int = 3000,
    blobs_per_class: int = 3,
    spread: float = 0.7,
    min_dist: float = 2.0,
    test_fraction: float = 0.25,
) -> Dataset:
    """Gaussian blobs, several per class, with centres interleaved between classes.

    Interleaving makes the classes non-convex so a linear model cannot
    separate them; ``spread`` against ``min_dist`` sets the overlap.
    Features are standardized.
    """
    rng = np.random.default_rng(seed)
    n_blobs = classes * blobs_per_class
    box = 1.5 * min_dist * n_blobs ** (1.0 / dim) / 2
    centres = _blob_centres(rng, n_blobs, dim, min_dist, box)
    owner = np.arange(n_blobs) % classes
    blob = rng.integers(0, n_blobs, size=n)
    X = centres[blob] + rng.normal(0.0, spread, size=(n, dim))
    y = owner[blob].astype(np.int64)
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    # the split uses its own stream so a CSV export reloads with the same split
    return Dataset(X, y, _random_split(n, test_fraction, np.random.default_rng(seed)), classes)


# -- model -------------------------------------------------------------------


@dataclass(eq=False)
class MlpModel:
    """``D -> H -> C`` network; the hidden layer uses ``activation``, the output softmax."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: ActivationSpec
    history: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("need one weight matrix and bias per layer")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"layer {i} has shape {W.shape}, expected {(self.sizes[i], self.sizes[i + 1])}")

    @classmethod
    def init(cls, sizes, activation: ActivationSpec, seed: int = 42) -> "MlpModel":
        rng = np.random.default_rng(seed)
        weights = [rng.normal(0.0, 1.0 / np.sqrt(a), size=(a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(tuple(sizes), weights, biases, activation)

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "MlpModel":
        return MlpModel(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activation, list(self.history))

    # serialization

    def to_json(self) -> str:
        doc = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "sizes": list(self.sizes),
            "activation": {"kind": self.activation.kind, "alpha": self.activation.alpha, "lambda": self.activation.lam},
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "history": self.history,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        doc = json.loads(text)
        if doc.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a model checkpoint")
        if doc.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
        act = doc["activation"]
        spec = ActivationSpec.from_name(act["kind"], alpha=act.get("alpha"), lam=act.get("lambda"))
        return cls(
            tuple(doc["sizes"]),
            [np.asarray(w, dtype=np.float64).reshape(a, b) for w, a, b in zip(doc["weights"], doc["sizes"][:-1], doc["sizes"][1:])],
            [np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            spec,
            doc.get("history", []),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_json(Path(path).read_text())


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: MlpModel, X: np.ndarray, act=None) -> np.ndarray:
    """Class probabilities; ``act`` overrides the hidden activation."""
    act = act or model.activation
    h = np.asarray(X, dtype=np.float64)
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.asarray(act(h @ W + b), dtype=np.float64)
    return _softmax(h @ model.weights[-1] + model.biases[-1])


def loss_and_grads(model: MlpModel, X: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean softmax cross-entropy and its gradient, ordered like :meth:`MlpModel.params`."""
    act = model.activation
    hs, zs = [np.asarray(X, dtype=np.float64)], []
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        z = hs[-1] @ W + b
        zs.append(z)
        hs.append(np.asarray(act(z), dtype=np.float64))
    p = _softmax(hs[-1] @ model.weights[-1] + model.biases[-1])
    n = len(y)
    loss = float(-np.mean(np.log(np.maximum(p[np.arange(n), y], 1e-300))))
    d = p
    d[np.arange(n), y] -= 1.0
    d /= n
    grads = []
    for layer in range(len(model.weights) - 1, -1, -1):
        grads.append(d.sum(axis=0))
        grads.append(hs[layer].T @ d)
        if layer:
            d = (d @ model.weights[layer].T) * act.derivative(zs[layer - 1])
    grads.reverse()
    return loss, grads


def accuracy(probs: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.argmax(probs, axis=1) == y)) * 100.0


def train(
    dataset: Dataset,
    activation: ActivationSpec,
    hidden: int = 16,
    epochs: int = 60,
    lr: float = 0.2,
    batch_size: int = 32,
    seed: int = 42,
) -> MlpModel:
    """Minibatch SGD on softmax cross-entropy with the exact activation."""
    if activation.kind not in ("tanh", "sigmoid", "elu", "selu"):
        raise ValueError(f"cannot train with {activation.kind}")
    model = MlpModel.init((dataset.dim, hidden, dataset.n_classes), activation, seed)
    rng = np.random.default_rng(seed + 1)
    X, y = dataset.train()
    for epoch in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), batch_size):
            idx = order[start:start + batch_size]
            loss, grads = loss_and_grads(model, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} in epoch {epoch}")
            for p, g in zip(model.params(), grads):
                p -= lr * g
    model.history.append({
        "epochs": epochs, "lr": lr, "batch_size": batch_size, "seed": seed,
        "train_accuracy": infer(model, dataset, "train"), "test_accuracy": infer(model, dataset),
    })
    return model


def infer(model: MlpModel, dataset: Dataset, split: str = "test") -> float:
    X, y = dataset.test() if split == "test" else dataset.train()
    return accuracy(forward(model, X), y)


def quantized_activation(table: QuantizedFunctionTable):
    return lambda z: reference_eval_array(z, table)


def infer_quantized(model: MlpModel, dataset: Dataset, table: QuantizedFunctionTable, split: str = "test") -> float:
    """Accuracy with every hidden activation replaced by the bit-accurate table."""
    if table.activation.kind != model.activation.kind:
        raise ValueError(f"table computes {table.activation.kind} but the model uses {model.activation.kind}")
    X, y = dataset.test() if split == "test" else dataset.train()
    return accuracy(forward(model, X, quantized_activation(table)), y)


# -- variants ----------------------------------------------------------------

_VARIANT = re.compile(r"^(?P<kind>[A-Za-z]+)_(?P<out>\d+)_(?P<in>\d+)$")


def variant_formats(variant: str) -> tuple[str, FixedPointFormat, FixedPointFormat]:
    """``tanh_7_6`` means 7 output bits and 6 input bits.

    Outputs are U1.(out-1); inputs are U1.(in-1), or U2.(in-2) for the
    ELU family whose magnitude range reaches 4.
    """
    m = _VARIANT.match(variant.strip())
    if not m:
        raise ValueError(f"variant {variant!r} must look like 'tanh_7_6'")
    kind = m["kind"].lower()
    n_out, n_in = int(m["out"]), int(m["in"])
    int_in = 2 if kind in ("selu", "elu") else 1
    if n_out < 2 or n_in <= int_in:
        raise ValueError(f"variant {variant!r} has too few bits")
    return kind, FixedPointFormat(int_in, n_in - int_in), FixedPointFormat(1, n_out - 1)


def variant_table(variant: str, activation: ActivationSpec, convention: SamplingConvention = DEFAULT_CONVENTION) -> QuantizedFunctionTable:
    kind, in_fmt, out_fmt = variant_formats(variant)
    if kind != activation.kind:
        raise ValueError(f"variant {variant} does not match the {activation.kind} model")
    return build_table(activation, in_fmt, out_fmt, convention)


@dataclass(frozen=True)
class SweepRow:
    variant: str
    float_accuracy: float
    quantized_accuracy: float

    @property
    def delta(self) -> float:
        return self.quantized_accuracy - self.float_accuracy


def sweep(models: dict[str, MlpModel], dataset: Dataset, variants=DEFAULT_VARIANTS, convention: SamplingConvention = DEFAULT_CONVENTION) -> list[SweepRow]:
    """Accuracy change per variant; ``models`` maps activation kind to a trained model."""
    rows = []
    for v in variants:
        kind = variant_formats(v)[0]
        if kind not in models:
            raise ValueError(f"no trained {kind} model for variant {v}")
        model = models[kind]
        table = variant_table(v, model.activation, convention)
        rows.append(SweepRow(v, infer(model, dataset), infer_quantized(model, dataset, table)))
    return rows


def sweep_report(rows: list[SweepRow], header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header.rstrip("\n") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "float_accuracy", "quantized_accuracy", "delta_accuracy"])
    for r in rows:
        w.writerow([r.variant, repr(r.float_accuracy), repr(r.quantized_accuracy), repr(r.delta)])
    return buf.getvalue()


def parse_sweep_report(text: str) -> list[SweepRow]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return [SweepRow(r["variant"], float(r["float_accuracy"]), float(r["quantized_accuracy"])) for r in csv.DictReader(lines)]
