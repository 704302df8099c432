"""Action classifier: a 768-128-3 MLP over instruction embeddings.

Forward pass, softmax cross-entropy with hand-derived backprop, and a
bias-corrected Adam loop, all in plain numpy: the model is small enough
that a framework would only obscure the arithmetic.  Training is full
batch and a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import json

import numpy as np

from . import rng
from .actions import EditAction
from .grids import Grid2D, read_tensor, write_tensor

EMBED_DIM = 768
HIDDEN_DIM = 128
NUM_ACTIONS = 3

_S_W1, _S_B1, _S_W2, _S_B2 = 11, 12, 13, 14
_S_BLOB_DIRS = 21
_S_BLOB_NOISE = 22


@dataclass(frozen=True, eq=False)
class ClassifierParams:
    """MLP weights: logits = w2 @ relu(w1 @ x + b1) + b2."""

    w1: np.ndarray  # hidden x in
    b1: np.ndarray  # hidden
    w2: np.ndarray  # out x hidden
    b2: np.ndarray  # out

    def __post_init__(self):
        w1, b1, w2, b2 = (np.asarray(a) for a in (self.w1, self.b1, self.w2, self.b2))
        if w1.ndim != 2 or w2.ndim != 2 or b1.ndim != 1 or b2.ndim != 1:
            raise ValueError("w1/w2 must be matrices and b1/b2 vectors")
        if b1.shape[0] != w1.shape[0]:
            raise ValueError(f"b1 has {b1.shape[0]} entries but w1 has {w1.shape[0]} rows")
        if w2.shape[1] != w1.shape[0]:
            raise ValueError(f"w2 expects {w2.shape[1]} hidden units, w1 yields {w1.shape[0]}")
        if b2.shape[0] != w2.shape[0]:
            raise ValueError(f"b2 has {b2.shape[0]} entries but w2 has {w2.shape[0]} rows")
        for name, arr in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            object.__setattr__(self, name, arr)

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[0]

    @classmethod
    def initialize(
        cls,
        seed: int,
        in_dim: int = EMBED_DIM,
        hidden_dim: int = HIDDEN_DIM,
        out_dim: int = NUM_ACTIONS,
    ) -> "ClassifierParams":
        """Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""

        def uniform(stream: int, count: int, fan_in: int) -> np.ndarray:
            bound = 1.0 / np.sqrt(fan_in)
            return (2.0 * rng.uniforms(seed, stream, count) - 1.0) * bound

        return cls(
            w1=uniform(_S_W1, hidden_dim * in_dim, in_dim).reshape(hidden_dim, in_dim),
            b1=uniform(_S_B1, hidden_dim, in_dim),
            w2=uniform(_S_W2, out_dim * hidden_dim, hidden_dim).reshape(out_dim, hidden_dim),
            b2=uniform(_S_B2, out_dim, hidden_dim),
        )

    def astype(self, dtype) -> "ClassifierParams":
        return ClassifierParams(
            self.w1.astype(dtype), self.b1.astype(dtype),
            self.w2.astype(dtype), self.b2.astype(dtype),
        )


@dataclass(frozen=True)
class LabeledEmbedding:
    embedding: np.ndarray
    label: int

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64).ravel()
        object.__setattr__(self, "embedding", emb)
        if self.label not in (0, 1, 2):
            raise ValueError(f"label must be 0, 1, or 2, got {self.label}")


@dataclass(frozen=True)
class SplitDataset:
    train: tuple[LabeledEmbedding, ...]
    test: tuple[LabeledEmbedding, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))
        if not self.train:
            raise ValueError("missing split: train set is empty")
        if not self.test:
            raise ValueError("missing split: test set is empty")


def _as_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([s.embedding for s in samples]).astype(np.float64)
    y = np.asarray([s.label for s in samples], dtype=np.int64)
    return x, y


def forward(params: ClassifierParams, embedding: np.ndarray) -> np.ndarray:
    """Logits for a single embedding vector."""
    x = np.asarray(embedding, dtype=np.float64).ravel()
    if x.shape[0] != params.in_dim:
        raise ValueError(f"embedding has {x.shape[0]} dims, expected {params.in_dim}")
    hidden = np.maximum(params.w1 @ x + params.b1, 0.0)
    return params.w2 @ hidden + params.b2


def _forward_batch(params: ClassifierParams, x: np.ndarray):
    pre = x @ params.w1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params.w2.T + params.b2
    return pre, hidden, logits


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    params: ClassifierParams, embeddings: np.ndarray, labels: np.ndarray
) -> tuple[float, ClassifierParams]:
    """Mean softmax cross-entropy and its analytic gradients.

    Gradients are returned in a ClassifierParams-shaped container.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a nonempty N x in_dim array")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must match the batch size")
    n = x.shape[0]

    pre, hidden, logits = _forward_batch(params, x)
    probs = _softmax(logits)
    loss = float(-np.mean(np.log(probs[np.arange(n), y])))

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    dw2 = dlogits.T @ hidden
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ params.w2
    dpre = dhidden * (pre > 0.0)
    dw1 = dpre.T @ x
    db1 = dpre.sum(axis=0)
    return loss, ClassifierParams(dw1, db1, dw2, db2)


@dataclass(eq=False)
class AdamState:
    first_moment: ClassifierParams
    second_moment: ClassifierParams
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    learning_rate: float = 0.1

    @classmethod
    def zeros_like(cls, params: ClassifierParams, learning_rate: float = 0.1) -> "AdamState":
        zero = lambda a: np.zeros_like(a, dtype=np.float64)
        return cls(
            first_moment=ClassifierParams(zero(params.w1), zero(params.b1),
                                          zero(params.w2), zero(params.b2)),
            second_moment=ClassifierParams(zero(params.w1), zero(params.b1),
                                           zero(params.w2), zero(params.b2)),
            learning_rate=learning_rate,
        )


def adam_step(
    params: ClassifierParams, grads: ClassifierParams, state: AdamState
) -> tuple[ClassifierParams, AdamState]:
    """One bias-corrected Adam update; returns the new params and state."""
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_p, new_m, new_v = {}, {}, {}
    for name in ("w1", "b1", "w2", "b2"):
        p = getattr(params, name).astype(np.float64)
        g = getattr(grads, name).astype(np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.shape} for {name}")
        m = b1 * getattr(state.first_moment, name) + (1.0 - b1) * g
        v = b2 * getattr(state.second_moment, name) + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_p[name] = p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    return (
        ClassifierParams(**new_p),
        AdamState(
            first_moment=ClassifierParams(**new_m),
            second_moment=ClassifierParams(**new_v),
            step_count=t,
            beta1=b1,
            beta2=b2,
            eps=state.eps,
            learning_rate=state.learning_rate,
        ),
    )


@dataclass(frozen=True)
class TrainResult:
    params: ClassifierParams
    epoch_losses: tuple[float, ...]
    test_accuracy: float


def train(
    dataset: SplitDataset, epochs: int = 30, lr: float = 0.1, seed: int = 0
) -> TrainResult:
    """Full-batch Adam training; deterministic for a fixed seed."""
    train_x, train_y = _as_arrays(dataset.train)
    test_x, test_y = _as_arrays(dataset.test)
    params = ClassifierParams.initialize(seed, in_dim=train_x.shape[1])
    state = AdamState.zeros_like(params, learning_rate=lr)

    losses = []
    for _ in range(epochs):
        loss, grads = loss_and_grad(params, train_x, train_y)
        params, state = adam_step(params, grads, state)
        losses.append(loss)

    _, _, logits = _forward_batch(params, test_x)
    accuracy = float(np.mean(np.argmax(logits, axis=1) == test_y))
    return TrainResult(params=params, epoch_losses=tuple(losses), test_accuracy=accuracy)


def classify(params: ClassifierParams, embedding: np.ndarray) -> EditAction:
    """Argmax over action logits; ties resolve to the lowest label."""
    logits = forward(params, embedding)
    return EditAction(int(np.argmax(logits)))


def save_params(params: ClassifierParams, path) -> None:
    """Write params as float32 ZTF tensors plus a manifest."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    p32 = params.astype(np.float32)
    write_tensor(Grid2D(p32.w1), root / "w1.ztf")
    write_tensor(Grid2D(p32.b1.reshape(1, -1)), root / "b1.ztf")
    write_tensor(Grid2D(p32.w2), root / "w2.ztf")
    write_tensor(Grid2D(p32.b2.reshape(1, -1)), root / "b2.ztf")
    manifest = {
        "format": "mlp-v1",
        "files": {"w1": "w1.ztf", "b1": "b1.ztf", "w2": "w2.ztf", "b2": "b2.ztf"},
        "dims": {"in": params.in_dim, "hidden": params.w1.shape[0], "out": params.out_dim},
    }
    (root / "params.json").write_text(json.dumps(manifest, indent=2) + "\n")


def load_params(path) -> ClassifierParams:
    root = Path(path)
    manifest = json.loads((root / "params.json").read_text())
    files = manifest["files"]

    def grid(name: str) -> np.ndarray:
        tensor = read_tensor(root / files[name])
        if not isinstance(tensor, Grid2D):
            raise ValueError(f"{name} must be a rank-2 tensor")
        return np.asarray(tensor.values)

    return ClassifierParams(
        w1=grid("w1"), b1=grid("b1").ravel(), w2=grid("w2"), b2=grid("b2").ravel()
    )


def save_dataset(samples, emb_path, label_path) -> None:
    """ZTF rank-2 embeddings plus a sidecar text file of labels."""
    x, y = _as_arrays(samples)
    write_tensor(Grid2D(x.astype(np.float32)), emb_path)
    Path(label_path).write_text("".join(f"{int(v)}\n" for v in y))


def load_dataset(emb_path, label_path) -> tuple[LabeledEmbedding, ...]:
    tensor = read_tensor(emb_path)
    if not isinstance(tensor, Grid2D):
        raise ValueError("embedding file must be a rank-2 tensor")
    labels = [int(line) for line in Path(label_path).read_text().split()]
    if len(labels) != tensor.height:
        raise ValueError(
            f"{len(labels)} labels for {tensor.height} embeddings"
        )
    return tuple(
        LabeledEmbedding(embedding=np.asarray(tensor.values[i], dtype=np.float64), label=labels[i])
        for i in range(tensor.height)
    )


def make_synthetic_dataset(
    seed: int = 0,
    per_class_train: int = 150,
    per_class_test: int = 50,
    dim: int = EMBED_DIM,
    sigma: float = 0.02,
    margin_sigmas: float = 5.0,
) -> SplitDataset:
    """Three separable Gaussian blobs standing in for instruction embeddings.

    Class centers sit along orthonormal random directions; noise projected
    onto those directions is clipped at 3 sigma, so the worst-case gap
    between own-class and other-class projections is ``margin_sigmas`` by
    construction and a perfect classifier exists.  The default sigma keeps
    embedding norms small enough that full-batch Adam at lr 0.1 descends
    without overshooting.
    """
    raw = rng.gaussians(seed, _S_BLOB_DIRS, NUM_ACTIONS * dim).reshape(NUM_ACTIONS, dim)
    directions, _ = np.linalg.qr(raw.T)
    directions = directions.T  # NUM_ACTIONS x dim, orthonormal rows
    amplitude = (margin_sigmas + 6.0) * sigma

    total = NUM_ACTIONS * (per_class_train + per_class_test)
    noise = rng.gaussians(seed, _S_BLOB_NOISE, total * dim).reshape(total, dim)

    def build(block: np.ndarray, label: int) -> list[LabeledEmbedding]:
        out = []
        for row in block:
            along = directions @ row
            clipped = np.clip(along, -3.0, 3.0)
            adjusted = row + directions.T @ (clipped - along)
            emb = amplitude * directions[label] + sigma * adjusted
            out.append(LabeledEmbedding(embedding=emb, label=label))
        return out

    train_samples, test_samples = [], []
    cursor = 0
    for label in range(NUM_ACTIONS):
        block = noise[cursor : cursor + per_class_train]
        cursor += per_class_train
        train_samples.extend(build(block, label))
        block = noise[cursor : cursor + per_class_test]
        cursor += per_class_test
        test_samples.extend(build(block, label))
    return SplitDataset(train=tuple(train_samples), test=tuple(test_samples))
