"""Self-contained MLP trainer that emits weight snapshots per epoch.

Float64 throughout, single-threaded, and fully seeded: parameter init draws
from ``default_rng(seed)``, per-epoch shuffling from ``default_rng(seed + 1)``,
and the synthetic data from its own task seed, so identical seeds reproduce
byte-identical snapshot files. One snapshot is written after initialization
(epoch 0) and one after each training epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import LabelOutOfRangeError
from .snapshots import (
    LayerTensor,
    RunManifest,
    WeightSnapshot,
    save_manifest,
    write_snapshot,
)


@dataclass
class MlpSpec:
    """Fully connected ReLU classifier architecture."""

    input_dim: int
    num_classes: int
    hidden_dims: tuple[int, ...] = (64, 64, 64, 64)

    def __post_init__(self):
        self.hidden_dims = tuple(int(d) for d in self.hidden_dims)
        if not self.hidden_dims:
            raise ValueError("need at least one hidden layer")
        if self.input_dim < 1 or self.num_classes < 2:
            raise ValueError("input_dim must be >= 1 and num_classes >= 2")
        if any(d < 1 for d in self.hidden_dims):
            raise ValueError("hidden dims must be positive")

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.num_classes]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class SyntheticTask:
    """Isotropic Gaussian blobs; class count is the complexity knob."""

    num_classes: int
    samples_per_class: int
    input_dim: int
    spread: float = 5.0
    noise: float = 1.0
    seed: int = 0
    kind: str = "blobs"

    def __post_init__(self):
        if self.kind != "blobs":
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.samples_per_class < 1 or self.input_dim < 1:
            raise ValueError("samples_per_class and input_dim must be >= 1")


def make_blobs(task: SyntheticTask) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic blob dataset: (features, labels) with shuffled row order."""
    rng = np.random.default_rng(task.seed)
    centers = rng.standard_normal((task.num_classes, task.input_dim)) * task.spread
    n = task.num_classes * task.samples_per_class
    X = np.empty((n, task.input_dim), dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    for c in range(task.num_classes):
        lo = c * task.samples_per_class
        hi = lo + task.samples_per_class
        X[lo:hi] = centers[c] + rng.standard_normal(
            (task.samples_per_class, task.input_dim)
        ) * task.noise
        y[lo:hi] = c
    order = rng.permutation(n)
    return X[order], y[order]


class Mlp:
    """ReLU MLP with named parameters ``layer{i}.weight`` / ``layer{i}.bias``.

    Every parameter starts uniform in [-a, a] with
    a = sqrt(6 / (fan_in + fan_out)) of its layer, weights drawn before the
    bias from one seeded stream. Biases deliberately start nonzero so the
    epoch-0 snapshot has no zero-norm tensors (change ratios divide by the
    previous L1 norm).
    """

    def __init__(self, spec: MlpSpec, rng: np.random.Generator):
        self.spec = spec
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in spec.layer_dims():
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-limit, limit, fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def named_parameters(self) -> dict[str, np.ndarray]:
        params: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"layer{i}.weight"] = w
            params[f"layer{i}.bias"] = b
        return params

    def forward(self, X: np.ndarray):
        """Returns (logits, cache); cache holds the activations backward needs."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.spec.input_dim:
            raise ValueError(
                f"expected inputs of width {self.spec.input_dim}, "
                f"got shape {X.shape}"
            )
        activations = [X]
        pre_acts = []
        h = X
        for i in range(self.n_layers):
            z = h @ self.weights[i] + self.biases[i]
            pre_acts.append(z)
            h = np.maximum(z, 0.0) if i < self.n_layers - 1 else z
            activations.append(h)
        return activations[-1], (activations, pre_acts)

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Mean softmax cross-entropy and gradients for every parameter."""
        y = np.asarray(y)
        if y.min() < 0 or y.max() >= self.spec.num_classes:
            raise LabelOutOfRangeError(
                f"labels must lie in [0, {self.spec.num_classes})"
            )
        logits, (activations, pre_acts) = self.forward(X)
        batch = X.shape[0]

        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        probs = exp / exp.sum(axis=1, keepdims=True)
        loss = float(-np.log(probs[np.arange(batch), y]).mean())

        delta = probs.copy()
        delta[np.arange(batch), y] -= 1.0
        delta /= batch

        grad_w = [np.empty(0)] * self.n_layers
        grad_b = [np.empty(0)] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            grad_w[i] = activations[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre_acts[i - 1] > 0)
        return loss, grad_w, grad_b

    def predict(self, X: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(X)
        return logits.argmax(axis=1)

    def snapshot(self, epoch_index: int, dtype: str = "f64") -> WeightSnapshot:
        cast = np.float32 if dtype == "f32" else np.float64
        layers = [
            LayerTensor(name, values.astype(cast))
            for name, values in self.named_parameters().items()
        ]
        return WeightSnapshot(epoch_index=epoch_index, layers=layers)


@dataclass
class AdamState:
    """Adam with bias correction; moments mirror the parameter list."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(params) != len(grads) or any(
            p.shape != g.shape for p, g in zip(params, grads)
        ):
            raise ValueError("gradient shapes do not match parameters")
        self.step_count += 1
        t = self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> AdamState:
    """Functional wrapper: mutates params in place, returns the state."""
    state.step(params, grads)
    return state


def train_run(task: SyntheticTask, spec: MlpSpec, epochs: int = 25,
              batch_size: int = 32, lr: float = 0.001, seed: int = 42,
              out_dir=".", snapshot_dtype: str = "f64",
              manifest_name: str = "run.json") -> RunManifest:
    """Train on the synthetic task, writing epochs+1 snapshots and a manifest.

    The epoch-0 snapshot captures the freshly initialized weights so the
    first feature column reflects the initial rapid change.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if snapshot_dtype not in ("f32", "f64"):
        raise ValueError(f"snapshot_dtype must be f32 or f64, got {snapshot_dtype!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    X, y = make_blobs(task)
    model = Mlp(spec, np.random.default_rng(seed))
    shuffle_rng = np.random.default_rng(seed + 1)
    adam = AdamState(lr=lr)

    snapshot_names: list[str] = []

    def emit(epoch: int) -> None:
        name = f"epoch_{epoch:03d}.wsnp"
        write_snapshot(model.snapshot(epoch, snapshot_dtype), out_dir / name)
        snapshot_names.append(name)

    emit(0)
    epoch_losses: list[float] = []
    n = X.shape[0]
    for epoch in range(1, epochs + 1):
        order = shuffle_rng.permutation(n)
        batch_losses = []
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, grad_w, grad_b = model.loss_and_grads(X[idx], y[idx])
            params = model.weights + model.biases
            grads = grad_w + grad_b
            adam.step(params, grads)
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))
        emit(epoch)

    accuracy = float((model.predict(X) == y).mean())
    manifest = RunManifest(
        run_id=f"blobs_c{task.num_classes}_seed{seed}",
        model_name=f"mlp_{'x'.join(str(d) for d in spec.hidden_dims)}",
        dataset_name=f"blobs_c{task.num_classes}",
        snapshot_paths=snapshot_names,
        hyperparameters={
            "optimizer": "adam",
            "lr": lr,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "epsilon": adam.epsilon,
            "batch_size": batch_size,
            "epochs": epochs,
            "seed": seed,
            "input_dim": spec.input_dim,
            "hidden_dims": list(spec.hidden_dims),
            "num_classes": task.num_classes,
            "samples_per_class": task.samples_per_class,
            "spread": task.spread,
            "noise": task.noise,
            "task_seed": task.seed,
            "snapshot_dtype": snapshot_dtype,
            "final_train_accuracy": accuracy,
            "epoch_mean_loss": epoch_losses,
        },
        base_dir=out_dir,
    )
    save_manifest(manifest, out_dir / manifest_name)
    return manifest
