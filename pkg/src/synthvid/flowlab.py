"""Toy conditional flow-matching lab.

A small dense network learns a velocity field over low-dimensional points:
with x0 a data point, x1 a noise point, and x_t = (1 - t) x0 + t x1, the
network is regressed onto the straight-path target u = x1 - x0.  Sampling
integrates the learned field backward from t = 1 to t = 0 with Euler steps
of velocity -v(x, t, cond).

Everything is explicit numpy: the forward pass, the backward pass, and
momentum SGD, so gradients can be checked against finite differences and
runs are bit-reproducible from their seeds.

The 3D "transfer" construction used by the guidance experiments: real data
lives on the upper half of the unit circle with a small-noise z near 0;
synthetic data covers the full circle but sits at z near 2.  Angular
coverage is the capability a model can learn only from synthetic data; the
z offset is the rendering artifact nobody wants to keep.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DivergenceError",
    "NonFiniteStateError",
    "EMA_DECAY",
    "MOMENTUM",
    "REAL_LABEL",
    "TAGGED_SYNTHETIC_LABEL",
    "REFERENCE_LABEL",
    "TOY_COND_DIM",
    "SYNTHETIC_Z_MEAN",
    "ToyDataset",
    "TrainConfig",
    "VelocityModel",
    "energy_distance",
    "euler_step",
    "flow_match_loss",
    "gaussian_mixture_dataset",
    "load_checkpoint",
    "sample",
    "save_checkpoint",
    "toy_mixed_dataset",
    "toy_real_dataset",
    "toy_synthetic_dataset",
    "train",
]

MOMENTUM = 0.9  # classical momentum coefficient for all training runs

# Trained models are the exponential moving average of the SGD iterates.
# Without it the returned weights inherit the jitter of whatever the last
# few minibatches happened to be, which visibly distorts sampled
# distributions (mode balance in particular).
EMA_DECAY = 0.999

# Toy condition vocabulary: real-footage caption, tagged synthetic caption,
# and the content-agnostic caption used to train reference models.
REAL_LABEL = 0
TAGGED_SYNTHETIC_LABEL = 1
REFERENCE_LABEL = 2
TOY_COND_DIM = 3

SYNTHETIC_Z_MEAN = 2.0
_Z_SIGMA = 0.1


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""


class NonFiniteStateError(RuntimeError):
    """Sampler state became non-finite."""


class VelocityModel:
    """Dense velocity network: data + time + one-hot condition in, velocity out.

    Two tanh hidden layers.  The condition block has ``cond_dim`` label slots
    plus a trailing null slot (classifier-free style unconditional token);
    ``cond=None`` selects the null slot.
    """

    def __init__(self, data_dim: int, cond_dim: int, hidden: int = 64, seed: int = 0):
        self.data_dim = int(data_dim)
        self.cond_dim = int(cond_dim)
        self.hidden = int(hidden)
        in_dim = self.data_dim + 1 + self.cond_dim + 1

        rng = np.random.Generator(np.random.PCG64(seed))
        self.w1 = rng.standard_normal((in_dim, hidden)) / np.sqrt(in_dim)
        self.b1 = np.zeros(hidden)
        self.w2 = rng.standard_normal((hidden, hidden)) / np.sqrt(hidden)
        self.b2 = np.zeros(hidden)
        self.w3 = rng.standard_normal((hidden, self.data_dim)) / np.sqrt(hidden)
        self.b3 = np.zeros(self.data_dim)

    # -- parameters --

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def set_params(self, params) -> None:
        self.w1, self.b1, self.w2, self.b2, self.w3, self.b3 = [
            np.array(p, dtype=float) for p in params
        ]

    def copy(self) -> "VelocityModel":
        clone = VelocityModel.__new__(VelocityModel)
        clone.data_dim, clone.cond_dim, clone.hidden = self.data_dim, self.cond_dim, self.hidden
        clone.set_params(self.params())
        return clone

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    # -- forward / backward --

    def _encode(self, x: np.ndarray, t, cond) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        batch = x.shape[0]
        t_col = np.broadcast_to(np.asarray(t, dtype=float), (batch,)).reshape(batch, 1)
        onehot = np.zeros((batch, self.cond_dim + 1))
        labels = self._labels(cond, batch)
        slots = np.where(labels < 0, self.cond_dim, labels)
        if (labels >= self.cond_dim).any():
            raise ValueError(f"condition label out of range (cond_dim={self.cond_dim})")
        onehot[np.arange(batch), slots] = 1.0
        return np.concatenate([x, t_col, onehot], axis=1)

    @staticmethod
    def _labels(cond, batch: int) -> np.ndarray:
        if cond is None:
            return np.full(batch, -1, dtype=int)
        arr = np.asarray(cond)
        if arr.ndim == 0:
            return np.full(batch, int(arr), dtype=int)
        return arr.astype(int)

    def _forward(self, inputs: np.ndarray):
        h1 = np.tanh(inputs @ self.w1 + self.b1)
        h2 = np.tanh(h1 @ self.w2 + self.b2)
        out = h2 @ self.w3 + self.b3
        return out, (inputs, h1, h2)

    def _backward(self, cache, d_out: np.ndarray) -> list[np.ndarray]:
        inputs, h1, h2 = cache
        d_w3 = h2.T @ d_out
        d_b3 = d_out.sum(axis=0)
        d_h2 = d_out @ self.w3.T
        d_z2 = d_h2 * (1.0 - h2 ** 2)
        d_w2 = h1.T @ d_z2
        d_b2 = d_z2.sum(axis=0)
        d_h1 = d_z2 @ self.w2.T
        d_z1 = d_h1 * (1.0 - h1 ** 2)
        d_w1 = inputs.T @ d_z1
        d_b1 = d_z1.sum(axis=0)
        return [d_w1, d_b1, d_w2, d_b2, d_w3, d_b3]

    def velocity(self, x, t, cond) -> np.ndarray:
        """Velocity prediction; accepts a single point (d,) or a batch (B, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.data_dim:
            raise ValueError(f"expected data dimension {self.data_dim}, got {x.shape[1]}")
        out, _ = self._forward(self._encode(x, t, cond))
        return out[0] if single else out


def _batch_loss_and_grads(model: VelocityModel, x0, x1, t, cond):
    """Mean flow-matching loss over a batch plus parameter gradients."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    if x0.shape != x1.shape or x0.shape[1] != model.data_dim:
        raise ValueError("x0/x1 shape mismatch with model data_dim")
    batch = x0.shape[0]
    t_arr = np.broadcast_to(np.asarray(t, dtype=float), (batch,))

    x_t = (1.0 - t_arr)[:, None] * x0 + t_arr[:, None] * x1
    target = x1 - x0

    out, cache = model._forward(model._encode(x_t, t_arr, cond))
    residual = out - target
    loss = float((residual ** 2).sum() / batch)
    grads = model._backward(cache, 2.0 * residual / batch)
    return loss, grads


def flow_match_loss(model: VelocityModel, x0, x1, t: float, cond):
    """Squared flow-matching loss for a single (x0, x1, t, cond) draw.

    Returns ``(loss, grads)`` where grads align with ``model.params()`` and
    come from exact backpropagation.
    """
    if not (0.0 <= t <= 1.0):
        raise ValueError("t must lie in [0, 1]")
    return _batch_loss_and_grads(model, x0, x1, float(t), cond)


# ---------------------------------------------------------------------------
# datasets


@dataclass(frozen=True)
class ToyDataset:
    points: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,) condition indices

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if pts.ndim != 2 or len(pts) != len(labels):
            raise ValueError("points must be (N, d) with one label per point")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.points)


def _circle_points(n, rng, angle_high, z_mean):
    theta = rng.uniform(0.0, angle_high, n)
    z = rng.normal(z_mean, _Z_SIGMA, n)
    return np.stack([np.cos(theta), np.sin(theta), z], axis=1)


def toy_real_dataset(n: int, seed: int, label: int = REAL_LABEL) -> ToyDataset:
    """Half circle (angles 0..180 degrees), artifact coordinate z ~ N(0, 0.1^2)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return ToyDataset(_circle_points(n, rng, np.pi, 0.0), np.full(n, label))


def toy_synthetic_dataset(n: int, seed: int,
                          label: int = TAGGED_SYNTHETIC_LABEL) -> ToyDataset:
    """Full circle, artifact coordinate z ~ N(2, 0.1^2)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return ToyDataset(_circle_points(n, rng, 2.0 * np.pi, SYNTHETIC_Z_MEAN),
                      np.full(n, label))


def toy_mixed_dataset(n: int, seed: int, synthetic_share: float = 0.5) -> ToyDataset:
    """Real points (label 0) blended with tagged synthetic points (label 1)."""
    if not (0.0 <= synthetic_share <= 1.0):
        raise ValueError("synthetic_share must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    n_syn = int(round(synthetic_share * n))
    real = _circle_points(n - n_syn, rng, np.pi, 0.0)
    syn = _circle_points(n_syn, rng, 2.0 * np.pi, SYNTHETIC_Z_MEAN)
    points = np.concatenate([real, syn])
    labels = np.concatenate([np.full(n - n_syn, REAL_LABEL),
                             np.full(n_syn, TAGGED_SYNTHETIC_LABEL)])
    order = rng.permutation(n)
    return ToyDataset(points[order], labels[order])


def gaussian_mixture_dataset(n: int, seed: int,
                             centers=((-1.5, 0.0), (1.5, 0.0)),
                             sigma: float = 0.3, label: int = 0) -> ToyDataset:
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.asarray(centers, dtype=float)
    which = rng.integers(len(centers), size=n)
    points = centers[which] + sigma * rng.standard_normal((n, centers.shape[1]))
    return ToyDataset(points, np.full(n, label))


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    steps: int
    batch_size: int
    cond_dropout: float
    seed: int

    def __post_init__(self):
        if not (self.learning_rate > 0.0):
            raise ValueError("learning_rate must be positive")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0.0 <= self.cond_dropout < 1.0):
            raise ValueError("cond_dropout must lie in [0, 1)")


def train(model: VelocityModel, dataset: ToyDataset, cfg: TrainConfig):
    """Momentum-SGD flow-matching training; returns ``(new model, loss trace)``.

    With probability ``cond_dropout`` a batch item's condition is replaced by
    the null token, which is what later enables classifier-free guidance.
    The returned weights are the EMA of the iterates (see ``EMA_DECAY``).
    The input model is left untouched.  Deterministic given ``cfg.seed``.
    """
    if len(dataset) == 0:
        raise ValueError("dataset must be nonempty")
    if (dataset.labels < 0).any() or (dataset.labels >= model.cond_dim).any():
        raise ValueError(f"dataset labels must lie in [0, {model.cond_dim})")

    model = model.copy()
    velocity_buffers = [np.zeros_like(p) for p in model.params()]
    averaged = [p.copy() for p in model.params()]
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = len(dataset)
    trace = np.empty(cfg.steps)

    for step in range(cfg.steps):
        idx = rng.integers(0, n, size=cfg.batch_size)
        x0 = dataset.points[idx]
        conds = dataset.labels[idx].copy()
        dropped = rng.random(cfg.batch_size) < cfg.cond_dropout
        conds[dropped] = -1  # null token
        x1 = rng.standard_normal((cfg.batch_size, model.data_dim))
        t = rng.random(cfg.batch_size)

        loss, grads = _batch_loss_and_grads(model, x0, x1, t, conds)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss became non-finite at step {step}")
        trace[step] = loss

        params = model.params()
        for buf, p, g in zip(velocity_buffers, params, grads):
            buf *= MOMENTUM
            buf -= cfg.learning_rate * g
            p += buf
        for avg, p in zip(averaged, params):
            avg *= EMA_DECAY
            avg += (1.0 - EMA_DECAY) * p

    model.set_params(averaged)
    return model, trace


def euler_step(x: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    """One backward Euler step of the flow: x <- x - dt * v."""
    return x - dt * v


def sample(model: VelocityModel, cond, n_steps: int, seed: int) -> np.ndarray:
    """Integrate the learned flow from seeded noise down to t = 0."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal(model.data_dim)
    dt = 1.0 / n_steps
    for k in range(n_steps):
        t = 1.0 - k * dt
        x = euler_step(x, model.velocity(x, t, cond), dt)
        if not np.isfinite(x).all():
            raise NonFiniteStateError(f"sample state became non-finite at step {k}")
    return x


# ---------------------------------------------------------------------------
# evaluation


def energy_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Energy distance between two samples.

    Computed as sqrt(max(0, 2 E||x - y|| - E||x - x'|| - E||y - y'||)) with
    plain all-pairs means (V-statistic, diagonal included), so same-sample
    baselines stay strictly positive at finite n.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))

    def mean_pairwise(a, b):
        sq = (a ** 2).sum(1)[:, None] + (b ** 2).sum(1)[None, :] - 2.0 * (a @ b.T)
        return float(np.sqrt(np.maximum(sq, 0.0)).mean())

    stat = 2.0 * mean_pairwise(x, y) - mean_pairwise(x, x) - mean_pairwise(y, y)
    return float(np.sqrt(max(stat, 0.0)))


# ---------------------------------------------------------------------------
# checkpoints: one JSON header line, then raw float64 parameters


def save_checkpoint(model: VelocityModel, path, seed: int | None = None,
                    train_steps: int | None = None) -> None:
    header = {
        "schema": 1,
        "data_dim": model.data_dim,
        "cond_dim": model.cond_dim,
        "hidden": model.hidden,
        "param_count": model.n_params(),
        "seed": seed,
        "train_steps": train_steps,
    }
    flat = np.concatenate([p.ravel() for p in model.params()])
    payload = json.dumps(header).encode("ascii") + b"\n" + flat.astype("<f8").tobytes()
    Path(path).write_bytes(payload)


def load_checkpoint(path):
    """Returns ``(model, header_dict)``."""
    data = Path(path).read_bytes()
    newline = data.index(b"\n")
    header = json.loads(data[:newline].decode("ascii"))
    if header.get("schema") != 1:
        raise ValueError(f"{path}: unsupported checkpoint schema")
    flat = np.frombuffer(data[newline + 1:], dtype="<f8")
    if flat.size != header["param_count"]:
        raise ValueError(f"{path}: parameter payload does not match header")

    model = VelocityModel(header["data_dim"], header["cond_dim"], header["hidden"], seed=0)
    shapes = [p.shape for p in model.params()]
    params, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        params.append(flat[offset:offset + size].reshape(shape))
        offset += size
    model.set_params(params)
    return model, header
