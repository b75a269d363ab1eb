"""Loss, reverse-mode batch gradients, Adam, and the train/eval loops.

Gradients are exact handwritten adjoints of the fixed layer set (see
neuralop); every adjoint is validated against central finite differences in
the test suite. The optimizer is Adam with coupled L2 weight decay: the
decay term is added to the raw gradient before the moment updates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .datagen import stream
from .grids import Field
from .neuralop import OperatorModel, OperatorParams, backward_from_output, forward_with_cache


class TrainingError(RuntimeError):
    """Aborted training run (non-finite loss, bad split)."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    seed: int = 0
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch: int = 20
    n_train: int = 900
    n_test: int = 100

    def __post_init__(self):
        if self.epochs < 0 or self.batch < 1 or self.n_train < 1 or self.n_test < 0:
            raise ValueError("counts must be positive")
        if self.batch > self.n_train:
            raise ValueError("batch size cannot exceed the training-set size")


def relative_l2_loss(pred: Field, truth: Field) -> float:
    """||pred - truth|| / ||truth|| with the discrete cell-area norm."""
    if pred.data.shape != truth.data.shape:
        raise ValueError("prediction/truth shape mismatch")
    diff = pred.data - truth.data
    denom = float(np.sqrt(np.sum(truth.data**2)))
    if denom == 0.0:
        raise ValueError("truth has zero norm; relative error undefined")
    return float(np.sqrt(np.sum(diff**2)) / denom)  # cell area cancels


def _loss_and_output_grad(pred: np.ndarray, truth: np.ndarray):
    """Per-sample relative error and its gradient w.r.t. the prediction."""
    diff = pred - truth
    diff_norm = float(np.sqrt(np.sum(diff**2)))
    truth_norm = float(np.sqrt(np.sum(truth**2)))
    if truth_norm == 0.0:
        raise TrainingError("sample with zero-norm target")
    if diff_norm == 0.0:
        return 0.0, np.zeros_like(pred)
    return diff_norm / truth_norm, diff / (diff_norm * truth_norm)


def backward(model: OperatorModel, batch) -> tuple[OperatorParams, float]:
    """Mean relative-error loss over a batch and its exact gradient.

    batch is an iterable of (input Field, eps-or-None, truth Field).
    Per-sample gradients accumulate in a fixed order, so results are
    deterministic for a fixed batch order.
    """
    grads = model.params.zeros_like()
    samples = list(batch)
    if not samples:
        raise TrainingError("empty batch")
    total = 0.0
    inv = 1.0 / len(samples)
    for a, eps, truth in samples:
        out, cache = forward_with_cache(model, a, eps)
        loss, g_out = _loss_and_output_grad(out.data, truth.data)
        total += loss
        backward_from_output(model, cache, g_out * inv, grads)
    return grads, total * inv


def _float_view(arr: np.ndarray) -> np.ndarray:
    return arr.view(np.float64) if np.iscomplexobj(arr) else arr


@dataclass
class AdamState:
    t: int
    m: dict
    v: dict

    @classmethod
    def fresh(cls, params: OperatorParams) -> "AdamState":
        m = {name: np.zeros_like(_float_view(a)) for name, a in params.named_tensors()}
        v = {name: np.zeros_like(_float_view(a)) for name, a in params.named_tensors()}
        return cls(t=0, m=m, v=v)


def adam_step(params: OperatorParams, grads: OperatorParams, state: AdamState,
              lr: float, weight_decay: float = 0.0,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """In-place Adam update with bias correction; complex weights update
    componentwise through their float views."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    grad_map = dict(grads.named_tensors())
    for name, p in params.named_tensors():
        pv = _float_view(p)
        g = _float_view(grad_map[name]) + weight_decay * pv
        m, v = state.m[name], state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        pv -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def evaluate(model: OperatorModel, dataset, indices) -> tuple[float, np.ndarray]:
    """Mean and per-sample relative errors over the given sample indices."""
    indices = list(indices)
    if not indices:
        raise TrainingError("empty evaluation split")
    errors = np.empty(len(indices))
    for j, i in enumerate(indices):
        a, eps, truth = dataset.sample(i)
        pred, _ = forward_with_cache(model, a, eps)
        errors[j] = relative_l2_loss(pred, truth)
    return float(errors.mean()), errors


def train(model: OperatorModel, dataset, config: TrainConfig):
    """Optimize in place; returns the per-epoch history.

    The first n_train samples train, the next n_test evaluate. Shuffling
    draws from the counter-based stream (config.seed, epoch, "shuffle");
    the batch remainder is dropped. History rows are dicts with epoch,
    train_loss, test_error, wall_seconds.
    """
    n = dataset.n_samples
    if config.n_train + config.n_test > n:
        raise TrainingError(f"split {config.n_train}+{config.n_test} exceeds {n} samples")
    test_indices = list(range(config.n_train, config.n_train + config.n_test))
    state = AdamState.fresh(model.params)
    history = []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        order = stream(config.seed, epoch, "shuffle").permutation(config.n_train)
        n_batches = config.n_train // config.batch
        epoch_loss = 0.0
        for bi in range(n_batches):
            idx = order[bi * config.batch:(bi + 1) * config.batch]
            batch = [dataset.sample(int(i)) for i in idx]
            grads, loss = backward(model, batch)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {bi}")
            adam_step(model.params, grads, state, lr=config.lr,
                      weight_decay=config.weight_decay)
            epoch_loss += loss
        test_error = evaluate(model, dataset, test_indices)[0] if config.n_test else float("nan")
        history.append({
            "epoch": epoch,
            "train_loss": epoch_loss / max(n_batches, 1),
            "test_error": test_error,
            "wall_seconds": time.perf_counter() - t0,
        })
    return history
