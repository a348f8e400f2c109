"""Offline model fitting: projected Adam on MSE with a held-out split.

Every optimizer step ends with a non-negativity clamp on the recurrent
convex-path matrices, so the convexity guarantee holds at all times
during and after training (projected Adam).
"""

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import samples_to_arrays
from .exceptions import NonFiniteValueError, TrainingDivergedError
from .icnn import (
    InputScaler,
    PicnnArch,
    PicnnWeights,
    enforce_convexity,
    init_picnn,
    picnn_backward,  # noqa: F401  (re-exported: gradient entry point)
    picnn_forward_batch,
    picnn_value_and_grads,
    zero_grads,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    epochs: int = 150
    batch_size: int = 256
    initial_lr: float = 0.04
    lr_decay: float = 0.1
    seed: int = 0
    holdout_cell_id: Optional[str] = None
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")
        if self.lr_decay < 0:
            raise ValueError("lr_decay must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must be in (0, 1)")

    def lr_at(self, epoch: int) -> float:
        """Inverse-time decay; epoch 0 uses initial_lr exactly."""
        return self.initial_lr / (1.0 + self.lr_decay * epoch)


@dataclass
class TrainReport:
    """Per-epoch loss series plus run metadata.

    ``wall_clock_s`` is process metadata; it is excluded from to_json so
    serialized reports from identical seeded runs compare equal.
    """

    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    n_train: int = 0
    n_val: int = 0
    holdout_cell_id: Optional[str] = None
    wall_clock_s: float = 0.0
    final_weights: Optional[PicnnWeights] = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "epochs": len(self.train_mse),
                "train_mse": self.train_mse,
                "val_mse": self.val_mse,
                "n_train": self.n_train,
                "n_val": self.n_val,
                "holdout_cell_id": self.holdout_cell_id,
            },
            indent=2,
        )

    def write_loss_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("epoch,train_mse,val_mse\n")
            for e, (tr, va) in enumerate(zip(self.train_mse, self.val_mse),
                                         start=1):
                fh.write(f"{e},{tr!r},{va!r}\n")


def mse_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("mse_loss needs at least one sample")
    if p.shape != t.shape:
        raise ValueError(
            f"length mismatch: {p.size} predictions vs {t.size} targets"
        )
    return float(np.mean((p - t) ** 2))


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0


def adam_init(weights) -> AdamState:
    return AdamState(m=zero_grads(weights), v=zero_grads(weights), t=0)


def adam_step(weights, grads: dict, state: AdamState, lr: float,
              batch_index: Optional[int] = None):
    """One Adam update in place, then the convexity clamp.

    Raises NonFiniteValueError (carrying the batch index when given) on
    non-finite gradients.
    """
    for name, _ in weights.param_items():
        if not np.all(np.isfinite(grads[name])):
            raise NonFiniteValueError(
                f"non-finite gradient for parameter {name}",
                batch_index=batch_index,
            )
    state.t += 1
    bc1 = 1.0 - ADAM_BETA1 ** state.t
    bc2 = 1.0 - ADAM_BETA2 ** state.t
    for name, arr in weights.param_items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        arr -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    enforce_convexity(weights)
    return weights, state


# ---------------------------------------------------------------------------
# Training loop


def split_samples(samples, config: TrainConfig):
    """Hold out a whole cell when configured, otherwise a seeded random
    row split."""
    if config.holdout_cell_id is not None:
        train = [s for s in samples if s.cell_id != config.holdout_cell_id]
        val = [s for s in samples if s.cell_id == config.holdout_cell_id]
        if not val:
            raise ValueError(
                f"holdout cell {config.holdout_cell_id!r} has no samples"
            )
        if not train:
            raise ValueError("all samples belong to the holdout cell")
        return train, val
    if len(samples) < 2:
        raise ValueError("need at least 2 samples to split")
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(samples))
    n_val = max(1, int(round(config.validation_fraction * len(samples))))
    n_val = min(n_val, len(samples) - 1)
    val_idx = set(perm[:n_val].tolist())
    train = [s for j, s in enumerate(samples) if j not in val_idx]
    val = [s for j, s in enumerate(samples) if j in val_idx]
    return train, val


def predict_samples(weights: PicnnWeights, samples) -> np.ndarray:
    X, Y, _, _ = samples_to_arrays(samples)
    return picnn_forward_batch(weights, X, Y)


def fit_scaler(X, Y, targets) -> InputScaler:
    """Standardization constants from the training split; zero-variance
    columns keep unit scale."""
    def safe_std(arr, axis=None):
        s = np.std(arr, axis=axis)
        return np.where(s > 0, s, 1.0) if np.ndim(s) else (s if s > 0 else 1.0)

    return InputScaler(
        x_mean=np.mean(X, axis=0),
        x_scale=np.asarray(safe_std(X, axis=0), dtype=float),
        y_mean=np.mean(Y, axis=0),
        y_scale=np.asarray(safe_std(Y, axis=0), dtype=float),
        out_scale=float(safe_std(targets)),
    )


def train(samples, arch: Optional[PicnnArch] = None,
          config: Optional[TrainConfig] = None):
    """Fit a partially input-convex network to degradation samples.

    Inputs and targets are standardized from training-split statistics
    (the optimizer then works at unit scale); the fitted constants are
    attached to the returned weights so the model consumes and produces
    physical units.  Returns (weights, TrainReport) with loss series in
    physical units.  Deterministic for a fixed seed, dataset, and
    platform.  Raises TrainingDivergedError when the loss goes
    non-finite.
    """
    if arch is None:
        arch = PicnnArch.default()
    if config is None:
        config = TrainConfig()
    train_set, val_set = split_samples(samples, config)
    Xtr, Ytr, ttr, _ = samples_to_arrays(train_set)
    Xva, Yva, tva, _ = samples_to_arrays(val_set)
    n = len(train_set)

    with np.errstate(over="ignore", invalid="ignore"):
        scaler = fit_scaler(Xtr, Ytr, ttr)
        Xtr_s = (Xtr - scaler.x_mean) / scaler.x_scale
        Ytr_s = (Ytr - scaler.y_mean) / scaler.y_scale
        ttr_s = ttr / scaler.out_scale
        Xva_s = (Xva - scaler.x_mean) / scaler.x_scale
        Yva_s = (Yva - scaler.y_mean) / scaler.y_scale
        tva_s = tva / scaler.out_scale
    to_physical = scaler.out_scale**2

    weights = init_picnn(arch, seed=config.seed)
    state = adam_init(weights)
    rng = np.random.default_rng(config.seed)
    report = TrainReport(
        n_train=n, n_val=len(val_set),
        holdout_cell_id=config.holdout_cell_id,
    )
    started = time.perf_counter()
    # overflow on the way to a diverged state is reported as a structured
    # error below, not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            lr = config.lr_at(epoch)
            perm = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                idx = perm[start:start + config.batch_size]
                Xb, Yb, tb = Xtr_s[idx], Ytr_s[idx], ttr_s[idx]
                try:
                    preds = picnn_forward_batch(weights, Xb, Yb)
                    upstream = 2.0 * (preds - tb) / idx.size
                    _, grads, _ = picnn_value_and_grads(weights, Xb, Yb,
                                                        upstream)
                    adam_step(weights, grads, state, lr,
                              batch_index=start // config.batch_size)
                except NonFiniteValueError as exc:
                    raise TrainingDivergedError(
                        f"training diverged at epoch {epoch}: {exc}",
                        epoch=epoch,
                        batch_index=exc.batch_index,
                    ) from exc
                # convexity must survive every step
                assert all(np.min(weights.W_z[i]) >= 0.0
                           for i in range(1, arch.k))
            ep_train = mse_loss(picnn_forward_batch(weights, Xtr_s, Ytr_s),
                                ttr_s) * to_physical
            ep_val = mse_loss(picnn_forward_batch(weights, Xva_s, Yva_s),
                              tva_s) * to_physical
            if not (np.isfinite(ep_train) and np.isfinite(ep_val)):
                raise TrainingDivergedError(
                    f"loss became non-finite at epoch {epoch}", epoch=epoch
                )
            report.train_mse.append(ep_train)
            report.val_mse.append(ep_val)
    weights.scaler = scaler
    weights.validate()
    report.wall_clock_s = time.perf_counter() - started
    report.final_weights = weights
    return weights, report
