"""Training loop: feature assembly, seeded epochs, history tracking."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import EmptyDatasetError
from ..geodata import NormalizationParams, normalize
from ..ingest import Dataset
from .model import (
    LayerSpec,
    ModelParams,
    backward,
    forward_batch,
    init_params,
)
from .optim import AdamState, TrainingConfig, adam_step

log = logging.getLogger(__name__)

INPUT_MODES = ("tx", "both")


def input_length_for_mode(input_mode: str) -> int:
    """Model input length: 2 for the transmitter position, 4 for both ends."""
    if input_mode not in INPUT_MODES:
        raise ValueError(f"input_mode must be one of {INPUT_MODES}")
    return 2 if input_mode == "tx" else 4


def dataset_features(
    ds: Dataset, norm: NormalizationParams, input_mode: str = "tx"
) -> np.ndarray:
    """Normalized position sequences, shape (n, 1, 2) or (n, 1, 4)."""
    length = input_length_for_mode(input_mode)
    rows = np.empty((len(ds.samples), 1, length))
    for i, s in enumerate(ds.samples):
        tx = normalize(s.tx_pos, norm)
        if input_mode == "tx":
            rows[i, 0] = (tx.u, tx.v)
        else:
            if s.rx_pos is None:
                raise ValueError("input_mode 'both' needs rx positions in the dataset")
            rx = normalize(s.rx_pos, norm)
            rows[i, 0] = (tx.u, tx.v, rx.u, rx.v)
    return rows


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_top1: float


def top1_accuracy(
    params: ModelParams, spec: LayerSpec, x: np.ndarray, labels: np.ndarray
) -> float:
    if len(labels) == 0:
        return float("nan")
    probs = forward_batch(params, spec, x)
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def train(
    train_ds: Dataset,
    val_ds: Dataset,
    spec: LayerSpec,
    config: TrainingConfig,
    norm: NormalizationParams,
    input_mode: str = "tx",
) -> tuple[ModelParams, list[EpochRecord]]:
    """Train from a seeded init; returns final-epoch weights and per-epoch history.

    Weight init and the per-epoch shuffles all come from one generator seeded
    with ``config.seed``, so a rerun reproduces the history bit for bit. No
    early stopping: validation accuracy is recorded but never used for
    selection.
    """
    if not train_ds.samples:
        raise EmptyDatasetError("cannot train on an empty dataset")
    x_train = dataset_features(train_ds, norm, input_mode)
    y_train = train_ds.optimal_indices()
    x_val = dataset_features(val_ds, norm, input_mode)
    y_val = val_ds.optimal_indices()

    rng = np.random.default_rng(config.seed)
    params = init_params(spec, rng)
    state = AdamState.zeros(params)
    n = len(y_train)
    history: list[EpochRecord] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grads = backward(params, spec, x_train[batch], y_train[batch])
            params, state = adam_step(params, grads, state, config)
            loss_sum += loss * len(batch)
        record = EpochRecord(
            epoch=epoch,
            train_loss=loss_sum / n,
            val_top1=top1_accuracy(params, spec, x_val, y_val),
        )
        history.append(record)
        log.info(
            "epoch %d: train_loss=%.6f val_top1=%.4f",
            record.epoch,
            record.train_loss,
            record.val_top1,
        )
    return params, history


def write_history(history: list[EpochRecord], path: str | Path) -> Path:
    path = Path(path)
    lines = ["epoch,train_loss,val_top1"]
    lines += [
        f"{r.epoch},{r.train_loss!r},{r.val_top1!r}" for r in history
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_history(path: str | Path) -> list[EpochRecord]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    records = []
    for line in lines[1:]:
        epoch, loss, top1 = line.split(",")
        records.append(EpochRecord(int(epoch), float(loss), float(top1)))
    return records
