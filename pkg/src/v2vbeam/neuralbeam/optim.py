"""Adam with bias correction and coupled L2 weight decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams


@dataclass(frozen=True)
class TrainingConfig:
    """Optimizer and loop settings; defaults match the reference training setup."""

    learning_rate: float = 0.01
    weight_decay: float = 1e-4
    batch_size: int = 128
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


@dataclass
class AdamState:
    """First/second moment estimates per tensor plus the step counter."""

    step: int
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def zeros(cls, params: ModelParams) -> "AdamState":
        return cls(
            step=0,
            m=[np.zeros_like(a) for a in params.arrays()],
            v=[np.zeros_like(a) for a in params.arrays()],
        )


def adam_step(
    params: ModelParams,
    gradients: ModelParams,
    state: AdamState,
    config: TrainingConfig,
) -> tuple[ModelParams, AdamState]:
    """One update; weight decay enters the gradient before the moment updates."""
    t = state.step + 1
    new_arrays, new_m, new_v = [], [], []
    bc1 = 1.0 - config.beta1**t
    bc2 = 1.0 - config.beta2**t
    for p, g, m, v in zip(params.arrays(), gradients.arrays(), state.m, state.v):
        g = g + config.weight_decay * p
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g * g
        step = config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
        new_arrays.append(p - step)
        new_m.append(m)
        new_v.append(v)
    return params.with_arrays(new_arrays), AdamState(step=t, m=new_m, v=new_v)
