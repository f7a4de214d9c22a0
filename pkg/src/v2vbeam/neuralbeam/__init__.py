"""Position-to-beam convolutional classifier, trained from scratch."""

from .layers import (
    conv1d_backward,
    conv1d_forward,
    cross_entropy,
    cross_entropy_batch,
    dense_backward,
    dense_forward,
    maxpool1d_backward,
    maxpool1d_forward,
    relu_backward,
    relu_forward,
    softmax,
)
from .model import (
    ConvBlockSpec,
    LayerSpec,
    ModelParams,
    Prediction,
    backward,
    forward,
    forward_batch,
    init_params,
    load_checkpoint,
    predict_top_m,
    predict_top_m_batch,
    rank_beams,
    save_checkpoint,
    zeros_like_params,
)
from .optim import AdamState, TrainingConfig, adam_step
from .training import (
    EpochRecord,
    dataset_features,
    input_length_for_mode,
    read_history,
    top1_accuracy,
    train,
    write_history,
)

__all__ = [
    "AdamState",
    "ConvBlockSpec",
    "EpochRecord",
    "LayerSpec",
    "ModelParams",
    "Prediction",
    "TrainingConfig",
    "adam_step",
    "backward",
    "conv1d_backward",
    "conv1d_forward",
    "cross_entropy",
    "cross_entropy_batch",
    "dataset_features",
    "dense_backward",
    "dense_forward",
    "forward",
    "forward_batch",
    "init_params",
    "input_length_for_mode",
    "load_checkpoint",
    "maxpool1d_backward",
    "maxpool1d_forward",
    "predict_top_m",
    "predict_top_m_batch",
    "rank_beams",
    "read_history",
    "relu_backward",
    "relu_forward",
    "save_checkpoint",
    "softmax",
    "top1_accuracy",
    "train",
    "write_history",
    "zeros_like_params",
]
