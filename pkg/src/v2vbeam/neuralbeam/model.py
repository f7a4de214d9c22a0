"""Model definition: spec, parameters, forward/backward, top-M prediction.

The classifier maps a short position sequence to beam probabilities:
three conv blocks (conv -> ReLU -> maxpool), flatten, a hidden dense layer
with ReLU, an output dense layer, softmax. Defaults follow the smallest
conventional ladder that keeps a length-2 input valid through all blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ShapeMismatchError
from ..geodata import GeoPosition, NormalizationParams, normalize
from . import layers


@dataclass(frozen=True)
class ConvBlockSpec:
    out_channels: int
    kernel: int = 3
    pool: int = 2

    def __post_init__(self):
        if min(self.out_channels, self.kernel, self.pool) < 1:
            raise ValueError("conv block counts must be >= 1")

    @property
    def padding(self) -> int:
        return self.kernel // 2


@dataclass(frozen=True)
class LayerSpec:
    """Architecture hyperparameters; immutable and checkpoint-serializable."""

    in_channels: int = 1
    in_length: int = 2
    conv_blocks: tuple[ConvBlockSpec, ...] = (
        ConvBlockSpec(32),
        ConvBlockSpec(64),
        ConvBlockSpec(128),
    )
    dense_widths: tuple[int, ...] = (256, 64)
    classes: int = 64

    def __post_init__(self):
        if not self.conv_blocks:
            raise ValueError("need at least one conv block")
        if not self.dense_widths or self.dense_widths[-1] != self.classes:
            raise ValueError("last dense width must equal the number of classes")
        if min(self.in_channels, self.in_length, self.classes) < 1:
            raise ValueError("all spec counts must be >= 1")
        if min(self.dense_widths) < 1:
            raise ValueError("dense widths must be >= 1")
        self.flatten_size()  # rejects shapes the conv ladder cannot carry

    def feature_shapes(self) -> list[tuple[int, int]]:
        """(channels, length) after each conv block."""
        shapes = []
        channels, length = self.in_channels, self.in_length
        for block in self.conv_blocks:
            length = length + 2 * block.padding - block.kernel + 1
            if length < 1:
                raise ValueError(
                    f"kernel {block.kernel} does not fit length {length} features"
                )
            length = -(-length // block.pool)
            channels = block.out_channels
            shapes.append((channels, length))
        return shapes

    def flatten_size(self) -> int:
        channels, length = self.feature_shapes()[-1]
        return channels * length


@dataclass
class ModelParams:
    """All learnable tensors, ordered to match the spec's layers."""

    conv_weights: list[np.ndarray]  # each (C_out, C_in, K)
    conv_biases: list[np.ndarray]  # each (C_out,)
    dense_weights: list[np.ndarray]  # each (n_out, n_in)
    dense_biases: list[np.ndarray]  # each (n_out,)

    def arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.conv_weights, self.conv_biases):
            out += [w, b]
        for w, b in zip(self.dense_weights, self.dense_biases):
            out += [w, b]
        return out

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        names: list[tuple[str, np.ndarray]] = []
        for i, (w, b) in enumerate(zip(self.conv_weights, self.conv_biases)):
            names += [(f"conv{i}.weight", w), (f"conv{i}.bias", b)]
        for i, (w, b) in enumerate(zip(self.dense_weights, self.dense_biases)):
            names += [(f"dense{i}.weight", w), (f"dense{i}.bias", b)]
        return names

    def with_arrays(self, arrays: list[np.ndarray]) -> "ModelParams":
        """Rebuild the same structure from a flat array list (arrays() order)."""
        n_conv = len(self.conv_weights)
        n_dense = len(self.dense_weights)
        it = iter(arrays)
        pairs = [(next(it), next(it)) for _ in range(n_conv + n_dense)]
        return ModelParams(
            conv_weights=[w for w, _ in pairs[:n_conv]],
            conv_biases=[b for _, b in pairs[:n_conv]],
            dense_weights=[w for w, _ in pairs[n_conv:]],
            dense_biases=[b for _, b in pairs[n_conv:]],
        )


@dataclass(frozen=True)
class Prediction:
    """Class probabilities plus the ranked candidate indices."""

    probabilities: np.ndarray
    top_m: tuple[int, ...]

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        if abs(float(p.sum()) - 1.0) > 1e-9 or np.any(p < 0) or np.any(p > 1):
            raise ValueError("probabilities must form a distribution")


def init_params(spec: LayerSpec, rng: np.random.Generator) -> ModelParams:
    """Uniform init in +-1/sqrt(fan_in) per layer; bounded so the first-epoch
    loss starts near log(classes)."""
    conv_w, conv_b, dense_w, dense_b = [], [], [], []
    in_channels = spec.in_channels
    for block in spec.conv_blocks:
        bound = 1.0 / np.sqrt(in_channels * block.kernel)
        conv_w.append(
            rng.uniform(-bound, bound, (block.out_channels, in_channels, block.kernel))
        )
        conv_b.append(rng.uniform(-bound, bound, block.out_channels))
        in_channels = block.out_channels
    n_in = spec.flatten_size()
    for width in spec.dense_widths:
        bound = 1.0 / np.sqrt(n_in)
        dense_w.append(rng.uniform(-bound, bound, (width, n_in)))
        dense_b.append(rng.uniform(-bound, bound, width))
        n_in = width
    return ModelParams(conv_w, conv_b, dense_w, dense_b)


def zeros_like_params(params: ModelParams) -> ModelParams:
    return params.with_arrays([np.zeros_like(a) for a in params.arrays()])


def _check_input(spec: LayerSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[1:] != (spec.in_channels, spec.in_length):
        raise ShapeMismatchError(
            f"input {x.shape} != (batch, {spec.in_channels}, {spec.in_length})"
        )
    return x


def forward_batch(
    params: ModelParams, spec: LayerSpec, x: np.ndarray
) -> np.ndarray:
    """Probabilities for a batch, shape (B, classes)."""
    probs, _ = _forward_with_cache(params, spec, x)
    return probs


def _forward_with_cache(params: ModelParams, spec: LayerSpec, x: np.ndarray):
    x = _check_input(spec, x)
    caches = []
    h = x
    for block, w, b in zip(spec.conv_blocks, params.conv_weights, params.conv_biases):
        pre, cols = layers.conv1d_forward(h, w, b, block.padding)
        act, mask = layers.relu_forward(pre)
        pooled, argmax = layers.maxpool1d_forward(act, block.pool)
        caches.append(("conv", cols, mask, argmax, act.shape[2]))
        h = pooled
    batch = h.shape[0]
    flat_shape = h.shape
    h = h.reshape(batch, -1)
    if h.shape[1] != spec.flatten_size():
        raise ShapeMismatchError(
            f"flattened width {h.shape[1]} != spec {spec.flatten_size()}"
        )
    n_dense = len(params.dense_weights)
    for i, (w, b) in enumerate(zip(params.dense_weights, params.dense_biases)):
        pre, x_in = layers.dense_forward(h, w, b)
        if i < n_dense - 1:
            act, mask = layers.relu_forward(pre)
            caches.append(("dense", x_in, mask))
            h = act
        else:
            caches.append(("dense", x_in, None))
            h = pre
    probs = layers.softmax(h)
    return probs, (caches, flat_shape)


def backward(
    params: ModelParams, spec: LayerSpec, x: np.ndarray, labels: np.ndarray
) -> tuple[float, ModelParams]:
    """Mean cross-entropy over the batch and its gradient for every tensor.

    Uses the softmax/cross-entropy identity d_logits = probs - one_hot, exact
    wherever the loss's 1e-12 probability floor is inactive.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != np.shape(x)[0] or labels.shape[0] == 0:
        raise ShapeMismatchError("labels must be a non-empty vector matching the batch")
    probs, (caches, flat_shape) = _forward_with_cache(params, spec, x)
    loss = layers.cross_entropy_batch(probs, labels)
    batch = len(labels)
    d_logits = probs.copy()
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch

    grads = zeros_like_params(params)
    d_h = d_logits
    for i in range(len(params.dense_weights) - 1, -1, -1):
        kind, x_in, mask = caches.pop()
        assert kind == "dense"
        if mask is not None:
            d_h = layers.relu_backward(d_h, mask)
        d_h, grads.dense_weights[i], grads.dense_biases[i] = layers.dense_backward(
            d_h, x_in, params.dense_weights[i]
        )
    d_h = d_h.reshape(flat_shape)
    for i in range(len(params.conv_weights) - 1, -1, -1):
        kind, cols, mask, argmax, pre_pool_len = caches.pop()
        assert kind == "conv"
        d_h = layers.maxpool1d_backward(d_h, argmax, pre_pool_len)
        d_h = layers.relu_backward(d_h, mask)
        d_h, grads.conv_weights[i], grads.conv_biases[i] = layers.conv1d_backward(
            d_h, cols, params.conv_weights[i], spec.conv_blocks[i].padding
        )
    return loss, grads


def rank_beams(probabilities: np.ndarray, m: int) -> tuple[int, ...]:
    """Indices of the m highest probabilities, descending, lowest index on ties."""
    order = np.argsort(-probabilities, kind="stable")
    return tuple(int(i) for i in order[:m])


def forward(params: ModelParams, spec: LayerSpec, features: np.ndarray) -> Prediction:
    """Single-sample forward pass; returns the full beam ranking."""
    features = np.asarray(features, dtype=np.float64)
    if features.size != spec.in_channels * spec.in_length:
        raise ShapeMismatchError(
            f"feature vector of size {features.size} != "
            f"{spec.in_channels} x {spec.in_length}"
        )
    x = features.reshape(1, spec.in_channels, spec.in_length)
    probs = forward_batch(params, spec, x)[0]
    return Prediction(probabilities=probs, top_m=rank_beams(probs, spec.classes))


def predict_top_m(
    params: ModelParams,
    spec: LayerSpec,
    pos: GeoPosition,
    norm: NormalizationParams,
    m: int,
) -> Prediction:
    """Normalize a raw position, run the model, keep the m best beams."""
    if not 1 <= m <= spec.classes:
        raise ValueError(f"m must be in [1, {spec.classes}]")
    if spec.in_channels * spec.in_length != 2:
        raise ShapeMismatchError(
            "predict_top_m feeds a single position; this spec expects input "
            f"width {spec.in_channels} x {spec.in_length}"
        )
    n = normalize(pos, norm)
    x = np.array([n.u, n.v]).reshape(1, spec.in_channels, spec.in_length)
    probs = forward_batch(params, spec, x)[0]
    return Prediction(probabilities=probs, top_m=rank_beams(probs, m))


def predict_top_m_batch(
    params: ModelParams, spec: LayerSpec, x: np.ndarray, m: int
) -> list[list[int]]:
    """Ranked candidate lists for a feature batch."""
    probs = forward_batch(params, spec, x)
    return [list(rank_beams(p, m)) for p in probs]


CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    params: ModelParams,
    spec: LayerSpec,
    norm: NormalizationParams,
    seed: int,
    input_mode: str = "tx",
) -> Path:
    """Single JSON document: version, spec, normalization, seed, all tensors."""
    doc = {
        "version": CHECKPOINT_VERSION,
        "seed": seed,
        "input_mode": input_mode,
        "spec": {
            "in_channels": spec.in_channels,
            "in_length": spec.in_length,
            "conv_blocks": [
                {"out_channels": b.out_channels, "kernel": b.kernel, "pool": b.pool}
                for b in spec.conv_blocks
            ],
            "dense_widths": list(spec.dense_widths),
            "classes": spec.classes,
        },
        "normalization": {
            "lat_min": norm.lat_min,
            "lat_max": norm.lat_max,
            "lon_min": norm.lon_min,
            "lon_max": norm.lon_max,
        },
        "tensors": {name: arr.tolist() for name, arr in params.named_arrays()},
    }
    path = Path(path)
    path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
    return path


def load_checkpoint(
    path: str | Path,
) -> tuple[ModelParams, LayerSpec, NormalizationParams, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    spec_doc = doc["spec"]
    spec = LayerSpec(
        in_channels=spec_doc["in_channels"],
        in_length=spec_doc["in_length"],
        conv_blocks=tuple(
            ConvBlockSpec(b["out_channels"], b["kernel"], b["pool"])
            for b in spec_doc["conv_blocks"]
        ),
        dense_widths=tuple(spec_doc["dense_widths"]),
        classes=spec_doc["classes"],
    )
    norm_doc = doc["normalization"]
    norm = NormalizationParams(
        norm_doc["lat_min"], norm_doc["lat_max"], norm_doc["lon_min"], norm_doc["lon_max"]
    )
    tensors = doc["tensors"]
    params = ModelParams(
        conv_weights=[
            np.array(tensors[f"conv{i}.weight"]) for i in range(len(spec.conv_blocks))
        ],
        conv_biases=[
            np.array(tensors[f"conv{i}.bias"]) for i in range(len(spec.conv_blocks))
        ],
        dense_weights=[
            np.array(tensors[f"dense{i}.weight"]) for i in range(len(spec.dense_widths))
        ],
        dense_biases=[
            np.array(tensors[f"dense{i}.bias"]) for i in range(len(spec.dense_widths))
        ],
    )
    meta = {"seed": doc["seed"], "input_mode": doc.get("input_mode", "tx")}
    return params, spec, norm, meta
