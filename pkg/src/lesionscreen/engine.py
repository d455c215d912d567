"""Forward pass, stable softmax, and image-level prediction.

Activations flow as float32 NCHW arrays; dot products accumulate in
float64 inside the kernels. Dropout is an exact identity and a trailing
Softmax layer is a marker: forward always returns pre-softmax logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NonFiniteActivation
from .imaging import Raster, crop_resize
from .model import ModelGraph

MPOX_LABEL = "Mpox"
DEFAULT_THRESHOLD = 0.5


@dataclass
class ForwardTrace:
    """Per-layer outputs plus max-pool routing, retained for Grad-CAM."""

    outputs: list[np.ndarray]
    pool_args: dict[int, np.ndarray]


@dataclass(frozen=True)
class Prediction:
    probabilities: tuple[float, ...]
    argmax_label: str
    mpox_probability: float
    suspected_mpox: bool


def _check_finite(arr: np.ndarray, where: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteActivation(f"non-finite values after {where}")


def forward(graph: ModelGraph, x: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    """Run all layers on a (1, 3, side, side) float32 input."""
    trace = ForwardTrace(outputs=[], pool_args={})
    out = np.ascontiguousarray(x, dtype=np.float32)
    for i, layer in enumerate(graph.layers):
        if layer.kind == "Conv2d":
            out = kernels.conv2d(
                out,
                layer.tensor("weight"),
                layer.tensor("bias"),
                layer.attr("stride"),
                layer.attr("pad"),
            )
        elif layer.kind == "ReLU":
            out = np.maximum(out, np.float32(0.0))
        elif layer.kind == "MaxPool":
            out, args = kernels.maxpool2d(out, layer.attr("k"), layer.attr("stride"))
            trace.pool_args[i] = args
        elif layer.kind == "BatchNorm":
            scale = (
                layer.tensor("gamma").astype(np.float64)
                / np.sqrt(layer.tensor("var").astype(np.float64) + layer.attr("eps"))
            )
            shift = layer.tensor("beta").astype(np.float64) - scale * layer.tensor(
                "mean"
            ).astype(np.float64)
            out = (
                out * scale.astype(np.float32)[None, :, None, None]
                + shift.astype(np.float32)[None, :, None, None]
            )
        elif layer.kind == "GlobalAvgPool":
            out = out.mean(axis=(2, 3), dtype=np.float64).astype(np.float32)
        elif layer.kind == "Flatten":
            out = out.reshape(out.shape[0], -1)
        elif layer.kind == "Dense":
            out = kernels.dense(out, layer.tensor("weight"), layer.tensor("bias"))
        elif layer.kind in ("Dropout", "Softmax"):
            pass
        _check_finite(out, f"layer {i} ({layer.kind})")
        trace.outputs.append(out)
    return out, trace


def replay_tail(graph: ModelGraph, trace: ForwardTrace, start_index: int, activation: np.ndarray) -> np.ndarray:
    """Recompute logits from a substituted activation at layer start_index.

    Max-pool routing is frozen to the original trace so the tail is the
    exact map Grad-CAM differentiates (used by finite-difference checks).
    """
    out = np.ascontiguousarray(activation, dtype=np.float32)
    for i in range(start_index + 1, len(graph.layers)):
        layer = graph.layers[i]
        if layer.kind == "ReLU":
            out = np.maximum(out, np.float32(0.0))
        elif layer.kind == "MaxPool":
            n, c, h, w = out.shape
            args = trace.pool_args[i]
            flat = out.reshape(n, c, h * w)
            gathered = np.take_along_axis(flat, args.reshape(n, c, -1), axis=2)
            out = gathered.reshape(args.shape).astype(np.float32)
        elif layer.kind == "BatchNorm":
            scale = (
                layer.tensor("gamma").astype(np.float64)
                / np.sqrt(layer.tensor("var").astype(np.float64) + layer.attr("eps"))
            )
            shift = layer.tensor("beta").astype(np.float64) - scale * layer.tensor(
                "mean"
            ).astype(np.float64)
            out = (
                out * scale.astype(np.float32)[None, :, None, None]
                + shift.astype(np.float32)[None, :, None, None]
            )
        elif layer.kind == "GlobalAvgPool":
            out = out.mean(axis=(2, 3), dtype=np.float64).astype(np.float32)
        elif layer.kind == "Flatten":
            out = out.reshape(out.shape[0], -1)
        elif layer.kind == "Dense":
            out = kernels.dense(out, layer.tensor("weight"), layer.tensor("bias"))
        elif layer.kind in ("Dropout", "Softmax"):
            pass
        else:
            raise NonFiniteActivation(f"unexpected {layer.kind} after the last conv")
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax in float64; sums to 1 within 1e-6."""
    z = logits.astype(np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def preprocess(graph: ModelGraph, raster: Raster) -> np.ndarray:
    """Center-crop, resize, and normalize into a (1, 3, side, side) tensor."""
    square = crop_resize(raster, graph.input_side)
    x01 = square.pixels.astype(np.float32) / np.float32(255.0)
    mean = np.asarray(graph.norm_mean, dtype=np.float32)
    scale = np.asarray(graph.norm_scale, dtype=np.float32)
    normalized = (x01 - mean) / scale
    return normalized.transpose(2, 0, 1)[None, ...]


def predict(
    graph: ModelGraph, raster: Raster, threshold: float = DEFAULT_THRESHOLD
) -> Prediction:
    logits, _ = forward(graph, preprocess(graph, raster))
    probs = softmax(logits)[0]
    mpox_index = graph.class_names.index(MPOX_LABEL)
    mpox_probability = float(probs[mpox_index])
    return Prediction(
        probabilities=tuple(float(p) for p in probs),
        argmax_label=graph.class_names[int(np.argmax(probs))],
        mpox_probability=mpox_probability,
        suspected_mpox=mpox_probability >= threshold,
    )
