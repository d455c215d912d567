"""Gradient-weighted class activation maps.

The gradient of the target pre-softmax logit is propagated analytically
back to the last convolution's activations (taken post-ReLU when a ReLU
immediately follows): Dense layers transpose, GlobalAvgPool fans out
1/(H*W), ReLU masks on its input sign (zero subgradient at 0), MaxPool
routes to its recorded argmax, Flatten reshapes, BatchNorm rescales,
Dropout passes through. Channel weights are spatial means of that
gradient; the map is the ReLU of the weighted activation sum, min-max
normalized (an all-zero map stays zero, a flat positive one becomes all
ones) and bilinearly upsampled to the network input resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .engine import ForwardTrace, forward, preprocess
from .errors import NoConvLayer
from .imaging import Raster
from .model import ModelGraph


@dataclass(frozen=True)
class GradCamResult:
    heatmap: np.ndarray  # (input_side, input_side) float32 in [0, 1]
    alphas: np.ndarray  # per-channel weights
    activation_grad: np.ndarray  # d logit / d A, same shape as activations
    activations: np.ndarray  # A, the maps being explained
    activation_layer: int  # index of the layer producing A


def last_conv_activation_index(graph: ModelGraph) -> int:
    conv_indices = [i for i, layer in enumerate(graph.layers) if layer.kind == "Conv2d"]
    if not conv_indices:
        raise NoConvLayer("model has no convolution layer")
    idx = conv_indices[-1]
    if idx + 1 < len(graph.layers) and graph.layers[idx + 1].kind == "ReLU":
        return idx + 1
    return idx


def activation_gradient(
    graph: ModelGraph, trace: ForwardTrace, activation_layer: int, target_class: int
) -> np.ndarray:
    """Backpropagate d logit[target] / d activation through the tail layers."""
    logits = trace.outputs[-1]
    grad = np.zeros_like(logits, dtype=np.float64)
    grad[0, target_class] = 1.0
    for i in range(len(graph.layers) - 1, activation_layer, -1):
        layer = graph.layers[i]
        below = trace.outputs[i - 1]
        if layer.kind == "Dense":
            grad = grad @ layer.tensor("weight").astype(np.float64)
        elif layer.kind == "Flatten":
            grad = grad.reshape(below.shape)
        elif layer.kind == "GlobalAvgPool":
            n, c, h, w = below.shape
            grad = np.broadcast_to(grad[:, :, None, None] / (h * w), below.shape).copy()
        elif layer.kind == "ReLU":
            grad = grad * (below > 0)
        elif layer.kind == "MaxPool":
            args = trace.pool_args[i]
            n, c, h, w = below.shape
            routed = np.zeros((n, c, h * w), dtype=np.float64)
            np.add.at(
                routed,
                (
                    np.arange(n)[:, None, None],
                    np.arange(c)[None, :, None],
                    args.reshape(n, c, -1),
                ),
                grad.reshape(n, c, -1),
            )
            grad = routed.reshape(below.shape)
        elif layer.kind == "BatchNorm":
            scale = layer.tensor("gamma").astype(np.float64) / np.sqrt(
                layer.tensor("var").astype(np.float64) + layer.attr("eps")
            )
            grad = grad * scale[None, :, None, None]
        elif layer.kind in ("Dropout", "Softmax"):
            continue
        else:
            raise NoConvLayer(f"cannot differentiate through {layer.kind} in the tail")
    return grad


def normalize_map(cam: np.ndarray) -> np.ndarray:
    mx = float(cam.max())
    mn = float(cam.min())
    if mx > mn:
        return ((cam - mn) / (mx - mn)).astype(np.float32)
    if mx > 0.0:
        return np.ones_like(cam, dtype=np.float32)
    return np.zeros_like(cam, dtype=np.float32)


def grad_cam(graph: ModelGraph, raster: Raster, target_class: int) -> GradCamResult:
    if not 0 <= target_class < len(graph.class_names):
        raise ValueError(f"target_class {target_class} out of range")
    activation_layer = last_conv_activation_index(graph)
    _, trace = forward(graph, preprocess(graph, raster))
    activations = trace.outputs[activation_layer]
    grad = activation_gradient(graph, trace, activation_layer, target_class)
    alphas = grad[0].mean(axis=(1, 2))
    cam = np.maximum((alphas[:, None, None] * activations[0].astype(np.float64)).sum(axis=0), 0.0)
    normalized = normalize_map(cam)
    upsampled = kernels.bilinear_resize(
        np.ascontiguousarray(normalized[..., None]), graph.input_side, graph.input_side
    )[..., 0]
    return GradCamResult(
        heatmap=np.clip(upsampled, 0.0, 1.0),
        alphas=alphas,
        activation_grad=grad,
        activations=activations,
        activation_layer=activation_layer,
    )
