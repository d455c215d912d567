"""Sequential CNN graphs and the LSW1 portable weight format.

LSW1 byte layout (all integers little-endian, floats IEEE 754 binary32):

    offset  size  field
    0       4     magic "LSW1"
    4       4     u32 format version (currently 1)
    8       32    sha256 of the payload (doubles as the model id)
    40      4     u32 payload length in bytes
    44      ...   payload

    payload := u32 input_side
               u32 class count, then per class u16 name length + utf-8 name
               f32[3] normalization mean, f32[3] normalization scale
               u32 layer count, then the layers in graph order

    layer   := u8 kind tag, kind-specific attributes, kind-implied tensors
               tensor := u8 ndim, u32 extents..., raw f32 data (row-major)

    kind tags and their attributes / tensors:
      1 Conv2d   u32 out_ch, k, stride, pad     weight (o,c,k,k), bias (o,)
      2 ReLU     -                              -
      3 MaxPool  u32 k, stride                  -
      4 BatchNorm f32 eps                       gamma, beta, mean, var (c,)
      5 GlobalAvgPool -                         -
      6 Flatten  -                              -
      7 Dense    u32 out                        weight (o,d), bias (o,)
      8 Dropout  f32 rate                       -
      9 Softmax  -                              -

Normalization: a raster channel x in [0, 255] enters the network as
(x / 255 - mean[c]) / scale[c]. Dropout is identity at inference; its
rate is carried for documentation only.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import BadMagic, ShapeMismatch, TruncatedFile
from .manifest import CLASS_LABELS

MAGIC = b"LSW1"
FORMAT_VERSION = 1

_KIND_TAGS = {
    "Conv2d": 1,
    "ReLU": 2,
    "MaxPool": 3,
    "BatchNorm": 4,
    "GlobalAvgPool": 5,
    "Flatten": 6,
    "Dense": 7,
    "Dropout": 8,
    "Softmax": 9,
}
_TAG_KINDS = {tag: kind for kind, tag in _KIND_TAGS.items()}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    attrs: dict
    tensors: dict

    def attr(self, name: str):
        return self.attrs[name]

    def tensor(self, name: str) -> np.ndarray:
        return self.tensors[name]


def conv2d_layer(weight: np.ndarray, bias: np.ndarray, stride: int = 1, pad: int = 0) -> LayerSpec:
    out_ch, _, k, _ = weight.shape
    return LayerSpec(
        "Conv2d",
        {"out_ch": int(out_ch), "k": int(k), "stride": int(stride), "pad": int(pad)},
        {"weight": np.asarray(weight, dtype=np.float32), "bias": np.asarray(bias, dtype=np.float32)},
    )


def relu_layer() -> LayerSpec:
    return LayerSpec("ReLU", {}, {})


def maxpool_layer(k: int, stride: int) -> LayerSpec:
    return LayerSpec("MaxPool", {"k": int(k), "stride": int(stride)}, {})


def batchnorm_layer(gamma, beta, mean, var, eps: float = 1e-5) -> LayerSpec:
    tensors = {
        "gamma": np.asarray(gamma, dtype=np.float32),
        "beta": np.asarray(beta, dtype=np.float32),
        "mean": np.asarray(mean, dtype=np.float32),
        "var": np.asarray(var, dtype=np.float32),
    }
    return LayerSpec("BatchNorm", {"eps": float(eps)}, tensors)


def global_avg_pool_layer() -> LayerSpec:
    return LayerSpec("GlobalAvgPool", {}, {})


def flatten_layer() -> LayerSpec:
    return LayerSpec("Flatten", {}, {})


def dense_layer(weight: np.ndarray, bias: np.ndarray) -> LayerSpec:
    return LayerSpec(
        "Dense",
        {"out": int(weight.shape[0])},
        {"weight": np.asarray(weight, dtype=np.float32), "bias": np.asarray(bias, dtype=np.float32)},
    )


def dropout_layer(rate: float) -> LayerSpec:
    return LayerSpec("Dropout", {"rate": float(rate)}, {})


def softmax_layer() -> LayerSpec:
    return LayerSpec("Softmax", {}, {})


@dataclass(frozen=True)
class ModelGraph:
    layers: tuple[LayerSpec, ...]
    class_names: tuple[str, ...]
    input_side: int
    norm_mean: tuple[float, float, float] = (0.5, 0.5, 0.5)
    norm_scale: tuple[float, float, float] = (0.5, 0.5, 0.5)
    model_id: str = ""


def validate_graph(graph: ModelGraph) -> tuple[int, ...]:
    """Propagate shapes through the graph; raises ShapeMismatch on conflict."""
    if len(graph.class_names) != 6:
        raise ShapeMismatch(f"expected 6 class names, got {len(graph.class_names)}")
    if graph.input_side < 1:
        raise ShapeMismatch("input_side must be >= 1")
    shape: tuple[int, ...] = (3, graph.input_side, graph.input_side)
    for i, layer in enumerate(graph.layers):
        where = f"layer {i} ({layer.kind})"
        if layer.kind == "Conv2d":
            if len(shape) != 3:
                raise ShapeMismatch(f"{where}: needs a (c,h,w) input, got {shape}")
            c, h, w = shape
            weight = layer.tensor("weight")
            k, stride, pad = layer.attr("k"), layer.attr("stride"), layer.attr("pad")
            if weight.shape != (layer.attr("out_ch"), c, k, k):
                raise ShapeMismatch(f"{where}: weight {weight.shape} vs input channels {c}")
            if layer.tensor("bias").shape != (layer.attr("out_ch"),):
                raise ShapeMismatch(f"{where}: bias shape {layer.tensor('bias').shape}")
            oh = (h + 2 * pad - k) // stride + 1
            ow = (w + 2 * pad - k) // stride + 1
            if oh < 1 or ow < 1:
                raise ShapeMismatch(f"{where}: kernel {k} too large for {h}x{w}")
            shape = (layer.attr("out_ch"), oh, ow)
        elif layer.kind == "MaxPool":
            if len(shape) != 3:
                raise ShapeMismatch(f"{where}: needs a (c,h,w) input, got {shape}")
            c, h, w = shape
            k, stride = layer.attr("k"), layer.attr("stride")
            if h < k or w < k:
                raise ShapeMismatch(f"{where}: window {k} too large for {h}x{w}")
            shape = (c, (h - k) // stride + 1, (w - k) // stride + 1)
        elif layer.kind == "BatchNorm":
            if len(shape) != 3:
                raise ShapeMismatch(f"{where}: needs a (c,h,w) input, got {shape}")
            for name in ("gamma", "beta", "mean", "var"):
                if layer.tensor(name).shape != (shape[0],):
                    raise ShapeMismatch(f"{where}: {name} shape vs {shape[0]} channels")
        elif layer.kind == "GlobalAvgPool":
            if len(shape) != 3:
                raise ShapeMismatch(f"{where}: needs a (c,h,w) input, got {shape}")
            shape = (shape[0],)
        elif layer.kind == "Flatten":
            if len(shape) != 3:
                raise ShapeMismatch(f"{where}: needs a (c,h,w) input, got {shape}")
            shape = (shape[0] * shape[1] * shape[2],)
        elif layer.kind == "Dense":
            if len(shape) != 1:
                raise ShapeMismatch(f"{where}: needs a flat input, got {shape}")
            weight = layer.tensor("weight")
            if weight.shape != (layer.attr("out"), shape[0]):
                raise ShapeMismatch(f"{where}: weight {weight.shape} vs input {shape[0]}")
            if layer.tensor("bias").shape != (layer.attr("out"),):
                raise ShapeMismatch(f"{where}: bias shape {layer.tensor('bias').shape}")
            shape = (layer.attr("out"),)
        elif layer.kind == "Softmax":
            if i != len(graph.layers) - 1:
                raise ShapeMismatch(f"{where}: Softmax must be the final layer")
            if len(shape) != 1:
                raise ShapeMismatch(f"{where}: needs a flat input, got {shape}")
        elif layer.kind in ("ReLU", "Dropout"):
            pass
        else:
            raise ShapeMismatch(f"{where}: unknown kind")
    if shape != (len(graph.class_names),):
        raise ShapeMismatch(f"final output {shape} != one logit per class")
    return shape


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"needed {n} bytes at offset {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32(self) -> float:
        return struct.unpack("<f", self.take(4))[0]

    def tensor(self) -> np.ndarray:
        ndim = self.u8()
        dims = tuple(self.u32() for _ in range(ndim))
        count = int(np.prod(dims)) if dims else 1
        raw = self.take(count * 4)
        return np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)


def _encode_tensor(out: bytearray, arr: np.ndarray) -> None:
    out.append(arr.ndim)
    for extent in arr.shape:
        out.extend(struct.pack("<I", extent))
    out.extend(np.ascontiguousarray(arr, dtype="<f4").tobytes())


_LAYER_TENSOR_NAMES = {
    "Conv2d": ("weight", "bias"),
    "BatchNorm": ("gamma", "beta", "mean", "var"),
    "Dense": ("weight", "bias"),
}


def _encode_payload(graph: ModelGraph) -> bytes:
    out = bytearray()
    out.extend(struct.pack("<I", graph.input_side))
    out.extend(struct.pack("<I", len(graph.class_names)))
    for name in graph.class_names:
        encoded = name.encode("utf-8")
        out.extend(struct.pack("<H", len(encoded)))
        out.extend(encoded)
    for value in (*graph.norm_mean, *graph.norm_scale):
        out.extend(struct.pack("<f", value))
    out.extend(struct.pack("<I", len(graph.layers)))
    for layer in graph.layers:
        out.append(_KIND_TAGS[layer.kind])
        if layer.kind == "Conv2d":
            for attr in ("out_ch", "k", "stride", "pad"):
                out.extend(struct.pack("<I", layer.attr(attr)))
        elif layer.kind == "MaxPool":
            for attr in ("k", "stride"):
                out.extend(struct.pack("<I", layer.attr(attr)))
        elif layer.kind == "BatchNorm":
            out.extend(struct.pack("<f", layer.attr("eps")))
        elif layer.kind == "Dense":
            out.extend(struct.pack("<I", layer.attr("out")))
        elif layer.kind == "Dropout":
            out.extend(struct.pack("<f", layer.attr("rate")))
        for name in _LAYER_TENSOR_NAMES.get(layer.kind, ()):
            _encode_tensor(out, layer.tensor(name))
    return bytes(out)


def serialize_model(graph: ModelGraph) -> bytes:
    """Encode a validated graph; the header hash becomes the model id."""
    validate_graph(graph)
    payload = _encode_payload(graph)
    digest = hashlib.sha256(payload).digest()
    header = MAGIC + struct.pack("<I", FORMAT_VERSION) + digest + struct.pack("<I", len(payload))
    return header + payload


def load_model(data: bytes) -> ModelGraph:
    if data[:4] != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {data[:4]!r}")
    reader = _Reader(data)
    reader.take(4)
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise BadMagic(f"unsupported format version {version}")
    digest = reader.take(32)
    payload_len = reader.u32()
    if reader.pos + payload_len > len(data):
        raise TruncatedFile(
            f"declared payload of {payload_len} bytes, file has {len(data) - reader.pos}"
        )
    input_side = reader.u32()
    n_classes = reader.u32()
    class_names = tuple(reader.take(reader.u16()).decode("utf-8") for _ in range(n_classes))
    norm = [reader.f32() for _ in range(6)]
    layer_count = reader.u32()
    layers = []
    for _ in range(layer_count):
        tag = reader.u8()
        kind = _TAG_KINDS.get(tag)
        if kind is None:
            raise TruncatedFile(f"unknown layer tag {tag}")
        attrs: dict = {}
        if kind == "Conv2d":
            attrs = {name: reader.u32() for name in ("out_ch", "k", "stride", "pad")}
        elif kind == "MaxPool":
            attrs = {name: reader.u32() for name in ("k", "stride")}
        elif kind == "BatchNorm":
            attrs = {"eps": reader.f32()}
        elif kind == "Dense":
            attrs = {"out": reader.u32()}
        elif kind == "Dropout":
            attrs = {"rate": reader.f32()}
        tensors = {name: reader.tensor() for name in _LAYER_TENSOR_NAMES.get(kind, ())}
        layers.append(LayerSpec(kind, attrs, tensors))
    graph = ModelGraph(
        layers=tuple(layers),
        class_names=class_names,
        input_side=input_side,
        norm_mean=tuple(norm[:3]),
        norm_scale=tuple(norm[3:]),
        model_id=digest.hex(),
    )
    validate_graph(graph)
    return graph


def save_model(graph: ModelGraph, path) -> ModelGraph:
    data = serialize_model(graph)
    with open(path, "wb") as fh:
        fh.write(data)
    return replace(graph, model_id=hashlib.sha256(data[44:]).hexdigest())


def reference_architecture(seed: int) -> ModelGraph:
    """Desk-scale demo network exercising every layer kind on 64px inputs."""
    rng = np.random.default_rng(seed)

    def he(shape, fan_in):
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(np.float32)

    layers = (
        conv2d_layer(he((8, 3, 3, 3), 27), rng.normal(0, 0.1, 8).astype(np.float32), 1, 1),
        relu_layer(),
        maxpool_layer(2, 2),
        conv2d_layer(he((16, 8, 3, 3), 72), rng.normal(0, 0.1, 16).astype(np.float32), 1, 1),
        relu_layer(),
        maxpool_layer(2, 2),
        global_avg_pool_layer(),
        dense_layer(he((6, 16), 16), rng.normal(0, 0.1, 6).astype(np.float32)),
        softmax_layer(),
    )
    return ModelGraph(layers=layers, class_names=CLASS_LABELS, input_side=64)


def export_reference_model(seed: int) -> bytes:
    return serialize_model(reference_architecture(seed))


def classifier_head_fixture(seed: int, input_side: int = 16) -> ModelGraph:
    """Dense head with 4096/1072/256 nodes and 0.3/0.2/0.15 dropouts."""
    rng = np.random.default_rng(seed)
    d_in = 3 * input_side * input_side

    def glorot(out_d, in_d):
        return rng.normal(0.0, 1.0 / np.sqrt(in_d), size=(out_d, in_d)).astype(np.float32)

    def bias(n):
        return np.zeros(n, dtype=np.float32)

    layers = (
        flatten_layer(),
        dense_layer(glorot(4096, d_in), bias(4096)),
        dropout_layer(0.3),
        dense_layer(glorot(1072, 4096), bias(1072)),
        dropout_layer(0.2),
        dense_layer(glorot(256, 1072), bias(256)),
        dropout_layer(0.15),
        dense_layer(glorot(6, 256), bias(6)),
        softmax_layer(),
    )
    return ModelGraph(layers=layers, class_names=CLASS_LABELS, input_side=input_side)
