"""Inception-style classification network assembled from the layer toolkit.

A :class:`NetworkSpec` is a declarative stage list; :func:`build_proposed_cnn`
emits the architecture used throughout (7x7 stem, two inception blocks,
256/512 convolution tail, average-pooled classifier head), and
:class:`Network` instantiates and runs it with seeded weights.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .nn import (
    AvgPool2D,
    Conv2D,
    Dense,
    Flatten,
    Layer,
    MaxPool2D,
    ReLU,
    concat_channels,
    softmax,
    softmax_cross_entropy,
    split_channels,
)

__all__ = [
    "LayerSpec",
    "InceptionSpec",
    "NetworkSpec",
    "build_proposed_cnn",
    "Inception",
    "Network",
    "train_epoch",
]

MIN_INPUT_SIDE = 32


@dataclass(frozen=True)
class LayerSpec:
    """One declarative stage: a kind plus kind-specific parameters."""

    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class InceptionSpec:
    """Branch widths of one inception block.

    ``b1``: 1x1 filters; ``b2_reduce``/``b2``: 1x1 reduction into 3x3;
    ``b3_reduce``/``b3``: 1x1 reduction into 5x5; ``b4``: 1x1 projection
    after 3x3 max pooling.
    """

    b1: int
    b2_reduce: int
    b2: int
    b3_reduce: int
    b3: int
    b4: int

    @property
    def out_channels(self) -> int:
        return self.b1 + self.b2 + self.b3 + self.b4


def _out_extent(extent: int, window: int, stride: int, padding: str) -> int:
    if padding == "same":
        return -(-extent // stride)
    if extent < window:
        raise ValueError(
            f"spatial extent {extent} smaller than window {window} (valid padding)"
        )
    return (extent - window) // stride + 1


@dataclass(frozen=True)
class NetworkSpec:
    """Input geometry, class count and the ordered stage list."""

    input_size: tuple[int, int, int]  # (channels, height, width)
    num_classes: int
    stages: tuple[LayerSpec, ...]

    def output_shapes(self) -> list[tuple[int, ...]]:
        """Declared output shape of every stage; raises if the chain is
        illegal (non-positive extents, dense before flatten, bad tail)."""
        c, h, w = self.input_size
        shapes: list[tuple[int, ...]] = []
        flat: int | None = None
        for st in self.stages:
            kind, p = st.kind, st.params
            if kind in ("conv", "maxpool", "avgpool", "inception", "relu") and flat is not None:
                raise ValueError(f"{kind} stage after flatten")
            if kind == "conv":
                h = _out_extent(h, p["kernel"], p["stride"], p["padding"])
                w = _out_extent(w, p["kernel"], p["stride"], p["padding"])
                c = p["filters"]
            elif kind == "maxpool":
                h = _out_extent(h, p["window"], p["stride"], p["padding"])
                w = _out_extent(w, p["window"], p["stride"], p["padding"])
            elif kind == "avgpool":
                h = _out_extent(h, p["window"], p["stride"], "valid")
                w = _out_extent(w, p["window"], p["stride"], "valid")
            elif kind == "inception":
                c = InceptionSpec(**p).out_channels
            elif kind == "relu":
                pass
            elif kind == "flatten":
                flat = c * h * w
            elif kind == "dense":
                if flat is None:
                    raise ValueError("dense stage requires a preceding flatten")
                flat = p["units"]
            elif kind == "softmax":
                if flat is None:
                    raise ValueError("softmax stage requires a dense output")
            else:
                raise ValueError(f"unknown stage kind {kind!r}")
            if flat is None and (h < 1 or w < 1):
                raise ValueError(
                    f"input too small: {kind} stage output would be {h}x{w}"
                )
            shapes.append((flat,) if flat is not None else (c, h, w))
        if (
            len(self.stages) < 2
            or self.stages[-1].kind != "softmax"
            or self.stages[-2].kind != "dense"
            or self.stages[-2].params["units"] != self.num_classes
        ):
            raise ValueError("network must end with dense(num_classes) + softmax")
        return shapes

    def to_json(self) -> str:
        doc = {
            "input_size": list(self.input_size),
            "num_classes": self.num_classes,
            "stages": [{"kind": s.kind, "params": s.params} for s in self.stages],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        doc = json.loads(text)
        return cls(
            input_size=tuple(doc["input_size"]),
            num_classes=int(doc["num_classes"]),
            stages=tuple(LayerSpec(s["kind"], s["params"]) for s in doc["stages"]),
        )


def _conv(filters: int, kernel: int, stride: int = 1) -> list[LayerSpec]:
    spec = LayerSpec(
        "conv",
        {"filters": filters, "kernel": kernel, "stride": stride, "padding": "same"},
    )
    return [spec, LayerSpec("relu")]


def build_proposed_cnn(
    input_size: tuple[int, int, int] = (1, 224, 224),
    num_classes: int = 4,
    width_divisor: int = 1,
) -> NetworkSpec:
    """Stage list of the classification network.

    7x7/2 stem convolution, max pool, a 1x1 + 3x3 convolution pair, two
    inception blocks (256 and 480 output channels at full width), then
    3x3 convolutions with 256 and 512 filters, 7x7 average pooling and a
    dense softmax classifier. Every convolution is "same"-padded and
    ReLU-activated except the classifier.

    ``width_divisor`` divides every filter count (minimum 1), which keeps
    the full stage structure while shrinking the parameter count; spatial
    sides may be as small as 32, where the average-pool window shrinks to
    the remaining map size.
    """
    c, h, w = input_size
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if width_divisor < 1:
        raise ValueError(f"width_divisor must be >= 1, got {width_divisor}")
    if min(h, w) < MIN_INPUT_SIDE:
        raise ValueError(
            f"input spatial size {h}x{w} too small; need at least "
            f"{MIN_INPUT_SIDE}x{MIN_INPUT_SIDE} to survive the downsampling chain"
        )

    def f(n: int) -> int:
        return max(1, n // width_divisor)

    pool = LayerSpec("maxpool", {"window": 3, "stride": 2, "padding": "same"})
    stages: list[LayerSpec] = []
    stages += _conv(f(64), 7, stride=2)
    stages.append(pool)
    stages += _conv(f(64), 1)
    stages += _conv(f(192), 3)
    stages.append(pool)
    stages.append(
        LayerSpec(
            "inception",
            {"b1": f(64), "b2_reduce": f(96), "b2": f(128), "b3_reduce": f(16), "b3": f(32), "b4": f(32)},
        )
    )
    stages.append(
        LayerSpec(
            "inception",
            {"b1": f(128), "b2_reduce": f(128), "b2": f(192), "b3_reduce": f(32), "b3": f(96), "b4": f(64)},
        )
    )
    stages.append(pool)
    stages += _conv(f(256), 3)
    stages += _conv(f(512), 3)

    # Spatial side entering the average pool: stem/2 and three pools/2.
    side_h = h
    side_w = w
    for _ in range(4):
        side_h = -(-side_h // 2)
        side_w = -(-side_w // 2)
    window = min(7, side_h, side_w)
    stages.append(LayerSpec("avgpool", {"window": window, "stride": window}))
    stages.append(LayerSpec("flatten"))
    stages.append(LayerSpec("dense", {"units": num_classes}))
    stages.append(LayerSpec("softmax"))

    spec = NetworkSpec(
        input_size=(c, h, w), num_classes=num_classes, stages=tuple(stages)
    )
    spec.output_shapes()  # validate the chain before handing it out
    return spec


class Inception(Layer):
    """Four parallel branches concatenated along channels.

    1x1 / 1x1->3x3 / 1x1->5x5 convolutions plus a 3x3 max pool with 1x1
    projection, each convolution ReLU-activated, all branches stride 1 and
    "same"-padded so spatial extents are preserved.
    """

    def __init__(
        self,
        in_channels: int,
        spec: InceptionSpec,
        *,
        name: str = "inception",
        rng: np.random.Generator | None = None,
    ):
        super().__init__(name)
        self.spec = spec
        n = name
        self.branches: list[list[Layer]] = [
            [Conv2D(in_channels, spec.b1, 1, name=f"{n}.b1", rng=rng), ReLU()],
            [
                Conv2D(in_channels, spec.b2_reduce, 1, name=f"{n}.b2r", rng=rng),
                ReLU(),
                Conv2D(spec.b2_reduce, spec.b2, 3, name=f"{n}.b2", rng=rng),
                ReLU(),
            ],
            [
                Conv2D(in_channels, spec.b3_reduce, 1, name=f"{n}.b3r", rng=rng),
                ReLU(),
                Conv2D(spec.b3_reduce, spec.b3, 5, name=f"{n}.b3", rng=rng),
                ReLU(),
            ],
            [
                MaxPool2D(3, stride=1, padding="same"),
                Conv2D(in_channels, spec.b4, 1, name=f"{n}.b4", rng=rng),
                ReLU(),
            ],
        ]
        self._sizes = [spec.b1, spec.b2, spec.b3, spec.b4]

    def forward(self, x):
        outs = []
        for branch in self.branches:
            out = x
            for layer in branch:
                out = layer.forward(out)
            outs.append(out)
        return concat_channels(outs)

    def backward(self, grad_out):
        parts = split_channels(grad_out, self._sizes)
        grad_x = None
        for branch, part in zip(self.branches, parts):
            g = part
            for layer in reversed(branch):
                g = layer.backward(g)
            grad_x = g if grad_x is None else grad_x + g
        return grad_x

    def parameters(self):
        for branch in self.branches:
            for layer in branch:
                yield from layer.parameters()

    def zero_grads(self):
        for branch in self.branches:
            for layer in branch:
                layer.zero_grads()

    def cast_(self, dtype):
        self._cache = None
        for branch in self.branches:
            for layer in branch:
                layer.cast_(dtype)


def _instantiate(
    spec: NetworkSpec, seed: int
) -> tuple[list[Layer], list[tuple[int, ...]]]:
    rng = np.random.default_rng(seed)
    shapes = spec.output_shapes()
    layers: list[Layer] = []
    declared: list[tuple[int, ...]] = []
    c = spec.input_size[0]
    flat = None
    for i, (st, shape) in enumerate(zip(spec.stages, shapes)):
        name = f"s{i:02d}_{st.kind}"
        p = st.params
        if st.kind == "conv":
            layers.append(
                Conv2D(c, p["filters"], p["kernel"], p["stride"], p["padding"], name=name, rng=rng)
            )
        elif st.kind == "relu":
            layers.append(ReLU(name=name))
        elif st.kind == "maxpool":
            layers.append(MaxPool2D(p["window"], p["stride"], p["padding"], name=name))
        elif st.kind == "avgpool":
            layers.append(AvgPool2D(p["window"], p["stride"], name=name))
        elif st.kind == "inception":
            layers.append(Inception(c, InceptionSpec(**p), name=name, rng=rng))
        elif st.kind == "flatten":
            layers.append(Flatten(name=name))
        elif st.kind == "dense":
            layers.append(Dense(flat, p["units"], name=name, rng=rng))
        elif st.kind == "softmax":
            continue  # applied by Network.forward, not a runtime layer
        if len(shape) == 1:
            flat = shape[0]
        else:
            c = shape[0]
        declared.append(shape)
    return layers, declared


class Network:
    """Ordered layer stack with explicit forward/backward.

    ``forward_logits`` checks every stage's runtime shape against the
    declared chain and (in debug runs) that no stage emits NaN/Inf;
    ``forward`` applies the softmax head on top.
    """

    def __init__(self, layers: list[Layer], spec: NetworkSpec | None = None,
                 declared: list[tuple[int, ...]] | None = None):
        self.layers = layers
        self.spec = spec
        self._declared = declared

    @classmethod
    def from_spec(cls, spec: NetworkSpec, seed: int = 0) -> "Network":
        layers, declared = _instantiate(spec, seed)
        return cls(layers, spec=spec, declared=declared)

    def forward_logits(self, x: np.ndarray) -> np.ndarray:
        if self.spec is not None and tuple(x.shape[1:]) != tuple(self.spec.input_size):
            raise ValueError(
                f"batch shape {x.shape[1:]} != network input {self.spec.input_size}"
            )
        out = x
        for i, layer in enumerate(self.layers):
            out = layer.forward(out)
            if self._declared is not None and tuple(out.shape[1:]) != self._declared[i]:
                raise RuntimeError(
                    f"stage {layer.name}: runtime shape {out.shape[1:]} != "
                    f"declared {self._declared[i]}"
                )
            assert np.isfinite(out).all(), f"non-finite values after {layer.name}"
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities, one row per batch item (rows sum to 1)."""
        return softmax(self.forward_logits(x))

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        g = grad_logits
        for layer in reversed(self.layers):
            g = layer.backward(g)
            assert np.isfinite(g).all(), f"non-finite gradient before {layer.name}"
        return g

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Argmax class per batch item; ties resolve to the lowest index."""
        return self.forward(x).argmax(axis=1)

    def named_parameters(self):
        for layer in self.layers:
            yield from layer.parameters()

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def astype(self, dtype) -> "Network":
        """Deep copy with parameters cast to ``dtype`` (caches dropped)."""
        clone = copy.deepcopy(self)
        for layer in clone.layers:
            layer.cast_(dtype)
        return clone

    def num_parameters(self) -> int:
        return sum(p.size for _, p, _ in self.named_parameters())


def train_epoch(net: Network, batches, optimizer) -> float:
    """One pass over ``batches``: update after every batch, return the
    mean cross-entropy across batches."""
    losses = []
    for x, labels in batches:
        logits = net.forward_logits(x)
        loss, _, grad = softmax_cross_entropy(logits, labels)
        net.backward(grad)
        optimizer.step(net.named_parameters())
        losses.append(loss)
    if not losses:
        raise ValueError("train_epoch received no batches")
    return float(np.mean(losses))
