"""Minimal tensor/layer toolkit with explicit forward and backward passes.

Activations are ``N x C x H x W`` arrays, kernels ``OutC x InC x KH x KW``,
all 32-bit floats during training (the gradient checker re-runs everything
in 64-bit). Forward functions return ``(output, cache)`` and each backward
function consumes the matching cache, so the layer classes at the bottom
are thin stateful wrappers over pure functions.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "avgpool_forward",
    "avgpool_backward",
    "relu_forward",
    "relu_backward",
    "dense_forward",
    "dense_backward",
    "concat_channels",
    "split_channels",
    "softmax",
    "softmax_cross_entropy",
    "Adam",
    "Layer",
    "Conv2D",
    "ReLU",
    "MaxPool2D",
    "AvgPool2D",
    "Flatten",
    "Dense",
    "grad_check",
]


def _pad_amounts(extent: int, window: int, stride: int, padding: str) -> tuple[int, int]:
    """Per-side padding. "same" keeps out = ceil(extent / stride), with the
    extra pixel on the bottom/right when the total is odd."""
    if padding == "valid":
        return 0, 0
    if padding != "same":
        raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")
    out = -(-extent // stride)
    total = max((out - 1) * stride + window - extent, 0)
    lo = total // 2
    return lo, total - lo


def _windows(x: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """View of all (kh, kw) windows at the given stride: N,C,OH,OW,KH,KW."""
    v = sliding_window_view(x, (kh, kw), axis=(2, 3))
    return v[:, :, ::stride, ::stride]


def _accumulate_windows(
    d6: np.ndarray, padded_shape: tuple[int, ...], stride: int
) -> np.ndarray:
    """Scatter-add per-window gradients (N,C,OH,OW,KH,KW) back onto the
    padded input. Inverse of :func:`_windows` up to summation."""
    n, c, oh, ow, kh, kw = d6.shape
    dx = np.zeros(padded_shape, dtype=d6.dtype)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += d6[
                :, :, :, :, i, j
            ]
    return dx


def _crop(dx: np.ndarray, pads: tuple[tuple[int, int], tuple[int, int]]) -> np.ndarray:
    (pt, pb), (pl, pr) = pads
    h, w = dx.shape[2], dx.shape[3]
    return dx[:, :, pt : h - pb, pl : w - pr]


def conv2d_forward(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    stride: int = 1,
    padding: str = "same",
):
    """Cross-correlate a batch with a kernel bank.

    Args:
        x: input, N x C x H x W.
        w: kernels, OutC x InC x KH x KW.
        b: bias, length OutC.
        stride: positive step.
        padding: "same" or "valid".

    Returns:
        (output N x OutC x OH x OW, cache for :func:`conv2d_backward`).
    """
    n, c, h, wd = x.shape
    oc, ic, kh, kw = w.shape
    if ic != c:
        raise ValueError(f"kernel expects {ic} input channels, input has {c}")
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    pads = (_pad_amounts(h, kh, stride, padding), _pad_amounts(wd, kw, stride, padding))
    xp = np.pad(x, ((0, 0), (0, 0), pads[0], pads[1]))
    if xp.shape[2] < kh or xp.shape[3] < kw:
        raise ValueError(
            f"kernel {kh}x{kw} larger than padded input {xp.shape[2]}x{xp.shape[3]}"
        )
    win = _windows(xp, kh, kw, stride)
    oh, ow = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    out = cols @ w.reshape(oc, -1).T + b
    out = out.reshape(n, oh, ow, oc).transpose(0, 3, 1, 2)
    cache = (cols, xp.shape, pads, stride, w, (n, oh, ow))
    return out, cache


def conv2d_backward(grad_out: np.ndarray, cache):
    """Gradients of :func:`conv2d_forward` w.r.t. input, kernel, bias."""
    cols, padded_shape, pads, stride, w, (n, oh, ow) = cache
    oc, ic, kh, kw = w.shape
    if grad_out.shape != (n, oc, oh, ow):
        raise ValueError(
            f"grad_out shape {grad_out.shape} != forward output {(n, oc, oh, ow)}"
        )
    gmat = grad_out.transpose(0, 2, 3, 1).reshape(n * oh * ow, oc)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    grad_w = (gmat.T @ cols).reshape(w.shape)
    dcols = gmat @ w.reshape(oc, -1)
    d6 = dcols.reshape(n, oh, ow, ic, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    grad_x = _crop(_accumulate_windows(d6, padded_shape, stride), pads)
    return grad_x, grad_w, grad_b


def maxpool_forward(
    x: np.ndarray, window: int, stride: int | None = None, padding: str = "valid"
):
    """Per-window maximum. "same" padding fills with -inf, so padded
    positions never win; ties go to the first position in row-major order."""
    stride = window if stride is None else stride
    n, c, h, w = x.shape
    pads = (
        _pad_amounts(h, window, stride, padding),
        _pad_amounts(w, window, stride, padding),
    )
    xp = np.pad(x, ((0, 0), (0, 0), pads[0], pads[1]), constant_values=-np.inf)
    if xp.shape[2] < window or xp.shape[3] < window:
        raise ValueError(
            f"window {window} larger than padded input {xp.shape[2]}x{xp.shape[3]}"
        )
    win = _windows(xp, window, window, stride)
    oh, ow = win.shape[2], win.shape[3]
    flat = win.reshape(n, c, oh, ow, window * window)
    idx = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    cache = (idx, xp.shape, pads, window, stride, (n, c, oh, ow), x.dtype)
    return out, cache


def maxpool_backward(grad_out: np.ndarray, cache):
    """Route each output gradient to its argmax input position."""
    idx, padded_shape, pads, window, stride, out_shape, dtype = cache
    if grad_out.shape != out_shape:
        raise ValueError(f"grad_out shape {grad_out.shape} != {out_shape}")
    n, c, oh, ow = out_shape
    dflat = np.zeros((n, c, oh, ow, window * window), dtype=dtype)
    np.put_along_axis(dflat, idx[..., None], grad_out[..., None].astype(dtype), axis=-1)
    d6 = dflat.reshape(n, c, oh, ow, window, window)
    return _crop(_accumulate_windows(d6, padded_shape, stride), pads)


def avgpool_forward(x: np.ndarray, window: int = 7, stride: int | None = None):
    """Per-window mean over valid positions (no padding)."""
    stride = window if stride is None else stride
    n, c, h, w = x.shape
    if window > h or window > w:
        raise ValueError(f"window {window} larger than input {h}x{w}")
    win = _windows(x, window, window, stride)
    out = win.mean(axis=(4, 5))
    cache = (x.shape, window, stride, out.shape, x.dtype)
    return out, cache


def avgpool_backward(grad_out: np.ndarray, cache):
    """Distribute each output gradient uniformly over its window."""
    x_shape, window, stride, out_shape, dtype = cache
    if grad_out.shape != out_shape:
        raise ValueError(f"grad_out shape {grad_out.shape} != {out_shape}")
    n, c, oh, ow = out_shape
    share = (grad_out / (window * window)).astype(dtype)
    d6 = np.broadcast_to(share[..., None, None], (n, c, oh, ow, window, window))
    return _accumulate_windows(d6, x_shape, stride)


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(grad_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return grad_out * mask


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Affine map x @ w + b for x of shape N x D, w of shape D x K."""
    if x.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValueError(f"input shape {x.shape} incompatible with weight {w.shape}")
    return x @ w + b, (x, w)


def dense_backward(grad_out: np.ndarray, cache):
    x, w = cache
    if grad_out.shape != (x.shape[0], w.shape[1]):
        raise ValueError(
            f"grad_out shape {grad_out.shape} != {(x.shape[0], w.shape[1])}"
        )
    return grad_out @ w.T, x.T @ grad_out, grad_out.sum(axis=0)


def concat_channels(inputs: list[np.ndarray]) -> np.ndarray:
    """Concatenate along the channel axis; N, H, W must agree."""
    if not inputs:
        raise ValueError("concat_channels needs at least one input")
    first = inputs[0]
    for t in inputs[1:]:
        if t.shape[0] != first.shape[0] or t.shape[2:] != first.shape[2:]:
            raise ValueError(
                f"spatial/batch mismatch in concat: {t.shape} vs {first.shape}"
            )
    return np.concatenate(inputs, axis=1)


def split_channels(x: np.ndarray, sizes: list[int]) -> list[np.ndarray]:
    """Undo :func:`concat_channels` for the given channel sizes."""
    if sum(sizes) != x.shape[1]:
        raise ValueError(f"channel sizes {sizes} do not sum to {x.shape[1]}")
    return np.split(x, np.cumsum(sizes)[:-1], axis=1)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean negative log-likelihood of integer class labels.

    Returns ``(loss, probs, grad_logits)`` with
    ``grad_logits = (probs - onehot) / N``.
    """
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    z = e.sum(axis=1, keepdims=True)
    probs = e / z
    log_probs = shifted - np.log(z)
    loss = float(-log_probs[np.arange(n), labels].mean(dtype=np.float64))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, probs, grad


class Adam:
    """Bias-corrected adaptive-moment optimizer.

    One shared step counter; per-parameter moment tensors are created
    lazily, keyed by parameter name, and always match the parameter shape.
    Updates are in place.
    """

    def __init__(
        self,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr < 0:
            raise ValueError(f"learning rate must be non-negative, got {lr}")
        if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, named_params) -> None:
        """Apply one update to every (name, param, grad) triple."""
        items = list(named_params)
        self.step_count += 1
        t = self.step_count
        correct1 = 1.0 - self.beta1**t
        correct2 = 1.0 - self.beta2**t
        for name, p, g in items:
            if g.shape != p.shape:
                raise ValueError(
                    f"gradient shape {g.shape} != parameter shape {p.shape} for {name}"
                )
            m = self._m.get(name)
            if m is None:
                m = np.zeros_like(p)
                v = np.zeros_like(p)
            else:
                v = self._v[name]
                if m.shape != p.shape:
                    raise ValueError(f"moment shape {m.shape} stale for {name}")
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * (g * g)
            self._m[name] = m
            self._v[name] = v
            p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


class Layer:
    """Base for stateful layers: named parameters, gradients, cache."""

    def __init__(self, name: str):
        self.name = name
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def parameters(self):
        for key in self.params:
            yield f"{self.name}.{key}", self.params[key], self.grads[key]

    def zero_grads(self) -> None:
        for key in self.grads:
            self.grads[key][...] = 0

    def cast_(self, dtype) -> None:
        for key in self.params:
            self.params[key] = self.params[key].astype(dtype)
            self.grads[key] = np.zeros_like(self.params[key])
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _kaiming_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Conv2D(Layer):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: int,
        stride: int = 1,
        padding: str = "same",
        *,
        name: str = "conv",
        rng: np.random.Generator | None = None,
    ):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel * kernel
        self.params["w"] = _kaiming_uniform(
            rng, (out_channels, in_channels, kernel, kernel), fan_in
        )
        self.params["b"] = np.zeros(out_channels, dtype=np.float32)
        self.grads["w"] = np.zeros_like(self.params["w"])
        self.grads["b"] = np.zeros_like(self.params["b"])

    def forward(self, x):
        out, self._cache = conv2d_forward(
            x, self.params["w"], self.params["b"], self.stride, self.padding
        )
        return out

    def backward(self, grad_out):
        grad_x, self.grads["w"], self.grads["b"] = conv2d_backward(
            grad_out, self._cache
        )
        return grad_x


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        super().__init__(name)

    def forward(self, x):
        out, self._cache = relu_forward(x)
        return out

    def backward(self, grad_out):
        return relu_backward(grad_out, self._cache)


class MaxPool2D(Layer):
    def __init__(
        self,
        window: int,
        stride: int | None = None,
        padding: str = "valid",
        name: str = "maxpool",
    ):
        super().__init__(name)
        self.window = window
        self.stride = window if stride is None else stride
        self.padding = padding

    def forward(self, x):
        out, self._cache = maxpool_forward(x, self.window, self.stride, self.padding)
        return out

    def backward(self, grad_out):
        return maxpool_backward(grad_out, self._cache)


class AvgPool2D(Layer):
    def __init__(self, window: int, stride: int | None = None, name: str = "avgpool"):
        super().__init__(name)
        self.window = window
        self.stride = window if stride is None else stride

    def forward(self, x):
        out, self._cache = avgpool_forward(x, self.window, self.stride)
        return out

    def backward(self, grad_out):
        return avgpool_backward(grad_out, self._cache)


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        super().__init__(name)

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._cache)


class Dense(Layer):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        *,
        name: str = "dense",
        rng: np.random.Generator | None = None,
    ):
        super().__init__(name)
        rng = rng or np.random.default_rng(0)
        self.params["w"] = _kaiming_uniform(
            rng, (in_features, out_features), in_features
        )
        self.params["b"] = np.zeros(out_features, dtype=np.float32)
        self.grads["w"] = np.zeros_like(self.params["w"])
        self.grads["b"] = np.zeros_like(self.params["b"])

    def forward(self, x):
        out, self._cache = dense_forward(x, self.params["w"], self.params["b"])
        return out

    def backward(self, grad_out):
        grad_x, self.grads["w"], self.grads["b"] = dense_backward(
            grad_out, self._cache
        )
        return grad_x


def grad_check(
    net,
    x: np.ndarray,
    labels: np.ndarray | None = None,
    h: float = 1e-3,
    *,
    loss: str = "ce",
    samples_per_tensor: int | None = None,
    seed: int = 0,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    The network is re-run in 64-bit so rounding does not mask real errors.
    With ``loss="ce"`` the scalar is the softmax cross-entropy of ``labels``
    (the network output must be N x K logits); with ``loss="linear"`` it is
    a fixed random weighting of all outputs, which keeps purely linear
    stacks exactly linear so their finite differences match to rounding.

    ``samples_per_tensor`` bounds the number of coordinates perturbed per
    parameter tensor (seeded choice without replacement, every tensor
    visited); ``None`` checks every coordinate. Relative error per
    coordinate is ``|a - n| / max(|a|, |n|)``, counted as zero when both
    magnitudes are below 1e-8.
    """
    net64 = net.astype(np.float64)
    x64 = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)

    if loss == "ce":
        if labels is None:
            raise ValueError("loss='ce' requires labels")
        labels = np.asarray(labels)

        def loss_value():
            out = net64.forward_logits(x64)
            return softmax_cross_entropy(out, labels)[0]

        out = net64.forward_logits(x64)
        _, _, grad_out = softmax_cross_entropy(out, labels)
    elif loss == "linear":
        out = net64.forward_logits(x64)
        weights = rng.standard_normal(out.shape)

        def loss_value():
            return float((net64.forward_logits(x64) * weights).sum())

        grad_out = weights
    else:
        raise ValueError(f"loss must be 'ce' or 'linear', got {loss!r}")

    net64.backward(grad_out)
    analytic = {
        name: grad.copy() for name, _, grad in net64.named_parameters()
    }

    worst = 0.0
    for name, param, _ in net64.named_parameters():
        flat = param.reshape(-1)
        size = flat.size
        if samples_per_tensor is None or size <= samples_per_tensor:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=samples_per_tensor, replace=False)
        ref = analytic[name].reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_value()
            flat[i] = orig - h
            lm = loss_value()
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * h)
            denom = max(abs(ref[i]), abs(numeric))
            if denom < 1e-8:
                continue
            worst = max(worst, abs(ref[i] - numeric) / denom)
    return worst
