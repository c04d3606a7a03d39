"""Network layers with explicit forward and backward passes.

All layers operate on float numpy arrays in NCHW (or N,T,F for sequences),
cache what the backward pass needs, and accumulate parameter gradients into
their Tensors. Backward passes are exact analytic gradients; the test suite
checks every one against central finite differences.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from scriptmix.nn.tensor import Tensor


def conv_out_size(size: int, kernel: int, stride: int, pad: int) -> int:
    out = (size + 2 * pad - kernel) // stride + 1
    if out < 1:
        raise ValueError(f"size {size} too small for kernel {kernel} stride {stride} pad {pad}")
    return out


_mask_cache: dict[tuple, np.ndarray] = {}


def _width_mask(widths: np.ndarray, w: int, ndim: int, dtype) -> np.ndarray:
    key = (widths.tobytes(), w, ndim, np.dtype(dtype).str)
    mask = _mask_cache.get(key)
    if mask is None:
        if len(_mask_cache) > 256:
            _mask_cache.clear()
        keep = np.arange(w)[None, :] < widths[:, None]
        shape = (len(widths),) + (1,) * (ndim - 2) + (w,)
        mask = keep.reshape(shape).astype(dtype)
        _mask_cache[key] = mask
    return mask


def mask_widths(x: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Zero features beyond each sample's true width (last axis)."""
    widths = np.asarray(widths, dtype=np.int64)
    if widths.min() >= x.shape[-1]:  # nothing is padded
        return x
    return x * _width_mask(widths, x.shape[-1], x.ndim, x.dtype)


class Conv2d:
    """2-d convolution via im2col and batched GEMM."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: tuple[int, int],
        stride: tuple[int, int] = (1, 1),
        padding: tuple[int, int] = (0, 0),
        rng: np.random.Generator | None = None,
        dtype=np.float32,
    ):
        kh, kw = kernel
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel, self.stride, self.padding = kernel, stride, padding
        fan_in = in_channels * kh * kw
        std = np.sqrt(2.0 / fan_in)
        rng = rng or np.random.default_rng(0)
        self.weight = Tensor(rng.normal(0.0, std, (out_channels, in_channels, kh, kw)).astype(dtype))
        self.bias = Tensor(np.zeros(out_channels, dtype=dtype))
        self._cache = None

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, c, h, w = x.shape
        if c != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {c}")
        kh, kw = self.kernel
        sh, sw = self.stride
        ph, pw = self.padding
        oh = conv_out_size(h, kh, sh, ph)
        ow = conv_out_size(w, kw, sw, pw)
        xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if (ph or pw) else x
        # im2col in (C*kh*kw) x (N*oh*ow) layout: one strided copy, one GEMM
        view = as_strided(
            xp,
            shape=(c, kh, kw, n, oh, ow),
            strides=(xp.strides[1], xp.strides[2], xp.strides[3],
                     xp.strides[0], sh * xp.strides[2], sw * xp.strides[3]),
        )
        cols = np.ascontiguousarray(view).reshape(c * kh * kw, n * oh * ow)
        wmat = self.weight.data.reshape(self.out_channels, -1)
        out = wmat @ cols
        out += self.bias.data[:, None]
        self._cache = (cols, (n, c, h, w), (oh, ow))
        return out.reshape(self.out_channels, n, oh, ow).transpose(1, 0, 2, 3)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        cols, (n, c, h, w), (oh, ow) = self._cache
        kh, kw = self.kernel
        sh, sw = self.stride
        ph, pw = self.padding
        dy2 = np.ascontiguousarray(dy.transpose(1, 0, 2, 3)).reshape(self.out_channels, -1)
        self.bias.accumulate(dy2.sum(axis=1).astype(self.bias.dtype))
        dw = dy2 @ cols.T
        self.weight.accumulate(dw.reshape(self.weight.shape).astype(self.weight.dtype))
        wmat = self.weight.data.reshape(self.out_channels, -1)
        dcols = (wmat.T @ dy2).reshape(c, kh, kw, n, oh, ow)
        # accumulate in channel-major layout so the strided adds stay aligned
        dxp = np.zeros((c, n, h + 2 * ph, w + 2 * pw), dtype=dy.dtype)
        for ki in range(kh):
            for kj in range(kw):
                dxp[:, :, ki : ki + sh * oh : sh, kj : kj + sw * ow : sw] += dcols[:, ki, kj]
        dx = dxp.transpose(1, 0, 2, 3)
        return dx[:, :, ph : ph + h, pw : pw + w] if (ph or pw) else np.ascontiguousarray(dx)


class BatchNorm2d:
    """Per-channel batch normalization over (N, H, W).

    Train mode normalizes with batch statistics and updates the running
    estimates; eval mode uses the running estimates only.
    """

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5, dtype=np.float32):
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(channels, dtype=dtype))
        self.beta = Tensor(np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def parameters(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        getattr(self, name)[...] = value

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if x.shape[1] != self.channels:
            raise ValueError(f"expected {self.channels} channels, got {x.shape[1]}")
        if train:
            m = x.shape[0] * x.shape[2] * x.shape[3]
            mu = np.einsum("nchw->c", x, optimize=False) / m
            sq = np.einsum("nchw,nchw->c", x, x, optimize=False) / m
            var = np.maximum(sq - mu * mu, 0.0)
            self.running_mean[...] = (1 - self.momentum) * self.running_mean + self.momentum * mu.astype(
                self.running_mean.dtype
            )
            self.running_var[...] = (1 - self.momentum) * self.running_var + self.momentum * var.astype(
                self.running_var.dtype
            )
        else:
            mu = self.running_mean.astype(x.dtype)
            var = self.running_var.astype(x.dtype)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        scale = self.gamma.data * inv_std
        shift = self.beta.data - mu * scale
        self._cache = (x, mu, inv_std, train)
        return x * scale[None, :, None, None] + shift[None, :, None, None]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x, mu, inv_std, train = self._cache
        s1 = np.einsum("nchw->c", dy, optimize=False)
        sxy = np.einsum("nchw,nchw->c", dy, x, optimize=False)
        s2 = (sxy - mu * s1) * inv_std  # sum of dy * xhat
        self.gamma.accumulate(s2.astype(self.gamma.dtype))
        self.beta.accumulate(s1.astype(self.beta.dtype))
        g_istd = self.gamma.data * inv_std
        if not train:
            return dy * g_istd[None, :, None, None]
        m = dy.shape[0] * dy.shape[2] * dy.shape[3]
        # dx = A*dy + B*x + C with per-channel coefficients (xhat never built)
        a = g_istd
        b = -g_istd * inv_std * s2 / m
        c = -g_istd * s1 / m - b * mu
        return dy * a[None, :, None, None] + x * b[None, :, None, None] + c[None, :, None, None]


class ReLU:
    def __init__(self):
        self._mask = None

    def parameters(self):
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._mask


class MaxPool2d:
    """Max pooling; gradient routes to the first maximum in row-major window order."""

    def __init__(self, kernel: tuple[int, int] = (2, 2), stride: tuple[int, int] | None = None):
        self.kernel = kernel
        self.stride = stride or kernel
        self._cache = None

    def parameters(self):
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, c, h, w = x.shape
        kh, kw = self.kernel
        sh, sw = self.stride
        oh = conv_out_size(h, kh, sh, 0)
        ow = conv_out_size(w, kw, sw, 0)
        windows = np.empty((n, c, kh * kw, oh, ow), dtype=x.dtype)
        for ki in range(kh):
            for kj in range(kw):
                windows[:, :, ki * kw + kj] = x[:, :, ki : ki + sh * oh : sh, kj : kj + sw * ow : sw]
        arg = windows.argmax(axis=2)
        out = np.take_along_axis(windows, arg[:, :, None], axis=2)[:, :, 0]
        self._cache = (arg, (n, c, h, w), (oh, ow))
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        arg, (n, c, h, w), (oh, ow) = self._cache
        kh, kw = self.kernel
        sh, sw = self.stride
        dx = np.zeros((n, c, h, w), dtype=dy.dtype)
        for p in range(kh * kw):
            ki, kj = divmod(p, kw)
            sel = (arg == p) * dy
            dx[:, :, ki : ki + sh * oh : sh, kj : kj + sw * ow : sw] += sel
        return dx


class ColumnMaxPool:
    """Collapse the height axis by per-column maxima: (N,C,H,W) -> (N,W,C)."""

    def __init__(self):
        self._cache = None

    def parameters(self):
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        arg = x.argmax(axis=2)  # N x C x W, first max on ties
        out = np.take_along_axis(x, arg[:, :, None, :], axis=2)[:, :, 0, :]
        self._cache = (arg, x.shape)
        return out.transpose(0, 2, 1)  # N x W x C

    def backward(self, dy: np.ndarray) -> np.ndarray:
        arg, shape = self._cache
        dx = np.zeros(shape, dtype=dy.dtype)
        np.put_along_axis(dx, arg[:, :, None, :], dy.transpose(0, 2, 1)[:, :, None, :], axis=2)
        return dx


class Linear:
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator | None = None, dtype=np.float32):
        rng = rng or np.random.default_rng(0)
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Tensor(rng.uniform(-bound, bound, (in_features, out_features)).astype(dtype))
        self.bias = Tensor(rng.uniform(-bound, bound, out_features).astype(dtype))
        self._cache = None

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._cache = x
        return x @ self.weight.data + self.bias.data

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._cache
        x2 = x.reshape(-1, x.shape[-1])
        dy2 = dy.reshape(-1, dy.shape[-1])
        self.weight.accumulate((x2.T @ dy2).astype(self.weight.dtype))
        self.bias.accumulate(dy2.sum(axis=0).astype(self.bias.dtype))
        return dy @ self.weight.data.T
