"""Stacked bidirectional LSTM with exact backpropagation through time.

Variable-length batches are handled by reversing each sequence within its
true length for the backward direction and masking outputs beyond it, so a
sample's features are identical whether it is evaluated alone or inside a
padded batch.
"""

from __future__ import annotations

import numpy as np

from scriptmix.nn.tensor import Tensor


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp overflow for very negative x saturates to 0 exactly, which is fine
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


class _LstmDirection:
    """One direction of one layer."""

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator, dtype):
        self.input_size, self.hidden_size = input_size, hidden_size
        bx = 1.0 / np.sqrt(input_size)
        bh = 1.0 / np.sqrt(hidden_size)
        self.wx = Tensor(rng.uniform(-bx, bx, (input_size, 4 * hidden_size)).astype(dtype))
        self.wh = Tensor(rng.uniform(-bh, bh, (hidden_size, 4 * hidden_size)).astype(dtype))
        self.bias = Tensor(rng.uniform(-bh, bh, 4 * hidden_size).astype(dtype))
        self._cache = None

    def parameters(self):
        return [("wx", self.wx), ("wh", self.wh), ("bias", self.bias)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, t_len, _ = x.shape
        h_dim = self.hidden_size
        pre = x @ self.wx.data + self.bias.data  # N,T,4H
        i_all = np.empty((n, t_len, h_dim), dtype=x.dtype)
        f_all = np.empty_like(i_all)
        g_all = np.empty_like(i_all)
        o_all = np.empty_like(i_all)
        cprev_all = np.empty_like(i_all)
        hprev_all = np.empty_like(i_all)
        tanh_c_all = np.empty_like(i_all)
        h = np.zeros((n, h_dim), dtype=x.dtype)
        c = np.zeros((n, h_dim), dtype=x.dtype)
        out = np.empty((n, t_len, h_dim), dtype=x.dtype)
        for t in range(t_len):
            gates = pre[:, t] + h @ self.wh.data
            i = _sigmoid(gates[:, :h_dim])
            f = _sigmoid(gates[:, h_dim : 2 * h_dim])
            g = np.tanh(gates[:, 2 * h_dim : 3 * h_dim])
            o = _sigmoid(gates[:, 3 * h_dim :])
            cprev_all[:, t] = c
            hprev_all[:, t] = h
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            i_all[:, t], f_all[:, t], g_all[:, t], o_all[:, t] = i, f, g, o
            tanh_c_all[:, t] = tc
            out[:, t] = h
        self._cache = (x, i_all, f_all, g_all, o_all, cprev_all, hprev_all, tanh_c_all)
        return out

    def backward(self, dh_out: np.ndarray) -> np.ndarray:
        x, i_all, f_all, g_all, o_all, cprev_all, hprev_all, tanh_c_all = self._cache
        n, t_len, _ = x.shape
        h_dim = self.hidden_size
        dgates = np.empty((n, t_len, 4 * h_dim), dtype=x.dtype)
        dwh = np.zeros_like(self.wh.data)
        dh_next = np.zeros((n, h_dim), dtype=x.dtype)
        dc_next = np.zeros((n, h_dim), dtype=x.dtype)
        wh_t = self.wh.data.T
        for t in range(t_len - 1, -1, -1):
            i, f, g, o = i_all[:, t], f_all[:, t], g_all[:, t], o_all[:, t]
            tc = tanh_c_all[:, t]
            dh = dh_out[:, t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            df = dc * cprev_all[:, t]
            dg = dc * i
            dgt = dgates[:, t]
            dgt[:, :h_dim] = di * i * (1.0 - i)
            dgt[:, h_dim : 2 * h_dim] = df * f * (1.0 - f)
            dgt[:, 2 * h_dim : 3 * h_dim] = dg * (1.0 - g * g)
            dgt[:, 3 * h_dim :] = do * o * (1.0 - o)
            dwh += hprev_all[:, t].T @ dgt
            dh_next = dgt @ wh_t
            dc_next = dc * f
        flat_x = x.reshape(n * t_len, -1)
        flat_dg = dgates.reshape(n * t_len, -1)
        self.wx.accumulate(flat_x.T @ flat_dg)
        self.wh.accumulate(dwh)
        self.bias.accumulate(flat_dg.sum(axis=0))
        return dgates @ self.wx.data.T


def _reverse_index(lengths: np.ndarray, t_len: int) -> np.ndarray:
    """Per-sample time reversal within true length; identity on the padding."""
    base = np.arange(t_len)[None, :]
    rev = lengths[:, None] - 1 - base
    return np.where(base < lengths[:, None], rev, base)


def _seq_mask(lengths: np.ndarray, t_len: int, dtype) -> np.ndarray:
    return (np.arange(t_len)[None, :] < lengths[:, None]).astype(dtype)[:, :, None]


class BiLstm:
    """Stack of bidirectional LSTM layers: (N, T, D) -> (N, T, 2H)."""

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        num_layers: int,
        rng: np.random.Generator | None = None,
        dtype=np.float32,
    ):
        rng = rng or np.random.default_rng(0)
        self.hidden_size = hidden_size
        self.layers: list[tuple[_LstmDirection, _LstmDirection]] = []
        d = input_size
        for _ in range(num_layers):
            fwd = _LstmDirection(d, hidden_size, rng, dtype)
            bwd = _LstmDirection(d, hidden_size, rng, dtype)
            self.layers.append((fwd, bwd))
            d = 2 * hidden_size
        self._cache = None

    def parameters(self):
        out = []
        for li, (fwd, bwd) in enumerate(self.layers):
            for name, p in fwd.parameters():
                out.append((f"l{li}.fwd.{name}", p))
            for name, p in bwd.parameters():
                out.append((f"l{li}.bwd.{name}", p))
        return out

    def forward(self, x: np.ndarray, lengths: np.ndarray | None = None) -> np.ndarray:
        n, t_len, _ = x.shape
        if lengths is None:
            lengths = np.full(n, t_len, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        idx = _reverse_index(lengths, t_len)
        mask = _seq_mask(lengths, t_len, x.dtype)
        cur = x
        for fwd, bwd in self.layers:
            hf = fwd.forward(cur) * mask
            xr = np.take_along_axis(cur, idx[:, :, None], axis=1)
            hr = bwd.forward(xr)
            hb = np.take_along_axis(hr, idx[:, :, None], axis=1) * mask
            cur = np.concatenate([hf, hb], axis=2)
        self._cache = (idx, mask)
        return cur

    def backward(self, dy: np.ndarray) -> np.ndarray:
        idx, mask = self._cache
        h_dim = self.hidden_size
        for fwd, bwd in reversed(self.layers):
            dy = dy * mask
            dhf = dy[:, :, :h_dim]
            dhb = dy[:, :, h_dim:]
            dx_f = fwd.backward(dhf)
            dhr = np.take_along_axis(dhb, idx[:, :, None], axis=1)
            dxr = bwd.backward(dhr)
            dx_b = np.take_along_axis(dxr, idx[:, :, None], axis=1)
            dy = dx_f + dx_b
        return dy * mask
