"""Finite-difference gradient checking used across the layer tests.

Every check builds a float64 instance, projects the output onto a fixed
random direction to get a scalar loss, runs one analytic backward pass,
and compares sampled coordinates of every gradient against central
differences.
"""

from __future__ import annotations

import numpy as np

from scriptmix.nn.crnn import CrnnConfig, CrnnModel, ResidualBlock
from scriptmix.nn.layers import (
    BatchNorm2d,
    ColumnMaxPool,
    Conv2d,
    Linear,
    MaxPool2d,
    ReLU,
)
from scriptmix.nn.lstm import BiLstm
from scriptmix.nn.train import batch_ctc_loss


def fd_worst_error(loss_fn, arrays, grads, rng, n_coords=12, h=1e-6):
    """Worst relative error between analytic grads and central differences."""
    worst = 0.0
    for arr, grad in zip(arrays, grads):
        n = min(n_coords, arr.size)
        flat_idx = rng.choice(arr.size, size=n, replace=False)
        for fi in flat_idx:
            c = np.unravel_index(fi, arr.shape)
            old = arr[c]
            arr[c] = old + h
            fp = loss_fn()
            arr[c] = old - h
            fm = loss_fn()
            arr[c] = old
            num = (fp - fm) / (2 * h)
            a = grad[c]
            worst = max(worst, abs(a - num) / max(abs(a), abs(num), 1e-4))
    return worst


def _project_loss(forward, shape, rng):
    r = rng.normal(size=shape)
    return lambda: float((forward() * r).sum()), r


def check_conv(rng) -> float:
    n, cin, h, w = (int(rng.integers(1, 4)), int(rng.integers(1, 4)),
                    int(rng.integers(3, 8)), int(rng.integers(3, 9)))
    cout = int(rng.integers(1, 4))
    k = int(rng.choice([1, 3]))
    stride = int(rng.choice([1, 2]))
    pad = k // 2
    layer = Conv2d(cin, cout, (k, k), stride=(stride, stride), padding=(pad, pad),
                   rng=rng, dtype=np.float64)
    x = rng.normal(size=(n, cin, h, w))
    loss, r = _project_loss(lambda: layer.forward(x), layer.forward(x).shape, rng)
    layer.weight.zero_grad()
    layer.bias.zero_grad()
    loss()
    dx = layer.backward(r)
    return fd_worst_error(loss, [x, layer.weight.data, layer.bias.data],
                          [dx, layer.weight.grad, layer.bias.grad], rng)


def check_batchnorm(rng, train: bool) -> float:
    n, c, h, w = (int(rng.integers(2, 4)), int(rng.integers(1, 4)),
                  int(rng.integers(2, 6)), int(rng.integers(2, 7)))
    layer = BatchNorm2d(c, dtype=np.float64)
    layer.running_mean[...] = rng.normal(size=c)
    layer.running_var[...] = rng.uniform(0.5, 2.0, size=c)
    x = rng.normal(size=(n, c, h, w))
    loss, r = _project_loss(lambda: layer.forward(x, train), x.shape, rng)
    layer.gamma.zero_grad()
    layer.beta.zero_grad()
    loss()
    dx = layer.backward(r)
    return fd_worst_error(loss, [x, layer.gamma.data, layer.beta.data],
                          [dx, layer.gamma.grad, layer.beta.grad], rng)


def check_relu(rng) -> float:
    layer = ReLU()
    x = rng.normal(size=(int(rng.integers(2, 5)), int(rng.integers(2, 8))))
    loss, r = _project_loss(lambda: layer.forward(x), x.shape, rng)
    loss()
    dx = layer.backward(r)
    return fd_worst_error(loss, [x], [dx], rng)


def check_maxpool(rng) -> float:
    n, c = int(rng.integers(1, 3)), int(rng.integers(1, 4))
    h, w = int(rng.integers(4, 9)), int(rng.integers(4, 11))
    layer = MaxPool2d((2, 2))
    x = rng.normal(size=(n, c, h, w))
    loss, r = _project_loss(lambda: layer.forward(x), layer.forward(x).shape, rng)
    loss()
    dx = layer.backward(r)
    return fd_worst_error(loss, [x], [dx], rng)


def check_column_max_pool(rng) -> float:
    n, c, h, w = (int(rng.integers(1, 3)), int(rng.integers(1, 4)),
                  int(rng.integers(1, 6)), int(rng.integers(2, 8)))
    layer = ColumnMaxPool()
    x = rng.normal(size=(n, c, h, w))
    loss, r = _project_loss(lambda: layer.forward(x), (n, w, c), rng)
    loss()
    dx = layer.backward(r)
    return fd_worst_error(loss, [x], [dx], rng)


def check_linear(rng) -> float:
    d_in, d_out = int(rng.integers(1, 6)), int(rng.integers(1, 5))
    layer = Linear(d_in, d_out, rng=rng, dtype=np.float64)
    x = rng.normal(size=(int(rng.integers(1, 4)), int(rng.integers(1, 4)), d_in))
    loss, r = _project_loss(lambda: layer.forward(x), x.shape[:-1] + (d_out,), rng)
    layer.weight.zero_grad()
    layer.bias.zero_grad()
    loss()
    dx = layer.backward(r)
    return fd_worst_error(loss, [x, layer.weight.data, layer.bias.data],
                          [dx, layer.weight.grad, layer.bias.grad], rng)


def check_residual_block(rng) -> float:
    cin = int(rng.integers(1, 4))
    cout = int(rng.choice([cin, cin + 1]))  # identity or projection shortcut
    blk = ResidualBlock(cin, cout, rng, np.float64)
    n, h, w = int(rng.integers(1, 3)), int(rng.integers(3, 6)), int(rng.integers(4, 8))
    widths = np.sort(rng.integers(2, w + 1, size=n))[::-1].copy()
    widths[0] = w
    x = rng.normal(size=(n, cin, h, w))
    loss, r = _project_loss(lambda: blk.forward(x, widths, train=True), (n, cout, h, w), rng)
    for _, p in blk.parameters():
        p.zero_grad()
    loss()
    dx = blk.backward(r, widths)
    arrays = [x] + [p.data for _, p in blk.parameters()]
    grads = [dx] + [p.grad for _, p in blk.parameters()]
    return fd_worst_error(loss, arrays, grads, rng, n_coords=6)


def check_bilstm(rng) -> float:
    d, hid = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    layers = int(rng.integers(1, 4))
    n, t = int(rng.integers(1, 3)), int(rng.integers(1, 5))
    net = BiLstm(d, hid, layers, rng=rng, dtype=np.float64)
    lengths = rng.integers(1, t + 1, size=n)
    lengths[0] = t
    x = rng.normal(size=(n, t, d))
    loss, r = _project_loss(lambda: net.forward(x, lengths), (n, t, 2 * hid), rng)
    for _, p in net.parameters():
        p.zero_grad()
    loss()
    dx = net.backward(r)
    arrays = [x] + [p.data for _, p in net.parameters()]
    grads = [dx] + [p.grad for _, p in net.parameters()]
    return fd_worst_error(loss, arrays, grads, rng, n_coords=5)


def check_crnn_composite(rng) -> float:
    """End-to-end: CRNN forward + multi-task CTC loss vs finite differences."""
    cfg = CrnnConfig(
        vocab_size=2,
        input_height=16,
        stage_blocks=(1, 1, 1),
        stage_channels=(2, 2, 3),
        lstm_layers=int(rng.integers(1, 3)),
        lstm_hidden=2,
        aux_loss_weight=0.3,
    )
    model = CrnnModel(cfg, rng=rng, dtype=np.float64)
    n = int(rng.integers(1, 3))
    w = int(rng.integers(32, 49))
    widths = rng.integers(max(24, w - 12), w + 1, size=n)
    widths[0] = w
    images = rng.uniform(0.0, 1.0, (n, 1, 16, w))
    for i in range(n):
        images[i, :, :, widths[i]:] = 0.0
    targets = [[int(rng.integers(1, 3)) for _ in range(int(rng.integers(1, 3)))] for _ in range(n)]

    def loss_fn():
        main, aux, lengths = model.forward(images, widths, train=True)
        lm, _ = batch_ctc_loss(main, lengths, targets)
        la, _ = batch_ctc_loss(aux, lengths, targets)
        return lm + cfg.aux_loss_weight * la

    main, aux, lengths = model.forward(images, widths, train=True)
    _, dmain = batch_ctc_loss(main, lengths, targets)
    _, daux = batch_ctc_loss(aux, lengths, targets)
    model.zero_grad()
    dimg = model.backward(dmain, cfg.aux_loss_weight * daux)

    params = model.parameters()
    picks = rng.choice(len(params), size=min(8, len(params)), replace=False)
    arrays = [images] + [params[i][1].data for i in picks]
    grads = [dimg] + [params[i][1].grad for i in picks]
    return fd_worst_error(loss_fn, arrays, grads, rng, n_coords=3)
