"""CRNN recognizer: residual CNN trunk, column max pooling, BiLSTM head.

The trunk masks features beyond each sample's true width after every
operation, so eval-mode logits for a sample are identical whether it is
evaluated alone or right-padded inside a batch. An auxiliary convolutional
CTC head sits on the pooled sequence features during training and is
skipped at inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from scriptmix.nn.layers import (
    BatchNorm2d,
    ColumnMaxPool,
    Conv2d,
    Linear,
    MaxPool2d,
    ReLU,
    conv_out_size,
    mask_widths,
)
from scriptmix.nn.lstm import BiLstm
from scriptmix.nn.tensor import Tensor


@dataclass
class CrnnConfig:
    """Architecture hyperparameters.

    The defaults are the desk-scale configuration; ``paper_scale`` gives the
    full-size variant (channels 64/128/256, 256 LSTM units, height 110).
    """

    vocab_size: int
    input_height: int = 48
    stem_kernel: int = 7
    stem_stride: tuple[int, int] = (2, 2)
    stage_blocks: tuple[int, ...] = (2, 4, 4)
    stage_channels: tuple[int, ...] = (16, 32, 48)
    lstm_layers: int = 3
    lstm_hidden: int = 64
    aux_loss_weight: float = 0.1

    def __post_init__(self):
        self.stem_stride = tuple(self.stem_stride)
        self.stage_blocks = tuple(self.stage_blocks)
        self.stage_channels = tuple(self.stage_channels)
        if len(self.stage_blocks) != len(self.stage_channels):
            raise ValueError("stage_blocks and stage_channels must have equal length")
        sizes = (
            self.vocab_size,
            self.input_height,
            self.lstm_layers,
            self.lstm_hidden,
            *self.stage_blocks,
            *self.stage_channels,
        )
        if any(s < 1 for s in sizes):
            raise ValueError("all config sizes must be >= 1")
        if not 0.0 <= self.aux_loss_weight <= 1.0:
            raise ValueError("aux_loss_weight must lie in [0, 1]")

    @classmethod
    def paper_scale(cls, vocab_size: int) -> "CrnnConfig":
        return cls(
            vocab_size=vocab_size,
            input_height=110,
            stage_channels=(64, 128, 256),
            lstm_hidden=256,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CrnnConfig":
        d = dict(d)
        for key in ("stem_stride", "stage_blocks", "stage_channels"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


class ResidualBlock:
    """conv-bn-relu-conv-bn + shortcut, then relu.

    The shortcut is the identity when channel counts match, otherwise a 1x1
    projection with its own batch norm.
    """

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype):
        self.conv1 = Conv2d(in_channels, out_channels, (3, 3), padding=(1, 1), rng=rng, dtype=dtype)
        self.bn1 = BatchNorm2d(out_channels, dtype=dtype)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(out_channels, out_channels, (3, 3), padding=(1, 1), rng=rng, dtype=dtype)
        self.bn2 = BatchNorm2d(out_channels, dtype=dtype)
        self.relu2 = ReLU()
        if in_channels != out_channels:
            self.proj: Conv2d | None = Conv2d(in_channels, out_channels, (1, 1), rng=rng, dtype=dtype)
            self.proj_bn: BatchNorm2d | None = BatchNorm2d(out_channels, dtype=dtype)
        else:
            self.proj = None
            self.proj_bn = None

    def sublayers(self):
        out = [("conv1", self.conv1), ("bn1", self.bn1), ("conv2", self.conv2), ("bn2", self.bn2)]
        if self.proj is not None:
            out += [("proj", self.proj), ("proj_bn", self.proj_bn)]
        return out

    def parameters(self):
        return [(f"{ln}.{pn}", p) for ln, layer in self.sublayers() for pn, p in layer.parameters()]

    def buffers(self):
        return [
            (f"{ln}.{bn}", b)
            for ln, layer in self.sublayers()
            if isinstance(layer, BatchNorm2d)
            for bn, b in layer.buffers()
        ]

    def forward(self, x: np.ndarray, widths: np.ndarray, train: bool) -> np.ndarray:
        y = mask_widths(self.bn1.forward(self.conv1.forward(x), train), widths)
        y = self.relu1.forward(y)
        y = mask_widths(self.bn2.forward(self.conv2.forward(y), train), widths)
        if self.proj is not None:
            sc = mask_widths(self.proj_bn.forward(self.proj.forward(x), train), widths)
        else:
            sc = x
        return self.relu2.forward(y + sc)

    def backward(self, dy: np.ndarray, widths: np.ndarray) -> np.ndarray:
        dsum = self.relu2.backward(dy)
        d_branch = mask_widths(dsum, widths)
        dx = self.conv1.backward(self.bn1.backward(self.relu1.backward(
            self.conv2.backward(self.bn2.backward(d_branch))
        )))
        if self.proj is not None:
            dx = dx + self.proj.backward(self.proj_bn.backward(mask_widths(dsum, widths)))
        else:
            dx = dx + dsum
        return dx


class CrnnModel:
    """The full recognizer with named parameters and explicit backward."""

    def __init__(self, cfg: CrnnConfig, rng: np.random.Generator | None = None, dtype=np.float32):
        rng = rng or np.random.default_rng(0)
        self.cfg = cfg
        self.dtype = dtype
        c0 = cfg.stage_channels[0]
        pad = cfg.stem_kernel // 2
        self.stem = Conv2d(1, c0, (cfg.stem_kernel, cfg.stem_kernel), stride=cfg.stem_stride,
                           padding=(pad, pad), rng=rng, dtype=dtype)
        self.stem_bn = BatchNorm2d(c0, dtype=dtype)
        self.stem_relu = ReLU()
        self.stages: list[list[ResidualBlock]] = []
        self.pools: list[MaxPool2d] = []
        in_ch = c0
        for si, (nblocks, ch) in enumerate(zip(cfg.stage_blocks, cfg.stage_channels)):
            blocks = []
            for _ in range(nblocks):
                blocks.append(ResidualBlock(in_ch, ch, rng, dtype))
                in_ch = ch
            self.stages.append(blocks)
            if si < len(cfg.stage_blocks) - 1:
                self.pools.append(MaxPool2d((2, 2)))
        self.col_pool = ColumnMaxPool()
        self.blstm = BiLstm(in_ch, cfg.lstm_hidden, cfg.lstm_layers, rng=rng, dtype=dtype)
        self.fc = Linear(2 * cfg.lstm_hidden, cfg.vocab_size + 1, rng=rng, dtype=dtype)
        # auxiliary head: kernel-3 convolution along the sequence axis
        self.aux_conv = Conv2d(in_ch, cfg.vocab_size + 1, (1, 3), padding=(0, 1), rng=rng, dtype=dtype)
        self._cache = None

    # ------------------------------------------------------------------ state

    def named_layers(self):
        out = [("stem", self.stem), ("stem_bn", self.stem_bn)]
        for si, blocks in enumerate(self.stages):
            for bi, blk in enumerate(blocks):
                out.append((f"stage{si}.block{bi}", blk))
        out += [("blstm", self.blstm), ("fc", self.fc), ("aux_conv", self.aux_conv)]
        return out

    def parameters(self) -> list[tuple[str, Tensor]]:
        return [(f"{ln}.{pn}", p) for ln, layer in self.named_layers() for pn, p in layer.parameters()]

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        out = [("stem_bn." + n, b) for n, b in self.stem_bn.buffers()]
        for si, blocks in enumerate(self.stages):
            for bi, blk in enumerate(blocks):
                out += [(f"stage{si}.block{bi}.{n}", b) for n, b in blk.buffers()]
        return out

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {f"param.{n}": p.data for n, p in self.parameters()}
        arrays.update({f"buffer.{n}": b for n, b in self.buffers()})
        return arrays

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for n, p in self.parameters():
            src = arrays[f"param.{n}"]
            if src.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {n}: {src.shape} vs {p.data.shape}")
            p.data[...] = src.astype(p.data.dtype)
        buffers = dict(self.buffers())
        for n in buffers:
            buffers[n][...] = arrays[f"buffer.{n}"].astype(buffers[n].dtype)

    def zero_grad(self) -> None:
        for _, p in self.parameters():
            p.zero_grad()

    # ------------------------------------------------------------ width chain

    def width_after_trunk(self, width: int | np.ndarray):
        """Sequence length produced by an input of the given pixel width."""
        pad = self.cfg.stem_kernel // 2
        w = (np.asarray(width) + 2 * pad - self.cfg.stem_kernel) // self.cfg.stem_stride[1] + 1
        for _ in self.pools:
            w = w // 2
        return w

    # ---------------------------------------------------------------- forward

    def forward(
        self, images: np.ndarray, widths: np.ndarray, train: bool
    ) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
        """Run the network.

        images: (N, 1, H, W) with zero right-padding; widths: true pixel
        widths. Returns (main logits (N,T,V+1), aux logits or None,
        per-sample sequence lengths).
        """
        n, c, h, w = images.shape
        if h != self.cfg.input_height:
            raise ValueError(f"input height {h} != configured {self.cfg.input_height}")
        widths = np.asarray(widths, dtype=np.int64)
        pad = self.cfg.stem_kernel // 2
        cur_w = (widths + 2 * pad - self.cfg.stem_kernel) // self.cfg.stem_stride[1] + 1
        if (cur_w < 1).any():
            raise ValueError("image too narrow to produce a nonempty sequence")
        images = mask_widths(images, widths)  # enforce zero right-padding
        x = mask_widths(self.stem_bn.forward(self.stem.forward(images), train), cur_w)
        x = self.stem_relu.forward(x)
        width_trace = [cur_w]
        for si, blocks in enumerate(self.stages):
            for blk in blocks:
                x = blk.forward(x, cur_w, train)
            if si < len(self.stages) - 1:
                x = self.pools[si].forward(x)
                cur_w = cur_w // 2
                if (cur_w < 1).any():
                    raise ValueError("image too narrow to survive pooling")
                x = mask_widths(x, cur_w)
                width_trace.append(cur_w)
        seq = self.col_pool.forward(x)  # N x T x C
        lengths = cur_w
        rec = self.blstm.forward(seq, lengths)
        main = self.fc.forward(rec)
        aux = None
        if train:
            seq_img = seq.transpose(0, 2, 1)[:, :, None, :]  # N x C x 1 x T
            aux = self.aux_conv.forward(seq_img)[:, :, 0, :].transpose(0, 2, 1)
        self._cache = (width_trace, widths, train)
        return main, aux, lengths

    def backward(self, dmain: np.ndarray, daux: np.ndarray | None = None) -> np.ndarray:
        width_trace, pixel_widths, train = self._cache
        drec = self.fc.backward(dmain)
        dseq = self.blstm.backward(drec)
        if daux is not None:
            d_aux_img = daux.transpose(0, 2, 1)[:, :, None, :]
            dseq = dseq + self.aux_conv.backward(d_aux_img)[:, :, 0, :].transpose(0, 2, 1)
        dx = self.col_pool.backward(dseq)
        trace_idx = len(width_trace) - 1
        for si in range(len(self.stages) - 1, -1, -1):
            if si < len(self.stages) - 1:
                dx = mask_widths(dx, width_trace[trace_idx])
                dx = self.pools[si].backward(dx)
                trace_idx -= 1
            cur_w = width_trace[trace_idx]
            for blk in reversed(self.stages[si]):
                dx = blk.backward(dx, cur_w)
        dx = self.stem_relu.backward(dx)
        dx = self.stem_bn.backward(mask_widths(dx, width_trace[0]))
        return mask_widths(self.stem.backward(dx), pixel_widths)
