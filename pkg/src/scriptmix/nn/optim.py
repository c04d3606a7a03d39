"""AdamW with decoupled weight decay and a multi-step learning-rate schedule."""

from __future__ import annotations

import numpy as np

from scriptmix.nn.tensor import Tensor


class AdamW:
    """Adam with decoupled weight decay.

    Decay shrinks parameters directly (p -= lr*wd*p) before the moment-based
    update, so with weight_decay=0 the update is plain Adam.
    """

    def __init__(
        self,
        params: list[tuple[str, Tensor]],
        lr: float = 5e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params}

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.zero_grad()

    def step(self, lr: float | None = None) -> None:
        if lr is None:
            lr = self.lr
        self.step_count += 1
        b1, b2 = self.betas
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for name, p in self.params:
            g = p.grad
            if g is None:
                continue
            if self.weight_decay:
                p.data -= (lr * self.weight_decay) * p.data
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            p.data -= lr * mhat / (np.sqrt(vhat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name in self.m:
            out[f"adam.m.{name}"] = self.m[name]
            out[f"adam.v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], step_count: int) -> None:
        self.step_count = step_count
        for name in self.m:
            self.m[name][...] = arrays[f"adam.m.{name}"].astype(self.m[name].dtype)
            self.v[name][...] = arrays[f"adam.v.{name}"].astype(self.v[name].dtype)


class MultiStepLr:
    """base_lr scaled by gamma for every milestone fraction already passed.

    Steps are 1-indexed; milestone fractions are taken of the total budget,
    so with milestones (0.5, 0.75) the rate drops by gamma at 50% and again
    at 75% of training.
    """

    def __init__(
        self,
        base_lr: float,
        total_steps: int,
        milestones: tuple[float, ...] = (0.5, 0.75),
        gamma: float = 0.1,
    ):
        if total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        self.base_lr = base_lr
        self.total_steps = total_steps
        self.milestone_steps = tuple(int(round(f * total_steps)) for f in milestones)
        self.gamma = gamma

    def lr_at(self, step: int) -> float:
        passed = sum(1 for m in self.milestone_steps if step > m)
        return self.base_lr * (self.gamma ** passed)
