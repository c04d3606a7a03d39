"""Dense n-d array with a gradient slot."""

from __future__ import annotations

import numpy as np


class Tensor:
    """Parameter container: a value array plus an accumulated gradient."""

    __slots__ = ("data", "grad")

    def __init__(self, data: np.ndarray, with_grad: bool = True):
        self.data = np.ascontiguousarray(data)
        self.grad: np.ndarray | None = np.zeros_like(self.data) if with_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0)

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"
