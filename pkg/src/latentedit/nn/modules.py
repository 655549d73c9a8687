"""Thin parameter-container layer on top of the autodiff tensors."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .tensor import Parameter, Tensor, conv2d, matmul


class Module:
    """Base class: anything holding Parameters, sub-Modules, or lists of them.

    ``named_parameters`` walks attributes in definition order, so state_dict
    key order is stable across runs and python versions.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Parameter):
                        yield f"{full}.{i}", item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def freeze(self) -> None:
        for p in self.parameters():
            p.requires_grad = False

    def unfreeze(self) -> None:
        for p in self.parameters():
            p.requires_grad = True

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise KeyError(f"state mismatch: missing={missing} unexpected={extra}")
        for name, p in own.items():
            arr = np.asarray(state[name])
            if arr.shape != p.data.shape:
                raise ValueError(f"{name}: shape {arr.shape} != expected {p.data.shape}")
            p.data = arr.astype(p.data.dtype, copy=True)

    def param_count(self) -> int:
        return sum(p.data.size for p in self.parameters())


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 weight_scale: float | None = None, dtype=np.float32):
        scale = weight_scale if weight_scale is not None else np.sqrt(2.0 / n_in)
        self.weight = Parameter(rng.normal(0.0, scale, (n_in, n_out)).astype(dtype))
        self.bias = Parameter(np.zeros(n_out, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return matmul(x, self.weight) + self.bias


class Conv2d(Module):
    """Stride-1 same-padding convolution (kernel 1 or 3 in this codebase)."""

    def __init__(self, c_in: int, c_out: int, kernel: int, rng: np.random.Generator,
                 weight_scale: float | None = None, dtype=np.float32):
        fan_in = c_in * kernel * kernel
        scale = weight_scale if weight_scale is not None else np.sqrt(2.0 / fan_in)
        self.weight = Parameter(rng.normal(0.0, scale, (c_out, c_in, kernel, kernel)).astype(dtype))
        self.bias = Parameter(np.zeros(c_out, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias)
