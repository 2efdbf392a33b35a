"""Reference activation functions and the closed-form approximations they are compared with.

All functions accept Python floats or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SELU_ALPHA = 1.6733
SELU_LAMBDA = 1.0507

# |x| below this uses tanh(x) ~ x in the Taylor/LUT hybrid
TAYLOR5_SMALL_INPUT = 0.39
# beyond this the hybrid returns the saturated value
TAYLOR5_SATURATION = 2.90

KINDS = ("tanh", "sigmoid", "elu", "selu", "exp", "custom")


def tanh_exact(x):
    return np.tanh(x)


def sigmoid_exact(x):
    x = np.asarray(x, dtype=np.float64)
    # split on sign so exp never overflows
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out[()] if out.ndim == 0 else out


def elu(x, a: float = SELU_ALPHA):
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, x, a * np.expm1(np.minimum(x, 0.0)))
    return out[()] if out.ndim == 0 else out


def selu(x, a: float = SELU_ALPHA, lam: float = SELU_LAMBDA):
    return lam * elu(x, a)


def exp_pow2_approx(x, coeff: float = 1.44):
    return np.exp2(coeff * np.asarray(x, dtype=np.float64))[()]


def sigmoid_pow2_approx(x, coeff: float = 1.5):
    return (1.0 / (1.0 + np.exp2(-coeff * np.asarray(x, dtype=np.float64))))[()]


def tanh_pow2_approx(x, coeff: float = 1.5):
    return 1.0 - 2.0 * sigmoid_pow2_approx(-2.0 * np.asarray(x, dtype=np.float64), coeff)


def tanh_taylor5(x):
    x = np.asarray(x, dtype=np.float64)
    return (x - x**3 / 3.0 + 2.0 * x**5 / 15.0)[()]


def small_input(x):
    """True where tanh(x) ~ x is within the hybrid's 0.02 budget."""
    return np.abs(x) < TAYLOR5_SMALL_INPUT


def taylor_exp(x, order: int, x0: float = 0.0):
    """Degree-``order`` Taylor polynomial of e^x about ``x0``."""
    if order < 0:
        raise ValueError("order must be >= 0")
    h = np.asarray(x, dtype=np.float64) - x0
    # Horner on sum h^k / k!
    acc = np.ones_like(h)
    for k in range(order, 0, -1):
        acc = 1.0 + acc * h / k
    return (math.exp(x0) * acc)[()]


@dataclass(frozen=True)
class ActivationSpec:
    """An activation function together with its parameters.

    ``custom`` specs carry ``func`` plus the ``domain`` and ``range`` they are
    valid on; the tabulator checks formats against those intervals.
    """

    kind: str
    alpha: float = SELU_ALPHA
    lam: float = SELU_LAMBDA
    func: Callable | None = field(default=None, compare=False)
    domain: tuple[float, float] | None = None
    range: tuple[float, float] | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.alpha <= 0 or self.lam <= 0:
            raise ValueError("alpha and lambda must be positive")
        if self.kind == "custom":
            if self.func is None or self.domain is None or self.range is None:
                raise ValueError("custom activations need func, domain and range")
            if not (self.domain[0] < self.domain[1] and self.range[0] <= self.range[1]):
                raise ValueError("custom domain/range intervals must be ordered")

    @classmethod
    def from_name(cls, name: str, alpha: float | None = None, lam: float | None = None) -> "ActivationSpec":
        kw = {}
        if alpha is not None:
            kw["alpha"] = alpha
        if lam is not None:
            kw["lam"] = lam
        return cls(name.lower(), **kw)

    @property
    def label(self) -> str:
        return self.name or self.kind

    def __call__(self, x):
        if self.kind == "tanh":
            return tanh_exact(x)
        if self.kind == "sigmoid":
            return sigmoid_exact(x)
        if self.kind == "elu":
            return elu(x, self.alpha)
        if self.kind == "selu":
            return selu(x, self.alpha, self.lam)
        if self.kind == "exp":
            return np.exp(x)
        x = np.asarray(x, dtype=np.float64)
        return np.vectorize(self.func, otypes=[np.float64])(x)[()]

    def derivative(self, x):
        """Exact derivative, used for backpropagation."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "tanh":
            return 1.0 - np.tanh(x) ** 2
        if self.kind == "sigmoid":
            s = sigmoid_exact(x)
            return s * (1.0 - s)
        if self.kind in ("elu", "selu"):
            scale = self.lam if self.kind == "selu" else 1.0
            return scale * np.where(x > 0, 1.0, self.alpha * np.exp(np.minimum(x, 0.0)))
        if self.kind == "exp":
            return np.exp(x)
        raise ValueError(f"no analytic derivative for {self.kind} activations")
