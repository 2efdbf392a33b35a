"""Unsigned fixed-point formats and value/code conversion."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

MAX_BITS = 16

_FMT_RE = re.compile(r"^[Uu](\d+)\.(\d+)$")


class Rounding(str, Enum):
    FLOOR = "floor"
    ROUND = "round"
    CEIL = "ceil"


@dataclass(frozen=True)
class FixedPointFormat:
    """Unsigned magnitude format with ``int_bits`` integer and ``frac_bits`` fraction bits."""

    int_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.int_bits < 0 or self.frac_bits < 0:
            raise ValueError(f"negative bit count in {self.int_bits}.{self.frac_bits}")
        if not 1 <= self.bits <= MAX_BITS:
            raise ValueError(f"format U{self.int_bits}.{self.frac_bits} must have 1..{MAX_BITS} bits")

    @classmethod
    def parse(cls, text: str) -> "FixedPointFormat":
        m = _FMT_RE.match(text.strip())
        if not m:
            raise ValueError(f"bad fixed-point format {text!r}, expected U<int>.<frac>")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def bits(self) -> int:
        return self.int_bits + self.frac_bits

    @property
    def step(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def max_code(self) -> int:
        return (1 << self.bits) - 1

    @property
    def max_value(self) -> float:
        return self.max_code * self.step

    def __str__(self) -> str:
        return f"U{self.int_bits}.{self.frac_bits}"


def _round_scaled(v: float, mode: Rounding) -> int:
    mode = Rounding(mode)
    f = math.floor(v)
    if mode is Rounding.FLOOR:
        return f
    if mode is Rounding.CEIL:
        return math.ceil(v)
    # ties upward; v - f is exact so no double rounding
    return f + (1 if v - f >= 0.5 else 0)


def encode(x: float, fmt: FixedPointFormat, mode: Rounding | str = Rounding.FLOOR) -> int:
    """Grid code of ``x`` under ``mode``, saturating at ``fmt.max_code``."""
    if x < 0 or math.isnan(x):
        raise ValueError(f"encode expects a nonnegative value, got {x}")
    if math.isinf(x):
        return fmt.max_code
    # scaling by a power of two is exact in binary floating point
    return min(_round_scaled(x * fmt.scale, mode), fmt.max_code)


def encode_array(x, fmt: FixedPointFormat, mode: Rounding | str = Rounding.FLOOR) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("encode_array expects nonnegative values")
    v = x * fmt.scale
    mode = Rounding(mode)
    if mode is Rounding.FLOOR:
        c = np.floor(v)
    elif mode is Rounding.CEIL:
        c = np.ceil(v)
    else:
        f = np.floor(v)
        c = f + ((v - f) >= 0.5)
    return np.minimum(c, fmt.max_code).astype(np.int64)


def decode(code: int, fmt: FixedPointFormat) -> float:
    if not 0 <= code <= fmt.max_code:
        raise ValueError(f"code {code} out of range for {fmt} (0..{fmt.max_code})")
    return code * fmt.step


@dataclass(frozen=True)
class SignedValue:
    """Sign-magnitude value; zero is always positive."""

    negative: bool
    magnitude_code: int
    fmt: FixedPointFormat

    def __post_init__(self):
        if not 0 <= self.magnitude_code <= self.fmt.max_code:
            raise ValueError(f"magnitude code {self.magnitude_code} out of range for {self.fmt}")
        if self.magnitude_code == 0 and self.negative:
            object.__setattr__(self, "negative", False)

    @classmethod
    def from_real(cls, x: float, fmt: FixedPointFormat, mode: Rounding | str = Rounding.FLOOR) -> "SignedValue":
        return cls(x < 0, encode(abs(x), fmt, mode), fmt)

    @property
    def sign(self) -> str:
        return "-" if self.negative else "+"

    def to_real(self) -> float:
        v = decode(self.magnitude_code, self.fmt)
        return -v if self.negative else v
