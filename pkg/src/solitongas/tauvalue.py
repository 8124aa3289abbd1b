"""Overflow-safe carrier for sums of exponentials."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TauValue:
    """A complex number stored as ``phase * exp(log_magnitude)``.

    ``phase`` has unit modulus. When ``is_zero`` is set the other two fields
    are meaningless.
    """

    log_magnitude: float
    phase: complex = 1.0 + 0.0j
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "TauValue":
        return cls(-math.inf, 1.0 + 0.0j, True)

    @classmethod
    def one(cls) -> "TauValue":
        return cls(0.0)

    @classmethod
    def from_value(cls, value: complex) -> "TauValue":
        value = complex(value)
        if value == 0:
            return cls.zero()
        mag = abs(value)
        return cls(math.log(mag), value / mag)

    @classmethod
    def from_log(cls, log_value: complex) -> "TauValue":
        """Build ``exp(log_value)`` without forming it."""
        log_value = complex(log_value)
        if log_value.real == -math.inf:
            return cls.zero()
        return cls(log_value.real, cmath.exp(1j * log_value.imag))

    @property
    def value(self) -> complex:
        if self.is_zero:
            return 0j
        return self.phase * math.exp(self.log_magnitude)

    @property
    def real(self) -> float:
        return self.value.real

    def log(self) -> complex:
        """Principal logarithm."""
        if self.is_zero:
            return complex(-math.inf, 0.0)
        return complex(self.log_magnitude, cmath.phase(self.phase))

    def __mul__(self, other) -> "TauValue":
        if not isinstance(other, TauValue):
            other = TauValue.from_value(other)
        if self.is_zero or other.is_zero:
            return TauValue.zero()
        ph = self.phase * other.phase
        return TauValue(self.log_magnitude + other.log_magnitude, ph / abs(ph))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "TauValue":
        if not isinstance(other, TauValue):
            other = TauValue.from_value(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero TauValue")
        if self.is_zero:
            return TauValue.zero()
        ph = self.phase / other.phase
        return TauValue(self.log_magnitude - other.log_magnitude, ph / abs(ph))

    def __add__(self, other) -> "TauValue":
        if not isinstance(other, TauValue):
            other = TauValue.from_value(other)
        return log_sum([self, other])

    __radd__ = __add__

    def __neg__(self) -> "TauValue":
        if self.is_zero:
            return self
        return TauValue(self.log_magnitude, -self.phase)

    def __sub__(self, other) -> "TauValue":
        if not isinstance(other, TauValue):
            other = TauValue.from_value(other)
        return self + (-other)

    def scale_log(self, log_factor: complex) -> "TauValue":
        """Multiply by ``exp(log_factor)``."""
        return self * TauValue.from_log(log_factor)

    def rel_diff(self, other: "TauValue") -> float:
        """``|self - other| / max(|self|, |other|)`` computed in log space."""
        if not isinstance(other, TauValue):
            other = TauValue.from_value(other)
        if self.is_zero and other.is_zero:
            return 0.0
        if self.is_zero or other.is_zero:
            return 1.0
        if self.log_magnitude >= other.log_magnitude:
            big, small = self, other
        else:
            big, small = other, self
        ratio = small.phase / big.phase * math.exp(small.log_magnitude - big.log_magnitude)
        return abs(1.0 - ratio)

    def is_positive(self, tol: float = 1e-12) -> bool:
        return (not self.is_zero) and abs(self.phase - 1.0) <= tol


class Accumulator:
    """Running ``max`` plus compensated sum of rescaled terms.

    Partial results from independent blocks are merged with :meth:`merge`;
    merging in a fixed order keeps the result deterministic.
    """

    __slots__ = ("shift", "re", "im")

    def __init__(self):
        self.shift = -math.inf
        self.re = 0.0
        self.im = 0.0

    def add_logs(self, logs: np.ndarray, weights: np.ndarray | None = None) -> None:
        """Add ``sum(weights * exp(logs))`` for complex log-terms."""
        logs = np.asarray(logs)
        if logs.size == 0:
            return
        re = logs.real
        top = float(np.max(re))
        if top == -math.inf:
            return
        with np.errstate(under="ignore"):
            terms = np.exp(logs - top)
        if weights is not None:
            terms = terms * weights
        if np.iscomplexobj(terms):
            s_re = math.fsum(terms.real)
            s_im = math.fsum(terms.imag)
        else:
            s_re = math.fsum(terms)
            s_im = 0.0
        self._merge_raw(top, s_re, s_im)

    def _merge_raw(self, shift: float, re: float, im: float) -> None:
        if shift == -math.inf:
            return
        if shift > self.shift:
            k = math.exp(self.shift - shift) if self.shift > -math.inf else 0.0
            self.re = self.re * k + re
            self.im = self.im * k + im
            self.shift = shift
        else:
            k = math.exp(shift - self.shift)
            self.re += re * k
            self.im += im * k

    def merge(self, other: "Accumulator") -> None:
        self._merge_raw(other.shift, other.re, other.im)

    def result(self) -> TauValue:
        s = complex(self.re, self.im)
        if self.shift == -math.inf or s == 0:
            return TauValue.zero()
        mag = abs(s)
        return TauValue(self.shift + math.log(mag), s / mag)


def log_sum(values) -> TauValue:
    """Sum a sequence of TauValue objects."""
    acc = Accumulator()
    for v in values:
        if v.is_zero:
            continue
        acc._merge_raw(v.log_magnitude, v.phase.real, v.phase.imag)
    return acc.result()
