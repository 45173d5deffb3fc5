"""Log-domain arithmetic for pattern counts that outgrow machine integers.

A :class:`LogCount` carries a count as a natural-log double and, when it is
known, the exact arbitrary-precision integer as well.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

LOG_ZERO = -math.inf


def log_int(value: int) -> float:
    """Natural log of a nonnegative (possibly huge) integer; log 0 is -inf."""
    if value < 0:
        raise ValueError(f"cannot take the log of a negative count: {value}")
    if value == 0:
        return LOG_ZERO
    return math.log(value)


def logsumexp(values: Iterable[float]) -> float:
    values = [v for v in values if v != LOG_ZERO]
    if not values:
        return LOG_ZERO
    peak = max(values)
    return peak + math.log(math.fsum(math.exp(v - peak) for v in values))


def masked_logsumexp(mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Row-wise ``log(sum_j mask[i, j] * exp(values[j]))`` with a per-row max shift."""
    rows = mask.shape[0]
    out = np.full(rows, LOG_ZERO)
    if rows == 0 or mask.shape[1] == 0:
        return out
    shifted = np.where(mask, values[np.newaxis, :], -np.inf)
    peak = shifted.max(axis=1)
    live = np.isfinite(peak)
    if live.any():
        body = np.exp(shifted[live] - peak[live, np.newaxis])
        out[live] = peak[live] + np.log(body.sum(axis=1))
    return out


@dataclass(frozen=True)
class LogCount:
    """A count held as ``log`` (natural) plus an optional exact integer."""

    log: float
    exact: Optional[int] = None

    @classmethod
    def from_int(cls, value: int) -> "LogCount":
        value = int(value)
        return cls(log=log_int(value), exact=value)

    @classmethod
    def from_log(cls, value: float) -> "LogCount":
        return cls(log=float(value))

    @classmethod
    def zero(cls) -> "LogCount":
        return cls(log=LOG_ZERO, exact=0)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def is_zero(self) -> bool:
        return self.log == LOG_ZERO

    def in_base(self, base: float) -> float:
        return self.log / math.log(base)

    def __int__(self) -> int:
        if self.exact is None:
            raise ValueError("count is only known in the log domain")
        return self.exact

    def __mul__(self, other: "LogCount") -> "LogCount":
        if self.exact is not None and other.exact is not None:
            return LogCount.from_int(self.exact * other.exact)
        if self.is_zero or other.is_zero:
            return LogCount.from_log(LOG_ZERO)
        return LogCount.from_log(self.log + other.log)

    def __pow__(self, exponent: int) -> "LogCount":
        if exponent < 0:
            raise ValueError("negative exponents do not count anything")
        if self.exact is not None:
            return LogCount.from_int(self.exact ** exponent)
        if exponent == 0:
            return LogCount.from_int(1)
        return LogCount.from_log(exponent * self.log)
