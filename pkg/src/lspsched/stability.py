"""Per-position stability diagnostics and fractional block sizing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seq_core import ContractViolation


class ComparisonCounter:
    """Counts scalar comparisons made by the scans below."""

    def __init__(self):
        self.n = 0


def prefix_minimum(values, counter: ComparisonCounter | None = None) -> np.ndarray:
    out = np.empty(len(values), dtype=np.float64)
    running = math.inf
    for i, v in enumerate(values):
        if counter is not None:
            counter.n += 1
        if v < running:
            running = v
        out[i] = running
    return out


@dataclass(frozen=True)
class MarginArray:
    values: np.ndarray
    prefix_min: np.ndarray

    @classmethod
    def from_values(cls, values, counter: ComparisonCounter | None = None) -> "MarginArray":
        v = np.asarray(values, dtype=np.float64)
        return cls(v, prefix_minimum(v.tolist(), counter))

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True)
class SizingBounds:
    alpha: float = 0.25
    beta: float = 0.50
    tau_floor: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= self.beta <= 1:
            raise ContractViolation(
                f"need 0 < alpha <= beta <= 1, got alpha={self.alpha} beta={self.beta}")
        if self.tau_floor < 0:
            raise ContractViolation(f"tau_floor must be >= 0, got {self.tau_floor}")

    def window(self, n: int) -> tuple[int, int]:
        """Inclusive range [ceil(alpha*n), floor(beta*n)] of admissible block lengths."""
        # Round before ceil/floor so products like 0.5 * 6 don't land at 2.9999999.
        lo = math.ceil(round(self.alpha * n, 9))
        hi = math.floor(round(self.beta * n, 9))
        return lo, hi


def top_two(logits) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (top-1 index, top-1 value, top-2 value) per row.

    Ties on the maximum resolve to the lowest index.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"logits must be 2-D, got shape {z.shape}")
    if z.shape[1] < 2:
        raise ValueError("vocabulary of size < 2 has no second-largest logit")
    top1 = np.argmax(z, axis=1)
    rows = np.arange(z.shape[0])
    z1 = z[rows, top1]
    second = z.copy()
    second[rows, top1] = -np.inf
    z2 = second.max(axis=1)
    return top1, z1, z2


def margins(logits, counter: ComparisonCounter | None = None) -> MarginArray:
    _, z1, z2 = top_two(logits)
    return MarginArray.from_values(z1 - z2, counter)


def run_length(ma: MarginArray, tau: float, limit: int | None = None,
               counter: ComparisonCounter | None = None) -> int:
    """Length of the leading run with every margin strictly above ``tau``.

    The scan stops at the first prefix minimum <= ``tau`` (prefix minima never
    recover) or after ``limit`` positions.
    """
    pm = ma.prefix_min
    end = len(pm) if limit is None else min(limit, len(pm))
    m = 0
    while m < end:
        if counter is not None:
            counter.n += 1
        if not pm[m] > tau:
            break
        m += 1
    return m


def select_block_length(ma: MarginArray, n: int, bounds: SizingBounds,
                        counter: ComparisonCounter | None = None) -> int:
    """Largest m in [ceil(alpha*n), floor(beta*n)] whose prefix clears ``tau_floor``.

    A prefix clears the floor when its minimum margin is strictly greater than
    ``tau_floor``; zero margins therefore never clear the default floor of 0.
    Returns 0 when no length in the window qualifies.
    """
    if n != len(ma) or n < 1:
        raise ContractViolation(f"n={n} does not match margin array of length {len(ma)}")
    lo, hi = bounds.window(n)
    m = run_length(ma, bounds.tau_floor, limit=hi, counter=counter)
    return m if m >= lo else 0
