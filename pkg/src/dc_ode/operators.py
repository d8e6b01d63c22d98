"""Difference and averaging operators on uniformly gridded sequences.

A :class:`GridSeq` stores state vectors at consecutive integer grid
indices (which may be negative).  All stencil evaluations use the
binomial closed forms of the composite operators, so every call costs
one pass over the stencil and carries a single rounding pattern; nested
recursive composition exists only as a test oracle.

Out-of-range access always raises; ghost provisioning is the scheme
drivers' job and silent padding would mask startup bugs.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "GridSeq",
    "forward_diff",
    "backward_diff",
    "average",
    "composite_power",
    "odd_composite",
    "midpoint_centered_diff",
]


@dataclass(frozen=True)
class GridSeq:
    """State vectors on indices base_index ... base_index + len - 1."""

    values: np.ndarray  # shape (L, dim); float or complex
    step: float
    base_index: int = 0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("values must be a nonempty (L, dim) array")
        if not self.step > 0:
            raise ValueError("step must be positive")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def last_index(self) -> int:
        return self.base_index + len(self) - 1

    def at(self, n: int) -> np.ndarray:
        """State vector at grid index n; raises IndexError outside range."""
        if not self.base_index <= n <= self.last_index:
            raise IndexError(
                f"grid index {n} outside stored range "
                f"[{self.base_index}, {self.last_index}]"
            )
        return self.values[n - self.base_index]

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Contiguous block of states for indices lo ... hi inclusive."""
        if lo > hi:
            raise ValueError("empty window")
        if lo < self.base_index or hi > self.last_index:
            raise IndexError(
                f"window [{lo}, {hi}] outside stored range "
                f"[{self.base_index}, {self.last_index}]"
            )
        a = lo - self.base_index
        return self.values[a : a + (hi - lo + 1)]


def forward_diff(s: GridSeq, n: int) -> np.ndarray:
    """(s[n+1] - s[n]) / k."""
    return (s.at(n + 1) - s.at(n)) / s.step


def backward_diff(s: GridSeq, n: int) -> np.ndarray:
    """(s[n] - s[n-1]) / k."""
    return (s.at(n) - s.at(n - 1)) / s.step


def average(s: GridSeq, n: int) -> np.ndarray:
    """(s[n+1] + s[n]) / 2, the averaged value at midpoint n+1/2."""
    return (s.at(n + 1) + s.at(n)) / 2


def composite_power(s: GridSeq, n: int, m: int) -> np.ndarray:
    """The 2m-th order centered composite at index n, binomial closed form.

    Equals k**(-2m) * sum_i (-1)**i C(2m,i) s[n+m-i]; stencil n-m ... n+m.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    block = s.window(n - m, n + m)  # rows are offsets -m ... m
    acc = np.zeros(s.dim, dtype=block.dtype)
    for i in range(2 * m + 1):
        acc += ((-1) ** i * comb(2 * m, i)) * block[2 * m - i]  # offset m-i
    return acc / s.step ** (2 * m)


def odd_composite(s: GridSeq, n: int, m: int) -> np.ndarray:
    """The backward-shifted composite of odd order 2m+1 at index n.

    Equals k**(-(2m+1)) * sum_i (-1)**i C(2m+1,i) s[n+m-i];
    stencil n-m-1 ... n+m.  m = 0 reduces to the backward difference.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    block = s.window(n - m - 1, n + m)  # rows are offsets -m-1 ... m
    acc = np.zeros(s.dim, dtype=block.dtype)
    for i in range(2 * m + 2):
        acc += ((-1) ** i * comb(2 * m + 1, i)) * block[2 * m + 1 - i]
    return acc / s.step ** (2 * m + 1)


def midpoint_centered_diff(s: GridSeq, n: int, m: int) -> np.ndarray:
    """Centered difference of the 2m-th composite, taken at midpoint n+1/2.

    For m = 0 this is the plain midpoint difference (s[n+1] - s[n]) / k;
    otherwise [composite_power(s, n+1, m) - composite_power(s, n, m)] / k.
    Stencil n-m ... n+1+m.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return forward_diff(s, n)
    return (composite_power(s, n + 1, m) - composite_power(s, n, m)) / s.step
