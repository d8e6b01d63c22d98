"""Exact-rational generation of the correction-stencil coefficients.

Two coefficient families drive the deferred-correction schemes:

* ``c_2, c_3, ..., c_{2p+1}`` weight the centered composite-difference
  corrections of the midpoint (trapezoidal) hierarchy.  They are produced
  by an elimination recursion on Taylor expansions about the half-grid
  point, seeded with ``d_{1,i} = 2**(1-i)``.
* ``a_1, ..., a_p`` weight the one-sided corrections of the Euler
  hierarchy.  They are produced by the method of undetermined
  coefficients: an exact triangular solve matching the Taylor expansion
  of each stencil term.

Everything here is done in ``fractions.Fraction`` arithmetic; floats are
taken only by the scheme constructors, once, at scheme-build time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

__all__ = [
    "TrapezoidCoeffs",
    "EulerCoeffs",
    "generate_trapezoid_coeffs",
    "generate_euler_coeffs",
    "trapezoid_lambda_weights",
    "trapezoid_gamma_weights",
    "euler_correction_weights",
    "midpoint_derivative_weights",
    "midpoint_value_weights",
    "one_sided_derivative_weights",
]


@dataclass(frozen=True)
class TrapezoidCoeffs:
    """Centered-correction coefficients c_2 ... c_{2p+1}, exact rationals."""

    p: int
    c: tuple  # c[0] is c_2, ..., c[2p-1] is c_{2p+1}

    def c_of(self, i: int) -> Fraction:
        if not 2 <= i <= 2 * self.p + 1:
            raise IndexError(f"c_{i} not generated for p={self.p}")
        return self.c[i - 2]


@dataclass(frozen=True)
class EulerCoeffs:
    """One-sided correction coefficients a_1 ... a_p, exact rationals."""

    p: int
    a: tuple  # a[0] is a_1, ..., a[p-1] is a_p

    def a_of(self, i: int) -> Fraction:
        if not 1 <= i <= self.p:
            raise IndexError(f"a_{i} not generated for p={self.p}")
        return self.a[i - 1]


def _half(n: int) -> Fraction:
    # the half-integer n/2 as an exact fraction
    return Fraction(n, 2)


def _odd_moment(q: int, s: int) -> Fraction:
    """Sum_j (-1)^j C(2q+1,j) * (q - j + 1/2)**s."""
    return sum(
        (-1) ** j * comb(2 * q + 1, j) * _half(2 * (q - j) + 1) ** s
        for j in range(2 * q + 2)
    )


def _even_moment(q: int, s: int) -> Fraction:
    """Sum_j (-1)^j C(2q,j) * [(q-j+1/2)**s + (q-j-1/2)**s]."""
    return sum(
        (-1) ** j
        * comb(2 * q, j)
        * (_half(2 * (q - j) + 1) ** s + _half(2 * (q - j) - 1) ** s)
        for j in range(2 * q + 1)
    )


@lru_cache(maxsize=None)
def generate_trapezoid_coeffs(p: int) -> TrapezoidCoeffs:
    """Generate c_2 ... c_{2p+1} exactly.

    The recursion eliminates the odd derivatives f''', f^(5), ... through
    the antisymmetric midpoint stencils and the even derivatives through
    the averaged symmetric stencils, starting from the half-step Taylor
    rows d_{1,i} = 2**(1-i).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    # d[i] holds d_{q,i} for the current q; only i >= 2q survives each sweep.
    d = {i: Fraction(1, 2 ** (i - 1)) for i in range(2, 2 * p + 2)}
    c = {2: d[2] / (2 * factorial(2)), 3: d[3] / factorial(3)}
    for q in range(2, p + 1):
        pivot_odd = d[2 * q - 1] / factorial(2 * q - 1)
        pivot_even = d[2 * q - 2] / (2 * factorial(2 * q - 2))
        for i in range(q, p + 1):
            d[2 * i + 1] = d[2 * i + 1] - pivot_odd * _odd_moment(q - 1, 2 * i + 1)
            d[2 * i] = d[2 * i] - pivot_even * _even_moment(q - 1, 2 * i)
        c[2 * q] = d[2 * q] / (2 * factorial(2 * q))
        c[2 * q + 1] = d[2 * q + 1] / factorial(2 * q + 1)
    return TrapezoidCoeffs(p=p, c=tuple(c[i] for i in range(2, 2 * p + 2)))


def _euler_stencil_shift(i: int) -> int:
    # stencil term i covers offsets shift-(i+1) ... shift
    return (i + 1) // 2


def _euler_moment(i: int, s: int) -> int:
    """Sum_t (-1)^t C(i+1,t) * (shift - t)**s for stencil term i."""
    m = _euler_stencil_shift(i)
    return sum((-1) ** t * comb(i + 1, t) * (m - t) ** s for t in range(i + 2))


@lru_cache(maxsize=None)
def generate_euler_coeffs(p: int) -> EulerCoeffs:
    """Generate a_1 ... a_p exactly by undetermined coefficients.

    The defining relation (forward form, step k, all exact):

        u'(t_n) = D+ u(t_n) - sum_{i=1..p-1} a_{i+1} k^i S_i u(t_n) + O(k^p)

    where S_i alternates between pure centered composites and a
    backward-shifted composite.  Matching the k^(q-1) Taylor coefficient
    for q = 2..p yields a lower-triangular system solved term by term.
    The moment matrix has unit-scaled diagonal q!, so the system cannot
    be singular; the p <= 12 guard below is a sanity assertion only.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    a = [Fraction(1)]  # a_1
    for q in range(2, p + 1):
        acc = Fraction(1)
        for i in range(1, q - 1):
            acc -= a[i] * _euler_moment(i, q)
        lead = _euler_moment(q - 1, q)
        assert lead == factorial(q), "one-sided moment system lost triangularity"
        a.append(acc / lead)
    return EulerCoeffs(p=p, a=tuple(a))


# ---------------------------------------------------------------------------
# Combined stencil weights.  Each helper returns (offsets, weights) with
# exact Fraction weights; the represented quantity is
#     (1/k) * sum_o w[o] * u[n + o]          for the "per k" stencils
#     sum_o w[o] * u[n + o]                  for the dimensionless ones
# as noted per function.
# ---------------------------------------------------------------------------


def _accumulate(table: dict, offset: int, value: Fraction) -> None:
    table[offset] = table.get(offset, Fraction(0)) + value


def _as_arrays(table: dict):
    offsets = sorted(table)
    return tuple(offsets), tuple(table[o] for o in offsets)


def trapezoid_lambda_weights(j: int):
    """Weights of sum_{i<=j} c_{2i+1} k^{2i} D(D+D-)^i at midpoint n+1/2.

    Represented value is (1/k) * sum_o w[o] u[n+o], offsets -j ... j+1.
    """
    cs = generate_trapezoid_coeffs(max(j, 1))
    table: dict = {}
    for i in range(1, j + 1):
        ci = cs.c_of(2 * i + 1)
        for m in range(2 * i + 1):
            w = ci * (-1) ** m * comb(2 * i, m)
            _accumulate(table, 1 + i - m, w)   # composite centered at n+1
            _accumulate(table, i - m, -w)      # minus composite centered at n
    if not table:
        table[0] = Fraction(0)
    return _as_arrays(table)


def trapezoid_gamma_weights(j: int):
    """Weights of sum_{i<=j} c_{2i} k^{2i} (D+D-)^i E at midpoint n+1/2.

    Represented value is sum_o w[o] u[n+o] (dimensionless), offsets -j ... j+1.
    """
    cs = generate_trapezoid_coeffs(max(j, 1))
    table: dict = {}
    for i in range(1, j + 1):
        ci = cs.c_of(2 * i) / 2
        for m in range(2 * i + 1):
            w = ci * (-1) ** m * comb(2 * i, m)
            _accumulate(table, 1 + i - m, w)
            _accumulate(table, i - m, w)
    if not table:
        table[0] = Fraction(0)
    return _as_arrays(table)


def euler_correction_weights(j: int, variant: str):
    """Weights of the order-(j+1) Euler correction sum.

    Forward variant: sum_{i<=j} a_{i+1} k^i D-^{r_i} (D+D-)^{m_i} at index n,
    value (1/k) * sum_o w[o] u[n+o].  Backward variant: the time-mirrored
    stencils centered at n+1, with offsets still given relative to n+1.
    """
    if variant not in ("forward", "backward"):
        raise ValueError(f"unknown Euler variant {variant!r}")
    coeffs = generate_euler_coeffs(max(j + 1, 1))
    table: dict = {}
    for i in range(1, j + 1):
        ai = coeffs.a_of(i + 1)
        m = _euler_stencil_shift(i)
        if variant == "forward":
            for t in range(i + 2):
                _accumulate(table, m - t, ai * (-1) ** t * comb(i + 1, t))
        else:
            # mirrored: odd i keeps the centered composite but flips sign,
            # even i flips D- into D+ (one-offset shift) and keeps sign
            if i % 2 == 1:
                for t in range(i + 2):
                    _accumulate(table, m - t, -ai * (-1) ** t * comb(i + 1, t))
            else:
                for t in range(i + 2):
                    _accumulate(table, m + 1 - t, ai * (-1) ** t * comb(i + 1, t))
    if not table:
        table[0] = Fraction(0)
    return _as_arrays(table)


def midpoint_derivative_weights(p: int):
    """Full stencil for f'(t_{n+1/2}): value (1/k) * sum_o w[o] f[n+o]."""
    offsets, lam = trapezoid_lambda_weights(p)
    table = dict(zip(offsets, (-w for w in lam)))
    _accumulate(table, 1, Fraction(1))
    _accumulate(table, 0, Fraction(-1))
    return _as_arrays(table)


def midpoint_value_weights(p: int):
    """Full stencil for f(t_{n+1/2}): value sum_o w[o] f[n+o]."""
    offsets, gam = trapezoid_gamma_weights(p)
    table = dict(zip(offsets, (-w for w in gam)))
    _accumulate(table, 1, Fraction(1, 2))
    _accumulate(table, 0, Fraction(1, 2))
    return _as_arrays(table)


def one_sided_derivative_weights(p: int):
    """Full one-sided stencil for f'(t_n): value (1/k) * sum_o w[o] f[n+o].

    Uses the forward base difference minus the order-p correction sum, so
    the leading error term is O(k^p).
    """
    offsets, cw = euler_correction_weights(p - 1, "forward")
    table = dict(zip(offsets, (-w for w in cw)))
    _accumulate(table, 1, Fraction(1))
    _accumulate(table, 0, Fraction(-1))
    return _as_arrays(table)
