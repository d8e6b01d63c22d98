"""Independent oracles shared by the test modules.

These deliberately re-derive quantities through a different code path
than the library: nested one-step difference applications instead of
binomial closed forms, and the explicit linear one-step recurrence of
the corrected schemes instead of the Newton-marching engine.
"""

import numpy as np

from dc_ode.operators import GridSeq


def apply_plus(seq: GridSeq) -> GridSeq:
    """Forward difference as a whole derived sequence (loses the top index)."""
    v = (seq.values[1:] - seq.values[:-1]) / seq.step
    return GridSeq(v, seq.step, seq.base_index)


def apply_minus(seq: GridSeq) -> GridSeq:
    """Backward difference as a whole derived sequence (loses the bottom index)."""
    v = (seq.values[1:] - seq.values[:-1]) / seq.step
    return GridSeq(v, seq.step, seq.base_index + 1)


def nested_composite(seq: GridSeq, m: int) -> GridSeq:
    """(D+D-)^m by m alternating nested applications."""
    for _ in range(m):
        seq = apply_minus(apply_plus(seq))
    return seq


def grid_of(fn, lo: int, hi: int, k: float, dim: int = 1) -> GridSeq:
    vals = np.array([[fn(n * k)] * dim for n in range(lo, hi + 1)], dtype=np.float64)
    return GridSeq(vals.reshape(hi - lo + 1, dim), k, lo)


def random_grid(rng, lo: int, hi: int, k: float, dim: int = 1) -> GridSeq:
    return GridSeq(rng.standard_normal((hi - lo + 1, dim)), k, lo)


def linear_recurrence_oracle(z: complex, j: int, weights, lower: np.ndarray,
                             lower_base: int, n_lo: int, n_hi: int) -> np.ndarray:
    """Evolve the one-step linear recurrence of correction stage j.

    u[n+1] = r u[n] + (2/(2-z)) * sum_o alpha_o(z) lower[n+o], built
    directly from the stage stencil weights (alpha affine in z), for
    u' = z*u with k = 1.  Ghost values below 0 come from running the
    same recurrence backward.  Returns u on n_lo..n_hi with u[0] = 1.
    """
    offs, wlam, wgam = weights
    r = (2.0 + z) / (2.0 - z)
    count = n_hi - n_lo + 1
    u = np.zeros(count, dtype=np.complex128)
    base = -n_lo
    u[base] = 1.0

    def drive(pair):
        acc = 0.0 + 0.0j
        for o, wl, wg in zip(offs, wlam, wgam):
            acc += (wl - z * wg) * lower[pair + o - lower_base]
        return acc * 2.0 / (2.0 - z)

    for n in range(0, n_hi):
        u[base + n + 1] = r * u[base + n] + drive(n)
    for n in range(-1, n_lo - 1, -1):
        u[base + n] = (u[base + n + 1] - drive(n)) / r
    return u
