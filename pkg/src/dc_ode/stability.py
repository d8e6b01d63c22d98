"""Numerical absolute-stability verification on the scalar test problem.

Stability is measured by running the shipped solvers with complex
arithmetic on u' = lambda*u, u(0) = 1 with k = 1 (so z = lambda*k), not
by deriving characteristic polynomials.  A sample "decays" when the
tail of the amplification sequence shrinks: the polynomial transient
that the corrected schemes are allowed (a degree-j factor in front of
the geometric decay) is skipped by comparing against the state after
twice the stage count.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ode import TRAPEZOID, OdeProblem, SchemeSpec
from .euler import euler_dc_solve
from .trapezoid import dc_solve

__all__ = [
    "StabilitySample",
    "dahlquist_problem",
    "amplification_sequence",
    "stability_scan",
    "lemma4_structure_check",
]

_POLE_GUARD = 1e-9


@dataclass(frozen=True)
class StabilitySample:
    z: complex
    order: int
    family: str
    n_steps: int
    decayed: bool
    max_modulus: float
    tail_ratio: float


def dahlquist_problem(z: complex, horizon: float) -> OdeProblem:
    """u' = z*u, u(0) = 1, as a complex scalar problem."""
    z = complex(z)
    return OdeProblem(
        dim=1,
        rhs=lambda t, u: z * u,
        jac=lambda t, u: np.array([[z]]),
        u0=np.array([1.0 + 0.0j]),
        t_end=horizon,
        name=f"dahlquist({z})",
        linear_lambda=z,
    )


def amplification_sequence(z: complex, spec: SchemeSpec, n_steps: int) -> np.ndarray:
    """u^0 ... u^{n_steps} for u' = z*u with k = 1, via the real solver."""
    if n_steps < 2 * spec.stage_count + 4:
        raise ValueError("n_steps must be at least 2 * stage count + 4")
    if spec.family == TRAPEZOID and abs(2.0 - z) < _POLE_GUARD:
        raise ZeroDivisionError("z = 2 is the amplification pole of the midpoint rule")
    problem = dahlquist_problem(z, float(n_steps))
    if spec.family == TRAPEZOID:
        traj = dc_solve(problem, spec, 1.0)
    else:
        traj = euler_dc_solve(problem, spec, 1.0)
    return traj.values[:, 0].copy()


def _sample_from_sequence(z, spec, seq) -> StabilitySample:
    n = len(seq) - 1
    mods = np.abs(seq)
    start = min(2 * spec.stage_count, n - 1)
    tail_end = mods[n]
    tail_mid = mods[n // 2]
    if tail_end == 0.0:
        decayed, ratio = True, 0.0
    elif tail_mid == 0.0:
        decayed, ratio = False, np.inf
    else:
        ratio = float(tail_end / tail_mid)
        decayed = ratio < 1.0 and tail_end < mods[start]
    return StabilitySample(
        z=complex(z), order=spec.order, family=spec.family, n_steps=n,
        decayed=bool(decayed), max_modulus=float(mods.max()), tail_ratio=float(ratio),
    )


def stability_scan(spec: SchemeSpec, re_vals, im_vals, n_steps: int,
                   return_skipped: bool = False):
    """One StabilitySample per grid point, row-major over re_vals then im_vals.

    Points within the pole guard of the midpoint rule's amplification
    pole (z = 2) are skipped and reported: a warning is emitted, and with
    ``return_skipped=True`` the skipped points come back alongside the
    samples as ``(samples, skipped)``.
    """
    samples, skipped = [], []
    for re in np.asarray(re_vals, dtype=np.float64):
        for im in np.asarray(im_vals, dtype=np.float64):
            z = complex(re, im)
            if spec.family == TRAPEZOID and abs(2.0 - z) < _POLE_GUARD:
                skipped.append(z)
                continue
            seq = amplification_sequence(z, spec, n_steps)
            samples.append(_sample_from_sequence(z, spec, seq))
    if skipped:
        warnings.warn(f"skipped {len(skipped)} pole-adjacent grid points: {skipped}",
                      stacklevel=2)
    if return_skipped:
        return samples, skipped
    return samples


def lemma4_structure_check(z: complex, j: int, n_steps: int, diff_order: int = None) -> float:
    """Degree check of the polynomial factor in the DC amplification.

    Forms q_n = u^{2j+2,n} / r^{n-j} with r = (2+z)/(2-z) and returns
    max |diff^(d) q| / max |q| over the validity range n >= 2j, where d
    defaults to j+1.  For the true degree-j polynomial factor the
    (j+1)-th difference sits at rounding level while the j-th does not.
    """
    if z.real >= 0:
        raise ValueError("check is for the left half plane")
    if n_steps < 4 * j + 8:
        raise ValueError("n_steps must be at least 4j + 8")
    d = j + 1 if diff_order is None else diff_order
    r = (2.0 + z) / (2.0 - z)
    if abs(r) == 0.0:
        raise ZeroDivisionError("z = -2 collapses the amplification to zero")
    n_eff = n_steps
    if abs(r) < 1.0:
        # keep |r|**n above ~1e-280 so the de-geometrized quotient is clean
        limit = j + int(-280.0 * np.log(10.0) / np.log(abs(r)))
        if limit < n_steps:
            n_eff = limit
            warnings.warn(
                f"lemma4 check shrank n_steps from {n_steps} to {n_eff} "
                f"to avoid |r|^n underflow", stacklevel=2,
            )
    if n_eff < 4 * j + 8:
        raise ValueError(
            f"|r| = {abs(r):.3g} underflows before the minimum usable range"
        )
    spec = SchemeSpec.trapezoid(2 * j + 2)
    seq = amplification_sequence(z, spec, n_eff)
    n0 = 2 * j
    idx = np.arange(n0, n_eff + 1)
    q = seq[n0:] / r ** (idx - j)
    dq = np.diff(q, d) if d > 0 else q
    return float(np.max(np.abs(dq)) / np.max(np.abs(q)))
