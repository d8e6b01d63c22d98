"""Shared problem, scheme, and trajectory containers for the DC solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import (
    euler_correction_weights,
    generate_euler_coeffs,
    generate_trapezoid_coeffs,
    trapezoid_gamma_weights,
    trapezoid_lambda_weights,
)
from .operators import GridSeq

__all__ = ["OdeProblem", "SchemeSpec", "Trajectory", "TRAPEZOID", "EULER_FORWARD", "EULER_BACKWARD"]

TRAPEZOID = "trapezoid_dc"
EULER_FORWARD = "euler_forward_dc"
EULER_BACKWARD = "euler_backward_dc"


@dataclass(frozen=True)
class OdeProblem:
    """First-order system u' = F(t, u), u(0) = u0, on [0, t_end].

    ``rhs`` returns a new state vector; ``jac`` (optional) the dense
    d(rhs)/du matrix.  ``rhs_inplace``/``jac_inplace`` are optional
    allocation-free twins (signature ``(t, u, out)``) used to build the
    compiled marching kernels; they must compute the identical values.
    ``linear_lambda`` marks the scalar test problem u' = lam*u, for which
    the implicit solves collapse to a single division.
    """

    dim: int
    rhs: object
    u0: np.ndarray
    t_end: float
    jac: object = None
    name: str = ""
    rhs_inplace: object = None
    jac_inplace: object = None
    linear_lambda: complex = None

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0))
        if u0.shape != (self.dim,):
            raise ValueError(f"u0 shape {u0.shape} does not match dim {self.dim}")
        if not np.all(np.isfinite(self.rhs(0.0, u0))):
            raise ValueError("rhs is not finite at the initial state")
        object.__setattr__(self, "u0", u0)

    @property
    def dtype(self):
        return np.result_type(self.u0, np.float64)


def _floats(ws) -> np.ndarray:
    return np.array([float(w) for w in ws], dtype=np.float64)


@dataclass(frozen=True)
class SchemeSpec:
    """Scheme family plus target order, with float coefficient snapshots."""

    family: str
    order: int

    def __post_init__(self):
        if self.family == TRAPEZOID:
            if self.order < 2 or self.order % 2:
                raise ValueError("trapezoid DC order must be even and >= 2")
        elif self.family in (EULER_FORWARD, EULER_BACKWARD):
            if self.order < 1:
                raise ValueError("Euler DC order must be >= 1")
        else:
            raise ValueError(f"unknown scheme family {self.family!r}")

    # -- constructors -------------------------------------------------
    @staticmethod
    def trapezoid(order: int) -> "SchemeSpec":
        return SchemeSpec(TRAPEZOID, order)

    @staticmethod
    def euler(order: int, variant: str = "backward") -> "SchemeSpec":
        fam = EULER_FORWARD if variant == "forward" else EULER_BACKWARD
        return SchemeSpec(fam, order)

    # -- structure ----------------------------------------------------
    @property
    def corrections(self) -> int:
        """Number of correction stages stacked on the base scheme."""
        if self.family == TRAPEZOID:
            return (self.order - 2) // 2
        return self.order - 1

    @property
    def stage_count(self) -> int:
        return self.corrections + 1

    @property
    def euler_variant(self) -> str:
        if self.family == EULER_FORWARD:
            return "forward"
        if self.family == EULER_BACKWARD:
            return "backward"
        raise ValueError("not an Euler-family scheme")

    # -- coefficient snapshots (rationals rounded once) ----------------
    def coeff_floats(self) -> np.ndarray:
        """c_2..c_{2J+1} for trapezoid DC, a_1..a_order for Euler DC."""
        if self.family == TRAPEZOID:
            cs = generate_trapezoid_coeffs(max(self.corrections, 1))
            return _floats(cs.c[: 2 * self.corrections])
        es = generate_euler_coeffs(self.order)
        return _floats(es.a)

    def stage_weights(self, j: int):
        """Combined correction stencil weights feeding stage j+1.

        Trapezoid: returns (offsets, w_lambda, w_gamma) with offsets
        -j ... j+1; the lambda part is in units of 1/k, gamma is
        dimensionless.  Euler: returns (offsets, w, None) in units of
        1/k, with offsets relative to the stencil's anchor index.
        """
        if self.family == TRAPEZOID:
            off_l, wl = trapezoid_lambda_weights(j)
            off_g, wg = trapezoid_gamma_weights(j)
            assert off_l == off_g
            return np.array(off_l), _floats(wl), _floats(wg)
        off, w = euler_correction_weights(j, self.euler_variant)
        return np.array(off), _floats(w), None


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid solution with ghost values outside [0, n_steps]."""

    states: GridSeq
    n_steps: int
    stage_order: int

    def __post_init__(self):
        if self.states.base_index > 0 or self.states.last_index < self.n_steps:
            raise ValueError("stored range must cover [0, n_steps]")

    @property
    def k(self) -> float:
        return self.states.step

    @property
    def dim(self) -> int:
        return self.states.dim

    @property
    def ghost_left(self) -> int:
        return -self.states.base_index

    @property
    def ghost_right(self) -> int:
        return self.states.last_index - self.n_steps

    def state(self, n: int) -> np.ndarray:
        return self.states.at(n)

    def time(self, n: int) -> float:
        return n * self.k

    @property
    def values(self) -> np.ndarray:
        """States on grid indices 0 ... n_steps (ghosts stripped)."""
        return self.states.window(0, self.n_steps)

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1, dtype=np.float64) * self.k

    def restricted(self) -> "Trajectory":
        """Copy with ghost values dropped."""
        return Trajectory(
            states=GridSeq(self.values.copy(), self.k, 0),
            n_steps=self.n_steps,
            stage_order=self.stage_order,
        )
