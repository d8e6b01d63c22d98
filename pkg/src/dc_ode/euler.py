"""Euler-rule deferred-correction hierarchy, forward and backward variants.

Stage 1 is the plain Euler rule; stage j+1 adds the one-sided correction
sum (coefficients a_2 ... a_{j+1}) built from the stage-j trajectory and
gains one order of accuracy.  The forward variant anchors the rhs and
the correction stencil at the pair's left index and is explicit when
marching right; the backward variant anchors both at the right index
(time-mirrored stencils) and is implicit when marching right.  Ghost
values are produced by marching the same pair relation leftward, which
swaps the explicit and implicit roles.
"""

from __future__ import annotations

import numpy as np

from .newton import NewtonConfig, newton_solve
from .ode import EULER_BACKWARD, EULER_FORWARD, OdeProblem, SchemeSpec, Trajectory
from .operators import GridSeq
from .trapezoid import SolverFailure, _stencil_series, _use_fastpath

__all__ = ["euler_stage_run", "euler_dc_solve", "euler_stage_ranges"]


def euler_stage_ranges(order: int, n_steps: int):
    """Per-stage index ranges [lo, hi]; stage s occupies ranges[s-1].

    Stage s+1 consumes stage s over its own range inflated by the
    conservative stencil reach ceil((s+1)/2) + 1 on the left and
    ceil((s+1)/2) on the right.
    """
    ranges = [(0, n_steps)]
    for s in range(order - 1, 0, -1):
        lo, hi = ranges[0]
        reach = (s + 2) // 2  # ceil((s+1)/2)
        ranges.insert(0, (lo - reach - 1, hi + reach))
    return ranges


def _variant_of(spec_or_str) -> str:
    if isinstance(spec_or_str, str):
        if spec_or_str not in ("forward", "backward"):
            raise ValueError(f"unknown Euler variant {spec_or_str!r}")
        return spec_or_str
    return spec_or_str.euler_variant


def _march_euler_generic(problem, k, u_start, n_from, n_to, corr_arr, anchor_lo,
                         implicit_forward, cfg):
    """Generic-python Euler segment march; corr_arr is indexed by anchor."""
    count = abs(n_to - n_from)
    forward = n_to >= n_from
    dtype = problem.dtype if corr_arr is None else np.result_type(problem.dtype, corr_arr.dtype)
    out = np.empty((count, problem.dim), dtype=dtype)
    u = np.asarray(u_start, dtype=dtype)
    rhs, jac = problem.rhs, problem.jac
    eye = np.eye(problem.dim, dtype=dtype)
    zero = np.zeros(problem.dim, dtype=dtype)
    for i in range(count):
        pair = (n_from + i) if forward else (n_from - i - 1)
        anchor = pair + 1 if implicit_forward else pair
        t_a = anchor * k
        corr = corr_arr[anchor - anchor_lo] if corr_arr is not None else zero
        if forward != implicit_forward:
            # anchored state is known: explicit update
            s = 1.0 if forward else -1.0
            u = u + s * k * (rhs(t_a, u) + corr)
            if not np.all(np.isfinite(u)):
                idx = pair + 1 if forward else pair
                raise SolverFailure("explicit Euler update blew up", idx, idx * k)
            out[i] = u
            continue
        sign = 1.0 if forward else -1.0

        def residual(delta):
            return delta - sign * k * (rhs(t_a, u + delta) + corr)

        jacobian = None
        if jac is not None:
            def jacobian(delta):
                return eye - sign * k * np.asarray(jac(t_a, u + delta))

        delta, report = newton_solve(residual, jacobian, zero, cfg)
        if not report.converged:
            idx = pair + 1 if forward else pair
            raise SolverFailure(
                f"Newton did not converge ({report.message or 'tolerance not met'})",
                idx, idx * k, report,
            )
        u = u + delta
        out[i] = u
    return out


def _march_euler_linear(z, k, u_start, n_from, n_to, corr_arr, anchor_lo, implicit_forward):
    """Closed-form Euler marching for u' = z*u."""
    count = abs(n_to - n_from)
    forward = n_to >= n_from
    out = np.empty(count, dtype=np.complex128)
    u = complex(u_start)
    kz = k * z
    corr_l = corr_arr[:, 0].tolist() if corr_arr is not None else None
    for i in range(count):
        pair = (n_from + i) if forward else (n_from - i - 1)
        anchor = pair + 1 if implicit_forward else pair
        c = k * corr_l[anchor - anchor_lo] if corr_l is not None else 0.0
        if forward != implicit_forward:
            s = 1.0 if forward else -1.0
            u = u + s * (kz * u + c)
        else:
            denom = 1.0 - (kz if forward else -kz)
            if denom == 0:
                raise ZeroDivisionError("Euler solve singular: lambda*k = 1")
            u = u + (((kz * u + c) if forward else -(kz * u + c)) / denom)
        out[i] = u
    return out[:, None]


def euler_stage_run(problem: OdeProblem, lower, j: int, variant: str, index_range,
                    newton: NewtonConfig = None, engine: str = "auto",
                    k: float = None) -> Trajectory:
    """Run Euler DC stage j+1 (order j+1) over index_range.

    ``lower`` is the stage-j trajectory, or None for the base stage
    (j = 0, which needs ``k``).  The forward variant solves
    (u[n+1]-u[n])/k - sum_i a_{i+1} k^i S_i lower[n] = F(t_n, u[n]);
    the backward variant anchors F and the mirrored stencils at n+1.
    """
    variant = _variant_of(variant)
    if j < 0:
        raise ValueError("j must be nonnegative")
    if (lower is None) != (j == 0):
        raise ValueError("stage j >= 1 needs the stage-j lower trajectory, stage 0 none")
    if lower is not None and lower.stage_order != j:
        raise ValueError(f"stage {j + 1} corrects an order-{j} trajectory, "
                         f"got order {lower.stage_order}")
    if lower is not None:
        k = lower.k
    if k is None:
        raise ValueError("the base stage needs an explicit step k")
    cfg = newton or NewtonConfig.for_initial_state(problem.u0)
    return _euler_stage(problem, lower, j, variant, index_range, cfg, engine, k)


def _assemble_euler(problem, k, index_range, corr_arr, anchor_lo, implicit_forward,
                    cfg, engine, lower, offs=None, wts=None):
    lo, hi = index_range
    if lo > 0 or hi < 1:
        raise ValueError("index range must contain [0, 1]")

    def march(a, b):
        if a == b:
            return np.empty((0, problem.dim), dtype=problem.dtype)
        if problem.linear_lambda is not None and problem.dim == 1:
            return _march_euler_linear(problem.linear_lambda, k, problem.u0[0],
                                       a, b, corr_arr, anchor_lo, implicit_forward)
        if _use_fastpath(problem, engine, abs(b - a)):
            from . import fastpath

            return fastpath.march_euler(problem, k, problem.u0, a, b,
                                        lower.states if lower is not None else None,
                                        offs, wts, implicit_forward, cfg)
        return _march_euler_generic(problem, k, problem.u0, a, b, corr_arr,
                                    anchor_lo, implicit_forward, cfg)

    fwd = march(0, hi)
    bwd = march(0, lo)
    values = np.empty((hi - lo + 1, problem.dim), dtype=fwd.dtype)
    values[-lo] = problem.u0
    values[-lo + 1 :] = fwd
    if lo < 0:
        values[:-lo] = bwd[::-1]
    return values


def euler_dc_solve(problem: OdeProblem, spec: SchemeSpec, k: float,
                   newton: NewtonConfig = None, engine: str = "auto",
                   return_stages: bool = False):
    """Run the Euler DC hierarchy: stages 1 ... spec.order.

    Every stage starts from u0 at index 0; ranges are cumulatively
    inflated so each correction stencil stays inside the stage below.
    Returns the final stage restricted to [0, N].
    """
    if spec.family not in (EULER_FORWARD, EULER_BACKWARD):
        raise ValueError("euler_dc_solve drives the Euler families")
    variant = spec.euler_variant
    n_steps = int(np.floor(problem.t_end / k + 1e-9))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    cfg = newton or NewtonConfig.for_initial_state(problem.u0)
    ranges = euler_stage_ranges(spec.order, n_steps)
    traj = None
    stages = []
    for s in range(1, spec.order + 1):
        lo, hi = ranges[s - 1]
        traj = _euler_stage(problem, traj, s - 1, variant, (lo, hi), cfg, engine, k)
        traj = Trajectory(states=traj.states, n_steps=n_steps, stage_order=s)
        if return_stages:
            stages.append(traj)
    final = traj if traj.ghost_left == 0 and traj.ghost_right == 0 else traj.restricted()
    if return_stages:
        return final, stages
    return final


def _euler_stage(problem, lower, j, variant, index_range, cfg, engine, k):
    """euler_stage_run with the step supplied explicitly (base stage needs it)."""
    lo, hi = index_range
    implicit_forward = variant == "backward"
    corr_arr = None
    anchor_lo = lo if not implicit_forward else lo + 1
    offs = wts = None
    if j >= 1:
        spec = SchemeSpec.euler(j + 1, variant)
        offs, wts, _ = spec.stage_weights(j)
        anchor_hi = hi - 1 if not implicit_forward else hi
        need_lo = anchor_lo + int(offs.min())
        need_hi = anchor_hi + int(offs.max())
        if lower.states.base_index > need_lo or lower.states.last_index < need_hi:
            raise ValueError(
                f"insufficient ghost coverage for stage {j + 1} on [{lo}, {hi}]"
            )
        corr_arr = _stencil_series(lower.states, anchor_lo, anchor_hi, offs, wts) / k
    values = _assemble_euler(problem, k, index_range, corr_arr, anchor_lo,
                             implicit_forward, cfg, engine, lower, offs, wts)
    return Trajectory(states=GridSeq(values, k, lo), n_steps=hi, stage_order=j + 1)
