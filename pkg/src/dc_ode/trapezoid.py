"""Midpoint (trapezoidal) deferred-correction schemes DC2, DC4, ...

The base scheme advances pairs (n, n+1) through the implicit midpoint
relation; each correction stage j adds straddling-stencil terms built
from the stage below and raises the order by two.  Every stage is
self-starting: ghost values at negative indices come from marching the
same pair relation leftwards from u0, and right-edge stencil demand is
met by forward-inflating the lower stages' ranges.

All pair solves are posed in increment form (unknown delta = change over
the step), which keeps Newton's attainable residual at the size of the
step rather than the size of the state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .newton import NewtonConfig, NewtonReport, newton_solve
from .ode import TRAPEZOID, OdeProblem, SchemeSpec, Trajectory
from .operators import GridSeq, composite_power, midpoint_centered_diff

__all__ = [
    "dc2_run",
    "dc_stage_run",
    "dc_solve",
    "correction_terms",
    "dcc_residual",
    "DccReport",
    "SolverFailure",
    "level_ranges",
    "trajectory_from_samples",
]

_FASTPATH_MIN_STEPS = 50_000


class SolverFailure(RuntimeError):
    """Newton failed to converge at a specific step of a marching run."""

    def __init__(self, message: str, index: int, time: float, report: NewtonReport = None):
        super().__init__(f"{message} at step index {index}, t = {time:.6g}")
        self.index = index
        self.time = time
        self.report = report


def level_ranges(corrections: int, n_steps: int):
    """Index ranges [lo, hi] per stage so every stencil stays in range.

    Stage j consumes stage j-1 on its own range inflated by j on both
    sides; the final stage runs exactly on [0, n_steps].
    """
    ranges = [(0, n_steps)]
    for j in range(corrections, 0, -1):
        lo, hi = ranges[0]
        ranges.insert(0, (lo - j, hi + j))
    return ranges


def _stencil_series(lower: GridSeq, pair_lo: int, pair_hi: int, offsets, weights):
    """sum_o w[o] * lower[p + o] for every pair index p in pair_lo..pair_hi."""
    count = pair_hi - pair_lo + 1
    acc = np.zeros((count, lower.dim), dtype=lower.values.dtype)
    for o, w in zip(offsets, weights):
        block = lower.window(pair_lo + o, pair_hi + o)
        acc += w * block
    return acc


def _pair_corrections(lower, pair_lo, pair_hi, offsets, wlam, wgam, k):
    """Correction terms for each pair: (lam, gam); lam already includes 1/k."""
    lam = _stencil_series(lower, pair_lo, pair_hi, offsets, wlam) / k
    gam = _stencil_series(lower, pair_lo, pair_hi, offsets, wgam)
    return lam, gam


def _march_generic(problem, k, u_start, n_from, n_to, lam, gam, pair_lo, cfg):
    """March the midpoint pair relation from index n_from to n_to.

    Returns the states at the produced indices, nearest-first.  ``lam``
    and ``gam`` are per-pair correction arrays (or None for the base
    scheme) indexed from pair_lo.
    """
    count = abs(n_to - n_from)
    forward = n_to >= n_from
    sign = 1.0 if forward else -1.0
    dtype = np.result_type(problem.dtype, lam.dtype if lam is not None else np.float64)
    out = np.empty((count, problem.dim), dtype=dtype)
    u = np.asarray(u_start, dtype=dtype)
    rhs, jac = problem.rhs, problem.jac
    eye = np.eye(problem.dim, dtype=dtype)
    zero = np.zeros(problem.dim, dtype=dtype)
    for i in range(count):
        pair = (n_from + i) if forward else (n_from - i - 1)
        t_mid = (pair + 0.5) * k
        lam_p = lam[pair - pair_lo] if lam is not None else zero
        gam_p = gam[pair - pair_lo] if gam is not None else zero

        def residual(delta):
            mid = u + 0.5 * delta - gam_p
            return delta - sign * k * (lam_p + rhs(t_mid, mid))

        jacobian = None
        if jac is not None:
            def jacobian(delta):
                mid = u + 0.5 * delta - gam_p
                return eye - sign * (0.5 * k) * np.asarray(jac(t_mid, mid))

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


def _march_linear_scalar(z, k, u_start, n_from, n_to, lam, gam, pair_lo):
    """Closed-form marching for u' = z*u: each solve is one division."""
    count = abs(n_to - n_from)
    forward = n_to >= n_from
    sign = 1.0 if forward else -1.0
    denom = 1.0 - sign * z * k / 2.0
    if denom == 0:
        raise ZeroDivisionError(
            f"amplification pole: lambda*k = {z * k} makes the midpoint solve singular"
        )
    out = np.empty(count, dtype=np.complex128)
    u = complex(u_start)
    lam_l = lam[:, 0].tolist() if lam is not None else None
    gam_l = gam[:, 0].tolist() if gam is not None else None
    kz = k * z
    skz = sign * kz
    sk = sign * k
    for i in range(count):
        pair = (n_from + i) if forward else (n_from - i - 1)
        if lam_l is None:
            delta = skz * u / denom
        else:
            p = pair - pair_lo
            delta = (sk * lam_l[p] + skz * (u - gam_l[p])) / denom
        u = u + delta
        out[i] = u
    return out[:, None]


def _numba_available() -> bool:
    global _HAVE_NUMBA
    if _HAVE_NUMBA is None:
        try:
            import numba  # noqa: F401

            _HAVE_NUMBA = True
        except ImportError:
            _HAVE_NUMBA = False
    return _HAVE_NUMBA


_HAVE_NUMBA = None


def _use_fastpath(problem, engine, total_steps):
    if engine == "python":
        return False
    if problem.rhs_inplace is None or problem.jac_inplace is None:
        return False
    if problem.dtype != np.float64:
        return False
    if not _numba_available():
        return False
    if engine == "numba":
        return True
    return total_steps >= _FASTPATH_MIN_STEPS


def _march(problem, k, u_start, n_from, n_to, corr, cfg, engine):
    """Dispatch one marching segment to the best available engine."""
    if n_from == n_to:
        return np.empty((0, problem.dim), dtype=problem.dtype)
    lam, gam, pair_lo, lower, offs, wlam, wgam = corr
    if problem.linear_lambda is not None and problem.dim == 1:
        return _march_linear_scalar(
            problem.linear_lambda, k, u_start[0], n_from, n_to, lam, gam, pair_lo
        )
    if _use_fastpath(problem, engine, abs(n_to - n_from)):
        from . import fastpath

        return fastpath.march_trapezoid(
            problem, k, u_start, n_from, n_to, lower, offs, wlam, wgam, cfg
        )
    return _march_generic(problem, k, u_start, n_from, n_to, lam, gam, pair_lo, cfg)


def _assemble(problem, k, index_range, march_one):
    """Run the forward and ghost marches from u0; pack the state block."""
    lo, hi = index_range
    if lo > 0 or hi < 1:
        raise ValueError("index range must contain [0, 1]")
    fwd = march_one(0, hi)
    bwd = march_one(0, lo)
    values = np.empty((hi - lo + 1, problem.dim), dtype=fwd.dtype)
    values[-lo] = problem.u0
    values[-lo + 1 :] = fwd
    if lo < 0:
        values[:-lo] = bwd[::-1]
    return values


def dc2_run(problem: OdeProblem, k: float, index_range=None, newton: NewtonConfig = None,
            engine: str = "auto", n_steps: int = None) -> Trajectory:
    """Solve with the modified trapezoidal rule on the given index range.

    The state at every pair satisfies
    (u[n+1] - u[n])/k = F(t_{n+1/2}, (u[n+1]+u[n])/2) to Newton
    tolerance; negative indices are produced by marching the same
    relation backward from u0.
    """
    if k <= 0:
        raise ValueError("step must be positive")
    if index_range is None:
        if n_steps is None:
            n_steps = int(np.floor(problem.t_end / k + 1e-9))
        index_range = (0, n_steps)
    cfg = newton or NewtonConfig.for_initial_state(problem.u0)
    no_corr = (None, None, 0, None, None, None, None)
    values = _assemble(
        problem, k, index_range,
        lambda a, b: _march(problem, k, problem.u0, a, b, no_corr, cfg, engine),
    )
    lo, hi = index_range
    seq = GridSeq(values, k, lo)
    return Trajectory(states=seq, n_steps=hi, stage_order=2)


def correction_terms(lower: Trajectory, j: int, n: int):
    """The two straddling correction terms of stage j at pair (n, n+1).

    Returns (lambda_term, gamma_term): the weighted sums of midpoint
    composite differences and of composites of the averaged pair, using
    coefficients c_3..c_{2j+1} and c_2..c_{2j}.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    from .coefficients import generate_trapezoid_coeffs

    cs = generate_trapezoid_coeffs(j)
    k = lower.k
    seq = lower.states
    lam = np.zeros(lower.dim, dtype=seq.values.dtype)
    gam = np.zeros(lower.dim, dtype=seq.values.dtype)
    for i in range(1, j + 1):
        lam += float(cs.c_of(2 * i + 1)) * k ** (2 * i) * midpoint_centered_diff(seq, n, i)
        avg_comp = (composite_power(seq, n + 1, i) + composite_power(seq, n, i)) / 2
        gam += float(cs.c_of(2 * i)) * k ** (2 * i) * avg_comp
    return lam, gam


def dc_stage_run(problem: OdeProblem, lower: Trajectory, j: int, index_range,
                 newton: NewtonConfig = None, engine: str = "auto",
                 startup: str = "ghost") -> Trajectory:
    """Apply correction stage j (producing order 2j+2) over index_range.

    Solves, per pair, (u[n+1]-u[n])/k - lambda_n = F(t_{n+1/2},
    (u[n+1]+u[n])/2 - gamma_n).  With the default ghost startup the
    relation is marched forward for n >= 0 and mirrored backward for
    ghost indices; the alternative ``startup="copy"`` seeds nodes
    0 ... j with the lower stage's values and marches only forward,
    trading startup accuracy for never leaving t >= 0 (useful when the
    problem's backward extension does not exist).
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if lower.stage_order != 2 * j:
        raise ValueError(
            f"stage {j} corrects an order-{2 * j} trajectory, got order {lower.stage_order}"
        )
    lo, hi = index_range
    need_lo = lo - j if startup == "ghost" else 0
    if lower.states.base_index > need_lo or lower.states.last_index < hi + j:
        raise ValueError(
            f"insufficient ghost coverage: stage {j} on [{lo}, {hi}] needs the lower "
            f"trajectory on [{need_lo}, {hi + j}], stored "
            f"[{lower.states.base_index}, {lower.states.last_index}]"
        )
    k = lower.k
    cfg = newton or NewtonConfig.for_initial_state(problem.u0)
    spec = SchemeSpec.trapezoid(2 * j + 2)
    offs, wlam, wgam = spec.stage_weights(j)
    if startup == "copy":
        if lo != 0:
            raise ValueError("copy startup computes no ghost values; range must start at 0")
        lam, gam = _pair_corrections(lower.states, j, hi - 1, offs, wlam, wgam, k)
        corr = (lam, gam, j, lower.states, offs, wlam, wgam)
        seed = lower.states.window(0, j)
        block = _march(problem, k, seed[-1], j, hi, corr, cfg, engine)
        values = np.empty((hi + 1, problem.dim), dtype=block.dtype)
        values[: j + 1] = seed
        values[j + 1 :] = block
    elif startup == "ghost":
        lam, gam = _pair_corrections(lower.states, lo, hi - 1, offs, wlam, wgam, k)
        corr = (lam, gam, lo, lower.states, offs, wlam, wgam)
        values = _assemble(
            problem, k, index_range,
            lambda a, b: _march(problem, k, problem.u0, a, b, corr, cfg, engine),
        )
    else:
        raise ValueError(f"unknown startup {startup!r}")
    seq = GridSeq(values, k, lo)
    return Trajectory(states=seq, n_steps=hi, stage_order=2 * j + 2)


def dc_solve(problem: OdeProblem, spec: SchemeSpec, k: float, newton: NewtonConfig = None,
             engine: str = "auto", return_stages: bool = False, startup: str = "auto"):
    """Run the full trapezoidal DC hierarchy up to spec.order.

    Stages are computed trajectory-at-a-time on cumulatively inflated
    index ranges; the result is the final stage on [0, N] with
    N = floor(t_end / k).  ``startup="auto"`` marches ghost values
    backward from u0 and falls back to the copy startup if the backward
    march fails (some stiff problems have no backward extension to the
    full ghost depth).
    """
    if spec.family != TRAPEZOID:
        raise ValueError("dc_solve drives the trapezoidal family")
    n_steps = int(np.floor(problem.t_end / k + 1e-9))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    cfg = newton or NewtonConfig.for_initial_state(problem.u0)
    if startup not in ("auto", "ghost", "copy"):
        raise ValueError(f"unknown startup {startup!r}")
    modes = ("ghost", "copy") if startup == "auto" else (startup,)
    for i, mode in enumerate(modes):
        try:
            return _dc_solve_staged(problem, spec, k, n_steps, cfg, engine,
                                    return_stages, mode)
        except SolverFailure as exc:
            # a failure at a ghost index means the backward extension broke;
            # anything else is a genuine forward failure
            if i + 1 < len(modes) and exc.index < 0:
                continue
            raise


def _dc_solve_staged(problem, spec, k, n_steps, cfg, engine, return_stages, mode):
    ranges = level_ranges(spec.corrections, n_steps)
    if mode == "copy":
        ranges = [(0, hi) for _, hi in ranges]
    lo, hi = ranges[0]
    traj = dc2_run(problem, k, (lo, hi), cfg, engine)
    traj = Trajectory(states=traj.states, n_steps=n_steps, stage_order=2)
    stages = [traj]
    for j in range(1, spec.corrections + 1):
        lo, hi = ranges[j]
        nxt = dc_stage_run(problem, traj, j, (lo, hi), cfg, engine, startup=mode)
        nxt = Trajectory(states=nxt.states, n_steps=n_steps, stage_order=2 * j + 2)
        if return_stages:
            stages.append(nxt)
        traj = nxt
    final = traj if traj.ghost_left == 0 and traj.ghost_right == 0 else traj.restricted()
    if return_stages:
        return final, stages
    return final


@dataclass(frozen=True)
class DccReport:
    """Per-pair residuals of the deferred-correction condition."""

    r1: np.ndarray  # midpoint third-difference residual, pairs 1..N-2
    r2: np.ndarray  # centered second-difference residual, nodes 2..N-1
    k: float
    order: int
    bound_estimate: float


def dcc_residual(stage: Trajectory, reference: Trajectory) -> DccReport:
    """Measure the DCC residuals of ``stage`` against a reference.

    r1[n] and r2[n] (n = 1..N-2) are the max-norms of the centered
    third difference of the error at midpoint n+1/2 and of the second
    difference at node n+1; for an order-2j stage both must scale as
    k^(2j).
    """
    if stage.n_steps != reference.n_steps or stage.k != reference.k:
        raise ValueError("stage and reference must share the same grid")
    n = stage.n_steps
    if n < 3:
        raise ValueError("need at least 3 steps for the DCC stencils")
    diff = stage.values - reference.values
    k = stage.k
    d2 = (diff[2:] - 2.0 * diff[1:-1] + diff[:-2]) / k**2  # nodes 1..N-1
    r2 = np.max(np.abs(d2[1:]), axis=1)                    # nodes 2..N-1
    d3 = (d2[1:] - d2[:-1]) / k                            # midpoints 1+1/2..N-1-1/2
    r1 = np.max(np.abs(d3), axis=1)
    worst = float(max(r1.max(), r2.max()))
    order = stage.stage_order
    return DccReport(r1=r1, r2=r2, k=k, order=order,
                     bound_estimate=worst / k**order)


def trajectory_from_samples(values: np.ndarray, k: float, base_index: int = 0,
                            n_steps: int = None, stage_order: int = 0) -> Trajectory:
    """Wrap raw state samples (e.g. an exact solution) as a Trajectory.

    A 1-d input is a scalar component per index; 2-d input is (index, dim).
    """
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    if n_steps is None:
        n_steps = values.shape[0] - 1 + base_index
    return Trajectory(states=GridSeq(values, k, base_index),
                      n_steps=n_steps, stage_order=stage_order)
