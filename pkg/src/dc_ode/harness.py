"""Convergence studies, error norms, and reference-solution management.

This is the machinery behind the benchmark tables: run a scheme over a
decreasing list of steps, measure per-component max errors against an
exact solution or a stored reference, fit convergence orders over the
rows that sit above the error floor, and emit CSV reports.

References for very long runs are computed by a chunked stage pipeline
that retains only the capped sample set plus the rolling windows the
correction stencils need.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from .euler import euler_dc_solve
from .newton import NewtonConfig
from .ode import TRAPEZOID, SchemeSpec, Trajectory
from .operators import GridSeq
from .problems import BenchmarkProblem, benchmark_newton
from .trapezoid import (
    SolverFailure,
    _march,
    _pair_corrections,
    dc2_run,
    dc_solve,
    dc_stage_run,
)

__all__ = [
    "ErrorNorm",
    "ConvergenceRow",
    "ConvergenceReport",
    "ReferenceSolution",
    "error_norm",
    "convergence_study",
    "compute_reference",
    "load_reference",
    "write_report_csv",
    "fit_order",
    "solve_with",
]

DEFAULT_SAMPLE_CAP = 4_000_000
_STREAM_LIMIT_ELEMENTS = 60_000_000  # full retention below this (states * dim)
_TIME_MATCH_RTOL = 1e-11


@dataclass(frozen=True)
class ErrorNorm:
    kind: str
    per_component: np.ndarray
    sample_cap: int
    n_samples: int

    @property
    def overall(self) -> float:
        return float(np.max(self.per_component))


@dataclass(frozen=True)
class ReferenceSolution:
    """Capped samples of a high-accuracy run, with provenance metadata."""

    problem_name: str
    family: str
    order: int
    k: float
    t_end: float
    sample_indices: np.ndarray  # int64, ascending
    states: np.ndarray          # (S, dim) float64
    digest: str = ""
    est_error: float = None

    def times(self) -> np.ndarray:
        return self.sample_indices.astype(np.float64) * self.k

    def compute_digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.sample_indices, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.states, dtype="<f8").tobytes())
        return h.hexdigest()

    def save(self, path: str) -> None:
        """Atomic write: JSON metadata header, then raw little-endian blocks."""
        idx = np.ascontiguousarray(self.sample_indices, dtype="<i8")
        states = np.ascontiguousarray(self.states, dtype="<f8")
        header = {
            "format": "dc-ode-reference-v1",
            "problem": self.problem_name,
            "family": self.family,
            "order": self.order,
            "k": self.k,
            "t_end": self.t_end,
            "est_error": self.est_error,
            "digest": self.digest or self.compute_digest(),
            "blocks": [
                {"name": "sample_indices", "dtype": "<i8", "shape": list(idx.shape)},
                {"name": "states", "dtype": "<f8", "shape": list(states.shape)},
            ],
        }
        payload = json.dumps(header).encode() + b"\n" + idx.tobytes() + states.tobytes()
        d = os.path.dirname(os.path.abspath(path)) or "."
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".ref-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def load_reference(path: str) -> ReferenceSolution:
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode())
    if header.get("format") != "dc-ode-reference-v1":
        raise ValueError(f"{path} is not a dc-ode reference file")
    off = nl + 1
    blocks = {}
    for blk in header["blocks"]:
        dt = np.dtype(blk["dtype"])
        n = int(np.prod(blk["shape"])) if blk["shape"] else 1
        end = off + n * dt.itemsize
        blocks[blk["name"]] = np.frombuffer(raw[off:end], dtype=dt).reshape(blk["shape"]).copy()
        off = end
    ref = ReferenceSolution(
        problem_name=header["problem"], family=header["family"], order=header["order"],
        k=header["k"], t_end=header["t_end"],
        sample_indices=blocks["sample_indices"].astype(np.int64),
        states=blocks["states"].astype(np.float64),
        digest=header["digest"], est_error=header.get("est_error"),
    )
    if ref.compute_digest() != ref.digest:
        raise ValueError(f"{path}: content digest mismatch")
    return ref


def _subsample_indices(n_lo: int, n_hi: int, cap: int) -> np.ndarray:
    count = n_hi - n_lo + 1
    if count <= cap:
        return np.arange(n_lo, n_hi + 1, dtype=np.int64)
    return np.unique(np.round(np.linspace(n_lo, n_hi, cap)).astype(np.int64))


def _match_times(sample_times: np.ndarray, ref_times: np.ndarray):
    """Indices pairing sample times with (essentially) equal reference times."""
    pos = np.searchsorted(ref_times, sample_times)
    pos = np.clip(pos, 0, len(ref_times) - 1)
    pos_lo = np.clip(pos - 1, 0, len(ref_times) - 1)
    d_hi = np.abs(ref_times[pos] - sample_times)
    d_lo = np.abs(ref_times[pos_lo] - sample_times)
    best = np.where(d_lo < d_hi, pos_lo, pos)
    dist = np.minimum(d_lo, d_hi)
    tol = _TIME_MATCH_RTOL * np.maximum(1.0, np.abs(sample_times))
    keep = dist <= tol
    return np.nonzero(keep)[0], best[keep]


def error_norm(traj: Trajectory, truth, kind: str, cap: int = DEFAULT_SAMPLE_CAP) -> ErrorNorm:
    """Per-component max error over at most ``cap`` evenly spread indices.

    ``truth`` is a callable t -> states, a ReferenceSolution, or a
    Trajectory on the same grid.  The relative norm starts at n = 1 and
    divides componentwise by |truth|; a zero truth component there is an
    error.
    """
    if kind not in ("absolute", "relative"):
        raise ValueError("kind must be 'absolute' or 'relative'")
    n_lo = 0 if kind == "absolute" else 1
    idx = _subsample_indices(n_lo, traj.n_steps, cap)
    times = idx.astype(np.float64) * traj.k
    approx = traj.values[idx]
    if isinstance(truth, Trajectory):
        if truth.k != traj.k or truth.n_steps < traj.n_steps:
            raise ValueError("trajectory truth must share the grid and cover it")
        tv = truth.values[idx]
    elif isinstance(truth, ReferenceSolution):
        sel, ref_rows = _match_times(times, truth.times())
        if len(sel) == 0:
            raise ValueError("no sample times coincide with the reference grid")
        approx = approx[sel]
        times = times[sel]
        tv = truth.states[ref_rows]
    else:
        tv = np.asarray(truth(times))
        if tv.shape != approx.shape:
            raise ValueError(f"truth shape {tv.shape} does not match {approx.shape}")
    diff = np.abs(approx - tv)
    if kind == "relative":
        mags = np.abs(tv)
        bad = mags == 0.0
        if np.any(bad):
            where = np.argwhere(bad)[0]
            raise ZeroDivisionError(
                f"relative error undefined: truth component {where[1]} vanishes "
                f"at t = {times[where[0]]!r}"
            )
        diff = diff / mags
    per_comp = diff.max(axis=0)
    return ErrorNorm(kind=kind, per_component=per_comp, sample_cap=cap,
                     n_samples=approx.shape[0])


def solve_with(bench: BenchmarkProblem, spec: SchemeSpec, k: float,
               newton: NewtonConfig = None, engine: str = "auto") -> Trajectory:
    """Run the right family's solver with benchmark-appropriate tolerances."""
    cfg = newton or benchmark_newton(bench)
    if spec.family == TRAPEZOID:
        return dc_solve(bench.problem, spec, k, newton=cfg, engine=engine)
    return euler_dc_solve(bench.problem, spec, k, newton=cfg, engine=engine)


def fit_order(ks, errors, floor: float = 0.0):
    """Least-squares slope of log error vs log k over rows above the floor.

    Returns the slope, or "exact" when every usable row is exactly zero,
    or None when fewer than two rows are usable.
    """
    xs, ys = [], []
    saw_zero = False
    for k, e in zip(ks, errors):
        if e is None or not np.isfinite(e):
            continue
        if e == 0.0:
            saw_zero = True
            continue
        if e <= floor:
            continue
        xs.append(np.log(k))
        ys.append(np.log(e))
    if len(xs) < 2:
        return "exact" if saw_zero and not xs else None
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    xm = xs - xs.mean()
    return float(np.dot(xm, ys - ys.mean()) / np.dot(xm, xm))


@dataclass(frozen=True)
class ConvergenceRow:
    k: float
    errors: np.ndarray = None   # per component; None if the run failed
    note: str = ""


@dataclass(frozen=True)
class ConvergenceReport:
    problem_name: str
    spec: SchemeSpec
    rows: tuple
    fitted_orders: tuple      # per component: float | "exact" | None
    pairwise_orders: tuple    # per row-gap: array per component (nan where invalid)
    error_floor: float

    @property
    def ks(self):
        return tuple(r.k for r in self.rows)


def convergence_study(bench: BenchmarkProblem, spec: SchemeSpec, ks=None, truth=None,
                      floor: float = None, newton: NewtonConfig = None,
                      engine: str = "auto", cap: int = DEFAULT_SAMPLE_CAP) -> ConvergenceReport:
    """One solver run per k; errors via error_norm; orders via fit_order.

    ``ks`` defaults to a halving sweep from the problem's k0 transient
    scale when one is recorded.  ``truth`` defaults to the problem's
    exact solution.  Failed rows are recorded with a note and excluded
    from the fit.  The default floor is 10x the reference's own error
    estimate when available, else 0.
    """
    if ks is None:
        if bench.k0 is None:
            raise ValueError(f"{bench.name} records no k0; pass ks explicitly")
        ks = [bench.k0, bench.k0 / 2.0, bench.k0 / 4.0]
    ks = [float(k) for k in ks]
    if any(k2 >= k1 for k1, k2 in zip(ks, ks[1:])):
        raise ValueError("ks must be strictly decreasing")
    if truth is None:
        truth = bench.exact
        if truth is None:
            raise ValueError(f"{bench.name} has no exact solution; pass a reference")
    if floor is None:
        est = getattr(truth, "est_error", None)
        floor = 10.0 * est if est else 0.0
    dim = bench.problem.dim
    rows = []
    for k in ks:
        try:
            traj = solve_with(bench, spec, k, newton=newton, engine=engine)
            norm = error_norm(traj, truth, bench.error_kind, cap)
            rows.append(ConvergenceRow(k=k, errors=norm.per_component))
            del traj
        except (SolverFailure, ZeroDivisionError, FloatingPointError) as exc:
            rows.append(ConvergenceRow(k=k, errors=None, note=str(exc)))
    fitted = []
    for c in range(dim):
        errs = [None if r.errors is None else float(r.errors[c]) for r in rows]
        fitted.append(fit_order(ks, errs, floor))
    pairwise = []
    for a, b in zip(rows, rows[1:]):
        pw = np.full(dim, np.nan)
        if a.errors is not None and b.errors is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                pw = np.log(a.errors / b.errors) / np.log(a.k / b.k)
        pairwise.append(pw)
    return ConvergenceReport(
        problem_name=bench.name, spec=spec, rows=tuple(rows),
        fitted_orders=tuple(fitted), pairwise_orders=tuple(pairwise),
        error_floor=floor,
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{x:.17g}"


def report_csv_lines(report: ConvergenceReport):
    """CSV rows: k, per-component errors, pairwise orders; last row = fit."""
    dim = len(report.fitted_orders)
    cols = ["k"] + [f"err_{c}" for c in range(dim)] + [f"order_{c}" for c in range(dim)]
    lines = [",".join(cols)]
    for i, row in enumerate(report.rows):
        cells = [_fmt(row.k)]
        if row.errors is None:
            cells += ["failed"] * dim
        else:
            cells += [_fmt(float(e)) for e in row.errors]
        if i == 0:
            cells += [""] * dim
        else:
            pw = report.pairwise_orders[i - 1]
            cells += [_fmt(float(v)) if np.isfinite(v) else "" for v in pw]
        lines.append(",".join(cells))
    tail = ["fitted"] + [_fmt(o) for o in report.fitted_orders] + [""] * dim
    lines.append(",".join(tail))
    return lines


def write_report_csv(report: ConvergenceReport, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(report_csv_lines(report)) + "\n")


# ---------------------------------------------------------------------------
# Reference computation, including the chunked stage pipeline for runs too
# long to retain in memory.
# ---------------------------------------------------------------------------


def compute_reference(bench: BenchmarkProblem, spec: SchemeSpec, k: float,
                      cap: int = DEFAULT_SAMPLE_CAP, out_path: str = None,
                      newton: NewtonConfig = None, engine: str = "auto",
                      chunk_steps: int = 2_000_000) -> ReferenceSolution:
    """High-accuracy run retaining at most ``cap`` evenly spread samples.

    Runs trajectory-at-a-time when the full state history fits, else
    streams the trapezoid stage pipeline chunk by chunk.
    """
    problem = bench.problem
    cfg = newton or benchmark_newton(bench)
    n_steps = int(np.floor(problem.t_end / k + 1e-9))
    sample_idx = _subsample_indices(0, n_steps, cap)
    if (n_steps + 1) * problem.dim <= _STREAM_LIMIT_ELEMENTS:
        traj = solve_with(bench, spec, k, newton=cfg, engine=engine)
        states = traj.values[sample_idx].copy()
    else:
        if spec.family != TRAPEZOID:
            raise ValueError("streaming references support the trapezoid family only")
        states = _streamed_samples(problem, spec, k, n_steps, sample_idx, cfg,
                                   engine, chunk_steps)
    ref = ReferenceSolution(
        problem_name=bench.name, family=spec.family, order=spec.order, k=k,
        t_end=problem.t_end, sample_indices=sample_idx, states=states,
    )
    ref = replace(ref, digest=ref.compute_digest())
    if out_path:
        ref.save(out_path)
    return ref


def _streamed_samples(problem, spec, k, n_steps, sample_idx, cfg, engine, chunk_steps):
    """Chunked lockstep staging: identical arithmetic to the full solve."""
    levels = spec.corrections
    # phase 1: ghosts and the small forward seed, smallest ranges last
    lows = [-(sum(range(l + 1, levels + 1))) for l in range(levels + 1)]
    seeds = [sum(i + 1 for i in range(l + 1, levels + 1)) for l in range(levels + 1)]
    weights = {}
    buffers = []
    for l in range(levels + 1):
        lo, hi = lows[l], max(seeds[l], 1)
        if l == 0:
            traj = dc2_run(problem, k, (lo, hi), cfg, engine)
        else:
            traj = dc_stage_run(problem, buffers[l - 1], l, (lo, hi), cfg, engine)
            weights[l] = SchemeSpec.trapezoid(2 * l + 2).stage_weights(l)
        buffers.append(traj)
    # pipeline state: per level, a GridSeq buffer and its frontier index
    seqs = [b.states for b in buffers]
    frontiers = [s.last_index for s in seqs]
    dim = problem.dim
    out = np.empty((len(sample_idx), dim), dtype=np.float64)
    done = frontiers[levels]
    taken = np.searchsorted(sample_idx, done, side="right")
    out[:taken] = seqs[levels].window(0, done)[sample_idx[:taken]]
    while frontiers[levels] < n_steps:
        target_top = min(n_steps, frontiers[levels] + chunk_steps)
        targets = [target_top] * (levels + 1)
        for l in range(levels - 1, -1, -1):
            targets[l] = targets[l + 1] + (l + 1)
        for l in range(levels + 1):
            seq, fr, tg = seqs[l], frontiers[l], targets[l]
            if tg <= fr:
                continue
            if l == 0:
                corr = (None, None, 0, None, None, None, None)
            else:
                offs, wlam, wgam = weights[l]
                lam, gam = _pair_corrections(seqs[l - 1], fr, tg - 1, offs, wlam, wgam, k)
                corr = (lam, gam, fr, seqs[l - 1], offs, wlam, wgam)
            block = _march(problem, k, seq.at(fr), fr, tg, corr, cfg, engine)
            # extend the buffer; keep enough left context for the consumer
            # stage, which may still be one chunk behind (gap <= l+2 plus
            # its stencil reach l+1)
            keep_from = fr - (2 * l + 4) if l < levels else fr
            if l == levels:
                lo_i = np.searchsorted(sample_idx, fr, side="right")
                hi_i = np.searchsorted(sample_idx, tg, side="right")
                if hi_i > lo_i:
                    rows = sample_idx[lo_i:hi_i] - (fr + 1)
                    out[lo_i:hi_i] = block[rows]
            old = seq.window(max(seq.base_index, keep_from), fr)
            merged = np.concatenate([old, block], axis=0)
            seqs[l] = GridSeq(merged, k, max(seq.base_index, keep_from))
            frontiers[l] = tg
        # trim lower buffers against the next chunk's left demand
        for l in range(levels):
            need_from = frontiers[l + 1] - (l + 1)
            s = seqs[l]
            if s.base_index < need_from:
                seqs[l] = GridSeq(s.window(need_from, s.last_index).copy(), k, need_from)
    return out
