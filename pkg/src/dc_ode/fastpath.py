"""Compiled marching kernels for long real-valued runs.

The generic Python engine costs microseconds per implicit step; the
benchmark tables need hundreds of millions of steps.  This module
builds, per problem, numba kernels that inline the problem's
allocation-free rhs/jac (``rhs_inplace``/``jac_inplace``), a hand-rolled
partial-pivot Gaussian elimination (dimensions here are <= 4), and the
same increment-form damped Newton used by the Python engine (residual
halving, one polishing step once the tolerance is met).

Kernels are cached per (rhs, jac) function pair for the lifetime of the
process.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["march_trapezoid", "march_euler", "kernels_for"]

_CACHE: dict = {}
_SUCCESS = np.iinfo(np.int64).min


@njit(cache=False, inline="always")
def _solve_inplace(A, b, d):
    """Gaussian elimination with partial pivoting; overwrites A and b."""
    for col in range(d):
        piv = col
        best = abs(A[col, col])
        for row in range(col + 1, d):
            if abs(A[row, col]) > best:
                best = abs(A[row, col])
                piv = row
        if best == 0.0:
            return False
        if piv != col:
            for c2 in range(d):
                tmp = A[col, c2]
                A[col, c2] = A[piv, c2]
                A[piv, c2] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for row in range(col + 1, d):
            f = A[row, col] / A[col, col]
            if f != 0.0:
                for c2 in range(col + 1, d):
                    A[row, c2] -= f * A[col, c2]
                b[row] -= f * b[col]
    for col in range(d - 1, -1, -1):
        acc = b[col]
        for c2 in range(col + 1, d):
            acc -= A[col, c2] * b[c2]
        b[col] = acc / A[col, col]
    return True


def _build_kernels(rhs, jac):
    """Compile the trapezoid and Euler marching kernels for one problem."""

    @njit(cache=False, inline="always")
    def _maxabs(x, d):
        m = 0.0
        for c in range(d):
            a = abs(x[c])
            if a > m:
                m = a
        return m

    @njit(cache=False)
    def trap_march(out, u_start, k, n_from, n_to, lower, lower_base, offs, wlam, wgam,
                   has_corr, abs_tol, rel_tol, max_iters):
        """March midpoint pairs from n_from to n_to (either direction).

        ``out`` receives the produced states nearest-first.  Returns the
        failing grid index on Newton failure, or the success sentinel.
        """
        d = u_start.shape[0]
        count = abs(n_to - n_from)
        forward = n_to >= n_from
        sign = 1.0 if forward else -1.0
        nw = offs.shape[0]
        u = u_start.copy()
        delta = np.empty(d)
        work = np.empty(d)
        F = np.empty(d)
        R = np.empty(d)
        Rt = np.empty(d)
        cand = np.empty(d)
        best_c = np.empty(d)
        best_R = np.empty(d)
        J = np.empty((d, d))
        A = np.empty((d, d))
        step = np.empty(d)
        lam = np.empty(d)
        gam = np.empty(d)
        for i in range(count):
            pair = n_from + i if forward else n_from - i - 1
            fail_idx = pair + 1 if forward else pair
            t_mid = (pair + 0.5) * k
            for c in range(d):
                lam[c] = 0.0
                gam[c] = 0.0
            if has_corr:
                row0 = pair - lower_base
                for q in range(nw):
                    r = row0 + offs[q]
                    for c in range(d):
                        lam[c] += wlam[q] * lower[r, c]
                        gam[c] += wgam[q] * lower[r, c]
                for c in range(d):
                    lam[c] /= k
            # Newton in increment form: R = delta - s*k*(lam + F(u + delta/2 - gam))
            for c in range(d):
                delta[c] = 0.0
                work[c] = u[c] - gam[c]
            rhs(t_mid, work, F)
            rn = 0.0
            for c in range(d):
                R[c] = -sign * k * (lam[c] + F[c])
                a = abs(R[c])
                if a > rn:
                    rn = a
            if not np.isfinite(rn):
                return fail_idx
            it = 0
            vn = _maxabs(u, d)
            met = rn <= abs_tol + rel_tol * vn
            failed = False
            while True:
                if met and rn <= 8e-16 * (1.0 + vn):
                    break
                if it >= max_iters:
                    failed = not met
                    break
                for c in range(d):
                    work[c] = u[c] + 0.5 * delta[c] - gam[c]
                jac(t_mid, work, J)
                for r2 in range(d):
                    for c2 in range(d):
                        A[r2, c2] = -sign * 0.5 * k * J[r2, c2]
                    A[r2, r2] += 1.0
                    step[r2] = -R[r2]
                if not _solve_inplace(A, step, d):
                    failed = not met
                    break
                it += 1
                alpha = 1.0
                best_rn = np.inf
                for _ in range(11):
                    for c in range(d):
                        cand[c] = delta[c] + alpha * step[c]
                        work[c] = u[c] + 0.5 * cand[c] - gam[c]
                    rhs(t_mid, work, F)
                    rcn = 0.0
                    for c in range(d):
                        Rt[c] = cand[c] - sign * k * (lam[c] + F[c])
                        a = abs(Rt[c])
                        if a > rcn:
                            rcn = a
                    if not np.isfinite(rcn):
                        rcn = np.inf
                    if rcn < best_rn:
                        best_rn = rcn
                        for c in range(d):
                            best_c[c] = cand[c]
                            best_R[c] = Rt[c]
                    if rcn < rn:
                        break
                    alpha *= 0.5
                if not np.isfinite(best_rn):
                    failed = not met
                    break
                if best_rn >= rn and met:
                    break  # polishing step did not help
                if best_rn < rn:
                    for c in range(d):
                        delta[c] = best_c[c]
                        R[c] = best_R[c]
                    rn = best_rn
                if met:
                    break  # polish done
                vn = 0.0
                for c in range(d):
                    a = abs(u[c] + delta[c])
                    if a > vn:
                        vn = a
                met = rn <= abs_tol + rel_tol * vn
            if failed:
                return fail_idx
            for c in range(d):
                u[c] = u[c] + delta[c]
                out[i, c] = u[c]
        return _SUCCESS

    @njit(cache=False)
    def euler_march(out, u_start, k, n_from, n_to, lower, lower_base, offs, w,
                    has_corr, implicit_forward, abs_tol, rel_tol, max_iters):
        """March Euler-family pairs from n_from to n_to.

        ``implicit_forward`` is True for the backward-Euler variant (rhs
        and stencil anchored at the pair's right index); the march
        direction that makes the anchored relation explicit skips Newton.
        """
        d = u_start.shape[0]
        count = abs(n_to - n_from)
        forward = n_to >= n_from
        nw = offs.shape[0]
        u = u_start.copy()
        v = np.empty(d)
        F = np.empty(d)
        R = np.empty(d)
        Rt = np.empty(d)
        cand = np.empty(d)
        best_c = np.empty(d)
        best_R = np.empty(d)
        delta = np.empty(d)
        J = np.empty((d, d))
        A = np.empty((d, d))
        step = np.empty(d)
        corr = np.empty(d)
        for i in range(count):
            pair = n_from + i if forward else n_from - i - 1
            anchor = pair + 1 if implicit_forward else pair
            fail_idx = pair + 1 if forward else pair
            t_anchor = anchor * k
            for c in range(d):
                corr[c] = 0.0
            if has_corr:
                row0 = anchor - lower_base
                for q in range(nw):
                    r = row0 + offs[q]
                    for c in range(d):
                        corr[c] += w[q] * lower[r, c]
                for c in range(d):
                    corr[c] /= k  # w carries the 1/k unit
            if forward != implicit_forward:
                # anchored state is the known one: explicit update
                rhs(t_anchor, u, F)
                s = 1.0 if forward else -1.0
                for c in range(d):
                    u[c] = u[c] + s * k * (F[c] + corr[c])
                    out[i, c] = u[c]
                if not np.isfinite(_maxabs(u, d)):
                    return fail_idx
                continue
            # anchored state is the unknown one: Newton on the increment
            sign = 1.0 if forward else -1.0
            for c in range(d):
                delta[c] = 0.0
                v[c] = u[c]
            rhs(t_anchor, v, F)
            rn = 0.0
            for c in range(d):
                R[c] = -sign * k * (F[c] + corr[c])
                a = abs(R[c])
                if a > rn:
                    rn = a
            if not np.isfinite(rn):
                return fail_idx
            it = 0
            vn = _maxabs(u, d)
            met = rn <= abs_tol + rel_tol * vn
            failed = False
            while True:
                if met and rn <= 8e-16 * (1.0 + vn):
                    break
                if it >= max_iters:
                    failed = not met
                    break
                for c in range(d):
                    v[c] = u[c] + delta[c]
                jac(t_anchor, v, J)
                for r2 in range(d):
                    for c2 in range(d):
                        A[r2, c2] = -sign * k * J[r2, c2]
                    A[r2, r2] += 1.0
                    step[r2] = -R[r2]
                if not _solve_inplace(A, step, d):
                    failed = not met
                    break
                it += 1
                alpha = 1.0
                best_rn = np.inf
                for _ in range(11):
                    for c in range(d):
                        cand[c] = delta[c] + alpha * step[c]
                        v[c] = u[c] + cand[c]
                    rhs(t_anchor, v, F)
                    rcn = 0.0
                    for c in range(d):
                        Rt[c] = cand[c] - sign * k * (F[c] + corr[c])
                        a = abs(Rt[c])
                        if a > rcn:
                            rcn = a
                    if not np.isfinite(rcn):
                        rcn = np.inf
                    if rcn < best_rn:
                        best_rn = rcn
                        for c in range(d):
                            best_c[c] = cand[c]
                            best_R[c] = Rt[c]
                    if rcn < rn:
                        break
                    alpha *= 0.5
                if not np.isfinite(best_rn):
                    failed = not met
                    break
                if best_rn >= rn and met:
                    break
                if best_rn < rn:
                    for c in range(d):
                        delta[c] = best_c[c]
                        R[c] = best_R[c]
                    rn = best_rn
                if met:
                    break
                vn = 0.0
                for c in range(d):
                    a = abs(u[c] + delta[c])
                    if a > vn:
                        vn = a
                met = rn <= abs_tol + rel_tol * vn
            if failed:
                return fail_idx
            for c in range(d):
                u[c] = u[c] + delta[c]
                out[i, c] = u[c]
        return _SUCCESS

    return trap_march, euler_march


def _jitted(fn):
    # accept either a plain function or an already-jitted dispatcher
    return fn if hasattr(fn, "targetoptions") else njit(cache=False)(fn)


def kernels_for(problem):
    """Fetch (building if needed) the compiled kernels for a problem."""
    key = (problem.rhs_inplace, problem.jac_inplace)
    if key not in _CACHE:
        _CACHE[key] = _build_kernels(_jitted(problem.rhs_inplace),
                                     _jitted(problem.jac_inplace))
    return _CACHE[key]


_EMPTY_F = np.empty((0, 1), dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_W = np.empty(0, dtype=np.float64)


def march_trapezoid(problem, k, u_start, n_from, n_to, lower, offs, wlam, wgam, cfg):
    """Trapezoid-stage segment march through the compiled kernel."""
    from .trapezoid import SolverFailure

    trap, _ = kernels_for(problem)
    count = abs(n_to - n_from)
    out = np.empty((count, problem.dim), dtype=np.float64)
    if lower is None:
        code = trap(out, np.asarray(u_start, dtype=np.float64), k, n_from, n_to,
                    _EMPTY_F, 0, _EMPTY_I, _EMPTY_W, _EMPTY_W, False,
                    cfg.abs_tol, cfg.rel_tol, cfg.max_iters)
    else:
        code = trap(out, np.asarray(u_start, dtype=np.float64), k, n_from, n_to,
                    np.ascontiguousarray(lower.values), lower.base_index,
                    np.ascontiguousarray(offs, dtype=np.int64),
                    np.ascontiguousarray(wlam, dtype=np.float64),
                    np.ascontiguousarray(wgam, dtype=np.float64), True,
                    cfg.abs_tol, cfg.rel_tol, cfg.max_iters)
    if code != _SUCCESS:
        raise SolverFailure("Newton did not converge (compiled kernel)",
                            int(code), int(code) * k)
    return out


def march_euler(problem, k, u_start, n_from, n_to, lower, offs, w, implicit_forward, cfg):
    """Euler-stage segment march through the compiled kernel."""
    from .trapezoid import SolverFailure

    _, euler = kernels_for(problem)
    count = abs(n_to - n_from)
    out = np.empty((count, problem.dim), dtype=np.float64)
    if lower is None:
        code = euler(out, np.asarray(u_start, dtype=np.float64), k, n_from, n_to,
                     _EMPTY_F, 0, _EMPTY_I, _EMPTY_W, False, implicit_forward,
                     cfg.abs_tol, cfg.rel_tol, cfg.max_iters)
    else:
        code = euler(out, np.asarray(u_start, dtype=np.float64), k, n_from, n_to,
                     np.ascontiguousarray(lower.values), lower.base_index,
                     np.ascontiguousarray(offs, dtype=np.int64),
                     np.ascontiguousarray(w, dtype=np.float64), True, implicit_forward,
                     cfg.abs_tol, cfg.rel_tol, cfg.max_iters)
    if code != _SUCCESS:
        raise SolverFailure("Newton did not converge (compiled kernel)",
                            int(code), int(code) * k)
    return out
