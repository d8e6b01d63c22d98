"""Damped Newton iteration for the per-step implicit equations.

The solver is deliberately small: dense Jacobians (analytic or one-sided
finite-difference), LU solves via numpy, residual-halving damping, and a
max-norm stopping test ``|R| <= abs_tol + rel_tol * |v|``.  After the
stopping test first passes, one extra polishing step is taken whenever
the residual is still above rounding level, so the returned iterate
typically sits at the evaluation floor rather than just under the
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NewtonConfig", "NewtonReport", "newton_solve", "fd_jacobian"]

_EPS = float(np.finfo(np.float64).eps)
_SQRT_EPS = _EPS ** 0.5


@dataclass(frozen=True)
class NewtonConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 0.0
    max_iters: int = 50
    fd_jacobian_scale: float = 1.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @staticmethod
    def for_initial_state(u0) -> "NewtonConfig":
        """Default solver tolerances scaled to the initial state size."""
        scale = float(np.max(np.abs(u0))) if np.size(u0) else 0.0
        return NewtonConfig(abs_tol=1e-14 * (1.0 + scale))


@dataclass(frozen=True)
class NewtonReport:
    iterations: int
    final_residual_norm: float
    converged: bool
    message: str = ""


def _norm(x) -> float:
    return float(np.max(np.abs(x)))


def fd_jacobian(fun, v, scale: float = 1.0, method: str = "forward") -> np.ndarray:
    """Finite-difference Jacobian of ``fun`` at ``v``.

    One-sided by default (what the solver uses); ``method="central"``
    gives the second-order variant for verification against analytic
    Jacobians.
    """
    v = np.asarray(v)
    f0 = np.asarray(fun(v))
    d = v.shape[0]
    jac = np.empty((f0.shape[0], d), dtype=np.result_type(f0, v))
    for i in range(d):
        h = scale * (1.0 + abs(v[i])) * _SQRT_EPS
        vp = v.copy()
        vp[i] = v[i] + h
        if method == "forward":
            jac[:, i] = (np.asarray(fun(vp)) - f0) / h
        elif method == "central":
            vm = v.copy()
            vm[i] = v[i] - h
            jac[:, i] = (np.asarray(fun(vp)) - np.asarray(fun(vm))) / (2 * h)
        else:
            raise ValueError(f"unknown method {method!r}")
    return jac


def newton_solve(residual, jacobian, guess, cfg: NewtonConfig):
    """Solve residual(v) = 0 starting from ``guess``.

    Returns ``(v, NewtonReport)``.  ``jacobian`` may be None, in which
    case a one-sided finite-difference Jacobian with perturbation
    ``fd_jacobian_scale * (1 + |v_i|) * sqrt(eps)`` is used.  A singular
    linear solve yields a non-converged report; a non-finite residual at
    an accepted iterate is a hard error.
    """
    v = np.array(guess, copy=True)
    if not np.issubdtype(v.dtype, np.inexact):
        v = v.astype(np.float64)
    r = np.asarray(residual(v))
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("non-finite residual at initial guess")
    rn = _norm(r)

    def tol(vec) -> float:
        return cfg.abs_tol + cfg.rel_tol * _norm(vec)

    iterations = 0
    met = rn <= tol(v)
    polished = met  # nothing to polish if the guess already solves it
    while iterations < cfg.max_iters:
        if met and (polished or rn <= 8 * _EPS * (1.0 + _norm(v))):
            return v, NewtonReport(iterations, rn, True)
        try:
            jac = jacobian(v) if jacobian is not None else fd_jacobian(
                residual, v, cfg.fd_jacobian_scale
            )
            step = np.linalg.solve(np.asarray(jac), -r)
        except np.linalg.LinAlgError as exc:
            return v, NewtonReport(
                iterations, rn, met, message=f"linear solve failed: {exc}"
            )
        iterations += 1
        best_v, best_r, best_rn = None, None, np.inf
        alpha = 1.0
        for _ in range(11):  # full step plus up to 10 halvings
            cand = v + alpha * step
            rc = np.asarray(residual(cand))
            rcn = _norm(rc) if np.all(np.isfinite(rc)) else np.inf
            if rcn < best_rn:
                best_v, best_r, best_rn = cand, rc, rcn
            if rcn < rn:
                break
            alpha *= 0.5
        if best_v is None or not np.isfinite(best_rn):
            raise FloatingPointError("non-finite residual throughout damping")
        if met and best_rn >= rn:
            # polishing step did not help; keep the converged iterate
            return v, NewtonReport(iterations, rn, True)
        v, r, rn = best_v, best_r, best_rn
        if met:
            return v, NewtonReport(iterations, rn, True)
        met = rn <= tol(v)
        if met:
            polished = False  # allow one refinement pass
    converged = rn <= tol(v)
    return v, NewtonReport(
        iterations, rn, converged,
        message="" if converged else "max iterations reached",
    )
