"""The six benchmark problems driven by the harness.

Each constructor returns a :class:`BenchmarkProblem`: the ODE with an
analytic Jacobian, the exact solution where one exists, the
initial-transient step scale k0 (stored as provenance; the solvers never
adapt steps), which error norm the tables use, and per-component
magnitude annotations.

The right-hand sides are written as allocation-free in-place kernels
(``(t, y, out)``) so the compiled marching path can inline them; the
public ``rhs``/``jac`` wrap them.  Conservative systems compute their
dependent component as the exact floating-point negation of the
others' sum, so the linear conservation law holds to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .newton import NewtonConfig
from .ode import OdeProblem

__all__ = [
    "BenchmarkProblem",
    "make_oscillator",
    "make_krogh",
    "make_robertson",
    "make_d6",
    "make_oregonator",
    "make_vdp",
    "by_name",
    "PROBLEM_NAMES",
    "benchmark_newton",
]


@dataclass(frozen=True)
class BenchmarkProblem:
    problem: OdeProblem
    exact: object = None
    k0: float = None
    error_kind: str = "absolute"
    magnitude_notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.error_kind not in ("absolute", "relative"):
            raise ValueError("error_kind must be 'absolute' or 'relative'")
        if self.k0 is not None and not self.k0 > 0:
            raise ValueError("k0 must be positive")
        if self.exact is not None:
            if not np.allclose(self.exact(0.0), self.problem.u0, rtol=0, atol=0):
                raise ValueError("exact(0) must equal u0")

    @property
    def name(self) -> str:
        return self.problem.name


def benchmark_newton(bench: BenchmarkProblem) -> NewtonConfig:
    """Newton tolerances for long benchmark runs.

    abs_tol follows the initial-state scale; the small relative term
    keeps the tolerance attainable when solution components grow several
    orders of magnitude (the polishing step still lands the residual at
    rounding level well below it).
    """
    u0_scale = float(np.max(np.abs(bench.problem.u0)))
    return NewtonConfig(abs_tol=1e-14 * (1.0 + u0_scale), rel_tol=64 * np.finfo(float).eps)


def _wrap(dim, f):
    def fn(t, y):
        out = np.empty(dim)
        f(t, y, out)
        return out
    return fn


def _wrap_jac(dim, f):
    def fn(t, y):
        out = np.empty((dim, dim))
        f(t, y, out)
        return out
    return fn


# -- modified oscillatory problem ------------------------------------------

def _osc_rhs(t, y, out):
    out[0] = 2.0 * math.cos(t) * y[0]


def _osc_jac(t, y, out):
    out[0, 0] = 2.0 * math.cos(t)


def make_oscillator(t_end: float = 1.0e6) -> BenchmarkProblem:
    """u' = 2 u cos t, u(0) = 1; exact solution exp(2 sin t)."""
    problem = OdeProblem(
        dim=1, rhs=_wrap(1, _osc_rhs), jac=_wrap_jac(1, _osc_jac),
        u0=np.array([1.0]), t_end=t_end, name="oscillator",
        rhs_inplace=_osc_rhs, jac_inplace=_osc_jac,
    )

    def exact(t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(2.0 * np.sin(t))[..., None]

    return BenchmarkProblem(problem=problem, exact=exact, k0=None,
                            error_kind="absolute",
                            magnitude_notes={0: math.exp(2.0)})


# -- Krogh ------------------------------------------------------------------

_KROGH_U = 0.5 * (np.ones((4, 4)) - 2.0 * np.eye(4))
_KROGH_D = np.array([
    [-10.0, -10.0, 0.0, 0.0],
    [10.0, -10.0, 0.0, 0.0],
    [0.0, 0.0, 1000.0, 0.0],
    [0.0, 0.0, 0.0, 0.0001],
])
_KROGH_B = _KROGH_U @ _KROGH_D @ _KROGH_U


def _krogh_rhs(t, y, out):
    z0 = 0.5 * (-y[0] + y[1] + y[2] + y[3])
    z1 = 0.5 * (y[0] - y[1] + y[2] + y[3])
    z2 = 0.5 * (y[0] + y[1] - y[2] + y[3])
    z3 = 0.5 * (y[0] + y[1] + y[2] - y[3])
    g0 = 0.5 * (z0 * z0 - z1 * z1)
    g1 = z0 * z1
    g2 = z2 * z2
    g3 = z2 * z2
    for i in range(4):
        acc = 0.0
        for j in range(4):
            acc -= _KROGH_B[i, j] * y[j]
        out[i] = acc
    out[0] += 0.5 * (-g0 + g1 + g2 + g3)
    out[1] += 0.5 * (g0 - g1 + g2 + g3)
    out[2] += 0.5 * (g0 + g1 - g2 + g3)
    out[3] += 0.5 * (g0 + g1 + g2 - g3)


def _krogh_jac(t, y, out):
    # d/dy of -B y + U g(U y) is -B + U g'(z) U; g' has six nonzeros
    z0 = 0.5 * (-y[0] + y[1] + y[2] + y[3])
    z1 = 0.5 * (y[0] - y[1] + y[2] + y[3])
    z2 = 0.5 * (y[0] + y[1] - y[2] + y[3])
    tz2 = 2.0 * z2
    for i in range(4):
        ui0 = -0.5 if i == 0 else 0.5
        ui1 = -0.5 if i == 1 else 0.5
        ui2 = -0.5 if i == 2 else 0.5
        ui3 = -0.5 if i == 3 else 0.5
        m0 = ui0 * z0 + ui1 * z1     # (U g')[i, 0]
        m1 = -ui0 * z1 + ui1 * z0    # (U g')[i, 1]
        m2 = (ui2 + ui3) * tz2       # (U g')[i, 2]; column 3 of g' is zero
        for j in range(4):
            u0j = -0.5 if j == 0 else 0.5
            u1j = -0.5 if j == 1 else 0.5
            u2j = -0.5 if j == 2 else 0.5
            out[i, j] = m0 * u0j + m1 * u1j + m2 * u2j - _KROGH_B[i, j]


def make_krogh(t_end: float = 1000.0) -> BenchmarkProblem:
    """Krogh's coupled system: y' = -B y + U^T g(U y), y(0) = (0,-2,-1,-1)."""
    problem = OdeProblem(
        dim=4, rhs=_wrap(4, _krogh_rhs), jac=_wrap_jac(4, _krogh_jac),
        u0=np.array([0.0, -2.0, -1.0, -1.0]), t_end=t_end, name="krogh",
        rhs_inplace=_krogh_rhs, jac_inplace=_krogh_jac,
    )
    return BenchmarkProblem(problem=problem, exact=None, k0=1e-3,
                            error_kind="absolute",
                            magnitude_notes={i: 2.0 for i in range(4)})


# -- Robertson kinetics ------------------------------------------------------

def _rob_rhs(t, y, out):
    out[0] = -0.04 * y[0] + 1.0e4 * y[1] * y[2]
    out[1] = 0.04 * y[0] - 1.0e4 * y[1] * y[2] - 3.0e7 * y[1] * y[1]
    out[2] = -(out[0] + out[1])  # = 3e7 y2^2, summed so conservation is exact


def _rob_jac(t, y, out):
    out[0, 0] = -0.04
    out[0, 1] = 1.0e4 * y[2]
    out[0, 2] = 1.0e4 * y[1]
    out[1, 0] = 0.04
    out[1, 1] = -1.0e4 * y[2] - 6.0e7 * y[1]
    out[1, 2] = -1.0e4 * y[1]
    for j in range(3):
        out[2, j] = -(out[0, j] + out[1, j])


def make_robertson(t_end: float = 1.0e4) -> BenchmarkProblem:
    """The three-species kinetics with rates 0.04, 1e4, 3e7; y(0) = (1,0,0)."""
    problem = OdeProblem(
        dim=3, rhs=_wrap(3, _rob_rhs), jac=_wrap_jac(3, _rob_jac),
        u0=np.array([1.0, 0.0, 0.0]), t_end=t_end, name="robertson",
        rhs_inplace=_rob_rhs, jac_inplace=_rob_jac,
    )
    return BenchmarkProblem(problem=problem, exact=None, k0=1.12e-4,
                            error_kind="relative",
                            magnitude_notes={0: 1.0, 1: 5.78e-5, 2: 1.0})


# -- Klopfenstein D6 ---------------------------------------------------------

def _d6_rhs(t, y, out):
    out[0] = -y[0] + 1.0e8 * y[2] * (1.0 - y[0])
    out[1] = -10.0 * y[1] + 3.0e7 * y[2] * (1.0 - y[1])
    out[2] = -(out[0] + out[1])


def _d6_jac(t, y, out):
    out[0, 0] = -1.0 - 1.0e8 * y[2]
    out[0, 1] = 0.0
    out[0, 2] = 1.0e8 * (1.0 - y[0])
    out[1, 0] = 0.0
    out[1, 1] = -10.0 - 3.0e7 * y[2]
    out[1, 2] = 3.0e7 * (1.0 - y[1])
    for j in range(3):
        out[2, j] = -(out[0, j] + out[1, j])


def make_d6(t_end: float = 1.0) -> BenchmarkProblem:
    """Klopfenstein's stiff three-component system; y(0) = (1,0,0)."""
    problem = OdeProblem(
        dim=3, rhs=_wrap(3, _d6_rhs), jac=_wrap_jac(3, _d6_jac),
        u0=np.array([1.0, 0.0, 0.0]), t_end=t_end, name="d6",
        rhs_inplace=_d6_rhs, jac_inplace=_d6_jac,
    )
    return BenchmarkProblem(problem=problem, exact=None, k0=3.3e-8,
                            error_kind="relative",
                            magnitude_notes={0: 1.0, 1: 1.0, 2: 1e-8})


# -- Oregonator ---------------------------------------------------------------

def _oreg_rhs(t, y, out):
    out[0] = 77.27 * (y[1] + y[0] * (1.0 - 8.375e-6 * y[0] - y[1]))
    out[1] = (y[2] - (1.0 + y[0]) * y[1]) / 77.27
    out[2] = 0.161 * (y[0] - y[2])


def _oreg_jac(t, y, out):
    out[0, 0] = 77.27 * (1.0 - 2.0 * 8.375e-6 * y[0] - y[1])
    out[0, 1] = 77.27 * (1.0 - y[0])
    out[0, 2] = 0.0
    out[1, 0] = -y[1] / 77.27
    out[1, 1] = -(1.0 + y[0]) / 77.27
    out[1, 2] = 1.0 / 77.27
    out[2, 0] = 0.161
    out[2, 1] = 0.0
    out[2, 2] = -0.161


def make_oregonator(t_end: float = 360.0) -> BenchmarkProblem:
    """The Oregonator limit-cycle kinetics; y(0) = (1,2,3)."""
    problem = OdeProblem(
        dim=3, rhs=_wrap(3, _oreg_rhs), jac=_wrap_jac(3, _oreg_jac),
        u0=np.array([1.0, 2.0, 3.0]), t_end=t_end, name="oregonator",
        rhs_inplace=_oreg_rhs, jac_inplace=_oreg_jac,
    )
    return BenchmarkProblem(problem=problem, exact=None, k0=7.33e-6,
                            error_kind="absolute",
                            magnitude_notes={0: 117845.8, 1: 1768.7, 2: 31263.85})


# -- van der Pol --------------------------------------------------------------

def make_vdp(mu: float = 1000.0, t_end: float = 3000.0) -> BenchmarkProblem:
    """The van der Pol oscillator in first-order form; y(0) = (2, 0).

    ``mu`` and ``t_end`` are overridable so desk-scale variants of the
    full benchmark can be run.
    """
    mu = float(mu)

    def _vdp_rhs(t, y, out):
        out[0] = y[1]
        out[1] = mu * (1.0 - y[0] * y[0]) * y[1] - y[0]

    def _vdp_jac(t, y, out):
        out[0, 0] = 0.0
        out[0, 1] = 1.0
        out[1, 0] = -2.0 * mu * y[0] * y[1] - 1.0
        out[1, 1] = mu * (1.0 - y[0] * y[0])

    problem = OdeProblem(
        dim=2, rhs=_wrap(2, _vdp_rhs), jac=_wrap_jac(2, _vdp_jac),
        u0=np.array([2.0, 0.0]), t_end=t_end, name="vdp",
        rhs_inplace=_vdp_rhs, jac_inplace=_vdp_jac,
    )
    y2_scale = max(2.0, 1.33 * mu)
    return BenchmarkProblem(problem=problem, exact=None, k0=3.33e-4,
                            error_kind="absolute",
                            magnitude_notes={0: 2.000073, 1: y2_scale})


PROBLEM_NAMES = ("oscillator", "krogh", "robertson", "d6", "oregonator", "vdp")

_FACTORIES = {
    "oscillator": make_oscillator,
    "krogh": make_krogh,
    "robertson": make_robertson,
    "d6": make_d6,
    "oregonator": make_oregonator,
    "vdp": make_vdp,
}


def by_name(name: str, **kwargs) -> BenchmarkProblem:
    """Benchmark problem registry used by the CLI."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose from {', '.join(PROBLEM_NAMES)}"
        ) from None
    return factory(**kwargs)
