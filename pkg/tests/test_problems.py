"""Benchmark problem definitions: values, Jacobians, conservation, scales."""

import numpy as np
import pytest

from dc_ode.newton import fd_jacobian
from dc_ode.problems import (
    PROBLEM_NAMES,
    by_name,
    make_d6,
    make_krogh,
    make_oregonator,
    make_oscillator,
    make_robertson,
    make_vdp,
)


def test_oscillator_values():
    b = make_oscillator()
    assert b.exact(0.0)[..., 0] == pytest.approx(1.0)
    assert b.exact(np.pi / 2)[..., 0] == pytest.approx(np.exp(2.0), rel=1e-15)
    assert b.problem.rhs(0.0, np.array([1.0]))[0] == pytest.approx(2.0)
    assert b.error_kind == "absolute" and b.problem.t_end == 1e6


def test_oscillator_exact_satisfies_ode():
    # complex-step derivative of the exact solution vs the right-hand side
    rng = np.random.default_rng(41)
    ts = rng.uniform(0.0, 50.0, 100)
    h = 1e-200
    for t in ts:
        u = np.exp(2.0 * np.sin(t))
        du = np.imag(np.exp(2.0 * np.sin(t + 1j * h))) / h
        assert abs(du - 2.0 * u * np.cos(t)) <= 1e-12 * abs(u)


def test_krogh_structure():
    b = make_krogh()
    y0 = b.problem.u0
    assert np.array_equal(y0, [0.0, -2.0, -1.0, -1.0])
    assert b.problem.dim == 4 and b.k0 == 1e-3 and b.problem.t_end == 1000.0
    U = 0.5 * (np.ones((4, 4)) - 2.0 * np.eye(4))
    # hand matrix-vector oracle: U = J/2 - I gives z = (sum(y)/2) - y
    z = U @ y0
    assert np.array_equal(z, np.sum(y0) / 2.0 - y0)
    assert np.array_equal(z, [-2.0, 0.0, -1.0, -1.0])
    # hand multiplication oracle for one entry of B = U D U
    from dc_ode.problems import _KROGH_B

    d_col0 = np.array([0.0, -10.0, 500.0, 5e-5])  # D @ U[:, 0] by hand
    assert _KROGH_B[0, 0] == pytest.approx(U[0] @ d_col0, abs=0)
    assert _KROGH_B[0, 0] == pytest.approx(245.000025)


def test_robertson_values():
    b = make_robertson()
    F = b.problem.rhs(0.0, np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(F, [-0.04, 0.04, 0.0])
    J = b.problem.jac(0.0, np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(J[0], [-0.04, 0.0, 0.0])
    assert b.error_kind == "relative" and b.k0 == pytest.approx(1.12e-4)
    assert b.problem.t_end == 1e4


def test_robertson_conservation_exact():
    b = make_robertson()
    rng = np.random.default_rng(42)
    for _ in range(25):
        y = rng.uniform(0.0, 1.0, 3)
        F = b.problem.rhs(0.3, y)
        assert (F[0] + F[1]) + F[2] == 0.0


def test_d6_values():
    b = make_d6()
    F = b.problem.rhs(0.0, np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(F, [-1.0, 0.0, 1.0])
    rng = np.random.default_rng(43)
    for _ in range(25):
        y = rng.uniform(0.0, 1.0, 3)
        F = b.problem.rhs(0.0, y)
        assert (F[0] + F[1]) + F[2] == 0.0
    assert b.k0 == pytest.approx(3.3e-8) and b.error_kind == "relative"
    assert b.magnitude_notes[2] == pytest.approx(1e-8)


def test_oregonator_values():
    b = make_oregonator()
    y = np.array([1.0, 2.0, 3.0])
    F = b.problem.rhs(0.0, y)
    assert F[2] == pytest.approx(0.161 * (1.0 - 3.0), abs=0)
    assert F[1] == pytest.approx((3.0 - (1.0 + 1.0) * 2.0) / 77.27, rel=1e-15)
    assert b.k0 == pytest.approx(7.33e-6) and b.problem.t_end == 360.0
    assert b.magnitude_notes[0] == pytest.approx(117845.8)


def test_vdp_values():
    b = make_vdp(mu=1000.0)
    F = b.problem.rhs(0.0, np.array([2.0, 0.0]))
    assert np.array_equal(F, [0.0, -2.0])
    J = b.problem.jac(0.0, np.array([2.0, 0.0]))
    assert np.array_equal(J[1], [-1.0, -3000.0])
    assert b.k0 == pytest.approx(3.33e-4)
    small = make_vdp(mu=10.0, t_end=20.0)
    assert small.problem.t_end == 20.0


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_jacobians_match_fd(name):
    b = by_name(name)
    p = b.problem
    rng = np.random.default_rng(44)
    for _ in range(10):
        y = rng.uniform(0.05, 1.5, p.dim)
        t = rng.uniform(0.0, 1.0)
        J = np.asarray(p.jac(t, y))
        Jfd = fd_jacobian(lambda v: p.rhs(t, v), y, method="central")
        assert np.max(np.abs(J - Jfd)) <= 1e-6 * max(np.max(np.abs(J)), 1.0)


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_inplace_twins_agree(name):
    b = by_name(name)
    p = b.problem
    rng = np.random.default_rng(45)
    y = rng.uniform(0.1, 1.0, p.dim)
    out = np.empty(p.dim)
    p.rhs_inplace(0.7, y, out)
    assert np.array_equal(out, p.rhs(0.7, y))
    J = np.empty((p.dim, p.dim))
    p.jac_inplace(0.7, y, J)
    assert np.array_equal(J, p.jac(0.7, y))


def test_registry():
    with pytest.raises(ValueError, match="unknown problem"):
        by_name("lorenz")
    assert by_name("vdp", mu=5.0).problem.name == "vdp"
