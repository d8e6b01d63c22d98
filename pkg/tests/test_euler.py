"""Euler-family DC: stage relations, order increments, stability split."""

import numpy as np
import pytest

from dc_ode import OdeProblem, SchemeSpec, euler_dc_solve, euler_stage_run
from dc_ode.coefficients import euler_correction_weights
from dc_ode.euler import euler_stage_ranges
from dc_ode.trapezoid import trajectory_from_samples

from oracles import apply_minus, nested_composite, random_grid


def dahlquist(z, t_end):
    return OdeProblem(dim=1, rhs=lambda t, u: z * u, u0=np.array([1.0 + 0.0j]),
                      t_end=t_end, jac=lambda t, u: np.array([[z]]), linear_lambda=z)


def decay_problem(t_end=2.0):
    return OdeProblem(dim=1, rhs=lambda t, u: -u, u0=np.array([1.0]), t_end=t_end,
                      jac=lambda t, u: np.array([[-1.0]]))


def test_stage1_forward_unit_rhs_exact():
    p = OdeProblem(dim=1, rhs=lambda t, u: np.ones(1), u0=np.array([0.25]),
                   t_end=2.0, jac=lambda t, u: np.zeros((1, 1)))
    tr = euler_stage_run(p, None, 0, "forward", (-3, 12), k=0.125)
    for n in range(-3, 13):
        assert tr.state(n)[0] == pytest.approx(0.25 + n * 0.125, abs=1e-14)


def test_stage2_correction_term_on_quadratic():
    # the first correction is (k/2) D+D- of the lower stage: exactly k on t^2
    for k in (0.5, 0.25):
        offs, w = euler_correction_weights(1, "forward")
        vals = np.array([(m * k) ** 2 for m in range(-3, 7)])
        for n in (0, 1, 2):
            term = sum(float(wi) * vals[3 + n + o] for o, wi in zip(offs, w)) / k
            assert term == pytest.approx(k, rel=1e-13)  # a_2 k (D+D-)t^2 = k


def test_stencil_bookkeeping_matches_nested_operators():
    # term i must equal a_{i+1} k^i D-^{r}(D+D-)^{m} with r = (1+(-1)^i)/2,
    # m = floor((i+1)/2), checked on random data via nested applications
    rng = np.random.default_rng(31)
    k = 0.4
    s = random_grid(rng, -6, 10, k)
    from dc_ode.coefficients import generate_euler_coeffs

    coeffs = generate_euler_coeffs(6)
    for i in (1, 2, 3, 4):
        r = (1 + (-1) ** i) // 2
        m = (i + 1) // 2
        nested = nested_composite(s, m)
        if r:
            nested = apply_minus(nested)
        a = float(coeffs.a_of(i + 1))
        # isolate term i as difference of consecutive correction sums
        offs_i, w_i = euler_correction_weights(i, "forward")
        offs_p, w_p = euler_correction_weights(i - 1, "forward")
        for n in (-1, 0, 2):
            full = sum(w * s.at(n + o)[0] for o, w in zip(offs_i, w_i)) / k
            prev = sum(w * s.at(n + o)[0] for o, w in zip(offs_p, w_p)) / k if i > 1 else 0.0
            term = full - prev
            expect = a * k ** i * nested.at(n)[0]
            assert term == pytest.approx(expect, rel=1e-12, abs=1e-13)


def test_backward_stage3_observed_order():
    p = decay_problem()
    errs = []
    for k in (0.1, 0.05, 0.025):
        tr = euler_dc_solve(p, SchemeSpec.euler(3, "backward"), k)
        errs.append(np.max(np.abs(tr.values[:, 0] - np.exp(-tr.times()))))
    obs = np.log(errs[0] / errs[-1]) / np.log(4.0)
    assert obs >= 2.7


def test_order1_closed_forms():
    z = -0.5 + 0.0j
    tr = euler_dc_solve(dahlquist(z, 8.0), SchemeSpec.euler(1, "forward"), 1.0)
    assert np.allclose(tr.values[:, 0], (1 + z) ** np.arange(9), rtol=1e-14)
    tr = euler_dc_solve(dahlquist(z, 8.0), SchemeSpec.euler(1, "backward"), 1.0)
    assert np.allclose(tr.values[:, 0], (1 - z) ** -np.arange(9.0), rtol=1e-14)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_oscillator_backward_orders(order):
    # [0, 20] horizon; steps small enough to sit in the asymptotic regime
    p = OdeProblem(dim=1, rhs=lambda t, u: 2.0 * np.cos(t) * u, u0=np.array([1.0]),
                   t_end=20.0, jac=lambda t, u: np.array([[2.0 * np.cos(t)]]))
    errs = []
    for k in (0.02, 0.01, 0.005):
        tr = euler_dc_solve(p, SchemeSpec.euler(order, "backward"), k)
        errs.append(np.max(np.abs(tr.values[:, 0] - np.exp(2 * np.sin(tr.times())))))
    obs = np.log(errs[0] / errs[-1]) / np.log(4.0)
    assert abs(obs - order) <= 0.3


@pytest.mark.parametrize("variant", ["forward", "backward"])
def test_order_increment_per_stage(variant):
    p = decay_problem(3.0)
    orders = []
    for order in (1, 2, 3, 4):
        errs = []
        for k in (0.08, 0.04, 0.02):
            tr = euler_dc_solve(p, SchemeSpec.euler(order, variant), k)
            errs.append(np.max(np.abs(tr.values[:, 0] - np.exp(-tr.times()))))
        orders.append(np.log(errs[0] / errs[-1]) / np.log(4.0))
    increments = np.diff(orders)
    assert np.all(np.abs(increments - 1.0) <= 0.3)


def test_euler_dcc_residual_scaling():
    # || D+D- (u^{j} - u_exact) || scales as k^j
    p = decay_problem(4.0)
    for order in (1, 2):
        maxima = []
        for k in (0.1, 0.05, 0.025):
            tr = euler_dc_solve(p, SchemeSpec.euler(order, "backward"), k)
            diff = tr.values[:, 0] - np.exp(-tr.times())
            d2 = np.abs(diff[2:] - 2 * diff[1:-1] + diff[:-2]) / k**2
            maxima.append(d2.max())
        slope = np.log(maxima[0] / maxima[-1]) / np.log(4.0)
        assert abs(slope - order) <= 0.3


def test_stability_split():
    # forward order 1 doubles per step at z = -3; backward variants decay
    tr = euler_dc_solve(dahlquist(-3.0 + 0j, 30.0), SchemeSpec.euler(1, "forward"), 1.0)
    mods = np.abs(tr.values[:, 0])
    assert np.allclose(mods, 2.0 ** np.arange(31), rtol=1e-12)
    rng = np.random.default_rng(32)
    for order in (1, 2, 3, 4):
        for _ in range(6):
            z = complex(-rng.uniform(0.1, 50.0), rng.uniform(-50.0, 50.0))
            tr = euler_dc_solve(dahlquist(z, 60.0), SchemeSpec.euler(order, "backward"), 1.0)
            mods = np.abs(tr.values[:, 0])
            assert mods[-1] < 1.0 and mods[-1] < mods[len(mods) // 2]


def test_stage_ranges_and_coverage_checks():
    ranges = euler_stage_ranges(4, 50)
    assert ranges[-1] == (0, 50)
    for s in range(3, 0, -1):
        reach = (s + 2) // 2
        assert ranges[s - 1][0] == ranges[s][0] - reach - 1
        assert ranges[s - 1][1] == ranges[s][1] + reach
    p = decay_problem()
    base = euler_stage_run(p, None, 0, "forward", (0, 10), k=0.1)
    with pytest.raises(ValueError, match="ghost coverage"):
        euler_stage_run(p, base, 1, "forward", (0, 10))
    with pytest.raises(ValueError, match="order-"):
        bad = trajectory_from_samples(np.zeros((13, 1)), 0.1, -1, 10, stage_order=3)
        euler_stage_run(p, bad, 1, "forward", (0, 9))


def test_compiled_engine_bit_identical():
    from dc_ode.problems import make_oscillator, benchmark_newton

    b = make_oscillator(t_end=5.0)
    cfg = benchmark_newton(b)
    for variant in ("forward", "backward"):
        spec = SchemeSpec.euler(3, variant)
        py = euler_dc_solve(b.problem, spec, 0.01, newton=cfg, engine="python")
        nb = euler_dc_solve(b.problem, spec, 0.01, newton=cfg, engine="numba")
        assert np.array_equal(py.values, nb.values)


def test_mirrored_backward_weights():
    # time reflection: odd terms flip sign and keep the centered stencil,
    # even terms keep sign with the shifted stencil mirrored
    offs_f, w_f = euler_correction_weights(4, "forward")
    offs_b, w_b = euler_correction_weights(4, "backward")
    fwd = dict(zip(offs_f, w_f))
    bwd = dict(zip(offs_b, w_b))
    # reflected-sum identity: total correction of u(t)=t must vanish both ways
    for table in (fwd, bwd):
        assert sum(w * o for o, w in table.items()) == 0
