"""Harness: norms, order fits, references, streaming, CSV reports."""

import os

import numpy as np
import pytest

from dc_ode import OdeProblem, SchemeSpec
from dc_ode.harness import (
    _streamed_samples,
    _subsample_indices,
    compute_reference,
    convergence_study,
    error_norm,
    fit_order,
    load_reference,
    solve_with,
    write_report_csv,
)
from dc_ode.problems import BenchmarkProblem, benchmark_newton, make_oscillator
from dc_ode.trapezoid import dc_solve, trajectory_from_samples


def small_oscillator(t_end=10.0):
    return make_oscillator(t_end=t_end)


def test_error_norm_identical_is_zero():
    b = small_oscillator()
    tr = solve_with(b, SchemeSpec.trapezoid(2), 0.1)
    n = error_norm(tr, tr, "absolute")
    assert np.all(n.per_component == 0.0)


def test_error_norm_simple_absolute():
    tr = trajectory_from_samples(np.array([1.0, 2.0]), 1.0, 0, 1, 2)
    truth = trajectory_from_samples(np.array([1.0, 1.0]), 1.0, 0, 1, 99)
    n = error_norm(tr, truth, "absolute")
    assert n.per_component[0] == 1.0


def test_error_norm_relative_excludes_t0_and_flags_zero():
    tr = trajectory_from_samples(np.array([5.0, 2.0, 3.0]), 1.0, 0, 2, 2)
    truth = trajectory_from_samples(np.array([0.0, 1.0, 2.0]), 1.0, 0, 2, 99)
    n = error_norm(tr, truth, "relative")  # zero truth at t=0 is skipped (n>=1)
    assert n.per_component[0] == pytest.approx(1.0)  # |2-1|/1
    bad = trajectory_from_samples(np.array([0.0, 0.0, 2.0]), 1.0, 0, 2, 99)
    with pytest.raises(ZeroDivisionError, match="component 0"):
        error_norm(tr, bad, "relative")


def test_error_norm_against_exact_callable():
    b = small_oscillator()
    tr = solve_with(b, SchemeSpec.trapezoid(4), 0.05)
    n = error_norm(tr, b.exact, "absolute")
    assert 0 < n.overall < 1e-5


def test_subsampling_cap_equivalence():
    b = small_oscillator()
    tr = solve_with(b, SchemeSpec.trapezoid(2), 0.01)  # N+1 = 1001
    full = error_norm(tr, b.exact, "absolute", cap=tr.n_steps + 1)
    capped = error_norm(tr, b.exact, "absolute", cap=4_000_000)
    assert np.array_equal(full.per_component, capped.per_component)
    sparse = error_norm(tr, b.exact, "absolute", cap=100)
    assert sparse.n_samples <= 100
    assert sparse.overall <= full.overall


def test_subsample_indices_shape():
    idx = _subsample_indices(0, 10, 100)
    assert np.array_equal(idx, np.arange(11))
    idx = _subsample_indices(0, 999_999, 1000)
    assert len(idx) <= 1000 and idx[0] == 0 and idx[-1] == 999_999


@pytest.mark.parametrize("q", [2, 4, 6, 8, 10])
def test_fit_order_synthetic(q):
    ks = [0.1 / 2**i for i in range(5)]
    errs = [3.7 * k**q for k in ks]
    assert fit_order(ks, errs) == pytest.approx(q, abs=1e-10)


def test_fit_order_floor_exclusion():
    ks = [0.1, 0.05, 0.025, 0.0125]
    errs = [1e-2, 2.5e-3, 1e-6, 1e-6]  # last two rows sit on a floor
    fitted = fit_order(ks, errs, floor=5e-6)
    assert fitted == pytest.approx(2.0, abs=1e-9)
    assert fit_order(ks, [0.0, 0.0, 0.0, 0.0]) == "exact"
    assert fit_order(ks, [1e-3, None, None, None]) is None


def test_convergence_study_exact_rhs_reports_exact():
    # dyadic steps keep the additive accumulation bit-exact on a line
    p = OdeProblem(dim=1, rhs=lambda t, u: np.full(1, 2.0), u0=np.zeros(1),
                   t_end=1.0, jac=lambda t, u: np.zeros((1, 1)))
    bench = BenchmarkProblem(problem=p, exact=lambda t: 2.0 * np.asarray(t)[..., None],
                             error_kind="absolute")
    rep = convergence_study(bench, SchemeSpec.trapezoid(4), [0.125, 0.0625])
    assert rep.fitted_orders[0] == "exact"


def test_convergence_study_orders_and_rows():
    b = small_oscillator()
    rep = convergence_study(b, SchemeSpec.trapezoid(4), [0.2, 0.1, 0.05])
    assert rep.fitted_orders[0] == pytest.approx(4.0, abs=0.3)
    assert len(rep.rows) == 3 and len(rep.pairwise_orders) == 2
    assert rep.pairwise_orders[0][0] == pytest.approx(4.0, abs=0.5)
    with pytest.raises(ValueError, match="decreasing"):
        convergence_study(b, SchemeSpec.trapezoid(2), [0.05, 0.1])


def test_convergence_study_default_sweep_from_k0():
    # the recorded transient scale seeds a halving sweep when ks is omitted
    from dc_ode.problems import make_oregonator

    b = make_oregonator(t_end=0.5)
    ref = compute_reference(b, SchemeSpec.trapezoid(6), b.k0 / 16)
    rep = convergence_study(b, SchemeSpec.trapezoid(2), truth=ref)
    assert rep.ks == (b.k0, b.k0 / 2, b.k0 / 4)
    b2 = small_oscillator()
    with pytest.raises(ValueError, match="k0"):
        convergence_study(b2, SchemeSpec.trapezoid(2))


def test_convergence_study_records_failed_rows():
    # the trapezoid pole z*k = 2 makes the linear solve singular
    p = OdeProblem(dim=1, rhs=lambda t, u: 2.0 * u, u0=np.array([1.0 + 0j]),
                   t_end=4.0, jac=lambda t, u: np.array([[2.0]]),
                   linear_lambda=2.0 + 0.0j)
    bench = BenchmarkProblem(problem=p, exact=lambda t: np.exp(2.0 * np.asarray(t))[..., None],
                             error_kind="absolute")
    rep = convergence_study(bench, SchemeSpec.trapezoid(2), [1.0, 0.5])
    assert rep.rows[0].errors is None and "pole" in rep.rows[0].note
    assert rep.rows[1].errors is not None


def test_reference_roundtrip_bit_exact(tmp_path):
    b = small_oscillator()
    ref = compute_reference(b, SchemeSpec.trapezoid(4), 0.01)
    path = os.path.join(tmp_path, "ref.bin")
    ref.save(path)
    back = load_reference(path)
    assert back.digest == ref.digest
    assert np.array_equal(back.states, ref.states)
    assert np.array_equal(back.sample_indices, ref.sample_indices)
    assert back.k == ref.k and back.problem_name == ref.problem_name


def test_reference_digest_tamper_detection(tmp_path):
    b = small_oscillator()
    path = os.path.join(tmp_path, "ref.bin")
    compute_reference(b, SchemeSpec.trapezoid(2), 0.05, out_path=path)
    raw = bytearray(open(path, "rb").read())
    raw[-5] ^= 0xFF
    open(path, "wb").write(bytes(raw))
    with pytest.raises(ValueError, match="digest"):
        load_reference(path)


def test_reference_agrees_with_exact():
    b = small_oscillator()
    ref = compute_reference(b, SchemeSpec.trapezoid(6), 0.01)
    truth = b.exact(ref.times())
    assert np.max(np.abs(ref.states - truth)) < 1e-9


def test_error_norm_reference_time_matching():
    b = small_oscillator()
    ref = compute_reference(b, SchemeSpec.trapezoid(8), 0.005)
    tr = solve_with(b, SchemeSpec.trapezoid(2), 0.05)   # 10x coarser, all match
    n_ref = error_norm(tr, ref, "absolute")
    n_exc = error_norm(tr, b.exact, "absolute")
    assert n_ref.overall == pytest.approx(n_exc.overall, rel=1e-4)
    # incommensurate grids share no interior times: expect the error to
    # be raised rather than silently comparing shifted states
    tr_bad = solve_with(b, SchemeSpec.trapezoid(2), 0.0317)
    matched = error_norm(tr_bad, ref, "absolute")
    assert matched.n_samples < tr_bad.n_steps  # only true coincidences kept


def test_streaming_matches_full_retention():
    b = small_oscillator(t_end=40.0)
    cfg = benchmark_newton(b)
    spec = SchemeSpec.trapezoid(6)
    k = 0.01
    n = int(round(b.problem.t_end / k))
    idx = _subsample_indices(0, n, 4_000_000)
    full = dc_solve(b.problem, spec, k, newton=cfg, engine="python").values[idx]
    stream = _streamed_samples(b.problem, spec, k, n, idx, cfg, "python", 271)
    assert np.array_equal(full, stream)


def test_report_csv_format(tmp_path):
    b = small_oscillator()
    rep = convergence_study(b, SchemeSpec.trapezoid(2), [0.2, 0.1])
    path = os.path.join(tmp_path, "report.csv")
    write_report_csv(rep, path)
    lines = open(path).read().strip().split("\n")
    assert lines[0] == "k,err_0,order_0"
    assert lines[-1].startswith("fitted,")
    # 17 significant digits survive a round trip
    k_cell = lines[1].split(",")[0]
    assert float(k_cell) == 0.2
    assert len(lines) == 4


def test_solve_with_dispatches_families():
    b = small_oscillator(t_end=2.0)
    t1 = solve_with(b, SchemeSpec.trapezoid(2), 0.1)
    t2 = solve_with(b, SchemeSpec.euler(2, "backward"), 0.1)
    assert t1.n_steps == t2.n_steps == 20
