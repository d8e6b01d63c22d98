"""Command-line interface: solver runs, convergence tables, references,
stability scans, and coefficient dumps."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .coefficients import generate_euler_coeffs, generate_trapezoid_coeffs
from .harness import (
    compute_reference,
    convergence_study,
    error_norm,
    load_reference,
    report_csv_lines,
    solve_with,
)
from .ode import EULER_BACKWARD, EULER_FORWARD, TRAPEZOID, SchemeSpec
from .problems import PROBLEM_NAMES, by_name
from .stability import stability_scan

_FAMILIES = {
    "trapezoid": TRAPEZOID,
    "euler-fwd": EULER_FORWARD,
    "euler-bwd": EULER_BACKWARD,
}


def _spec(family: str, order: int) -> SchemeSpec:
    try:
        fam = _FAMILIES[family]
    except KeyError:
        raise SystemExit(f"unknown family {family!r}; choose from {', '.join(_FAMILIES)}")
    return SchemeSpec(fam, order)


def _bench(args):
    kwargs = {}
    if getattr(args, "t_end", None) is not None:
        kwargs["t_end"] = args.t_end
    if getattr(args, "mu", None) is not None:
        if args.problem != "vdp":
            raise SystemExit("--mu only applies to the vdp problem")
        kwargs["mu"] = args.mu
    return by_name(args.problem, **kwargs)


def _parse_axis(text: str) -> np.ndarray:
    try:
        start, step, stop = (float(x) for x in text.split(":"))
    except ValueError:
        raise SystemExit(f"bad axis range {text!r}; expected start:step:stop")
    if step <= 0:
        raise SystemExit("axis step must be positive")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(max(n, 1))


def _cmd_coeffs(args):
    if args.family == "trapezoid":
        cs = generate_trapezoid_coeffs(args.p)
        items = [(i, cs.c_of(i)) for i in range(2, 2 * args.p + 2)]
    elif args.family == "euler":
        es = generate_euler_coeffs(args.p)
        items = [(i, es.a_of(i)) for i in range(1, args.p + 1)]
    else:
        raise SystemExit("coeffs family must be trapezoid or euler")
    for i, frac in items:
        print(f"{i} {frac.numerator}/{frac.denominator} {float(frac):.17g}")


def _cmd_run(args):
    bench = _bench(args)
    spec = _spec(args.family, args.order)
    traj = solve_with(bench, spec, args.dt)
    if args.out:
        times = traj.times()
        vals = traj.values
        with open(args.out, "w") as fh:
            fh.write("t," + ",".join(f"u{c}" for c in range(traj.dim)) + "\n")
            for i in range(len(times)):
                row = ",".join(f"{v:.17g}" for v in vals[i])
                fh.write(f"{times[i]:.17g},{row}\n")
        print(f"wrote {len(times)} states to {args.out}")
    final = ", ".join(f"{v:.10g}" for v in traj.values[-1])
    print(f"{bench.name}: {traj.n_steps} steps of {args.dt:g}, final state ({final})")
    if bench.exact is not None:
        norm = error_norm(traj, bench.exact, bench.error_kind)
        print(f"max {bench.error_kind} error vs exact: {norm.overall:.6g}")


def _cmd_convergence(args):
    bench = _bench(args)
    ks = [float(x) for x in args.dts.split(",")]
    orders = [int(x) for x in args.orders.split(",")]
    truth = None
    if args.reference:
        truth = load_reference(args.reference)
        if truth.problem_name != bench.name:
            raise SystemExit(
                f"reference is for {truth.problem_name!r}, not {bench.name!r}"
            )
    elif not args.exact:
        raise SystemExit("pass --exact or --reference ref.bin")
    sections = []
    for order in orders:
        spec = _spec(args.family, order)
        rep = convergence_study(bench, spec, ks, truth=truth, floor=args.floor)
        sections.append(rep)
        fitted = ", ".join(str(o) for o in rep.fitted_orders)
        print(f"order {order}: fitted per-component orders [{fitted}]")
    with open(args.report, "w") as fh:
        for rep in sections:
            fh.write(f"# problem={rep.problem_name} family={args.family} "
                     f"order={rep.spec.order} floor={rep.error_floor:.17g}\n")
            fh.write("\n".join(report_csv_lines(rep)) + "\n")
    print(f"wrote {args.report}")


def _cmd_reference(args):
    bench = _bench(args)
    spec = _spec(args.family, args.order)
    ref = compute_reference(bench, spec, args.dt, out_path=args.out)
    print(f"wrote {len(ref.sample_indices)} samples to {args.out} "
          f"(digest {ref.digest[:12]}...)")


def _cmd_stability(args):
    spec = _spec(args.family, args.order)
    re_vals = _parse_axis(args.re)
    im_vals = _parse_axis(args.im)
    samples, skipped = stability_scan(spec, re_vals, im_vals, args.steps,
                                      return_skipped=True)
    with open(args.out, "w") as fh:
        fh.write("re,im,decayed,max_modulus,tail_ratio\n")
        for s in samples:
            fh.write(f"{s.z.real:.17g},{s.z.imag:.17g},{int(s.decayed)},"
                     f"{s.max_modulus:.17g},{s.tail_ratio:.17g}\n")
    n_dec = sum(s.decayed for s in samples)
    print(f"{n_dec}/{len(samples)} samples decayed; wrote {args.out}")
    if skipped:
        print(f"skipped {len(skipped)} pole-adjacent samples: {skipped}", file=sys.stderr)


def _merge_axis_flags(argv):
    """Fold '--re -10:0.5:-0.5' into '--re=-10:0.5:-0.5' for argparse.

    Axis specs routinely start with a minus sign, which argparse would
    otherwise read as the next option.
    """
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--re", "--im"):
            try:
                out.append(f"{tok}={next(it)}")
            except StopIteration:
                out.append(tok)
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = _merge_axis_flags(list(argv))
    parser = argparse.ArgumentParser(
        prog="dc-ode",
        description="A-stable deferred-correction ODE solvers and benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="print correction coefficients exactly")
    p.add_argument("--family", required=True, choices=["trapezoid", "euler"])
    p.add_argument("--p", type=int, required=True)
    p.set_defaults(fn=_cmd_coeffs)

    p = sub.add_parser("run", help="solve one problem at one step size")
    p.add_argument("--problem", required=True, choices=PROBLEM_NAMES)
    p.add_argument("--family", default="trapezoid", choices=list(_FAMILIES))
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("convergence", help="error-vs-step study")
    p.add_argument("--problem", required=True, choices=PROBLEM_NAMES)
    p.add_argument("--family", default="trapezoid", choices=list(_FAMILIES))
    p.add_argument("--orders", required=True)
    p.add_argument("--dts", required=True)
    p.add_argument("--reference", default=None)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=_cmd_convergence)

    p = sub.add_parser("reference", help="compute and store a reference solution")
    p.add_argument("--problem", required=True, choices=PROBLEM_NAMES)
    p.add_argument("--family", default="trapezoid", choices=list(_FAMILIES))
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_reference)

    p = sub.add_parser("stability", help="left-half-plane decay scan")
    p.add_argument("--family", default="trapezoid", choices=list(_FAMILIES))
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--re", required=True, help="start:step:stop")
    p.add_argument("--im", required=True, help="start:step:stop")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_stability)

    args = parser.parse_args(argv)
    args.fn(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
