import time
import numpy as np
from dc_ode import SchemeSpec
from dc_ode.harness import compute_reference, error_norm, solve_with
from dc_ode.problems import make_krogh, benchmark_newton

b = make_krogh()   # T = 1000
cfg = benchmark_newton(b)
t0 = time.time()
ref = compute_reference(b, SchemeSpec.trapezoid(10), 3.125e-5)
print(f"reference done in {time.time()-t0:.0f}s, {len(ref.sample_indices)} samples", flush=True)
paper = {
 (2,1e-3): 0.017, (4,1e-3): 7.49e-3, (6,1e-3): 1.05e-3, (8,1e-3): 8.84e-4,
 (2,4e-4): 1.82e-3, (4,4e-4): 8.15e-5, (6,4e-4): 2.86e-6, (8,4e-4): 1.06e-7,
 (2,2.5e-4): 9.66e-4, (4,2.5e-4): 1.90e-5, (6,2.5e-4): 3.01e-7, (8,2.5e-4): 6.09e-9,
 (2,1.388e-4): 2.88e-4, (4,1.388e-4): 1.67e-6, (6,1.388e-4): 7.82e-9, (8,1.388e-4): 6.09e-9,
}
for order in (2, 4, 6, 8):
    for k in (1e-3, 4e-4, 2.5e-4, 1.388e-4):
        t1 = time.time()
        traj = solve_with(b, SchemeSpec.trapezoid(order), k, newton=cfg)
        err = error_norm(traj, ref, "absolute")
        del traj
        pv = paper[(order, k)]
        print(f"DC{order} k={k:g}: err={err.overall:.4e} percomp={np.array2string(err.per_component, precision=2)} "
              f"paper={pv:.3e} ratio={err.overall/pv:.2f} [{time.time()-t1:.0f}s]", flush=True)
print(f"TOTAL {time.time()-t0:.0f}s")
