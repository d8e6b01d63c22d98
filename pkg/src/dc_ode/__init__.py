"""dc-ode: A-stable deferred-correction time steppers of arbitrary order.

The package provides the midpoint (trapezoidal) deferred-correction
hierarchy DC2, DC4, ..., an Euler-rule hierarchy of arbitrary order
(forward and backward variants), exact-rational generation of all
correction coefficients, a numerical absolute-stability analyzer, six
classic stiff/nonstiff benchmark problems, and a convergence harness
with reference-solution management and CSV reporting.
"""

from .coefficients import (
    EulerCoeffs,
    TrapezoidCoeffs,
    generate_euler_coeffs,
    generate_trapezoid_coeffs,
)
from .euler import euler_dc_solve, euler_stage_run
from .harness import (
    ConvergenceReport,
    ErrorNorm,
    ReferenceSolution,
    compute_reference,
    convergence_study,
    error_norm,
    load_reference,
    solve_with,
    write_report_csv,
)
from .newton import NewtonConfig, NewtonReport, fd_jacobian, newton_solve
from .ode import EULER_BACKWARD, EULER_FORWARD, TRAPEZOID, OdeProblem, SchemeSpec, Trajectory
from .operators import (
    GridSeq,
    average,
    backward_diff,
    composite_power,
    forward_diff,
    midpoint_centered_diff,
    odd_composite,
)
from .problems import (
    BenchmarkProblem,
    benchmark_newton,
    by_name,
    make_d6,
    make_krogh,
    make_oregonator,
    make_oscillator,
    make_robertson,
    make_vdp,
)
from .stability import (
    StabilitySample,
    amplification_sequence,
    lemma4_structure_check,
    stability_scan,
)
from .trapezoid import (
    DccReport,
    SolverFailure,
    correction_terms,
    dc2_run,
    dc_solve,
    dc_stage_run,
    dcc_residual,
    trajectory_from_samples,
)

__version__ = "0.1.0"
