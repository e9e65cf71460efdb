# Under the hood: the SDP layer on its own.
#
# Build a small semidefinite program by hand, watch the interior-point
# iteration close the duality gap, recheck the answer with the independent
# certificate, and dump the problem in SDPA sparse format for cross-checking
# against an external solver.

from pathlib import Path

import numpy as np

from sublevelset.sdp import SdpProblem, SolverOptions, check_certificate, solve, write_sdpa

# minimize x subject to [[x, 1], [1, x]] >= 0  (optimum x = 1)
problem = SdpProblem(
    psd_dims=[2],
    constraints=[
        {"psd": {0: np.array([[0.0, 0.5], [0.5, 0.0]])}},  # X12 = 1
        {"psd": {0: np.diag([1.0, -1.0])}},                # X11 = X22
    ],
    b=[1.0, 0.0],
    C_psd=[np.diag([1.0, 0.0])],
)

solution = solve(problem, SolverOptions(verbose=True))
print(f"\nstatus {solution.status.value} after {solution.iterations} iterations")
print(f"x* = {solution.X[0][0, 0]:.9f} (expected 1)")
print(f"relative gap {solution.gap:.2e}")

report = check_certificate(problem, solution)
print("\nindependent recheck:")
print(report.text())

path = Path("output_solver") / "toeplitz.dat-s"
path.parent.mkdir(exist_ok=True)
write_sdpa(problem, str(path))
print(f"\nSDPA sparse dump written to {path}")
