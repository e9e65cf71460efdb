"""Cross-check the built-in solver against an independent SDP solver."""

import numpy as np
import pytest

cp = pytest.importorskip("cvxpy")

from sublevelset.moments import Box, Domain
from sublevelset.polyalg import Polynomial
from sublevelset.sdp import SdpProblem, solve
from sublevelset.setapprox import build_volume_intersection, build_volume_union_outer
from sublevelset.sosprog import lower


def to_cvxpy(problem: SdpProblem):
    Xs = [cp.Variable((d, d), symmetric=True) for d in problem.psd_dims]
    x_nn = cp.Variable(problem.nonneg_dim) if problem.nonneg_dim else None
    x_f = cp.Variable(problem.free_dim) if problem.free_dim else None
    constraints = [X >> 0 for X in Xs]
    if x_nn is not None:
        constraints.append(x_nn >= 0)
    m = problem.num_constraints
    lhs = [0] * m
    for blk, (rows, mats) in enumerate(zip(problem._rows_psd, problem._mats_psd)):
        for row, mat in zip(rows, mats):
            lhs[row] = lhs[row] + cp.sum(cp.multiply(mat, Xs[blk]))
    for i in range(m):
        expr = lhs[i]
        if x_nn is not None:
            expr = expr + problem.A_nonneg[i] @ x_nn
        if x_f is not None:
            expr = expr + problem.A_free[i] @ x_f
        constraints.append(expr == problem.b[i])
    objective = 0
    for C, X in zip(problem.C_psd, Xs):
        objective = objective + cp.sum(cp.multiply(C, X))
    if x_nn is not None:
        objective = objective + problem.c_nonneg @ x_nn
    if x_f is not None:
        objective = objective + problem.c_free @ x_f
    return cp.Problem(cp.Minimize(objective), constraints)


def cross_check(problem, abs_tol=2e-5):
    mine = solve(problem)
    assert mine.is_optimal()
    reference = to_cvxpy(problem)
    reference.solve(solver=cp.SCS, eps=1e-8, max_iters=200_000)
    assert reference.status in ("optimal", "optimal_inaccurate")
    assert mine.primal_obj == pytest.approx(reference.value, abs=abs_tol)


def disk(offset, cx=0.0, cy=0.0):
    return Polynomial(
        2,
        {
            (2, 0): 1.0,
            (0, 2): 1.0,
            (1, 0): -2 * cx,
            (0, 1): -2 * cy,
            (0, 0): cx * cx + cy * cy - offset,
        },
    )


def test_volume_intersection_objective_matches_reference():
    dom = Domain(1.0, Box((-0.7, -0.7), (0.7, 0.7)))
    prog = build_volume_intersection([disk(0.0625)], dom, 4)
    problem, _ = lower(prog)
    cross_check(problem)


def test_volume_union_objective_matches_reference():
    dom = Domain(0.57, Box((-0.4, -0.4), (0.4, 0.4)))
    prog = build_volume_union_outer(
        [disk(0.075), disk(0.025, 0.15, 0.15)], dom, 4
    )
    problem, _ = lower(prog)
    cross_check(problem)


def test_random_problem_matches_reference():
    rng = np.random.default_rng(5)
    d, m = 4, 5
    mats = [0.5 * (A + A.T) for A in rng.normal(size=(m, d, d))]
    L = rng.normal(size=(d, d))
    X0 = L @ L.T + 0.5 * np.eye(d)
    y0 = rng.normal(size=m)
    Ls = rng.normal(size=(d, d))
    C = Ls @ Ls.T + 0.5 * np.eye(d) + sum(y * A for y, A in zip(y0, mats))
    problem = SdpProblem(
        psd_dims=[d],
        constraints=[{"psd": {0: A}} for A in mats],
        b=[float(np.tensordot(A, X0)) for A in mats],
        C_psd=[C],
    )
    cross_check(problem)
