import numpy as np
import pytest

from sublevelset.sdp import (
    CertificateReport,
    SdpError,
    SdpProblem,
    SdpSolution,
    SolveStatus,
    SolverOptions,
    check_certificate,
    solve,
    write_sdpa,
)


def sym_entry(i, j, n, value=1.0):
    M = np.zeros((n, n))
    if i == j:
        M[i, i] = value
    else:
        M[i, j] = M[j, i] = value / 2.0
    return M


def toeplitz_problem():
    # min x subject to [[x, 1], [1, x]] >= 0, posed on X = [[x,1],[1,x]]
    constraints = [
        {"psd": {0: sym_entry(0, 1, 2)}},           # X12 = 1
        {"psd": {0: np.diag([1.0, -1.0])}},          # X11 - X22 = 0
    ]
    return SdpProblem(
        psd_dims=[2],
        constraints=constraints,
        b=[1.0, 0.0],
        C_psd=[np.diag([1.0, 0.0])],
    )


class TestSolveBasics:
    def test_toeplitz_matches_scan_oracle(self):
        # oracle: 1-D scan of the smallest feasible x
        xs = np.linspace(0.0, 3.0, 3001)
        feasible = [
            x for x in xs if np.linalg.eigvalsh(np.array([[x, 1], [1, x]])).min() >= 0
        ]
        oracle = min(feasible)
        assert oracle == pytest.approx(1.0, abs=1e-3)

        sol = solve(toeplitz_problem())
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.X[0][0, 0] == pytest.approx(1.0, abs=1e-6)
        assert sol.gap <= 1e-8

    def test_pin_one_entry(self):
        # min tr(X) with X11 = 1 -> X = diag(1, 0), objective 1
        prob = SdpProblem(
            psd_dims=[2],
            constraints=[{"psd": {0: sym_entry(0, 0, 2)}}],
            b=[1.0],
            C_psd=[np.eye(2)],
        )
        sol = solve(prob)
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.primal_obj == pytest.approx(1.0, abs=1e-7)
        assert sol.X[0] == pytest.approx(np.diag([1.0, 0.0]), abs=1e-6)

    def test_zero_constraint_problem(self):
        prob = SdpProblem(psd_dims=[2], constraints=[], b=[], C_psd=[np.eye(2)])
        sol = solve(prob)
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.primal_obj == pytest.approx(0.0, abs=1e-7)

    def test_free_variable_elimination(self):
        # min tr(X) with X12 = 1, X11 = t, X22 = t (t free) -> t = 1
        constraints = [
            {"psd": {0: sym_entry(0, 1, 2)}},
            {"psd": {0: sym_entry(0, 0, 2)}, "free": {0: -1.0}},
            {"psd": {0: sym_entry(1, 1, 2)}, "free": {0: -1.0}},
        ]
        prob = SdpProblem(
            psd_dims=[2],
            constraints=constraints,
            b=[1.0, 0.0, 0.0],
            C_psd=[np.eye(2)],
            free_dim=1,
        )
        sol = solve(prob)
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.x_free[0] == pytest.approx(1.0, abs=1e-6)
        assert sol.primal_obj == pytest.approx(2.0, abs=1e-6)

    def test_nonneg_section_linear_program(self):
        # min -x1 - 2 x2 s.t. x1 + x2 + slack = 1, all >= 0
        prob = SdpProblem(
            psd_dims=[],
            constraints=[{"nonneg": {0: 1.0, 1: 1.0, 2: 1.0}}],
            b=[1.0],
            nonneg_dim=3,
            c_nonneg=[-1.0, -2.0, 0.0],
        )
        sol = solve(prob)
        assert sol.status == SolveStatus.OPTIMAL
        assert sol.primal_obj == pytest.approx(-2.0, abs=1e-7)
        assert sol.x_nonneg[1] == pytest.approx(1.0, abs=1e-6)

    def test_infeasible_is_flagged(self):
        # X11 = -1 with X >= 0 cannot hold
        prob = SdpProblem(
            psd_dims=[2],
            constraints=[{"psd": {0: sym_entry(0, 0, 2)}}],
            b=[-1.0],
            C_psd=[np.eye(2)],
        )
        sol = solve(prob)
        assert sol.status in (
            SolveStatus.INFEASIBLE,
            SolveStatus.UNBOUNDED,
            SolveStatus.NUMERICAL_TROUBLE,
            SolveStatus.MAX_ITER,
        )
        assert sol.status != SolveStatus.OPTIMAL

    def test_unbounded_is_flagged(self):
        # min <-I, X> with only X12 pinned; X = tI drives the objective down
        prob = SdpProblem(
            psd_dims=[2],
            constraints=[{"psd": {0: sym_entry(0, 1, 2)}}],
            b=[0.0],
            C_psd=[-np.eye(2)],
        )
        sol = solve(prob)
        assert sol.status != SolveStatus.OPTIMAL


def random_feasible_problem(rng, with_extras=False):
    """Random SDP with strictly feasible primal and dual points by construction."""
    d = int(rng.integers(2, 6))
    m = int(rng.integers(1, 2 * d))
    mats = []
    for _ in range(m):
        A = rng.normal(size=(d, d))
        mats.append(0.5 * (A + A.T))
    L = rng.normal(size=(d, d))
    X0 = L @ L.T + 0.5 * np.eye(d)
    y0 = rng.normal(size=m)
    Ls = rng.normal(size=(d, d))
    S0 = Ls @ Ls.T + 0.5 * np.eye(d)
    C = S0 + sum(y * A for y, A in zip(y0, mats))
    b = np.array([np.tensordot(A, X0) for A in mats])
    constraints = [{"psd": {0: A}} for A in mats]
    nonneg_dim = 0
    c_nonneg = None
    if with_extras:
        nonneg_dim = 2
        x0_nn = rng.uniform(0.5, 1.5, size=2)
        s0_nn = rng.uniform(0.5, 1.5, size=2)
        A_nn = rng.normal(size=(m, 2))
        for i in range(m):
            constraints[i]["nonneg"] = {0: A_nn[i, 0], 1: A_nn[i, 1]}
        b = b + A_nn @ x0_nn
        c_nonneg = s0_nn + A_nn.T @ y0
    return SdpProblem(
        psd_dims=[d],
        constraints=constraints,
        b=b,
        C_psd=[C],
        nonneg_dim=nonneg_dim,
        c_nonneg=c_nonneg,
    )


class TestRandomSuite:
    def test_twenty_feasible_problems_close_the_gap(self):
        rng = np.random.default_rng(42)
        for k in range(20):
            prob = random_feasible_problem(rng, with_extras=(k % 3 == 0))
            sol = solve(prob)
            assert sol.status == SolveStatus.OPTIMAL, f"case {k}: {sol.status}"
            assert sol.gap <= 1e-8, f"case {k}: gap {sol.gap}"
            report = check_certificate(prob, sol)
            assert report.passed, f"case {k}: {report.reasons}"

    def test_weak_duality_along_the_path(self):
        rng = np.random.default_rng(7)
        prob = random_feasible_problem(rng)
        sol = solve(prob)
        assert sol.status == SolveStatus.OPTIMAL
        for entry in sol.iterate_log:
            # complementarity is positive at every interior iterate
            assert entry["complementarity"] > 0
            # once essentially feasible, the primal objective dominates the dual
            if max(entry["primal_residual"], entry["dual_residual"]) <= 1e-6:
                scale = 1 + abs(entry["primal_obj"])
                assert entry["primal_obj"] >= entry["dual_obj"] - 1e-9 * scale

    def test_objective_scaling_leaves_argmin(self):
        prob = toeplitz_problem()
        scaled = SdpProblem(
            psd_dims=[2],
            constraints=[
                {"psd": {0: sym_entry(0, 1, 2)}},
                {"psd": {0: np.diag([1.0, -1.0])}},
            ],
            b=[1.0, 0.0],
            C_psd=[np.diag([10.0, 0.0])],
        )
        a = solve(prob)
        b_ = solve(scaled)
        assert np.abs(a.X[0] - b_.X[0]).max() <= 1e-6

    def test_determinism(self):
        prob = toeplitz_problem()
        a = solve(prob)
        b = solve(toeplitz_problem())
        assert a.iterations == b.iterations
        assert a.primal_obj == b.primal_obj
        assert np.array_equal(a.X[0], b.X[0])


class TestCertificate:
    def test_passes_on_solved_problem(self):
        prob = toeplitz_problem()
        sol = solve(prob)
        report = check_certificate(prob, sol)
        assert report.passed
        assert report.min_eigenvalue >= -1e-7
        assert "pass" in report.text()

    def test_corrupted_solution_fails_with_reason(self):
        prob = toeplitz_problem()
        sol = solve(prob)
        w, V = np.linalg.eigh(sol.X[0])
        w[0] = -1e-3
        sol.X[0] = V @ np.diag(w) @ V.T
        report = check_certificate(prob, sol)
        assert not report.passed
        assert any("negative eigenvalue" in r for r in report.reasons)

    def test_zero_constraint_zero_solution(self):
        prob = SdpProblem(psd_dims=[2], constraints=[], b=[], C_psd=[np.eye(2)])
        sol = solve(prob)
        report = check_certificate(prob, sol)
        assert report.passed

    def test_rejects_non_optimal_status(self):
        prob = toeplitz_problem()
        sol = solve(prob, SolverOptions(max_iter=1))
        assert sol.status != SolveStatus.OPTIMAL
        with pytest.raises(SdpError):
            check_certificate(prob, sol)


class TestSdpaExport:
    def test_round_trip_structure(self, tmp_path):
        prob = SdpProblem(
            psd_dims=[2],
            constraints=[
                {"psd": {0: sym_entry(0, 1, 2)}, "nonneg": {0: 2.0}, "free": {0: 3.0}},
            ],
            b=[1.0],
            C_psd=[np.eye(2)],
            nonneg_dim=1,
            free_dim=1,
            c_nonneg=[4.0],
            c_free=[5.0],
        )
        path = tmp_path / "dump.dat-s"
        write_sdpa(prob, str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "1"                       # one constraint
        assert lines[1] == "2"                       # PSD block + diagonal block
        assert lines[2].split() == ["2", "-3"]       # 2x2 PSD, diag of 1 + 2*1
        assert lines[3] == repr(-1.0)
        # entries are "<mat> <block> <i> <j> <value>" with matrix 0 first
        mats = [int(line.split()[0]) for line in lines[4:]]
        assert mats == sorted(mats)

    def test_export_is_deterministic(self, tmp_path):
        prob = toeplitz_problem()
        p1, p2 = tmp_path / "a.dat-s", tmp_path / "b.dat-s"
        write_sdpa(prob, str(p1))
        write_sdpa(prob, str(p2))
        assert p1.read_bytes() == p2.read_bytes()
