"""Dense primal-dual interior-point solver for small semidefinite programs.

Standard form handled here:

    minimize    sum_b <C_b, X_b>  +  c_n . x_n  +  c_f . x_f
    subject to  sum_b <A_ib, X_b> + A_n[i] . x_n + A_f[i] . x_f = b_i
                X_b >= 0 (PSD blocks),  x_n >= 0 (nonneg scalars),
                x_f free.

The algorithm is path following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step.  The Schur complement is factored with a dense
Cholesky, with diagonal regularization 1e-10 escalating tenfold on failure
(three retries).  Free variables are eliminated through the augmented
saddle-point system rather than split into signed parts.

The starting point is cone-interior (identity-scaled blocks); equality
feasibility is attained in the course of the iteration.  Infeasibility and
unboundedness are reported heuristically from iterate divergence (no
homogeneous self-dual embedding).

Everything is dense 64-bit; problems at desk scale (block dims up to ~200)
are the design target.  ``solve`` is deterministic: identical inputs follow
an identical code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.linalg as la


class SdpError(RuntimeError):
    """Raised when a solution with a non-optimal status is used where an
    optimal one is required."""


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"
    NUMERICAL_TROUBLE = "numerical_trouble"


@dataclass
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 200
    # fraction of the step to the cone boundary; adapts upward from this
    # base as the affine steps approach full length
    step_fraction: float = 0.9
    regularization: float = 1e-10
    regularization_retries: int = 3
    divergence_limit: float = 1e8
    verbose: bool = False


class SdpProblem:
    """Block SDP data.  ``constraints`` is one entry per equality row:
    ``{"psd": {block_index: sym matrix}, "nonneg": {j: coeff}, "free": {j: coeff}}``.
    Missing keys mean no coupling with that section.
    """

    def __init__(
        self,
        psd_dims: Sequence[int],
        constraints: Sequence[dict],
        b: Sequence[float],
        C_psd: Sequence[np.ndarray] | None = None,
        nonneg_dim: int = 0,
        free_dim: int = 0,
        c_nonneg: Sequence[float] | None = None,
        c_free: Sequence[float] | None = None,
    ):
        self.psd_dims = [int(d) for d in psd_dims]
        if any(d < 1 for d in self.psd_dims):
            raise ValueError("PSD block dimensions must be positive")
        if not self.psd_dims and nonneg_dim == 0:
            raise ValueError("problem needs at least one conic block")
        self.nonneg_dim = int(nonneg_dim)
        self.free_dim = int(free_dim)
        self.b = np.asarray(b, dtype=float)
        if not np.all(np.isfinite(self.b)):
            raise ValueError("right-hand side must be finite")
        m = len(self.b)
        if len(constraints) != m:
            raise ValueError("constraint count does not match b")
        if self.free_dim > 0 and m == 0:
            raise ValueError("free variables need at least one equality")

        self.C_psd = []
        for k, d in enumerate(self.psd_dims):
            C = np.zeros((d, d)) if C_psd is None else np.asarray(C_psd[k], float)
            self.C_psd.append(_require_symmetric(C, f"C block {k}"))
        self.c_nonneg = (
            np.zeros(self.nonneg_dim)
            if c_nonneg is None
            else np.asarray(c_nonneg, float)
        )
        self.c_free = (
            np.zeros(self.free_dim) if c_free is None else np.asarray(c_free, float)
        )

        # compile into per-block stacks and dense scalar sections
        self._rows_psd: list[np.ndarray] = []
        self._mats_psd: list[np.ndarray] = []
        per_block_rows: list[list[int]] = [[] for _ in self.psd_dims]
        per_block_mats: list[list[np.ndarray]] = [[] for _ in self.psd_dims]
        self.A_nonneg = np.zeros((m, self.nonneg_dim))
        self.A_free = np.zeros((m, self.free_dim))
        for i, con in enumerate(constraints):
            for blk, mat in con.get("psd", {}).items():
                mat = _require_symmetric(
                    np.asarray(mat, float), f"constraint {i} block {blk}"
                )
                if mat.shape != (self.psd_dims[blk],) * 2:
                    raise ValueError(f"constraint {i} block {blk} has wrong shape")
                per_block_rows[blk].append(i)
                per_block_mats[blk].append(mat)
            for j, v in con.get("nonneg", {}).items():
                self.A_nonneg[i, j] = v
            for j, v in con.get("free", {}).items():
                self.A_free[i, j] = v
        for rows, mats, d in zip(per_block_rows, per_block_mats, self.psd_dims):
            self._rows_psd.append(np.array(rows, dtype=int))
            self._mats_psd.append(
                np.array(mats) if mats else np.zeros((0, d, d))
            )

    @property
    def num_constraints(self) -> int:
        return len(self.b)

    # -- operators ----------------------------------------------------------

    def apply_A(self, X, x_nonneg, x_free):
        out = np.zeros(self.num_constraints)
        for rows, mats, Xb in zip(self._rows_psd, self._mats_psd, X):
            if len(rows):
                out[rows] += np.einsum("kij,ij->k", mats, Xb)
        if self.nonneg_dim:
            out += self.A_nonneg @ x_nonneg
        if self.free_dim:
            out += self.A_free @ x_free
        return out

    def apply_At_psd(self, y):
        out = []
        for rows, mats, d in zip(self._rows_psd, self._mats_psd, self.psd_dims):
            if len(rows):
                out.append(np.einsum("kij,k->ij", mats, y[rows]))
            else:
                out.append(np.zeros((d, d)))
        return out

    def data_norm(self) -> float:
        total = sum(float(np.linalg.norm(C) ** 2) for C in self.C_psd)
        total += float(np.linalg.norm(self.c_nonneg) ** 2)
        total += float(np.linalg.norm(self.c_free) ** 2)
        return np.sqrt(total)


@dataclass
class SdpSolution:
    status: SolveStatus
    X: list
    x_nonneg: np.ndarray
    x_free: np.ndarray
    y: np.ndarray
    S: list
    s_nonneg: np.ndarray
    primal_obj: float
    dual_obj: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int
    iterate_log: list = field(default_factory=list)

    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


def _require_symmetric(M: np.ndarray, what: str) -> np.ndarray:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{what}: not square")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{what}: non-finite entries")
    dev = np.abs(M - M.T).max()
    scale = max(1.0, np.abs(M).max())
    if dev > 1e-10 * scale:
        raise ValueError(f"{what}: not symmetric (deviation {dev:.3g})")
    return 0.5 * (M + M.T)


def _sym(M):
    return 0.5 * (M + M.T)


def _chol_with_retries(M, opts):
    """Cholesky with escalating diagonal regularization.  Returns (factor, ok)."""
    scale = max(1.0, float(np.abs(np.diag(M)).max()))
    regs = [0.0] + [
        opts.regularization * 10**k * scale
        for k in range(opts.regularization_retries + 1)
    ]
    for reg in regs:
        try:
            return la.cho_factor(M + reg * np.eye(M.shape[0]), lower=True), True
        except la.LinAlgError:
            continue
    return None, False


def _max_step_psd(X, dX):
    """Largest alpha with X + alpha dX staying PSD (1 if unconstrained)."""
    try:
        L = la.cholesky(X, lower=True)
    except la.LinAlgError:
        # fall back to an eigenvalue floor shift
        w, V = np.linalg.eigh(X)
        L = la.cholesky(V @ np.diag(np.maximum(w, 1e-14)) @ V.T, lower=True)
    Y = la.solve_triangular(L, dX, lower=True)
    Y = la.solve_triangular(L, Y.T, lower=True)
    lam_min = np.linalg.eigvalsh(_sym(Y)).min()
    if lam_min >= 0:
        return np.inf
    return -1.0 / lam_min


def _max_step_nonneg(x, dx):
    mask = dx < 0
    if not mask.any():
        return np.inf
    return float((-x[mask] / dx[mask]).min())


def _equilibrate(problem: SdpProblem):
    """Ruiz-style scaling: rows to unit norm, scalar columns likewise.

    Returns (scaled problem, row scale d, nonneg col scale, free col scale)
    with the correspondence  y = d * y',  x_n = e_n * x_n',  x_f = e_f * x_f';
    the PSD blocks and the objective value are unchanged by the scaling.
    """
    m = problem.num_constraints
    d = np.ones(m)
    e_n = np.ones(problem.nonneg_dim)
    e_f = np.ones(problem.free_dim)

    mats = [stack.copy() for stack in problem._mats_psd]
    A_nn = problem.A_nonneg.copy()
    A_f = problem.A_free.copy()

    for _ in range(3):
        row_norm = np.zeros(m)
        for rows, stack in zip(problem._rows_psd, mats):
            if len(rows):
                np.maximum.at(
                    row_norm, rows, np.abs(stack).max(axis=(1, 2))
                )
        if problem.nonneg_dim:
            row_norm = np.maximum(row_norm, np.abs(A_nn).max(axis=1))
        if problem.free_dim:
            row_norm = np.maximum(row_norm, np.abs(A_f).max(axis=1))
        r = 1.0 / np.sqrt(np.maximum(row_norm, 1e-12))
        d *= r
        for rows, stack in zip(problem._rows_psd, mats):
            if len(rows):
                stack *= r[rows][:, None, None]
        A_nn *= r[:, None]
        A_f *= r[:, None]

        if problem.nonneg_dim:
            cn = 1.0 / np.sqrt(np.maximum(np.abs(A_nn).max(axis=0), 1e-12))
            e_n *= cn
            A_nn *= cn[None, :]
        if problem.free_dim:
            cf = 1.0 / np.sqrt(np.maximum(np.abs(A_f).max(axis=0), 1e-12))
            e_f *= cf
            A_f *= cf[None, :]

    scaled = SdpProblem.__new__(SdpProblem)
    scaled.psd_dims = problem.psd_dims
    scaled.nonneg_dim = problem.nonneg_dim
    scaled.free_dim = problem.free_dim
    scaled.b = problem.b * d
    scaled.C_psd = problem.C_psd
    scaled.c_nonneg = problem.c_nonneg * e_n
    scaled.c_free = problem.c_free * e_f
    scaled._rows_psd = problem._rows_psd
    scaled._mats_psd = mats
    scaled.A_nonneg = A_nn
    scaled.A_free = A_f
    return scaled, d, e_n, e_f


def solve(problem: SdpProblem, opts: SolverOptions | None = None) -> SdpSolution:
    """Equilibrate, run the interior-point iteration, map the solution back.

    Residuals and objectives in the returned solution are recomputed against
    the original (unscaled) data.
    """
    opts = opts or SolverOptions()
    original = problem
    problem, row_scale, nn_scale, free_scale = _equilibrate(problem)
    solution = _solve_scaled(problem, opts)
    solution.y = solution.y * row_scale
    if original.nonneg_dim:
        solution.x_nonneg = solution.x_nonneg * nn_scale
        solution.s_nonneg = solution.s_nonneg / nn_scale
    if original.free_dim:
        solution.x_free = solution.x_free * free_scale

    rp = original.b - original.apply_A(solution.X, solution.x_nonneg, solution.x_free)
    Aty = original.apply_At_psd(solution.y)
    Rd = [C - Sb - At for C, Sb, At in zip(original.C_psd, solution.S, Aty)]
    rd_nn = original.c_nonneg - solution.s_nonneg - original.A_nonneg.T @ solution.y
    rd_f = original.c_free - original.A_free.T @ solution.y
    pobj = sum(float(np.tensordot(C, Xb)) for C, Xb in zip(original.C_psd, solution.X))
    pobj += float(original.c_nonneg @ solution.x_nonneg)
    pobj += float(original.c_free @ solution.x_free)
    dobj = float(original.b @ solution.y)
    solution.primal_obj = pobj
    solution.dual_obj = dobj
    solution.primal_residual = float(
        np.linalg.norm(rp) / (1 + np.linalg.norm(original.b))
    )
    solution.dual_residual = float(
        np.sqrt(
            sum(float(np.linalg.norm(R) ** 2) for R in Rd)
            + float(np.linalg.norm(rd_nn) ** 2)
            + float(np.linalg.norm(rd_f) ** 2)
        )
        / (1 + original.data_norm())
    )
    solution.gap = abs(pobj - dobj) / (1 + max(abs(pobj), abs(dobj)))
    return solution


def _solve_scaled(problem: SdpProblem, opts: SolverOptions) -> SdpSolution:
    m = problem.num_constraints
    dims = problem.psd_dims
    nn = problem.nonneg_dim
    nf = problem.free_dim
    nu = sum(dims) + nn

    # cone-interior start, identity-scaled from the data magnitudes
    bscale = float(np.abs(problem.b).max()) if m else 0.0
    cscale = problem.data_norm()
    xi = max(10.0, np.sqrt(bscale) if bscale > 0 else 0.0, bscale / max(1.0, cscale))
    eta = max(10.0, np.sqrt(cscale) if cscale > 0 else 0.0)
    X = [xi * np.eye(d) for d in dims]
    S = [eta * np.eye(d) for d in dims]
    x_nn = xi * np.ones(nn)
    s_nn = eta * np.ones(nn)
    x_f = np.zeros(nf)
    y = np.zeros(m)

    norm_b = np.linalg.norm(problem.b)
    norm_c = problem.data_norm()
    log = []
    status = SolveStatus.MAX_ITER
    stall = 0
    iteration = 0
    # best iterate seen, by worst-of-three metric; late iterations can lose
    # accuracy once the Schur complement degenerates, so keep the winner
    best_metric = np.inf
    best_point = None

    def objective_pair():
        pobj = sum(float(np.tensordot(C, Xb)) for C, Xb in zip(problem.C_psd, X))
        pobj += float(problem.c_nonneg @ x_nn) + float(problem.c_free @ x_f)
        dobj = float(problem.b @ y)
        return pobj, dobj

    def residuals():
        rp = problem.b - problem.apply_A(X, x_nn, x_f)
        Aty = problem.apply_At_psd(y)
        Rd = [C - Sb - At for C, Sb, At in zip(problem.C_psd, S, Aty)]
        rd_nn = problem.c_nonneg - s_nn - problem.A_nonneg.T @ y
        rd_f = problem.c_free - problem.A_free.T @ y
        return rp, Rd, rd_nn, rd_f

    for iteration in range(1, opts.max_iter + 1):
        rp, Rd, rd_nn, rd_f = residuals()
        gap_inner = sum(float(np.tensordot(Xb, Sb)) for Xb, Sb in zip(X, S))
        gap_inner += float(x_nn @ s_nn)
        mu = gap_inner / max(nu, 1)

        pobj, dobj = objective_pair()
        res_p = np.linalg.norm(rp) / (1 + norm_b)
        res_d = np.sqrt(
            sum(float(np.linalg.norm(R) ** 2) for R in Rd)
            + float(np.linalg.norm(rd_nn) ** 2)
            + float(np.linalg.norm(rd_f) ** 2)
        ) / (1 + norm_c)
        rel_gap = abs(pobj - dobj) / (1 + max(abs(pobj), abs(dobj)))
        log.append(
            {
                "iteration": iteration,
                "primal_obj": pobj,
                "dual_obj": dobj,
                "mu": mu,
                "primal_residual": res_p,
                "dual_residual": res_d,
                "complementarity": gap_inner,
            }
        )
        if opts.verbose:
            print(
                f"  it {iteration:3d}  pobj {pobj:+.9e}  dobj {dobj:+.9e} "
                f" gap {rel_gap:.2e}  rp {res_p:.2e}  rd {res_d:.2e}"
            )

        metric = max(res_p, res_d, rel_gap)
        if metric < best_metric:
            best_metric = metric
            best_point = (
                [Xb.copy() for Xb in X],
                x_nn.copy(),
                x_f.copy(),
                y.copy(),
                [Sb.copy() for Sb in S],
                s_nn.copy(),
            )
        if metric <= opts.tol:
            status = SolveStatus.OPTIMAL
            break

        iterate_norm = max(
            [float(np.abs(Xb).max()) for Xb in X]
            + ([float(np.abs(x_nn).max())] if nn else [])
            + ([float(np.abs(x_f).max())] if nf else [])
            or [0.0]
        )
        if np.abs(y).max(initial=0.0) > opts.divergence_limit:
            status = SolveStatus.INFEASIBLE
            break
        if iterate_norm > opts.divergence_limit:
            status = SolveStatus.UNBOUNDED
            break

        # Nesterov-Todd scaling per block
        try:
            Gs, Ginvs, lams = [], [], []
            for Xb, Sb in zip(X, S):
                Lx = la.cholesky(Xb, lower=True)
                Ls = la.cholesky(Sb, lower=True)
                U, sv, Vt = np.linalg.svd(Ls.T @ Lx)
                sv = np.maximum(sv, 1e-300)
                G = Lx @ (Vt.T / np.sqrt(sv))
                Ginv = (np.sqrt(sv)[:, None] * Vt) @ la.solve_triangular(
                    Lx, np.eye(len(sv)), lower=True
                )
                Gs.append(G)
                Ginvs.append(Ginv)
                lams.append(sv)
        except la.LinAlgError:
            status = SolveStatus.NUMERICAL_TROUBLE
            break
        w_nn = x_nn / s_nn if nn else np.zeros(0)

        # Schur complement M = A W A^T over PSD blocks plus the diagonal part;
        # M_ij = <G' A_i G, G' A_j G>, so one batched congruence per block
        M = np.zeros((m, m))
        for rows, mats, G in zip(problem._rows_psd, problem._mats_psd, Gs):
            if not len(rows):
                continue
            H = np.matmul(np.matmul(G.T, mats), G)
            Hflat = H.reshape(len(rows), -1)
            M[np.ix_(rows, rows)] += Hflat @ Hflat.T
        if nn:
            M += (problem.A_nonneg * w_nn) @ problem.A_nonneg.T
        M = _sym(M)

        factor, ok = _chol_with_retries(M, opts) if m else (None, True)
        if not ok:
            status = SolveStatus.NUMERICAL_TROUBLE
            break

        if nf and m:
            Zf = la.cho_solve(factor, problem.A_free)
            Kf = problem.A_free.T @ Zf
            kf_factor, ok = _chol_with_retries(_sym(Kf), opts)
            if not ok:
                status = SolveStatus.NUMERICAL_TROUBLE
                break

        def aug_solve(h, r2):
            """Solve [[M, A_f], [A_f', 0]] [dy, dx_f] = [h, r2] with refinement.

            The Schur complement turns badly conditioned near the optimum;
            two rounds of residual correction keep the equality residuals
            from drifting back up.
            """
            zh = la.cho_solve(factor, h)
            if nf:
                dx_f = la.cho_solve(kf_factor, problem.A_free.T @ zh - r2)
                dy = zh - Zf @ dx_f
            else:
                dx_f = np.zeros(0)
                dy = zh
            for _ in range(3):
                res1 = h - M @ dy
                if nf:
                    res1 -= problem.A_free @ dx_f
                    res2 = r2 - problem.A_free.T @ dy
                else:
                    res2 = np.zeros(0)
                err = max(
                    np.abs(res1).max(initial=0.0), np.abs(res2).max(initial=0.0)
                )
                if err <= 1e-13 * (1 + np.abs(h).max(initial=0.0)):
                    break
                z1 = la.cho_solve(factor, res1)
                if nf:
                    ddx = la.cho_solve(kf_factor, problem.A_free.T @ z1 - res2)
                    ddy = z1 - Zf @ ddx
                    dx_f = dx_f + ddx
                else:
                    ddy = z1
                dy = dy + ddy
            return dy, dx_f

        def kkt_raw(Rc, rc_nn, rp_t, Rd_t, rdnn_t, rdf_t):
            """One linear solve of the scaled Newton system for given targets."""
            h = rp_t.copy()
            WRW = [
                _sym(G @ (G.T @ R @ G) @ G.T) for G, R in zip(Gs, Rd_t)
            ]
            h -= problem.apply_A(Rc, rc_nn if nn else np.zeros(0), np.zeros(nf))
            h += problem.apply_A(WRW, w_nn * rdnn_t if nn else np.zeros(0), np.zeros(nf))
            if m:
                dy, dx_f = aug_solve(h, rdf_t)
            else:
                dy = np.zeros(0)
                dx_f = np.zeros(0)
            At_dy = problem.apply_At_psd(dy)
            dS = [_sym(R - A) for R, A in zip(Rd_t, At_dy)]
            dX = [
                _sym(Rb - G @ (G.T @ dSb @ G) @ G.T)
                for Rb, dSb, G in zip(Rc, dS, Gs)
            ]
            if nn:
                ds_nn = rdnn_t - problem.A_nonneg.T @ dy
                dx_nn = rc_nn - w_nn * ds_nn
            else:
                ds_nn = np.zeros(0)
                dx_nn = np.zeros(0)
            return dy, dx_f, dX, dS, dx_nn, ds_nn

        def kkt_solve(Rc, rc_nn):
            """Newton solve plus refinement of the full KKT residuals.

            The re-solve reuses the factored Schur complement; evaluating the
            residuals exactly and correcting pushes the step accuracy well
            below the bare factorization's error floor, which otherwise caps
            how far the equality residuals can be driven.
            """
            sol_parts = kkt_raw(Rc, rc_nn, rp, Rd, rd_nn, rd_f)
            for _ in range(2):
                dy, dx_f, dX, dS, dx_nn, ds_nn = sol_parts
                e_rp = rp - problem.apply_A(dX, dx_nn, dx_f)
                At_dy = problem.apply_At_psd(dy)
                e_Rd = [
                    R - (A + dSb) for R, A, dSb in zip(Rd, At_dy, dS)
                ]
                e_rdnn = (
                    rd_nn - (problem.A_nonneg.T @ dy + ds_nn) if nn else np.zeros(0)
                )
                e_rdf = rd_f - problem.A_free.T @ dy if nf else np.zeros(0)
                e_Rc = [
                    Rb - _sym(dXb + G @ (G.T @ dSb @ G) @ G.T)
                    for Rb, dXb, dSb, G in zip(Rc, dX, dS, Gs)
                ]
                e_rc = rc_nn - (dx_nn + w_nn * ds_nn) if nn else np.zeros(0)
                err = max(
                    [np.abs(e_rp).max(initial=0.0)]
                    + [np.abs(E).max(initial=0.0) for E in e_Rd]
                    + [np.abs(E).max(initial=0.0) for E in e_Rc]
                    + [np.abs(e_rdnn).max(initial=0.0)]
                    + [np.abs(e_rdf).max(initial=0.0)]
                    + [np.abs(e_rc).max(initial=0.0)]
                )
                if err <= 1e-14:
                    break
                corr = kkt_raw(e_Rc, e_rc, e_rp, e_Rd, e_rdnn, e_rdf)
                sol_parts = (
                    dy + corr[0],
                    dx_f + corr[1],
                    [a + b for a, b in zip(dX, corr[2])],
                    [a + b for a, b in zip(dS, corr[3])],
                    dx_nn + corr[4],
                    ds_nn + corr[5],
                )
            return sol_parts

        # predictor (affine scaling)
        Rc_aff = [-Xb for Xb in X]
        rc_aff = -x_nn if nn else np.zeros(0)
        dy_a, dxf_a, dX_a, dS_a, dxn_a, dsn_a = kkt_solve(Rc_aff, rc_aff)

        ap_bound = min(
            [1.0]
            + [_max_step_psd(Xb, dXb) for Xb, dXb in zip(X, dX_a)]
            + ([_max_step_nonneg(x_nn, dxn_a)] if nn else [])
        )
        ad_bound = min(
            [1.0]
            + [_max_step_psd(Sb, dSb) for Sb, dSb in zip(S, dS_a)]
            + ([_max_step_nonneg(s_nn, dsn_a)] if nn else [])
        )
        # move closer to the boundary once the affine steps run long
        tau = min(0.995, opts.step_fraction + 0.09 * min(ap_bound, ad_bound))
        ap = min(1.0, tau * ap_bound)
        ad = min(1.0, tau * ad_bound)

        gap_aff = sum(
            float(np.tensordot(Xb + ap * dXb, Sb + ad * dSb))
            for Xb, dXb, Sb, dSb in zip(X, dX_a, S, dS_a)
        )
        if nn:
            gap_aff += float((x_nn + ap * dxn_a) @ (s_nn + ad * dsn_a))
        mu_aff = gap_aff / max(nu, 1)
        sigma = min(1.0, max((mu_aff / mu) ** 3 if mu > 0 else 0.0, 1e-12))

        # corrector with Mehrotra second-order term, assembled in scaled space
        Rc = []
        for G, Ginv, lam, dXb, dSb in zip(Gs, Ginvs, lams, dX_a, dS_a):
            dXhat = Ginv @ dXb @ Ginv.T
            dShat = G.T @ dSb @ G
            E = 0.5 * (dXhat @ dShat + dShat @ dXhat)
            R = sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - E
            denom = 0.5 * (lam[:, None] + lam[None, :])
            Rc.append(_sym(G @ (R / denom) @ G.T))
        rc_nn = (sigma * mu - x_nn * s_nn - dxn_a * dsn_a) / s_nn if nn else np.zeros(0)

        dy, dx_f, dX, dS, dx_nn, ds_nn = kkt_solve(Rc, rc_nn)

        ap = min(
            [1.0]
            + [_max_step_psd(Xb, dXb) for Xb, dXb in zip(X, dX)]
            + ([_max_step_nonneg(x_nn, dx_nn)] if nn else [])
        )
        ad = min(
            [1.0]
            + [_max_step_psd(Sb, dSb) for Sb, dSb in zip(S, dS)]
            + ([_max_step_nonneg(s_nn, ds_nn)] if nn else [])
        )
        ap = min(1.0, tau * ap)
        ad = min(1.0, tau * ad)

        if min(ap, ad) < 1e-10:
            stall += 1
            if stall >= 3:
                status = SolveStatus.NUMERICAL_TROUBLE
                break
        else:
            stall = 0

        X = [_sym(Xb + ap * dXb) for Xb, dXb in zip(X, dX)]
        S = [_sym(Sb + ad * dSb) for Sb, dSb in zip(S, dS)]
        if nn:
            x_nn = x_nn + ap * dx_nn
            s_nn = s_nn + ad * ds_nn
        if nf:
            x_f = x_f + ap * dx_f
        y = y + ad * dy

    if status != SolveStatus.OPTIMAL and best_point is not None:
        # fall back to the best interior point; it may still satisfy the
        # caller's tolerance even though later steps degraded
        X, x_nn, x_f, y, S, s_nn = best_point
        if best_metric <= opts.tol:
            status = SolveStatus.OPTIMAL

    rp, Rd, rd_nn, rd_f = residuals()
    pobj, dobj = objective_pair()
    res_p = np.linalg.norm(rp) / (1 + norm_b)
    res_d = np.sqrt(
        sum(float(np.linalg.norm(R) ** 2) for R in Rd)
        + float(np.linalg.norm(rd_nn) ** 2)
        + float(np.linalg.norm(rd_f) ** 2)
    ) / (1 + norm_c)
    rel_gap = abs(pobj - dobj) / (1 + max(abs(pobj), abs(dobj)))

    return SdpSolution(
        status=status,
        X=X,
        x_nonneg=x_nn,
        x_free=x_f,
        y=y,
        S=S,
        s_nonneg=s_nn,
        primal_obj=pobj,
        dual_obj=dobj,
        primal_residual=res_p,
        dual_residual=res_d,
        gap=rel_gap,
        iterations=iteration,
        iterate_log=log,
    )


# ---------------------------------------------------------------------------
# certificate checking (independent recomputation)


@dataclass
class CertificateReport:
    passed: bool
    min_eigenvalue: float
    block_min_eigenvalues: list
    primal_residual: float
    dual_residual: float
    gap: float
    eig_tolerance: float
    residual_tolerance: float
    reasons: list

    def text(self) -> str:
        lines = [f"certificate: {'pass' if self.passed else 'FAIL'}"]
        lines.append(f"  min eigenvalue  {self.min_eigenvalue:+.3e} (>= -{self.eig_tolerance:.0e})")
        lines.append(f"  primal residual {self.primal_residual:.3e}")
        lines.append(f"  dual residual   {self.dual_residual:.3e}")
        lines.append(f"  relative gap    {self.gap:.3e} (<= {self.residual_tolerance:.0e})")
        for reason in self.reasons:
            lines.append(f"  reason: {reason}")
        return "\n".join(lines)


def check_certificate(
    problem: SdpProblem,
    solution: SdpSolution,
    tol: float = 1e-8,
    eig_tol: float = 1e-7,
) -> CertificateReport:
    """Recompute residuals and block eigenvalues from scratch.

    This deliberately avoids the solver's compiled operators: constraint
    values are reassembled row by row with plain matrix products, so the
    checker fails independently if either the data compilation or the solver
    lied.  Passes iff every block's minimum eigenvalue is >= -eig_tol and all
    residuals (and the relative gap) are <= 10*tol.
    """
    if not solution.is_optimal():
        raise SdpError(f"cannot certify a solution with status {solution.status.value}")

    # row-by-row primal residual
    m = problem.num_constraints
    lhs = np.zeros(m)
    for blk, (rows, mats) in enumerate(zip(problem._rows_psd, problem._mats_psd)):
        Xb = solution.X[blk]
        for row, mat in zip(rows, mats):
            lhs[row] += float(np.sum(mat * Xb))
    for i in range(m):
        lhs[i] += float(np.dot(problem.A_nonneg[i], solution.x_nonneg))
        lhs[i] += float(np.dot(problem.A_free[i], solution.x_free))
    primal_residual = float(
        np.linalg.norm(lhs - problem.b) / (1 + np.linalg.norm(problem.b))
    )

    # dual residual per block
    dual_sq = 0.0
    for blk, (rows, mats) in enumerate(zip(problem._rows_psd, problem._mats_psd)):
        acc = np.zeros_like(problem.C_psd[blk])
        for row, mat in zip(rows, mats):
            acc = acc + solution.y[row] * mat
        dual_sq += float(
            np.linalg.norm(problem.C_psd[blk] - solution.S[blk] - acc) ** 2
        )
    dual_sq += float(
        np.linalg.norm(
            problem.c_nonneg - solution.s_nonneg - problem.A_nonneg.T @ solution.y
        )
        ** 2
    )
    dual_sq += float(
        np.linalg.norm(problem.c_free - problem.A_free.T @ solution.y) ** 2
    )
    dual_residual = float(np.sqrt(dual_sq) / (1 + problem.data_norm()))

    pobj = sum(float(np.sum(C * Xb)) for C, Xb in zip(problem.C_psd, solution.X))
    pobj += float(problem.c_nonneg @ solution.x_nonneg)
    pobj += float(problem.c_free @ solution.x_free)
    dobj = float(problem.b @ solution.y)
    gap = abs(pobj - dobj) / (1 + max(abs(pobj), abs(dobj)))

    block_eigs = [
        float(np.linalg.eigvalsh(0.5 * (Xb + Xb.T)).min()) if Xb.size else 0.0
        for Xb in solution.X
    ]
    if problem.nonneg_dim:
        block_eigs.append(float(solution.x_nonneg.min()))
    min_eig = min(block_eigs) if block_eigs else 0.0

    reasons = []
    if min_eig < -eig_tol:
        reasons.append(f"negative eigenvalue {min_eig:.3e} below -{eig_tol:.0e}")
    limit = 10 * tol
    if primal_residual > limit:
        reasons.append(f"primal residual {primal_residual:.3e} exceeds {limit:.0e}")
    if dual_residual > limit:
        reasons.append(f"dual residual {dual_residual:.3e} exceeds {limit:.0e}")
    if gap > limit:
        reasons.append(f"relative gap {gap:.3e} exceeds {limit:.0e}")

    return CertificateReport(
        passed=not reasons,
        min_eigenvalue=min_eig,
        block_min_eigenvalues=block_eigs,
        primal_residual=primal_residual,
        dual_residual=dual_residual,
        gap=gap,
        eig_tolerance=eig_tol,
        residual_tolerance=limit,
        reasons=reasons,
    )


# ---------------------------------------------------------------------------
# SDPA sparse export


def write_sdpa(problem: SdpProblem, path: str) -> None:
    """Dump the problem in SDPA sparse format (``.dat-s``) for cross-checks.

    Encoding (documented here as the field-ordering contract): the file holds

        minimize (-b)' u   subject to   sum_i u_i (-A_i) - (-C) >= 0

    whose optimal ``u`` equals this problem's dual vector ``y``.  Blocks are
    written in order: every PSD block first, then one diagonal block holding
    the nonneg section followed by two slots (+/-) per free variable, which
    encode the free-variable equalities as opposed inequalities.  Within each
    matrix, entries are emitted for the upper triangle only, sorted by
    (block, row, column); constraint matrices are emitted in constraint
    order after the objective matrix 0.
    """
    dims = problem.psd_dims
    m = problem.num_constraints
    diag_dim = problem.nonneg_dim + 2 * problem.free_dim
    nblocks = len(dims) + (1 if diag_dim else 0)

    def diag_entries(vec_nonneg, vec_free):
        # diagonal block layout: nonneg scalars, then (+,-) pair per free var
        out = {}
        for j, v in enumerate(vec_nonneg):
            if v != 0.0:
                out[j] = v
        for j, v in enumerate(vec_free):
            if v != 0.0:
                out[problem.nonneg_dim + 2 * j] = v
                out[problem.nonneg_dim + 2 * j + 1] = -v
        return out

    lines = [f"{m}", f"{nblocks}"]
    struct = [str(d) for d in dims] + ([f"-{diag_dim}"] if diag_dim else [])
    lines.append(" ".join(struct))
    lines.append(" ".join(repr(-float(v)) for v in problem.b))

    def emit(mat_no, blk_no, mat):
        rows, cols = np.nonzero(np.triu(mat))
        for i, j in zip(rows, cols):
            lines.append(f"{mat_no} {blk_no} {i + 1} {j + 1} {repr(float(mat[i, j]))}")

    # matrix 0 is F_0 = -C
    for blk, C in enumerate(problem.C_psd):
        emit(0, blk + 1, -C)
    if diag_dim:
        for j, v in diag_entries(problem.c_nonneg, problem.c_free).items():
            lines.append(f"0 {nblocks} {j + 1} {j + 1} {repr(-float(v))}")

    # matrix i is F_i = -A_i
    for i in range(m):
        for blk, (rows, mats) in enumerate(zip(problem._rows_psd, problem._mats_psd)):
            where = np.nonzero(rows == i)[0]
            for k in where:
                emit(i + 1, blk + 1, -mats[k])
        if diag_dim:
            for j, v in diag_entries(problem.A_nonneg[i], problem.A_free[i]).items():
                lines.append(f"{i + 1} {nblocks} {j + 1} {j + 1} {repr(-float(v))}")

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
