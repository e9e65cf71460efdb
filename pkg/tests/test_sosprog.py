import numpy as np
import pytest

from sublevelset.moments import Box, Domain, integral_functional
from sublevelset.polyalg import Polynomial, monomial_basis
from sublevelset.sdp import SdpError, SolverOptions, check_certificate, solve
from sublevelset.sosprog import (
    DECISION,
    MULTIPLIER,
    FormulationError,
    PolyVar,
    SosConstraint,
    SosProgram,
    Term,
    constraint_expression,
    gram_polynomial,
    lower,
    reconstruct,
)


def ball_poly(r, n):
    terms = {(0,) * n: r * r}
    for k in range(n):
        mono = tuple(2 if j == k else 0 for j in range(n))
        terms[mono] = -1.0
    return Polynomial(n, terms)


def disk_poly(offset):
    return Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -offset})


class TestFeasibility:
    def test_perfect_square_is_sos(self):
        # x^2 - 2x + 1 = (x - 1)^2; unique Gram [[1,-1],[-1,1]]
        square = Polynomial(1, {(2,): 1.0, (1,): -2.0, (0,): 1.0})
        prog = SosProgram()
        prog.add_constraint(
            SosConstraint("square", 1, (Term(known=square),))
        )
        problem, index_map = lower(prog)
        sol = solve(problem)
        assert sol.is_optimal()
        assert sol.gap <= 1e-8
        blk, basis, _, _ = index_map.constraint_block[0]
        assert basis == [(0,), (1,)]
        assert sol.X[blk] == pytest.approx(np.array([[1.0, -1.0], [-1.0, 1.0]]), abs=1e-7)
        recon = reconstruct(sol, index_map)
        assert recon.max_residual() <= 1e-8

    def test_minimal_constant_shift(self):
        # x^2 + c is SOS iff c >= 0; minimizing c gives 0
        prog = SosProgram()
        c = prog.add_var(PolyVar("c", 1, 0, DECISION))
        xsq = Polynomial(1, {(2,): 1.0})
        prog.add_constraint(
            SosConstraint("shifted", 1, (Term(known=xsq), Term(var=c)))
        )
        prog.objective = [("c", (0,), 1.0)]
        prog.sense = "min"
        problem, index_map = lower(prog)
        sol = solve(problem)
        assert sol.is_optimal()
        recon = reconstruct(sol, index_map)
        assert recon.polynomials["c"].coefficient((0,)) == pytest.approx(0.0, abs=1e-6)


def single_disk_volume_program(degree=2, radius=1.0):
    """min integral of J over the box, J - g - s*(r^2 - |x|^2) SOS."""
    g = disk_poly(0.0625)
    dom = Domain(radius, Box((-0.7, -0.7), (0.7, 0.7)))
    prog = SosProgram()
    J = prog.add_var(PolyVar("J", 2, degree, DECISION))
    s = prog.add_var(PolyVar("s", 2, max(0, degree - 2), MULTIPLIER))
    prog.add_constraint(
        SosConstraint(
            "dominates_g",
            2,
            (
                Term(var=J),
                Term(coeff=-1.0, known=g),
                Term(coeff=-1.0, known=ball_poly(radius, 2), var=s),
            ),
        )
    )
    basis = monomial_basis(2, degree)
    weights = integral_functional(basis, dom)
    prog.objective = [("J", mono, w) for mono, w in zip(basis, weights)]
    prog.sense = "min"
    return prog, g, dom


class TestSingleDiskLowering:
    def test_shape_report(self):
        prog, _, _ = single_disk_volume_program()
        problem, index_map = lower(prog)
        shape = index_map.shape
        # multiplier Gram comes first, then the constraint Gram
        assert shape.psd_dims == [1, 3]
        assert shape.constraints[0].gram_dim == 3
        assert shape.constraints[0].equalities == 6
        assert shape.num_free == 6
        assert "Gram 3x3" in shape.text()

    def test_solution_recovers_g(self):
        prog, g, _ = single_disk_volume_program()
        problem, index_map = lower(prog)
        sol = solve(problem)
        assert sol.is_optimal()
        recon = reconstruct(sol, index_map)
        J = recon.polynomials["J"]
        for mono in monomial_basis(2, 2):
            assert J.coefficient(mono) == pytest.approx(
                g.coefficient(mono), abs=1e-4
            ), mono
        assert recon.max_residual() <= 1e-7

    def test_certificate_and_nonnegativity_round_trip(self):
        prog, _, dom = single_disk_volume_program()
        problem, index_map = lower(prog)
        sol = solve(problem)
        report = check_certificate(problem, sol)
        assert report.passed
        assert report.min_eigenvalue >= -1e-7

        recon = reconstruct(sol, index_map)
        rng = np.random.default_rng(3)
        # SOS expressions evaluate nonnegatively anywhere, sampled in the ball
        pts = rng.normal(size=(100, 2))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        pts *= dom.ball_radius * rng.uniform(0, 1, size=(100, 1))
        for con in prog.constraints:
            expr = constraint_expression(con, recon.polynomials)
            vals = expr.eval_many(pts)
            assert vals.min() >= -1e-6

    def test_objective_equals_integral_of_g(self):
        prog, g, dom = single_disk_volume_program()
        problem, index_map = lower(prog)
        sol = solve(problem)
        recon = reconstruct(sol, index_map)
        basis = monomial_basis(2, 2)
        weights = integral_functional(basis, dom)
        expected = sum(w * g.coefficient(m) for m, w in zip(basis, weights))
        assert recon.objective_value == pytest.approx(expected, abs=1e-6)


class TestPointBounds:
    def test_point_bound_forces_value(self):
        # min c with c >= x^2 template and c(pt) <= -1 infeasible-free check:
        # use J of degree 2 in one variable with J(0.5) <= -1 and J SOS-bounded above
        prog = SosProgram()
        J = prog.add_var(PolyVar("J", 1, 2, DECISION))
        one = Polynomial.constant(1.0, 1)
        s = prog.add_var(PolyVar("s", 1, 0, MULTIPLIER))
        r2 = ball_poly(1.0, 1)
        prog.add_constraint(
            SosConstraint(
                "below_one",
                1,
                (Term(known=one), Term(coeff=-1.0, var=J), Term(coeff=-1.0, known=r2, var=s)),
            )
        )
        prog.add_point_bound(J, (0.5,), -1.0)
        basis = monomial_basis(1, 2)
        dom = Domain(1.0, Box((-0.9,), (0.9,)))
        weights = integral_functional(basis, dom)
        prog.objective = [("J", m, w) for m, w in zip(basis, weights)]
        prog.sense = "max"
        problem, index_map = lower(prog)
        assert problem.nonneg_dim == 1
        sol = solve(problem)
        assert sol.is_optimal()
        recon = reconstruct(sol, index_map)
        J_poly = recon.polynomials["J"]
        assert J_poly((0.5,)) <= -1.0 + 1e-7
        # J <= 1 on the interval
        xs = np.linspace(-1, 1, 101)[:, None]
        assert J_poly.eval_many(xs).max() <= 1 + 1e-6


class TestFormulationErrors:
    def test_empty_constraint(self):
        with pytest.raises(FormulationError):
            SosConstraint("empty", 2, ())

    def test_odd_matching_degree(self):
        g = disk_poly(1.0)
        con = SosConstraint("odd", 2, (Term(known=g),), matching_degree=3)
        with pytest.raises(FormulationError):
            con.resolved_matching_degree()

    def test_matching_degree_below_terms(self):
        g = Polynomial(2, {(4, 0): 1.0})
        con = SosConstraint("low", 2, (Term(known=g),), matching_degree=2)
        with pytest.raises(FormulationError):
            con.resolved_matching_degree()

    def test_objective_must_reference_decision(self):
        prog = SosProgram()
        s = prog.add_var(PolyVar("s", 1, 2, MULTIPLIER))
        prog.add_constraint(SosConstraint("c", 1, (Term(var=s),)))
        prog.objective = [("s", (0,), 1.0)]
        with pytest.raises(FormulationError):
            lower(prog)

    def test_duplicate_variable(self):
        prog = SosProgram()
        prog.add_var(PolyVar("J", 1, 2))
        with pytest.raises(FormulationError):
            prog.add_var(PolyVar("J", 1, 4))

    def test_reconstruct_requires_optimal(self):
        prog, _, _ = single_disk_volume_program()
        problem, index_map = lower(prog)
        sol = solve(problem, SolverOptions(max_iter=1))
        with pytest.raises(SdpError):
            reconstruct(sol, index_map)


class TestGramPolynomial:
    def test_expansion_matches_quadratic_form(self):
        basis = monomial_basis(2, 1)
        rng = np.random.default_rng(5)
        G = rng.normal(size=(3, 3))
        G = 0.5 * (G + G.T)
        poly = gram_polynomial(G, basis, 2)
        for pt in rng.normal(size=(10, 2)):
            z = np.array([1.0, pt[1], pt[0]])
            assert poly(tuple(pt)) == pytest.approx(z @ G @ z, rel=1e-12, abs=1e-12)
