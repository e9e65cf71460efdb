"""Sum-of-squares program IR and its Gram-matrix lowering.

A program owns polynomial unknowns (:class:`PolyVar`) and constraints that
assert an affine combination of known polynomials and unknowns is a sum of
squares.  Lowering produces a block SDP:

- every *decision* unknown contributes one free scalar per basis monomial;
- every *multiplier* unknown is parameterised directly by its own Gram
  block (PSD matrix), so "the multiplier is SOS" costs nothing extra;
- every constraint gets a Gram block over the monomial basis of half its
  matching degree, plus one linear equality per monomial of the matching
  degree, equating the expression coefficient with the Gram coefficient.

The matching degree of a constraint is the smallest even integer covering
every term, so mixed-degree data never inflates block sizes.  Pointwise
bounds ``v(point) <= bound`` lower to a nonnegative slack scalar each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .polyalg import (
    Monomial,
    Polynomial,
    embed,
    monomial_basis,
)
from .sdp import SdpProblem, SdpSolution

MULTIPLIER = "multiplier"
DECISION = "decision"


class FormulationError(ValueError):
    """Raised when a program cannot be lowered as stated."""


@dataclass(frozen=True)
class PolyVar:
    name: str
    num_vars: int
    degree: int
    role: str = DECISION

    def __post_init__(self):
        if self.degree < 0:
            raise FormulationError(f"{self.name}: degree must be >= 0")
        if self.role not in (DECISION, MULTIPLIER):
            raise FormulationError(f"{self.name}: unknown role {self.role!r}")
        if self.role == MULTIPLIER and self.degree % 2:
            raise FormulationError(
                f"{self.name}: multiplier degree must be even, got {self.degree}"
            )

    def basis(self) -> list[Monomial]:
        return monomial_basis(self.num_vars, self.degree)


@dataclass(frozen=True)
class Term:
    """One summand ``coeff * known * var``; either factor may be absent."""

    coeff: float = 1.0
    known: Polynomial | None = None
    var: PolyVar | None = None

    def degree(self) -> int:
        deg = 0
        if self.known is not None:
            deg += self.known.degree()
        if self.var is not None:
            deg += self.var.degree
        return deg


@dataclass(frozen=True)
class SosConstraint:
    name: str
    num_vars: int
    terms: tuple
    matching_degree: int | None = None  # override; must be even and large enough

    def __post_init__(self):
        if not self.terms:
            raise FormulationError(f"{self.name}: empty constraint")
        for t in self.terms:
            if t.known is None and t.var is None:
                raise FormulationError(f"{self.name}: term with neither factor")
            if t.known is not None and t.known.num_vars != self.num_vars:
                raise FormulationError(
                    f"{self.name}: known polynomial lives in {t.known.num_vars} "
                    f"variables, constraint in {self.num_vars}"
                )
            if t.var is not None and t.var.num_vars > self.num_vars:
                raise FormulationError(
                    f"{self.name}: unknown {t.var.name} has more variables than "
                    "the constraint"
                )

    def resolved_matching_degree(self) -> int:
        needed = max(t.degree() for t in self.terms)
        auto = needed + (needed % 2)
        if self.matching_degree is None:
            return auto
        if self.matching_degree % 2:
            raise FormulationError(
                f"{self.name}: matching degree {self.matching_degree} is odd"
            )
        if self.matching_degree < needed:
            raise FormulationError(
                f"{self.name}: matching degree {self.matching_degree} below "
                f"term degree {needed}"
            )
        return self.matching_degree


@dataclass(frozen=True)
class PointBound:
    """Linear constraint ``var(point) <= bound`` on a decision unknown."""

    var: PolyVar
    point: tuple
    bound: float


@dataclass
class SosProgram:
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    point_bounds: list = field(default_factory=list)
    # objective: list of (var_name, monomial, weight)
    objective: list = field(default_factory=list)
    sense: str = "min"

    def add_var(self, var: PolyVar) -> PolyVar:
        if any(v.name == var.name for v in self.variables):
            raise FormulationError(f"duplicate unknown {var.name}")
        self.variables.append(var)
        return var

    def var(self, name: str) -> PolyVar:
        for v in self.variables:
            if v.name == name:
                return v
        raise FormulationError(f"unknown variable {name}")

    def add_constraint(self, constraint: SosConstraint) -> None:
        declared = {v.name for v in self.variables}
        for t in constraint.terms:
            if t.var is not None and t.var.name not in declared:
                raise FormulationError(
                    f"{constraint.name}: references undeclared unknown {t.var.name}"
                )
        self.constraints.append(constraint)

    def add_point_bound(self, var: PolyVar, point, bound: float) -> None:
        if var.role != DECISION:
            raise FormulationError("point bounds apply to decision unknowns")
        self.point_bounds.append(PointBound(var, tuple(float(v) for v in point), bound))

    def validate(self) -> None:
        if self.sense not in ("min", "max"):
            raise FormulationError(f"objective sense {self.sense!r}")
        decisions = {v.name for v in self.variables if v.role == DECISION}
        for name, mono, _weight in self.objective:
            if name not in decisions:
                raise FormulationError(
                    f"objective references {name}, which is not a decision unknown"
                )
            var = self.var(name)
            if len(mono) != var.num_vars or sum(mono) > var.degree:
                raise FormulationError(
                    f"objective monomial {mono} outside the basis of {name}"
                )


def _render_basis(basis) -> str:
    """Monomial basis as a compact product string, e.g. 1 x2 x1 x1*x2."""
    out = []
    for mono in basis:
        factors = [
            f"x{k + 1}" + (f"^{e}" if e > 1 else "")
            for k, e in enumerate(mono)
            if e > 0
        ]
        out.append("*".join(factors) if factors else "1")
    return "[" + " ".join(out) + "]"


@dataclass
class ConstraintShape:
    name: str
    gram_dim: int
    gram_basis: list
    equalities: int


@dataclass
class ShapeReport:
    constraints: list
    multipliers: list  # (name, gram_dim, gram basis)
    psd_dims: list
    num_equalities: int
    num_free: int
    num_nonneg: int

    def text(self, with_bases: bool = True) -> str:
        lines = ["lowering shape:"]
        for shape in self.constraints:
            lines.append(
                f"  constraint {shape.name}: Gram {shape.gram_dim}x{shape.gram_dim}, "
                f"{shape.equalities} equalities"
            )
            if with_bases:
                lines.append(f"    basis {_render_basis(shape.gram_basis)}")
        for name, dim, basis in self.multipliers:
            lines.append(f"  multiplier {name}: Gram {dim}x{dim}")
            if with_bases:
                lines.append(f"    basis {_render_basis(basis)}")
        lines.append(
            f"  totals: {self.num_equalities} equalities, "
            f"{self.num_free} free scalars, {self.num_nonneg} nonneg scalars, "
            f"PSD dims {self.psd_dims}"
        )
        return "\n".join(lines)


@dataclass
class IndexMap:
    program: SosProgram
    decision_index: dict  # name -> {monomial: free index}
    multiplier_block: dict  # name -> (block index, basis)
    constraint_block: list  # (block index, basis, row indices, row monomials)
    objective_sign: float
    shape: ShapeReport


def _pair_sums(basis: Sequence[Monomial]):
    """Map gamma -> list of ordered index pairs (i, j) with z_i + z_j = gamma."""
    out: dict[Monomial, list[tuple[int, int]]] = {}
    for i, zi in enumerate(basis):
        for j, zj in enumerate(basis):
            gamma = tuple(a + b for a, b in zip(zi, zj))
            out.setdefault(gamma, []).append((i, j))
    return out


def lower(program: SosProgram) -> tuple[SdpProblem, IndexMap]:
    """Lower the program to a block SDP in standard (minimisation) form."""
    program.validate()

    # free scalars: coefficients of decision unknowns, in declaration order
    decision_index: dict[str, dict[Monomial, int]] = {}
    free_count = 0
    for var in program.variables:
        if var.role != DECISION:
            continue
        index = {}
        for mono in var.basis():
            index[mono] = free_count
            free_count += 1
        decision_index[var.name] = index

    # PSD blocks: multipliers first (declaration order), then constraints
    psd_dims: list[int] = []
    multiplier_block: dict[str, tuple[int, list[Monomial]]] = {}
    for var in program.variables:
        if var.role != MULTIPLIER:
            continue
        basis = monomial_basis(var.num_vars, var.degree // 2)
        multiplier_block[var.name] = (len(psd_dims), basis)
        psd_dims.append(len(basis))

    constraint_meta = []
    for con in program.constraints:
        two_k = con.resolved_matching_degree()
        basis = monomial_basis(con.num_vars, two_k // 2)
        constraint_meta.append((len(psd_dims), basis, two_k))
        psd_dims.append(len(basis))

    rows: list[dict] = []
    b: list[float] = []
    constraint_block = []
    shapes = []
    for con, (blk, basis, two_k) in zip(program.constraints, constraint_meta):
        row_monos = monomial_basis(con.num_vars, two_k)
        gamma_rows = {mono: len(rows) + k for k, mono in enumerate(row_monos)}
        per_row: list[dict] = [
            {"psd": {}, "free": {}} for _ in row_monos
        ]
        per_row_b = [0.0] * len(row_monos)

        # Gram side: <E_gamma, G> with E built from ordered basis pairs
        gram_dim = len(basis)
        for gamma, pairs in _pair_sums(basis).items():
            E = np.zeros((gram_dim, gram_dim))
            for i, j in pairs:
                E[i, j] += 1.0
            per_row[row_monos.index(gamma)]["psd"][blk] = E

        # expression side, negated onto the left-hand side
        for term in con.terms:
            known = term.known
            if known is None:
                known = Polynomial.constant(1.0, con.num_vars)
            elif known.num_vars != con.num_vars:
                known = embed(known, con.num_vars)
            if term.var is None:
                # pure known polynomial: constants move to the right-hand side
                for mono, coeff in known.terms.items():
                    per_row_b[row_monos.index(mono)] += term.coeff * coeff
            elif term.var.role == DECISION:
                vindex = decision_index[term.var.name]
                pad = (0,) * (con.num_vars - term.var.num_vars)
                for nu, col in vindex.items():
                    nu_l = nu + pad
                    for mono, coeff in known.terms.items():
                        gamma = tuple(a + c for a, c in zip(mono, nu_l))
                        entry = per_row[row_monos.index(gamma)]["free"]
                        entry[col] = entry.get(col, 0.0) - term.coeff * coeff
            else:
                mblk, mbasis = multiplier_block[term.var.name]
                if term.var.num_vars != con.num_vars:
                    raise FormulationError(
                        f"{con.name}: multiplier {term.var.name} must live in the "
                        "constraint's variables"
                    )
                mdim = len(mbasis)
                Ks: dict[Monomial, np.ndarray] = {}
                for gamma_s, pairs in _pair_sums(mbasis).items():
                    for mono, coeff in known.terms.items():
                        gamma = tuple(a + c for a, c in zip(mono, gamma_s))
                        K = Ks.setdefault(gamma, np.zeros((mdim, mdim)))
                        for i, j in pairs:
                            K[i, j] -= term.coeff * coeff
                for gamma, K in Ks.items():
                    entry = per_row[row_monos.index(gamma)]["psd"]
                    if mblk in entry:
                        entry[mblk] = entry[mblk] + K
                    else:
                        entry[mblk] = K

        rows.extend(per_row)
        b.extend(per_row_b)
        constraint_block.append(
            (blk, basis, [gamma_rows[m] for m in row_monos], row_monos)
        )
        shapes.append(
            ConstraintShape(
                name=con.name,
                gram_dim=gram_dim,
                gram_basis=list(basis),
                equalities=len(row_monos),
            )
        )

    # pointwise bounds -> equality with a nonneg slack
    nonneg_count = 0
    for pb in program.point_bounds:
        vindex = decision_index[pb.var.name]
        if len(pb.point) != pb.var.num_vars:
            raise FormulationError(
                f"point bound on {pb.var.name}: point has {len(pb.point)} "
                f"coordinates, expected {pb.var.num_vars}"
            )
        row = {"psd": {}, "free": {}, "nonneg": {nonneg_count: 1.0}}
        for nu, col in vindex.items():
            val = 1.0
            for coord, e in zip(pb.point, nu):
                if e:
                    val *= coord**e
            if val != 0.0:
                row["free"][col] = row["free"].get(col, 0.0) + val
        rows.append(row)
        b.append(pb.bound)
        nonneg_count += 1

    sign = 1.0 if program.sense == "min" else -1.0
    c_free = np.zeros(free_count)
    for name, mono, weight in program.objective:
        c_free[decision_index[name][tuple(mono)]] += sign * weight

    shape = ShapeReport(
        constraints=shapes,
        multipliers=[
            (name, len(basis), list(basis))
            for name, (_, basis) in multiplier_block.items()
        ],
        psd_dims=list(psd_dims),
        num_equalities=len(rows),
        num_free=free_count,
        num_nonneg=nonneg_count,
    )

    problem = SdpProblem(
        psd_dims=psd_dims,
        constraints=rows,
        b=b,
        nonneg_dim=nonneg_count,
        free_dim=free_count,
        c_free=c_free,
    )
    index_map = IndexMap(
        program=program,
        decision_index=decision_index,
        multiplier_block=multiplier_block,
        constraint_block=constraint_block,
        objective_sign=sign,
        shape=shape,
    )
    return problem, index_map


def gram_polynomial(G: np.ndarray, basis: Sequence[Monomial], num_vars: int) -> Polynomial:
    """Expand z(x)' G z(x) into a polynomial."""
    terms: dict[Monomial, float] = {}
    for i, zi in enumerate(basis):
        for j, zj in enumerate(basis):
            mono = tuple(a + c for a, c in zip(zi, zj))
            terms[mono] = terms.get(mono, 0.0) + float(G[i, j])
    return Polynomial(num_vars, terms)


@dataclass
class Reconstruction:
    polynomials: dict  # name -> Polynomial (decision and multiplier unknowns)
    objective_value: float
    constraint_residuals: dict  # constraint name -> coefficient residual inf-norm

    def max_residual(self) -> float:
        if not self.constraint_residuals:
            return 0.0
        return max(self.constraint_residuals.values())


def reconstruct(solution: SdpSolution, index_map: IndexMap) -> Reconstruction:
    """Assemble polynomials from a solved SDP and report per-constraint residuals.

    Residual of a constraint is the inf-norm difference between the
    expression's coefficients (all unknowns substituted) and its Gram block's
    coefficients.  Raises :class:`sublevelset.sdp.SdpError` via the status
    check when the solution is not optimal.
    """
    from .sdp import SdpError

    if not solution.is_optimal():
        raise SdpError(
            f"cannot reconstruct from solver status {solution.status.value}"
        )
    program = index_map.program

    values: dict[str, Polynomial] = {}
    for var in program.variables:
        if var.role == DECISION:
            coeffs = {
                mono: float(solution.x_free[col])
                for mono, col in index_map.decision_index[var.name].items()
            }
            values[var.name] = Polynomial(var.num_vars, coeffs)
        else:
            blk, basis = index_map.multiplier_block[var.name]
            values[var.name] = gram_polynomial(solution.X[blk], basis, var.num_vars)

    residuals = {}
    for con, (blk, basis, _rows, _monos) in zip(
        program.constraints, index_map.constraint_block
    ):
        expr = constraint_expression(con, values)
        gram = gram_polynomial(solution.X[blk], basis, con.num_vars)
        diff = expr - gram
        residuals[con.name] = max(
            (abs(c) for c in diff.terms.values()), default=0.0
        )

    objective_value = index_map.objective_sign * solution.primal_obj
    return Reconstruction(
        polynomials=values,
        objective_value=objective_value,
        constraint_residuals=residuals,
    )


def constraint_expression(
    constraint: SosConstraint, values: Mapping[str, Polynomial]
) -> Polynomial:
    """Substitute solved unknowns into the constraint's expression."""
    total = Polynomial.zero(constraint.num_vars)
    for term in constraint.terms:
        part = Polynomial.constant(term.coeff, constraint.num_vars)
        if term.known is not None:
            known = term.known
            if known.num_vars != constraint.num_vars:
                known = embed(known, constraint.num_vars)
            part = part * known
        if term.var is not None:
            val = values[term.var.name]
            if val.num_vars != constraint.num_vars:
                val = embed(val, constraint.num_vars)
            part = part * val
        total = total + part
    return total
