"""Sparse multivariate polynomial arithmetic.

Polynomials are stored as a map from exponent tuples to float coefficients.
Monomials are plain tuples of non-negative integers, one entry per variable,
and are ordered graded-lexicographically everywhere: first by total degree,
then by comparing the exponent tuple left to right.  Zero coefficients are
never stored (pruning threshold is exactly 0; numerical tolerances belong to
certificate checking, not to the algebra).

The variable convention for lifted polynomials is: indices ``0..n-1`` are the
state variables x, indices ``n..2n-1`` are the shift variables w.
"""

from __future__ import annotations

import math
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]

# shift_compose rejects anything above this total degree; binomial expansion of
# higher degrees would overflow exponent bookkeeping long before it is useful.
MAX_SHIFT_DEGREE = 64


class PolynomialError(ValueError):
    """Raised on dimension mismatches or malformed polynomial data."""


def grlex_key(m: Monomial) -> tuple[int, Monomial]:
    """Sort key realising the graded-lexicographic order."""
    return (sum(m), m)


def monomial_degree(m: Monomial) -> int:
    return sum(m)


def monomial_basis(num_vars: int, degree: int) -> list[Monomial]:
    """All monomials in ``num_vars`` variables of total degree <= ``degree``.

    Returned in graded-lex order; the count is C(num_vars + degree, degree).
    """
    if num_vars < 1:
        raise PolynomialError(f"need at least one variable, got {num_vars}")
    if degree < 0:
        raise PolynomialError(f"degree must be >= 0, got {degree}")
    basis: list[Monomial] = []
    for total in range(degree + 1):
        level = [m for m in _compositions(total, num_vars)]
        level.sort()
        basis.extend(level)
    return basis


def _compositions(total: int, parts: int) -> Iterable[Monomial]:
    # All ways of writing `total` as an ordered sum of `parts` non-negatives.
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


class Polynomial:
    """Immutable sparse polynomial over ``num_vars`` real variables.

    All operations are pure and return new instances; instances are safe to
    share across threads.
    """

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Mapping[Monomial, float] | None = None):
        if num_vars < 1:
            raise PolynomialError(f"need at least one variable, got {num_vars}")
        clean: dict[Monomial, float] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != num_vars:
                raise PolynomialError(
                    f"monomial {mono} has {len(mono)} exponents, expected {num_vars}"
                )
            if any(e < 0 for e in mono):
                raise PolynomialError(f"negative exponent in monomial {mono}")
            coeff = float(coeff)
            if coeff != 0.0:
                clean[mono] = clean.get(mono, 0.0) + coeff
                if clean[mono] == 0.0:
                    del clean[mono]
        object.__setattr__(self, "num_vars", num_vars)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(num_vars: int) -> "Polynomial":
        return Polynomial(num_vars, {})

    @staticmethod
    def constant(value: float, num_vars: int) -> "Polynomial":
        return Polynomial(num_vars, {(0,) * num_vars: value})

    @staticmethod
    def variable(index: int, num_vars: int) -> "Polynomial":
        if not 0 <= index < num_vars:
            raise PolynomialError(f"variable index {index} out of range for n={num_vars}")
        mono = tuple(1 if k == index else 0 for k in range(num_vars))
        return Polynomial(num_vars, {mono: 1.0})

    @staticmethod
    def from_pairs(pairs: Sequence[Sequence], num_vars: int) -> "Polynomial":
        """Build from the text form: a list of ``[[e1,...,en], coeff]`` pairs."""
        terms: dict[Monomial, float] = {}
        for pair in pairs:
            if len(pair) != 2:
                raise PolynomialError(f"expected [exponents, coeff] pair, got {pair!r}")
            expo, coeff = pair
            mono = tuple(int(e) for e in expo)
            terms[mono] = terms.get(mono, 0.0) + float(coeff)
        return Polynomial(num_vars, terms)

    def to_pairs(self) -> list[list]:
        """Text form used by spec files, in graded-lex order. Exact round-trip."""
        return [[list(m), self.terms[m]] for m in self.monomials()]

    # -- queries ------------------------------------------------------------

    def monomials(self) -> list[Monomial]:
        return sorted(self.terms, key=grlex_key)

    def degree(self) -> int:
        """Max total degree over stored terms; 0 for the zero polynomial."""
        if not self.terms:
            return 0
        return max(sum(m) for m in self.terms)

    def coefficient(self, mono: Monomial) -> float:
        return self.terms.get(tuple(mono), 0.0)

    def is_zero(self) -> bool:
        return not self.terms

    # -- arithmetic ---------------------------------------------------------

    def _check_same_vars(self, other: "Polynomial") -> None:
        if self.num_vars != other.num_vars:
            raise PolynomialError(
                f"variable count mismatch: {self.num_vars} vs {other.num_vars}"
            )

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_same_vars(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            terms[mono] = terms.get(mono, 0.0) + coeff
        return Polynomial(self.num_vars, terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.num_vars, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._check_same_vars(other)
        terms: dict[Monomial, float] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = tuple(ea + eb for ea, eb in zip(ma, mb))
                terms[mono] = terms.get(mono, 0.0) + ca * cb
        return Polynomial(self.num_vars, terms)

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self.num_vars, {m: factor * c for m, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.num_vars == other.num_vars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x: Sequence[float]) -> float:
        return evaluate(self, x)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at a batch of points, shape (k, num_vars) -> (k,).

        Plain (non-compensated) summation; meant for grid sweeps where the
        per-point compensation of :func:`evaluate` would dominate runtime.
        """
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[1] != self.num_vars:
            raise PolynomialError(
                f"points have {points.shape[1]} coordinates, expected {self.num_vars}"
            )
        out = np.zeros(points.shape[0])
        for mono in self.monomials():
            term = np.full(points.shape[0], self.terms[mono])
            for k, e in enumerate(mono):
                if e:
                    term *= points[:, k] ** e
            out += term
        return out

    def __repr__(self) -> str:
        if not self.terms:
            return f"Polynomial(n={self.num_vars}, 0)"
        bits = []
        for mono in self.monomials():
            factors = [
                f"x{k + 1}" + (f"^{e}" if e > 1 else "")
                for k, e in enumerate(mono)
                if e > 0
            ]
            body = "*".join(factors) if factors else "1"
            bits.append(f"{self.terms[mono]:+g}*{body}")
        return f"Polynomial(n={self.num_vars}, {' '.join(bits)})"


def evaluate(p: Polynomial, x: Sequence[float]) -> float:
    """Evaluate ``p`` at ``x`` with Kahan-compensated summation in grlex order."""
    if len(x) != p.num_vars:
        raise PolynomialError(f"point has {len(x)} coordinates, expected {p.num_vars}")
    total = 0.0
    comp = 0.0
    for mono in p.monomials():
        term = p.terms[mono]
        for k, e in enumerate(mono):
            if e:
                term *= x[k] ** e
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def shift_compose(g: Polynomial, sign: str) -> Polynomial:
    """Expand ``g(x - w)`` (sign="minus") or ``g(x + w)`` (sign="plus").

    The input lives in n variables; the result lives in 2n variables ordered
    (x_1..x_n, w_1..w_n).  Expansion is exact binomial arithmetic, so
    evaluating the result at (x, w) equals evaluating ``g`` at x -/+ w.
    """
    if sign not in ("minus", "plus"):
        raise PolynomialError(f"sign must be 'minus' or 'plus', got {sign!r}")
    if g.degree() > MAX_SHIFT_DEGREE:
        raise PolynomialError(
            f"degree {g.degree()} exceeds shift expansion cap {MAX_SHIFT_DEGREE}"
        )
    n = g.num_vars
    w_coeff = -1.0 if sign == "minus" else 1.0
    terms: dict[Monomial, float] = {}
    for mono, coeff in g.terms.items():
        # Per variable, (x_k +/- w_k)^e splits into binomial contributions;
        # take the product over variables.
        splits_per_var = []
        for e in mono:
            splits_per_var.append(
                [(j, math.comb(e, j) * w_coeff**j) for j in range(e + 1)]
            )
        for combo in product(*splits_per_var):
            x_part = tuple(e - j for e, (j, _) in zip(mono, combo))
            w_part = tuple(j for (j, _) in combo)
            factor = coeff
            for _, c in combo:
                factor *= c
            lifted = x_part + w_part
            terms[lifted] = terms.get(lifted, 0.0) + factor
    return Polynomial(2 * n, terms)


def differentiate(p: Polynomial, k: int) -> Polynomial:
    """Partial derivative with respect to variable ``k``."""
    if not 0 <= k < p.num_vars:
        raise PolynomialError(f"variable index {k} out of range")
    terms: dict[Monomial, float] = {}
    for mono, coeff in p.terms.items():
        e = mono[k]
        if e == 0:
            continue
        lowered = tuple(x - 1 if j == k else x for j, x in enumerate(mono))
        terms[lowered] = terms.get(lowered, 0.0) + coeff * e
    return Polynomial(p.num_vars, terms)


def embed(p: Polynomial, num_vars: int) -> Polynomial:
    """View ``p`` as a polynomial in the first ``p.num_vars`` of ``num_vars`` variables."""
    if num_vars < p.num_vars:
        raise PolynomialError(
            f"cannot embed {p.num_vars}-variable polynomial into {num_vars} variables"
        )
    if num_vars == p.num_vars:
        return p
    pad = (0,) * (num_vars - p.num_vars)
    return Polynomial(num_vars, {m + pad: c for m, c in p.terms.items()})


def embed_tail(p: Polynomial, num_vars: int) -> Polynomial:
    """View ``p`` as a polynomial in the *last* ``p.num_vars`` variables.

    Used to place a constraint g(w) over the shift block of a lifted
    (x, w) space.
    """
    if num_vars < p.num_vars:
        raise PolynomialError(
            f"cannot embed {p.num_vars}-variable polynomial into {num_vars} variables"
        )
    pad = (0,) * (num_vars - p.num_vars)
    return Polynomial(num_vars, {pad + m: c for m, c in p.terms.items()})
