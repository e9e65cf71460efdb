"""Closed-form monomial integrals over boxes and Euclidean balls.

These supply the linear functional p -> integral of p over the integration
region, which is the objective of every volume-metric program.  The region of
integration is always contained in the ball on which the nonnegativity
constraints are enforced; :class:`Domain` couples the two and enforces the
containment at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

from .polyalg import Monomial, PolynomialError


class DomainError(ValueError):
    """Raised when an integration region is inconsistent with its ball."""


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise DomainError("box lo/hi dimension mismatch")
        if any(a >= b for a, b in zip(lo, hi)):
            raise DomainError("box requires lo < hi componentwise")

    @property
    def num_vars(self) -> int:
        return len(self.lo)

    def circumradius(self) -> float:
        # largest corner norm; corners realise the max of ||x|| over the box
        return math.sqrt(
            sum(max(a * a, b * b) for a, b in zip(self.lo, self.hi))
        )

    def volume(self) -> float:
        out = 1.0
        for a, b in zip(self.lo, self.hi):
            out *= b - a
        return out


@dataclass(frozen=True)
class Ball:
    radius: float
    num_vars: int

    def __post_init__(self):
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")
        if self.num_vars < 1:
            raise DomainError("ball needs at least one variable")

    def circumradius(self) -> float:
        return self.radius

    def volume(self) -> float:
        n = self.num_vars
        return math.exp(
            (n / 2) * math.log(math.pi) + n * math.log(self.radius) - gammaln(n / 2 + 1)
        )


Region = Union[Box, Ball]


@dataclass(frozen=True)
class Domain:
    """Constraint ball of radius ``ball_radius`` plus integration region ``region``.

    Invariant: the region is contained in the closed ball of radius
    ``ball_radius`` about the origin (box corners or ball radius checked).
    """

    ball_radius: float
    region: Region

    def __post_init__(self):
        object.__setattr__(self, "ball_radius", float(self.ball_radius))
        if self.ball_radius <= 0:
            raise DomainError("ball radius must be positive")
        if self.region.circumradius() > self.ball_radius * (1 + 1e-12):
            raise DomainError(
                f"integration region (circumradius {self.region.circumradius():.6g}) "
                f"is not contained in the constraint ball of radius {self.ball_radius:.6g}"
            )

    @property
    def num_vars(self) -> int:
        return self.region.num_vars


def box_moment(m: Monomial, lo: Sequence[float], hi: Sequence[float]) -> float:
    """Integral of the monomial over the axis-aligned box [lo, hi]."""
    if not (len(m) == len(lo) == len(hi)):
        raise PolynomialError("monomial/box dimension mismatch")
    out = 1.0
    for e, a, b in zip(m, lo, hi):
        out *= (b ** (e + 1) - a ** (e + 1)) / (e + 1)
    return out


def ball_moment(m: Monomial, radius: float, num_vars: int) -> float:
    """Integral of the monomial over the ball of given radius about the origin.

    Zero when any exponent is odd.  Otherwise the classical closed form

        radius^(|e|+n) * prod Gamma((e_k+1)/2) / Gamma((|e|+n)/2 + 1),

    computed through log-Gamma so that |e|+n up to a couple hundred stays
    finite.
    """
    if len(m) != num_vars:
        raise PolynomialError("monomial/ball dimension mismatch")
    if radius <= 0:
        raise DomainError("ball radius must be positive")
    if any(e % 2 for e in m):
        return 0.0
    total = sum(m)
    log_val = (total + num_vars) * math.log(radius)
    log_val += sum(gammaln((e + 1) / 2) for e in m)
    log_val -= gammaln((total + num_vars) / 2 + 1)
    return math.exp(log_val)


def region_moment(m: Monomial, region: Region) -> float:
    if isinstance(region, Box):
        return box_moment(m, region.lo, region.hi)
    return ball_moment(m, region.radius, region.num_vars)


def integral_functional(basis: Sequence[Monomial], dom: Domain) -> np.ndarray:
    """Moment vector of the basis over the domain's integration region.

    For any polynomial p with coefficient vector c over ``basis``,
    <c, result> equals the integral of p over the region.
    """
    if not basis:
        raise PolynomialError("basis must be nonempty")
    return np.array([region_moment(m, dom.region) for m in basis])


def region_grid(region: Region, resolution: float) -> np.ndarray:
    """Regular grid of spacing ``resolution`` covering the region, shape (k, n).

    For a ball, the bounding box is gridded and points outside the ball are
    dropped.  Used by metric estimators and membership sweeps.
    """
    if resolution <= 0:
        raise DomainError("grid resolution must be positive")
    if isinstance(region, Box):
        lo, hi = region.lo, region.hi
    else:
        lo = (-region.radius,) * region.num_vars
        hi = (region.radius,) * region.num_vars
    axes = [
        np.arange(a, b + resolution * 0.5, resolution) for a, b in zip(lo, hi)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    if isinstance(region, Ball):
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= region.radius**2]
    return pts


def region_sample(region: Region, count: int, seed: int) -> np.ndarray:
    """Uniform sample of ``count`` points from the region with a fixed seed."""
    rng = np.random.default_rng(seed)
    if isinstance(region, Box):
        lo = np.array(region.lo)
        hi = np.array(region.hi)
        return rng.uniform(lo, hi, size=(count, region.num_vars))
    # rejection-free ball sampling: direction times radius^(1/n)-scaled radius
    n = region.num_vars
    direc = rng.normal(size=(count, n))
    direc /= np.linalg.norm(direc, axis=1, keepdims=True)
    radii = region.radius * rng.uniform(size=count) ** (1.0 / n)
    return direc * radii[:, None]
