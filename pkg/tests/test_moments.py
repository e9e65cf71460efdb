import math

import numpy as np
import pytest
from scipy import integrate

from sublevelset.moments import (
    Ball,
    Box,
    Domain,
    DomainError,
    ball_moment,
    box_moment,
    integral_functional,
    region_sample,
)
from sublevelset.polyalg import Polynomial, monomial_basis


class TestBoxMoment:
    def test_separable_integral(self):
        assert box_moment((2, 4), (-1, -1), (1, 1)) == pytest.approx(4 / 15)

    def test_odd_symmetry(self):
        assert box_moment((1, 0), (-0.7, -0.7), (0.7, 0.7)) == pytest.approx(0.0)

    def test_example_box_area(self):
        assert box_moment((0, 0), (-0.4, -0.4), (0.4, 0.4)) == pytest.approx(0.64)


class TestBallMoment:
    def test_disk_area(self):
        for r in (0.5, 1.0, 2.0):
            assert ball_moment((0, 0), r, 2) == pytest.approx(math.pi * r * r)

    def test_odd_exponent_vanishes(self):
        assert ball_moment((1, 0), 1.3, 2) == 0.0
        assert ball_moment((2, 1, 0), 0.8, 3) == 0.0

    def test_x_squared_against_quadrature(self):
        # independent oracle: adaptive 2-D quadrature over the unit disk
        oracle, err = integrate.dblquad(
            lambda y, x: x * x,
            -1.0,
            1.0,
            lambda x: -math.sqrt(max(0.0, 1 - x * x)),
            lambda x: math.sqrt(max(0.0, 1 - x * x)),
        )
        assert err < 1e-8
        value = ball_moment((2, 0), 1.0, 2)
        assert value == pytest.approx(oracle, abs=1e-8)
        assert value == pytest.approx(math.pi / 4)

    def test_high_degree_stays_finite(self):
        val = ball_moment((100, 98), 1.0, 2)
        assert 0 < val < 1


class TestIntegralFunctional:
    def test_univariate_box(self):
        dom = Domain(2.0, Box((-1,), (1,)))
        vec = integral_functional([(0,), (1,), (2,)], dom)
        assert vec == pytest.approx([2.0, 0.0, 2 / 3])

    def test_unit_ball_volume_3d(self):
        dom = Domain(1.0, Ball(1.0, 3))
        vec = integral_functional([(0, 0, 0)], dom)
        assert vec == pytest.approx([4 * math.pi / 3])

    def test_example_box_against_monte_carlo(self):
        dom = Domain(0.57, Box((-0.4, -0.4), (0.4, 0.4)))
        basis = monomial_basis(2, 2)
        vec = integral_functional(basis, dom)
        expected = [0.64, 0.0, 0.0, 0.64 * 0.16 / 3, 0.0, 0.64 * 0.16 / 3]
        assert vec == pytest.approx(expected, abs=1e-15)

        # Monte Carlo oracle, 1e7 samples in chunks
        rng = np.random.default_rng(20240803)
        sums = np.zeros(len(basis))
        total = 10_000_000
        chunk = 1_000_000
        for _ in range(total // chunk):
            pts = rng.uniform(-0.4, 0.4, size=(chunk, 2))
            for k, mono in enumerate(basis):
                vals = np.ones(chunk)
                for j, e in enumerate(mono):
                    if e:
                        vals = vals * pts[:, j] ** e
                sums[k] += vals.sum()
        mc = 0.64 * sums / total
        assert np.allclose(mc, vec, rtol=1e-3, atol=2e-4)

    def test_linearity_is_exact(self):
        dom = Domain(1.0, Box((-0.5, -0.5), (0.5, 0.5)))
        basis = monomial_basis(2, 4)
        vec = integral_functional(basis, dom)
        rng = np.random.default_rng(7)
        c1 = rng.normal(size=len(basis))
        c2 = rng.normal(size=len(basis))
        assert np.dot(c1 + c2, vec) == pytest.approx(
            np.dot(c1, vec) + np.dot(c2, vec), rel=1e-15
        )

    def test_random_polynomials_against_monte_carlo(self):
        dom = Domain(1.0, Box((-0.5, -0.3), (0.5, 0.6)))
        basis = monomial_basis(2, 6)
        vec = integral_functional(basis, dom)
        rng = np.random.default_rng(11)
        pts = region_sample(dom.region, 400_000, seed=99)
        vol = dom.region.volume()
        for _ in range(5):
            coeffs = rng.normal(size=len(basis))
            poly = Polynomial(2, dict(zip(basis, coeffs)))
            vals = poly.eval_many(pts)
            estimate = vol * vals.mean()
            se = vol * vals.std(ddof=1) / math.sqrt(len(vals))
            assert abs(estimate - np.dot(coeffs, vec)) <= 3 * se


class TestDomain:
    def test_paper_example_domain_is_valid(self):
        dom = Domain(0.57, Box((-0.4, -0.4), (0.4, 0.4)))
        assert dom.num_vars == 2

    def test_box_poking_out_of_ball_rejected(self):
        with pytest.raises(DomainError):
            Domain(0.5, Box((-0.4, -0.4), (0.4, 0.4)))

    def test_ball_region_larger_than_ball_rejected(self):
        with pytest.raises(DomainError):
            Domain(1.0, Ball(1.01, 2))

    def test_degenerate_box_rejected(self):
        with pytest.raises(DomainError):
            Box((0.0, 0.0), (1.0, 0.0))

    def test_ball_volume(self):
        assert Ball(2.0, 2).volume() == pytest.approx(math.pi * 4)
