import math

import numpy as np
import pytest
from scipy.special import lambertw as scipy_lambertw

from pmleak.bounds import (
    ChernoffQuery,
    NoSolution,
    OutOfDomain,
    bound_value,
    chernoff_delta_closed_form,
    chernoff_delta_numeric,
    lambert_w0,
)


def upper_log_residual(x, eps, delta):
    """log of [e^d/(1+d)^(1+d)]^x minus log eps, via the stable kernel."""
    g = delta - (1 + delta) * math.log1p(delta)
    return x * g - math.log(eps)


class TestQueryValidation:
    def test_bad_x(self):
        with pytest.raises(ValueError):
            ChernoffQuery(0.0, 0.5)

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            ChernoffQuery(10.0, 0.0)
        with pytest.raises(ValueError):
            ChernoffQuery(10.0, 1.5)

    def test_bad_side(self):
        with pytest.raises(ValueError):
            ChernoffQuery(10.0, 0.5, "sideways")


class TestUpperDelta:
    def test_epsilon_one_gives_zero(self):
        assert chernoff_delta_numeric(ChernoffQuery(100.0, 1.0, "upper")) == 0.0
        assert chernoff_delta_closed_form(100.0, 1.0) == 0.0

    def test_leading_order(self):
        x, eps = 1e6, 1e-10
        delta = chernoff_delta_numeric(ChernoffQuery(x, eps, "upper"))
        assert delta == pytest.approx(math.sqrt(2 * math.log(1 / eps) / x), rel=0.1)

    def test_plugback_residual(self):
        x, eps = 100.0, 1e-6
        delta = chernoff_delta_numeric(ChernoffQuery(x, eps, "upper"))
        assert abs(math.expm1(upper_log_residual(x, eps, delta))) < 1e-12

    def test_closed_form_matches_numeric(self):
        for x in (50.0, 1e4, 1e8, 1e12):
            for eps in (1e-10, 1e-6, 0.1):
                dn = chernoff_delta_numeric(ChernoffQuery(x, eps, "upper"))
                cf = chernoff_delta_closed_form(x, eps)
                assert cf == pytest.approx(dn, rel=1e-10)

    def test_closed_form_near_branch_point(self):
        # eps close to 1 puts the W0 argument at the branch point
        delta = chernoff_delta_closed_form(1e6, 0.9999)
        assert abs(math.expm1(upper_log_residual(1e6, 0.9999, delta))) < 1e-10

    def test_closed_form_validation(self):
        with pytest.raises(ValueError):
            chernoff_delta_closed_form(-1.0, 0.5)
        with pytest.raises(ValueError):
            chernoff_delta_closed_form(10.0, 0.0)


class TestLowerDelta:
    def test_in_unit_interval(self):
        for x in (100.0, 1e5, 1e9):
            d = chernoff_delta_numeric(ChernoffQuery(x, 1e-8, "lower"))
            assert 0.0 < d < 1.0

    def test_plugback_residual(self):
        x, eps = 1e4, 1e-9
        d = chernoff_delta_numeric(ChernoffQuery(x, eps, "lower"))
        u = -d - (1 - d) * math.log1p(-d)
        assert abs(math.expm1(x * u - math.log(eps))) < 1e-12

    def test_no_solution_when_epsilon_unreachable(self):
        with pytest.raises(NoSolution):
            chernoff_delta_numeric(ChernoffQuery(10.0, 1e-10, "lower"))

    def test_epsilon_one_gives_zero(self):
        assert chernoff_delta_numeric(ChernoffQuery(100.0, 1.0, "lower")) == 0.0


class TestLambertW:
    def test_fixed_points(self):
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-14)
        assert lambert_w0(-math.exp(-1)) == -1.0

    def test_defining_identity(self):
        rng = np.random.default_rng(11)
        ys = np.concatenate(
            [
                rng.uniform(-math.exp(-1), 1.0, 400),
                rng.uniform(1.0, 1e3, 400),
            ]
        )
        for y in ys:
            w = lambert_w0(float(y))
            assert w >= -1.0
            assert w * math.exp(w) == pytest.approx(float(y), rel=1e-12, abs=1e-15)

    def test_matches_scipy(self):
        for y in (-0.3, -0.05, 0.2, 3.0, 250.0):
            assert lambert_w0(y) == pytest.approx(
                float(scipy_lambertw(y, 0).real), rel=1e-12
            )

    def test_domain_error(self):
        with pytest.raises(OutOfDomain):
            lambert_w0(-math.exp(-1) - 1e-6)

    def test_slack_clamps(self):
        assert lambert_w0(-math.exp(-1) - 1e-13) == -1.0


class TestBoundValue:
    def test_upper_at_epsilon_one(self):
        assert bound_value(ChernoffQuery(42.0, 1.0, "upper")) == 42.0

    def test_brackets_expectation(self):
        q_up = ChernoffQuery(1e6, 1e-10, "upper")
        q_lo = ChernoffQuery(1e6, 1e-10, "lower")
        assert bound_value(q_up) > 1e6
        assert bound_value(q_lo) < 1e6

    def test_lower_clamps_to_zero(self):
        assert bound_value(ChernoffQuery(5.0, 1e-12, "lower")) == 0.0

    def test_monotone_in_expectation(self):
        rng = np.random.default_rng(12)
        for side in ("upper", "lower"):
            for _ in range(200):
                y, x = sorted(rng.uniform(50.0, 1e9, size=2))
                if x == y:
                    continue
                bx = bound_value(ChernoffQuery(float(x), 1e-10, side))
                by = bound_value(ChernoffQuery(float(y), 1e-10, side))
                assert bx > by

    def test_derivative_identity(self):
        # df/dx for f(x) = x(1 + delta(x)) equals (z-1)/ln z with z = 1 + delta
        for x in (1e3, 1e6, 1e9):
            eps = 1e-10
            h = x * 1e-5
            f = lambda t: bound_value(ChernoffQuery(t, eps, "upper"))
            num = (f(x + h) - f(x - h)) / (2 * h)
            z = 1 + chernoff_delta_numeric(ChernoffQuery(x, eps, "upper"))
            assert num == pytest.approx((z - 1) / math.log(z), rel=1e-6)
