"""Multiplicative Chernoff tail corrections.

For a sum with expectation ``x``, the upper correction is the delta > 0 with

    [e^delta / (1+delta)^(1+delta)]^x = epsilon,

and the lower correction the delta in (0, 1) with

    [e^-delta / (1-delta)^(1-delta)]^x = epsilon.

Both are solved in log space.  The upper delta also has a closed form through
the principal Lambert-W branch, kept as an independent cross-check on the
bisection.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_INV_E = math.exp(-1.0)

# W0 expansion about the branch point in p = sqrt(2(e*y + 1)).
_BRANCH_COEFFS = (1.0, -1 / 3, 11 / 72, -43 / 540, 769 / 17280, -221 / 8505)


class NoSolution(ValueError):
    """Lower-tail equation unsatisfiable: epsilon below e^-x."""


class OutOfDomain(ValueError):
    """Argument outside the principal Lambert-W branch."""


@dataclass(frozen=True)
class ChernoffQuery:
    x: float
    epsilon: float
    side: str = "upper"

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError(f"expectation x must be positive, got {self.x}")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.side not in ("upper", "lower"):
            raise ValueError(f"side must be 'upper' or 'lower', got {self.side!r}")


def _log_tail_upper(delta: float) -> float:
    """log of the upper Chernoff kernel, g(d) = d - (1+d)ln(1+d).

    The direct form cancels to ~d^2/2 for small d, which the bisection's
    1e-12 residual target cannot survive at large x; switch to the series
    sum_{k>=2} (-1)^(k+1) d^k / (k(k-1)) below 0.05.
    """
    if delta < 0.05:
        acc = 0.0
        term = delta
        for k in range(2, 25):
            term *= -delta
            acc += term / (k * (k - 1))
        return acc
    return delta - (1 + delta) * math.log1p(delta)


def _log_tail_lower(delta: float) -> float:
    """log of the lower kernel, u(d) = -d - (1-d)ln(1-d) = -sum d^k/(k(k-1))."""
    if delta < 0.05:
        acc = 0.0
        term = delta
        for k in range(2, 25):
            term *= delta
            acc -= term / (k * (k - 1))
        return acc
    return -delta - (1 - delta) * math.log1p(-delta)


def _bisect(f, lo: float, hi: float, target: float) -> float:
    """Root of f(delta) = target with f decreasing; residual driven to 1e-13."""
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        r = f(mid) - target
        if abs(r) <= 1e-13:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def chernoff_delta_numeric(q: ChernoffQuery) -> float:
    """Tail correction by bisection.

    Upper side: bracket per the kernel's decrease from 0, starting at
    max(10, 3 ln(1/eps)/x + 10) and doubling while the residual keeps its
    sign.  Lower side: delta is confined to (0, 1); when even delta -> 1
    cannot push the tail down to epsilon (epsilon < e^-x) there is no
    solution and NoSolution is raised for the caller to clamp.
    """
    log_eps = math.log(q.epsilon)
    if log_eps == 0.0:
        return 0.0
    target = log_eps / q.x
    if q.side == "upper":
        hi = max(10.0, 3 * (-log_eps) / q.x + 10.0)
        while _log_tail_upper(hi) > target:
            hi *= 2
        return _bisect(lambda d: q.x * _log_tail_upper(d), 0.0, hi, log_eps)
    if log_eps < -q.x:
        raise NoSolution(
            f"no lower-tail correction: epsilon={q.epsilon:g} is below exp(-x) at x={q.x:g}"
        )
    hi = 1.0 - 1e-16
    if _log_tail_lower(hi) > target:
        raise NoSolution("lower-tail equation unreachable within delta < 1")
    return _bisect(lambda d: q.x * _log_tail_lower(d), 0.0, hi, log_eps)


def lambert_w0(y: float, slack: float = 1e-12) -> float:
    """Principal Lambert-W branch: w >= -1 with w e^w = y.

    Halley iteration on a branch-point or logarithmic initial guess, run to
    1e-14 relative residual.  Arguments up to ``slack`` below -1/e are
    treated as the branch point; beyond that is a domain error.
    """
    if y < -_INV_E:
        if y < -_INV_E - slack:
            raise OutOfDomain(f"W0 requires y >= -1/e, got {y}")
        y = -_INV_E
    if y == 0.0:
        return 0.0
    if y == -_INV_E:
        return -1.0
    t = math.e * y + 1.0
    if t < 0.5:
        w = _w0_near_branch(t)
    elif y > math.e:
        w = math.log(y) - math.log(math.log(y))
    else:
        w = math.log1p(y)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - y
        if abs(f) <= 1e-14 * abs(y):
            break
        d1 = ew * (w + 1)
        step = f / (d1 - f * (w + 2) / (2 * (w + 1)))
        w -= step
        if abs(step) <= 1e-16 * max(abs(w), 1.0):
            break
    return w


def _w0_near_branch(t: float) -> float:
    """W0 at y = (t-1)/e via the branch-point series, t = e*y + 1 >= 0."""
    p = math.sqrt(2.0 * t)
    acc = -1.0
    pk = 1.0
    for c in _BRANCH_COEFFS:
        pk *= p
        acc += c * pk
    return acc


def chernoff_delta_closed_form(x: float, epsilon: float) -> float:
    """Upper tail correction as e^{1 + W0(-(x + ln eps)/(e x))} - 1.

    Evaluated through t = -ln(eps)/x, which equals e*y + 1 for the W0
    argument y without the cancellation that computing y first would cost
    near the branch point (epsilon near 1).  For t below 3e-5 the W0 series
    in sqrt(2t) is summed directly; otherwise Halley refinement runs on the
    reconstructed argument.
    """
    if not x > 0:
        raise ValueError(f"expectation x must be positive, got {x}")
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    t = -math.log(epsilon) / x
    if t < 3e-5:
        w = _w0_near_branch(t)
    else:
        w = lambert_w0((t - 1.0) / math.e)
    return math.expm1(1.0 + w)


def bound_value(q: ChernoffQuery) -> float:
    """Chernoff bound on the observed value: x(1 + delta) above, x(1 - delta)
    below, the latter clamped to 0 when no lower correction exists."""
    if q.side == "upper":
        return q.x * (1.0 + chernoff_delta_numeric(q))
    try:
        return q.x * (1.0 - chernoff_delta_numeric(q))
    except NoSolution:
        return 0.0
