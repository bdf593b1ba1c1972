"""Conservative model of light leaking through the phase modulator.

An injected probe pulse leaves Alice's setup with mean photon number
``mu_out`` below one.  Whatever the attacker actually sends, the information
carried by the leaked light is bounded by a worst-case side channel that
emits at most one photon, polarized parallel to the prepared state.  This
module builds those worst-case side-channel states, joins them with Alice's
signal states, measures how far apart the two basis averages are (the
quantum-coin imbalance), turns that into a phase-error bound, and solves the
finite-statistics equation for the effective leaked intensity.  A Monte
Carlo check of the at-most-one-photon reduction is included for validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import ChernoffQuery, bound_value
from .linalg import fidelity, kron, validate_density_matrix
from .states import PHASE_OFFSETS, BadIndex, _check_index

DELTA_FLOOR = 1e-14


class MuOutOfRange(ValueError):
    """Mean photon number outside the modeled range."""


class NoSolutionBelowOne(RuntimeError):
    """No effective intensity below one photon satisfies the statistics."""


@dataclass(frozen=True)
class TrojanBudget:
    """Attacker's leaked-light budget.

    ``mu_out`` is the mean photon number per pulse leaving Alice;
    ``epsilon`` the failure probability of each statistical bound used when
    converting observed counts into the effective intensity.  The optional
    hardware fields record where a derived ``mu_out`` came from.
    """

    mu_out: float
    epsilon: float = 1e-10
    input_intensity: float | None = None
    attenuation_db: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.mu_out < 1.0:
            raise MuOutOfRange(f"mu_out must lie in [0, 1), got {self.mu_out}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    @classmethod
    def from_hardware(
        cls, input_intensity: float, attenuation_db: float, epsilon: float = 1e-10
    ) -> "TrojanBudget":
        """Budget from injected intensity and the line's round-trip attenuation."""
        if input_intensity < 0:
            raise ValueError("input_intensity must be nonnegative")
        mu = 10 ** (-attenuation_db / 10) * input_intensity
        return cls(mu, epsilon, input_intensity, attenuation_db)


def side_channel_density(mu_eff: float, index: int) -> np.ndarray:
    """Worst-case side-channel state for one phase setting.

    Basis order is (|H, 1 photon>, |V, 1 photon>, |vacuum>).  The photon
    block carries weight ``mu_eff`` on the polarization matching the
    prepared state (relative phase factor z below); the vacuum coherences
    are mu-dependent but fixed by the conservative construction.
    """
    _check_index(index)
    if not 0.0 <= mu_eff <= 1.0:
        raise MuOutOfRange(f"mu_eff must lie in [0, 1], got {mu_eff}")
    z = np.exp(1j * PHASE_OFFSETS[index - 1])
    half = mu_eff / 2
    c = math.sqrt(mu_eff * (1.0 - mu_eff)) / 2
    return np.array(
        [
            [half, half * np.conj(z), c],
            [half * z, half, c * z],
            [c, c * np.conj(z), 1.0 - mu_eff],
        ],
        dtype=np.complex128,
    )


def joint_basis_density(alice_states, mu_eff: float, basis: str) -> np.ndarray:
    """Signal-plus-leak state averaged over one basis, normalized to unit trace."""
    if basis not in ("X", "Y"):
        raise ValueError(f"basis must be 'X' or 'Y', got {basis!r}")
    if len(alice_states) != 4:
        raise ValueError(f"expected four signal states, got {len(alice_states)}")
    a, b = (1, 2) if basis == "X" else (3, 4)
    joint = (
        kron(alice_states[a - 1], side_channel_density(mu_eff, a))
        + kron(alice_states[b - 1], side_channel_density(mu_eff, b))
    ) / 2
    return joint


def coin_imbalance(rho_x: np.ndarray, rho_y: np.ndarray) -> tuple[float, float]:
    """Quantum-coin imbalance between the two basis-averaged joint states.

    Returns ``(F, delta)`` with ``delta = (1 - F)/2`` clamped to [0, 1/2]
    and floored to 0 below 1e-14.  Taking 1 - F rather than 1 - sqrt(F)
    matters: for a weak side channel the square root halves the imbalance
    and misses the reference operating points checked in acceptance.
    """
    validate_density_matrix(rho_x)
    validate_density_matrix(rho_y)
    f = fidelity(rho_x, rho_y)
    delta = (1.0 - f) / 2
    delta = min(max(delta, 0.0), 0.5)
    if delta < DELTA_FLOOR:
        delta = 0.0
    return f, delta


def phase_error_bound(
    delta: float, y1: float, e1_bit: float
) -> tuple[float, bool]:
    """Upper bound on the single-photon phase error rate.

    ``delta`` is scaled by the single-photon click probability ``y1`` into
    the conditional imbalance d' = delta/y1, then

        e1_ph = e1 + 4 d'(1-d')(1-2 e1) + 4 (1-2 d') sqrt(d'(1-d') e1 (1-e1)),

    capped at 1/2.  Returns ``(value, vacuous)``; when d' exceeds 1/2 the
    bound carries no information and (1/2, True) is returned so sweeps
    degrade to zero rate instead of aborting.
    """
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if not 0.0 < y1 <= 1.0:
        raise ValueError(f"y1 must lie in (0, 1], got {y1}")
    if not 0.0 <= e1_bit <= 0.5:
        raise ValueError(f"e1_bit must lie in [0, 1/2], got {e1_bit}")
    dp = delta / y1
    if dp > 0.5:
        return 0.5, True
    e1 = e1_bit
    value = (
        e1
        + 4 * dp * (1 - dp) * (1 - 2 * e1)
        + 4 * (1 - 2 * dp) * math.sqrt(dp * (1 - dp) * e1 * (1 - e1))
    )
    return min(value, 0.5), False


@dataclass(frozen=True)
class CoinAnalysis:
    """One full pass of the coin pipeline at fixed channel statistics."""

    fidelity: float
    delta: float
    y1: float
    delta_prime: float
    e1_bit: float
    e1_phase: float
    vacuous: bool


def analyze_coin(alice_states, mu_eff: float, y1: float, e1_bit: float) -> CoinAnalysis:
    """Build both joint states, measure the imbalance, bound the phase error."""
    rho_x = joint_basis_density(alice_states, mu_eff, "X")
    rho_y = joint_basis_density(alice_states, mu_eff, "Y")
    f, delta = coin_imbalance(rho_x, rho_y)
    e1_phase, vacuous = phase_error_bound(delta, y1, e1_bit)
    return CoinAnalysis(f, delta, y1, delta / y1, e1_bit, e1_phase, vacuous)


def effective_mu_out(m1_lower: float, mu_out: float, epsilon: float) -> float:
    """Effective leaked intensity consistent with the observed click count.

    Solves, for mu' in [mu_out, 1],

        lower_bound(m1_lower * mu') = upper_bound(m1_lower * mu_out)

    where the bounds are the Chernoff corrections at failure probability
    ``epsilon``.  The left side increases strictly in mu', so the root is
    unique; it is found by bisection to 1e-15 absolute in mu', continued
    while the residual exceeds 1e-12 of the right side.  ``epsilon = 0``
    means no finite-statistics correction: mu' = mu_out exactly.
    """
    if not m1_lower > 0:
        raise ValueError(f"m1_lower must be positive, got {m1_lower}")
    if not 0.0 < mu_out < 1.0:
        raise MuOutOfRange(f"mu_out must lie in (0, 1), got {mu_out}")
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    if epsilon == 0.0:
        return mu_out

    rhs = bound_value(ChernoffQuery(m1_lower * mu_out, epsilon, "upper"))

    def lhs(mu: float) -> float:
        return bound_value(ChernoffQuery(m1_lower * mu, epsilon, "lower"))

    if lhs(1.0) < rhs:
        raise NoSolutionBelowOne(
            f"observed statistics require mu' >= 1 (m1_lower={m1_lower:g}, "
            f"mu_out={mu_out:g}); the sub-photon assumption fails"
        )
    lo, hi = mu_out, 1.0
    best = hi
    for _ in range(200):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        r = lhs(mid) - rhs
        if abs(r) <= 1e-12 * rhs and hi - lo <= 1e-15:
            best = mid
            break
        if r < 0:
            lo = mid
        else:
            hi = mid
        best = mid
    return max(best, mu_out)


class PhotonNumberDistribution:
    """Base for per-pulse photon-number laws; subclasses are immutable."""

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteSupport(PhotonNumberDistribution):
    """Explicit probabilities for n = 0, 1, ..., len-1."""

    probs: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))

    def sample(self, rng, size):
        return rng.choice(len(self.probs), size=size, p=np.asarray(self.probs))


def two_point(mu: float) -> FiniteSupport:
    """All weight on n in {0, 1}: the filled-fraction maximizer at mean mu."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"two-point mean must lie in [0, 1], got {mu}")
    return FiniteSupport((1.0 - mu, mu))


@dataclass(frozen=True)
class PoissonPhotons(PhotonNumberDistribution):
    mu: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("Poisson mean must be nonnegative")

    def mean(self) -> float:
        return self.mu

    def sample(self, rng, size):
        return rng.poisson(self.mu, size=size)


@dataclass(frozen=True)
class GeometricPhotons(PhotonNumberDistribution):
    """P(n) = (1-q) q^n on n >= 0, parameterized by its mean q/(1-q)."""

    mu: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("geometric mean must be nonnegative")

    def mean(self) -> float:
        return self.mu

    def sample(self, rng, size):
        if self.mu == 0:
            return np.zeros(size, dtype=np.int64)
        q = self.mu / (1.0 + self.mu)
        # numpy's geometric counts trials on {1, 2, ...}; shift to {0, 1, ...}.
        return rng.geometric(1.0 - q, size=size) - 1


@dataclass(frozen=True)
class MixedPhotons(PhotonNumberDistribution):
    """Weighted mixture: pick a component per pulse, then draw its photon number."""

    components: tuple

    def __post_init__(self):
        w = np.array([wt for wt, _ in self.components], dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")

    def mean(self) -> float:
        return float(sum(w * d.mean() for w, d in self.components))

    def sample(self, rng, size):
        weights = np.array([w for w, _ in self.components])
        counts = rng.multinomial(size, weights)
        parts = [
            d.sample(rng, int(k)) for (_, d), k in zip(self.components, counts) if k
        ]
        out = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        rng.shuffle(out)
        return out


def simulate_trojan_fill(
    dist: PhotonNumberDistribution, n_pulses: int, seed: int
) -> tuple[int, float]:
    """Count pulses carrying at least one leaked photon.

    Draws ``n_pulses`` i.i.d. photon numbers from ``dist`` and returns
    ``(filled, fraction)``.  Deterministic for a given seed.  For any law
    with mean at most mu the expected fraction is at most mu, with equality
    for the two-point law; this is the property the validation battery
    exercises empirically.
    """
    if dist.mean() > 1.0:
        raise ValueError(f"distribution mean {dist.mean():g} exceeds 1")
    n_pulses = int(n_pulses)
    if n_pulses < 10**4:
        raise ValueError(f"need at least 1e4 pulses, got {n_pulses}")
    rng = np.random.default_rng(seed)
    filled = 0
    remaining = n_pulses
    while remaining > 0:
        chunk = min(remaining, 10**7)
        filled += int(np.count_nonzero(dist.sample(rng, chunk)))
        remaining -= chunk
    return filled, filled / n_pulses


def validation_battery(mu_out: float, boost: float = 1.0):
    """Named distributions, each with mean exactly ``boost * mu_out``.

    The mixture splits its mean 0.25/0.30/0.45 across a two-point, a
    Poisson, and a geometric component.
    """
    mu = boost * mu_out
    return [
        ("two-point", two_point(mu)),
        ("poisson", PoissonPhotons(mu)),
        ("geometric", GeometricPhotons(mu)),
        (
            "mixture",
            MixedPhotons(
                (
                    (0.5, two_point(0.5 * mu)),
                    (0.3, PoissonPhotons(mu)),
                    (0.2, GeometricPhotons(2.25 * mu)),
                )
            ),
        ),
    ]
