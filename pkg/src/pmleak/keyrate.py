"""Decoy-state BB84 key-rate curves with the leaked-light penalty.

The channel model is the standard fiber one: exponential loss, dark counts,
constant misalignment.  Signal, decoy and vacuum intensities give the usual
two-decoy analytic bounds on the single-photon yield and error rate; the
leaked-light analysis then converts the coin imbalance into a phase-error
penalty before the GLLP-style rate is assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .states import prepared_states
from .trojan import (
    NoSolutionBelowOne,
    TrojanBudget,
    analyze_coin,
    effective_mu_out,
    phase_error_bound,
)


class VacuumDominated(RuntimeError):
    """Decoy estimate collapsed: dark counts swamp the single-photon signal."""


@dataclass(frozen=True)
class ChannelModel:
    fiber_loss_db_per_km: float = 0.2
    detector_efficiency: float = 0.1
    dark_count_prob: float = 1e-6
    misalignment_error: float = 0.01
    error_correction_efficiency: float = 1.15

    def __post_init__(self):
        if self.fiber_loss_db_per_km < 0:
            raise ValueError("fiber_loss_db_per_km must be nonnegative")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must lie in (0, 1]")
        if not 0.0 <= self.dark_count_prob <= 1.0:
            raise ValueError("dark_count_prob must lie in [0, 1]")
        if not 0.0 <= self.misalignment_error <= 1.0:
            raise ValueError("misalignment_error must lie in [0, 1]")
        if self.error_correction_efficiency < 1.0:
            raise ValueError("error_correction_efficiency must be at least 1")


@dataclass(frozen=True)
class ProtocolParams:
    signal_intensity: float = 0.5
    decoy_intensity: float = 0.1
    vacuum_intensity: float = 0.0
    p_signal: float = 0.5
    p_decoy: float = 0.25
    p_vacuum: float = 0.25
    sift_prob: float = 0.5
    n_pulses: float = 1e12
    epsilon: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.decoy_intensity < self.signal_intensity:
            raise ValueError("intensities must satisfy 0 < decoy < signal")
        if not 0.0 <= self.vacuum_intensity < self.decoy_intensity:
            raise ValueError("vacuum_intensity must lie in [0, decoy)")
        probs = (self.p_signal, self.p_decoy, self.p_vacuum)
        if any(not 0.0 < p < 1.0 for p in probs):
            raise ValueError("intensity probabilities must lie in (0, 1)")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"intensity probabilities sum to {sum(probs)}, expected 1")
        if not 0.0 < self.sift_prob <= 1.0:
            raise ValueError("sift_prob must lie in (0, 1]")
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be at least 1")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")


@dataclass(frozen=True)
class ChannelObservables:
    """Simulated detection statistics at one distance."""

    eta: float
    y0: float
    y1_true: float
    e1_true: float
    gain_signal: float
    qber_signal: float
    gain_decoy: float
    qber_decoy: float
    gain_vacuum: float
    qber_vacuum: float


def _gain_and_qber(eta: float, y0: float, e_mis: float, alpha: float):
    click = -math.expm1(-eta * alpha)
    gain = y0 + (1.0 - y0) * click
    err = 0.5 * y0 + e_mis * click
    return gain, err / gain if gain > 0 else 0.5


def channel_observables(
    ch: ChannelModel, p: ProtocolParams, distance_km: float
) -> ChannelObservables:
    """Gains and error rates for each intensity plus the true n<=1 yields."""
    if distance_km < 0:
        raise ValueError(f"distance must be nonnegative, got {distance_km}")
    eta = ch.detector_efficiency * 10 ** (-ch.fiber_loss_db_per_km * distance_km / 10)
    dark = ch.dark_count_prob
    y0 = 2 * dark - dark * dark
    y1 = 1.0 - (1.0 - y0) * (1.0 - eta)
    e1 = (0.5 * y0 + ch.misalignment_error * eta) / y1 if y1 > 0 else 0.5
    qs = _gain_and_qber(eta, y0, ch.misalignment_error, p.signal_intensity)
    qd = _gain_and_qber(eta, y0, ch.misalignment_error, p.decoy_intensity)
    qv = _gain_and_qber(eta, y0, ch.misalignment_error, p.vacuum_intensity)
    return ChannelObservables(eta, y0, y1, e1, qs[0], qs[1], qd[0], qd[1], qv[0], qv[1])


@dataclass(frozen=True)
class DecoyBounds:
    m1_lower: float
    y1_lower: float
    e1_upper: float
    vacuum_dominated: bool


def decoy_single_photon_bounds(
    obs: ChannelObservables, p: ProtocolParams
) -> DecoyBounds:
    """Standard two-decoy analytic bounds on the single-photon contribution.

    When the yield estimate is nonpositive the channel is dominated by dark
    counts; rather than aborting, everything is clamped (yield 0, error 1/2)
    and flagged, which downstream turns into zero rate.
    """
    mu, nu = p.signal_intensity, p.decoy_intensity
    if obs.gain_decoy > obs.gain_signal:
        raise ValueError("inconsistent gains: decoy exceeds signal")
    y0 = obs.gain_vacuum
    y1_lower = (mu / (mu * nu - nu * nu)) * (
        obs.gain_decoy * math.exp(nu)
        - obs.gain_signal * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0
    )
    if y1_lower <= 0:
        return DecoyBounds(0.0, 0.0, 0.5, True)
    e1_upper = (
        obs.qber_decoy * obs.gain_decoy * math.exp(nu) - 0.5 * y0
    ) / (y1_lower * nu)
    e1_upper = min(max(e1_upper, 0.0), 0.5)
    m1_lower = max(p.n_pulses * p.p_signal * mu * math.exp(-mu) * y1_lower, 0.0)
    return DecoyBounds(m1_lower, y1_lower, e1_upper, False)


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


@dataclass(frozen=True)
class KeyRatePoint:
    distance_km: float
    gain_signal: float
    qber_signal: float
    m1_lower: float
    y1_lower: float
    e1_upper: float
    mu_out_eff: float
    delta: float
    e1_phase: float
    rate: float
    rate_per_click: float
    status: str = "ok"


def _zero_point(distance_km, obs, db, mu_eff, status) -> KeyRatePoint:
    return KeyRatePoint(
        distance_km,
        obs.gain_signal,
        obs.qber_signal,
        db.m1_lower,
        db.y1_lower,
        db.e1_upper,
        mu_eff,
        0.0,
        0.5,
        0.0,
        0.0,
        status,
    )


def secret_key_rate(
    ch: ChannelModel,
    p: ProtocolParams,
    budget: TrojanBudget,
    prep,
    distance_km: float,
    mode: str = "asymptotic",
    delta_override: float | None = None,
) -> KeyRatePoint:
    """Key rate at one distance, with the leaked-light phase-error penalty.

    Pipeline: channel observables, decoy bounds, effective leaked intensity
    (finite mode only), joint-state construction, coin imbalance, phase
    error, GLLP rate.  ``delta_override`` bypasses the coin computation and
    forces the imbalance, for sensitivity scans.  The per-pulse rate is

        R = p_sift * ( mu e^-mu Y1_L (1 - h(e1_ph)) - f_EC Q_mu h(E_mu) )

    clamped at zero; rate_per_click divides out the signal gain.
    """
    if mode not in ("asymptotic", "finite"):
        raise ValueError(f"mode must be 'asymptotic' or 'finite', got {mode!r}")
    obs = channel_observables(ch, p, distance_km)
    db = decoy_single_photon_bounds(obs, p)
    if db.vacuum_dominated:
        return _zero_point(distance_km, obs, db, budget.mu_out, "vacuum-dominated")

    if mode == "finite" and budget.mu_out > 0:
        try:
            mu_eff = effective_mu_out(db.m1_lower, budget.mu_out, budget.epsilon)
        except NoSolutionBelowOne:
            return _zero_point(
                distance_km, obs, db, 1.0, "no-effective-intensity-below-one"
            )
    else:
        mu_eff = budget.mu_out

    if delta_override is not None:
        delta = delta_override
        e1_phase, vacuous = phase_error_bound(delta, db.y1_lower, db.e1_upper)
    else:
        coin = analyze_coin(
            prepared_states(prep), mu_eff, db.y1_lower, db.e1_upper
        )
        delta, e1_phase, vacuous = coin.delta, coin.e1_phase, coin.vacuous

    mu = p.signal_intensity
    rate = p.sift_prob * (
        mu
        * math.exp(-mu)
        * db.y1_lower
        * (1.0 - binary_entropy(e1_phase))
        - ch.error_correction_efficiency
        * obs.gain_signal
        * binary_entropy(obs.qber_signal)
    )
    rate = max(rate, 0.0)
    status = "vacuous-phase-bound" if vacuous else "ok"
    return KeyRatePoint(
        distance_km,
        obs.gain_signal,
        obs.qber_signal,
        db.m1_lower,
        db.y1_lower,
        db.e1_upper,
        mu_eff,
        delta,
        e1_phase,
        rate,
        rate / obs.gain_signal if obs.gain_signal > 0 else 0.0,
        status,
    )


def sweep(
    ch: ChannelModel,
    p: ProtocolParams,
    budget: TrojanBudget,
    prep,
    distances,
    mode: str = "asymptotic",
    delta_override: float | None = None,
) -> list[KeyRatePoint]:
    """Key-rate point at every distance; distances must be sorted ascending."""
    ds = list(distances)
    if any(b < a for a, b in zip(ds, ds[1:])):
        raise ValueError("distances must be sorted ascending")
    return [
        secret_key_rate(ch, p, budget, prep, d, mode, delta_override) for d in ds
    ]
