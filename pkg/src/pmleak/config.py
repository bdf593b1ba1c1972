"""Run configuration: a flat INI file, parsed strictly.

Sections mirror the model types ([prep], [budget], [channel], [protocol],
[sweep], [run], [coin]).  Unknown sections or keys are rejected by name, so
a misspelled security parameter can never silently fall back to a default.
The canonical rendering of a parsed config is echoed into every output file;
parsing that echo reproduces the run exactly.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

from .keyrate import ChannelModel, ProtocolParams
from .states import GaussianPrepModel, IdealPrep
from .trojan import TrojanBudget

DEFAULT_SWEEP_START = 0.0
DEFAULT_SWEEP_STOP = 130.0
DEFAULT_SWEEP_STEP = 5.0


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class RunConfig:
    prep: IdealPrep | GaussianPrepModel
    budget: TrojanBudget
    channel: ChannelModel
    protocol: ProtocolParams
    distances: tuple
    mode: str = "asymptotic"
    seed: int = 42
    coin_distance_km: float = 50.0


_PREP_KEYS_IDEAL = {"kind", "phi0"}
_PREP_KEYS_GAUSSIAN = {
    "kind",
    "phi0",
    "phi_mean",
    "phi_sigma",
    "theta_mean",
    "theta_sigma",
}
_BUDGET_KEYS = {"mu_out", "input_intensity", "attenuation_db", "epsilon"}
_CHANNEL_KEYS = {
    "fiber_loss_db_per_km",
    "detector_efficiency",
    "dark_count_prob",
    "misalignment_error",
    "error_correction_efficiency",
}
_PROTOCOL_KEYS = {
    "signal_intensity",
    "decoy_intensity",
    "vacuum_intensity",
    "p_signal",
    "p_decoy",
    "p_vacuum",
    "sift_prob",
    "n_pulses",
    "epsilon",
}
_SWEEP_KEYS = {"distances", "start", "stop", "step"}
_RUN_KEYS = {"mode", "seed"}
_COIN_KEYS = {"distance_km"}
_SECTION_KEYS = {
    "prep": _PREP_KEYS_GAUSSIAN,
    "budget": _BUDGET_KEYS,
    "channel": _CHANNEL_KEYS,
    "protocol": _PROTOCOL_KEYS,
    "sweep": _SWEEP_KEYS,
    "run": _RUN_KEYS,
    "coin": _COIN_KEYS,
}


def _float(section, key, raw) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}", f"not a number: {raw!r}") from None


def _float_list(section, key, raw) -> tuple:
    parts = [p for chunk in raw.split(",") for p in chunk.split()]
    return tuple(_float(section, key, p) for p in parts)


def _check_keys(section: str, present, allowed) -> None:
    for key in present:
        if key not in allowed:
            raise ConfigError(f"[{section}] {key}", "unknown key")


def _build_prep(sec):
    kind = sec.get("kind", "ideal").strip().lower()
    if kind == "ideal":
        _check_keys("prep", sec, _PREP_KEYS_IDEAL)
        return IdealPrep(phi0=_float("prep", "phi0", sec.get("phi0", "0")))
    if kind != "gaussian":
        raise ConfigError("[prep] kind", f"must be 'ideal' or 'gaussian', got {kind!r}")
    _check_keys("prep", sec, _PREP_KEYS_GAUSSIAN)
    phi0 = _float("prep", "phi0", sec.get("phi0", "0"))
    sigma_raw = sec.get("phi_sigma", "0.05")
    sigmas = _float_list("prep", "phi_sigma", sigma_raw)
    if len(sigmas) == 1:
        sigmas = sigmas * 4
    if len(sigmas) != 4:
        raise ConfigError("[prep] phi_sigma", "needs one value or four")
    kwargs = {
        "theta_mean": _float("prep", "theta_mean", sec.get("theta_mean", repr(math.pi / 2))),
        "theta_sigma": _float("prep", "theta_sigma", sec.get("theta_sigma", "0.05")),
    }
    try:
        if "phi_mean" in sec:
            if "phi0" in sec:
                raise ConfigError("[prep] phi_mean", "give phi_mean or phi0, not both")
            means = _float_list("prep", "phi_mean", sec["phi_mean"])
            if len(means) != 4:
                raise ConfigError("[prep] phi_mean", "needs four values")
            return GaussianPrepModel(means, sigmas, **kwargs)
        return GaussianPrepModel.from_offsets(phi0, sigmas, **kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("[prep]", str(exc)) from None


def _build_budget(sec) -> TrojanBudget:
    _check_keys("budget", sec, _BUDGET_KEYS)
    epsilon = _float("budget", "epsilon", sec.get("epsilon", "1e-10"))
    has_mu = "mu_out" in sec
    has_hw = "input_intensity" in sec or "attenuation_db" in sec
    try:
        if has_mu and has_hw:
            raise ConfigError(
                "[budget] mu_out", "give mu_out or the hardware pair, not both"
            )
        if has_hw:
            if "input_intensity" not in sec or "attenuation_db" not in sec:
                raise ConfigError(
                    "[budget] input_intensity",
                    "input_intensity and attenuation_db are required together",
                )
            return TrojanBudget.from_hardware(
                _float("budget", "input_intensity", sec["input_intensity"]),
                _float("budget", "attenuation_db", sec["attenuation_db"]),
                epsilon,
            )
        if not has_mu:
            raise ConfigError("[budget] mu_out", "required")
        return TrojanBudget(_float("budget", "mu_out", sec["mu_out"]), epsilon)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("[budget]", str(exc)) from None


def _build_from_floats(section: str, sec, allowed, cls):
    _check_keys(section, sec, allowed)
    kwargs = {k: _float(section, k, v) for k, v in sec.items()}
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[{section}]", str(exc)) from None


def default_distances() -> tuple:
    return _grid(DEFAULT_SWEEP_START, DEFAULT_SWEEP_STOP, DEFAULT_SWEEP_STEP)


def _grid(start: float, stop: float, step: float) -> tuple:
    if step <= 0:
        raise ConfigError("[sweep] step", "must be positive")
    if stop < start:
        raise ConfigError("[sweep] stop", "must be at least start")
    out = []
    k = 0
    while True:
        d = start + k * step
        if d > stop + 1e-9 * step:
            break
        out.append(d)
        k += 1
    return tuple(out)


def _build_distances(sec) -> tuple:
    _check_keys("sweep", sec, _SWEEP_KEYS)
    has_list = "distances" in sec
    has_grid = any(k in sec for k in ("start", "stop", "step"))
    if has_list and has_grid:
        raise ConfigError("[sweep] distances", "give a list or start/stop/step, not both")
    if has_list:
        ds = _float_list("sweep", "distances", sec["distances"])
        if any(b < a for a, b in zip(ds, ds[1:])):
            raise ConfigError("[sweep] distances", "must be sorted ascending")
        if any(d < 0 for d in ds):
            raise ConfigError("[sweep] distances", "must be nonnegative")
        return ds
    if has_grid:
        missing = [k for k in ("start", "stop", "step") if k not in sec]
        if missing:
            raise ConfigError(f"[sweep] {missing[0]}", "required with the others")
        return _grid(
            _float("sweep", "start", sec["start"]),
            _float("sweep", "stop", sec["stop"]),
            _float("sweep", "step", sec["step"]),
        )
    return default_distances()


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("(file)", f"parse failure: {exc}") from None
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"[{section}]", "unknown section")

    def sec(name):
        return parser[name] if parser.has_section(name) else {}

    prep = _build_prep(sec("prep"))
    budget = _build_budget(sec("budget"))
    channel = _build_from_floats("channel", sec("channel"), _CHANNEL_KEYS, ChannelModel)
    protocol = _build_from_floats(
        "protocol", sec("protocol"), _PROTOCOL_KEYS, ProtocolParams
    )
    distances = _build_distances(sec("sweep"))

    run = sec("run")
    _check_keys("run", run, _RUN_KEYS)
    mode = run.get("mode", "asymptotic").strip().lower()
    if mode not in ("asymptotic", "finite"):
        raise ConfigError("[run] mode", f"must be 'asymptotic' or 'finite', got {mode!r}")
    try:
        seed = int(run.get("seed", "42"))
    except ValueError:
        raise ConfigError("[run] seed", "not an integer") from None

    coin = sec("coin")
    _check_keys("coin", coin, _COIN_KEYS)
    coin_km = _float("coin", "distance_km", coin.get("distance_km", "50"))
    if coin_km < 0:
        raise ConfigError("[coin] distance_km", "must be nonnegative")

    return RunConfig(prep, budget, channel, protocol, distances, mode, seed, coin_km)


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("(file)", f"cannot read {path}: {exc}") from None
    return parse_config_text(text)


def render_config(cfg: RunConfig) -> str:
    """Canonical INI text with every effective value spelled out.

    Floats use repr, which round-trips exactly, so parse(render(cfg))
    rebuilds an identical RunConfig.
    """
    out = io.StringIO()

    def section(name, pairs):
        out.write(f"[{name}]\n")
        for k, v in pairs:
            out.write(f"{k} = {v}\n")
        out.write("\n")

    if isinstance(cfg.prep, IdealPrep):
        section("prep", [("kind", "ideal"), ("phi0", repr(cfg.prep.phi0))])
    else:
        section(
            "prep",
            [
                ("kind", "gaussian"),
                ("phi_mean", ", ".join(repr(x) for x in cfg.prep.phi_mean)),
                ("phi_sigma", ", ".join(repr(x) for x in cfg.prep.phi_sigma)),
                ("theta_mean", repr(cfg.prep.theta_mean)),
                ("theta_sigma", repr(cfg.prep.theta_sigma)),
            ],
        )
    if cfg.budget.input_intensity is not None:
        budget_pairs = [
            ("input_intensity", repr(cfg.budget.input_intensity)),
            ("attenuation_db", repr(cfg.budget.attenuation_db)),
        ]
    else:
        budget_pairs = [("mu_out", repr(cfg.budget.mu_out))]
    section("budget", budget_pairs + [("epsilon", repr(cfg.budget.epsilon))])
    ch = cfg.channel
    section(
        "channel",
        [
            ("fiber_loss_db_per_km", repr(ch.fiber_loss_db_per_km)),
            ("detector_efficiency", repr(ch.detector_efficiency)),
            ("dark_count_prob", repr(ch.dark_count_prob)),
            ("misalignment_error", repr(ch.misalignment_error)),
            ("error_correction_efficiency", repr(ch.error_correction_efficiency)),
        ],
    )
    p = cfg.protocol
    section(
        "protocol",
        [
            ("signal_intensity", repr(p.signal_intensity)),
            ("decoy_intensity", repr(p.decoy_intensity)),
            ("vacuum_intensity", repr(p.vacuum_intensity)),
            ("p_signal", repr(p.p_signal)),
            ("p_decoy", repr(p.p_decoy)),
            ("p_vacuum", repr(p.p_vacuum)),
            ("sift_prob", repr(p.sift_prob)),
            ("n_pulses", repr(p.n_pulses)),
            ("epsilon", repr(p.epsilon)),
        ],
    )
    section("sweep", [("distances", ", ".join(repr(d) for d in cfg.distances))])
    section("run", [("mode", cfg.mode), ("seed", str(cfg.seed))])
    section("coin", [("distance_km", repr(cfg.coin_distance_km))])
    return out.getvalue().rstrip("\n") + "\n"
