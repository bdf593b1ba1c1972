"""Command-line front-end.

Subcommands: ``coin`` (imbalance report at one distance), ``keyrate``
(distance sweep to CSV plus a rendered figure), ``bounds`` (Chernoff
cross-check report), ``validate`` (Monte-Carlo battery for the
at-most-one-photon reduction).  Exit codes: 0 success, 2 config error,
3 analysis abort, 4 I/O error, 5 validation failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import bounds as _bounds
from .bounds import ChernoffQuery, NoSolution, OutOfDomain, chernoff_delta_closed_form
from .config import ConfigError, RunConfig, parse_config, render_config
from .keyrate import channel_observables, decoy_single_photon_bounds, sweep
from .states import QuadratureUnderResolved, prepared_states
from .trojan import (
    NoSolutionBelowOne,
    analyze_coin,
    effective_mu_out,
    simulate_trojan_fill,
    validation_battery,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ANALYSIS = 3
EXIT_IO = 4
EXIT_VALIDATION = 5


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _echo_header(cfg: RunConfig) -> str:
    return "".join(f"# {line}\n" for line in render_config(cfg).splitlines())


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load(args) -> RunConfig:
    cfg = parse_config(args.config)
    if getattr(args, "mode", None):
        cfg = RunConfig(
            cfg.prep,
            cfg.budget,
            cfg.channel,
            cfg.protocol,
            cfg.distances,
            args.mode,
            cfg.seed,
            cfg.coin_distance_km,
        )
    if getattr(args, "seed", None) is not None:
        cfg = RunConfig(
            cfg.prep,
            cfg.budget,
            cfg.channel,
            cfg.protocol,
            cfg.distances,
            cfg.mode,
            args.seed,
            cfg.coin_distance_km,
        )
    return cfg


def _coin_at_distance(cfg: RunConfig, distance_km: float):
    obs = channel_observables(cfg.channel, cfg.protocol, distance_km)
    db = decoy_single_photon_bounds(obs, cfg.protocol)
    if db.vacuum_dominated:
        raise NoSolutionBelowOne(
            f"channel is vacuum-dominated at {distance_km} km; no coin analysis"
        )
    if cfg.mode == "finite" and cfg.budget.mu_out > 0:
        mu_eff = effective_mu_out(db.m1_lower, cfg.budget.mu_out, cfg.budget.epsilon)
    else:
        mu_eff = cfg.budget.mu_out
    coin = analyze_coin(prepared_states(cfg.prep), mu_eff, db.y1_lower, db.e1_upper)
    return coin, mu_eff


def cmd_coin(args) -> int:
    cfg = _load(args)
    coin, mu_eff = _coin_at_distance(cfg, cfg.coin_distance_km)
    pairs = [
        ("distance_km", cfg.coin_distance_km),
        ("F", coin.fidelity),
        ("delta", coin.delta),
        ("delta_prime", coin.delta_prime),
        ("y1", coin.y1),
        ("e1_bit", coin.e1_bit),
        ("e1_phase", coin.e1_phase),
        ("mu_out_eff", mu_eff),
    ]
    for key, val in pairs:
        print(f"{key} = {_fmt(val)}")
    if coin.vacuous:
        print("warning: delta_prime exceeds 1/2, phase-error bound is vacuous", file=sys.stderr)
    if args.out:
        text = (
            _echo_header(cfg)
            + ",".join(k for k, _ in pairs)
            + "\n"
            + ",".join(_fmt(v) for _, v in pairs)
            + "\n"
        )
        _write_atomic(args.out, text)
    return EXIT_OK


CSV_HEADER = "distance_km,Q_mu,E_mu,M1_L,Y1_L,E1_U,mu_out_eff,delta,E1_ph,R_per_pulse,R_per_click"


def cmd_keyrate(args) -> int:
    cfg = _load(args)
    points = sweep(
        cfg.channel, cfg.protocol, cfg.budget, cfg.prep, cfg.distances, cfg.mode
    )
    lines = [_echo_header(cfg), CSV_HEADER + "\n"]
    for pt in points:
        row = (
            pt.distance_km,
            pt.gain_signal,
            pt.qber_signal,
            pt.m1_lower,
            pt.y1_lower,
            pt.e1_upper,
            pt.mu_out_eff,
            pt.delta,
            pt.e1_phase,
            pt.rate,
            pt.rate_per_click,
        )
        lines.append(",".join(_fmt(v) for v in row) + "\n")
    _write_atomic(args.out, "".join(lines))
    print(f"wrote {len(points)} rows to {args.out}")
    if not args.no_plot:
        from .plotting import plot_keyrate_curve

        fig_path = os.path.splitext(args.out)[0] + ".png"
        plot_keyrate_curve(points, fig_path)
        print(f"wrote figure to {fig_path}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    side = args.side
    x, eps = args.x, args.epsilon
    try:
        query = ChernoffQuery(x, eps, side)
    except ValueError as exc:
        raise ConfigError("bounds", str(exc)) from None
    print(f"x = {_fmt(x)}")
    print(f"epsilon = {_fmt(eps)}")
    print(f"side = {side}")
    kernel = _bounds._log_tail_upper if side == "upper" else _bounds._log_tail_lower
    try:
        delta = _bounds.chernoff_delta_numeric(query)
    except NoSolution:
        print("warning: epsilon below exp(-x); lower bound clamps to 0", file=sys.stderr)
        print("delta_numeric = none")
        print(f"bound_value = {_fmt(0.0)}")
        return EXIT_OK
    residual = abs(math.expm1(x * kernel(delta) - math.log(eps)))
    print(f"delta_numeric = {_fmt(delta)}")
    if side == "upper":
        cf = chernoff_delta_closed_form(x, eps)
        print(f"delta_closed_form = {_fmt(cf)}")
        print(f"cross_check = {_fmt(abs(cf - delta) / delta if delta else 0.0)}")
        print(f"bound_value = {_fmt(x * (1 + delta))}")
    else:
        print(f"bound_value = {_fmt(x * (1 - delta))}")
    print(f"residual = {_fmt(residual)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args)
    mu = cfg.budget.mu_out
    if mu <= 0:
        raise ConfigError("[budget] mu_out", "validation battery needs mu_out > 0")
    n = int(float(args.pulses))
    boost = 2.0 if args.boost_mean else 1.0
    threshold = mu + 5 * math.sqrt(mu / n)
    battery = validation_battery(mu, boost)
    all_ok = True
    print(f"mu_out = {_fmt(mu)}  n_pulses = {n}  seed = {cfg.seed}")
    print(f"threshold = mu_out + 5*sqrt(mu_out/N) = {_fmt(threshold)}")
    for i, (name, dist) in enumerate(battery):
        filled, frac = simulate_trojan_fill(dist, n, cfg.seed + i)
        ok = frac <= threshold
        note = ""
        if name == "two-point":
            m = dist.mean()
            sat_tol = 5 * math.sqrt(m * (1 - m) / n)
            saturated = abs(frac - m) <= sat_tol
            ok = ok and saturated
            note = f"  saturation |{_fmt(frac)} - {_fmt(m)}| <= {_fmt(sat_tol)}: " + (
                "yes" if saturated else "NO"
            )
        all_ok = all_ok and ok
        print(
            f"{name:10s} mean = {_fmt(dist.mean())}  filled = {filled}  "
            f"fraction = {_fmt(frac)}  {'PASS' if ok else 'FAIL'}{note}"
        )
    print("overall:", "PASS" if all_ok else "FAIL")
    return EXIT_OK if all_ok else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmleak",
        description="Phase-modulator leakage bounds and decoy-state BB84 key rates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, out_required=False):
        sp.add_argument("--config", required=True, help="INI config file")
        sp.add_argument("--out", required=out_required, help="output CSV path")
        sp.add_argument("--seed", type=int, help="override [run] seed")
        sp.add_argument(
            "--mode", choices=("asymptotic", "finite"), help="override [run] mode"
        )

    sp = sub.add_parser("coin", help="imbalance and phase-error report at one distance")
    add_common(sp)
    sp.set_defaults(func=cmd_coin)

    sp = sub.add_parser("keyrate", help="distance sweep to CSV plus figure")
    add_common(sp, out_required=True)
    sp.add_argument("--no-plot", action="store_true", help="skip the figure")
    sp.set_defaults(func=cmd_keyrate)

    sp = sub.add_parser("bounds", help="Chernoff correction cross-check")
    sp.add_argument("--x", type=float, required=True, help="expectation")
    sp.add_argument("--epsilon", type=float, required=True, help="failure probability")
    sp.add_argument("--side", choices=("upper", "lower"), default="upper")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("validate", help="Monte-Carlo battery for the photon bound")
    add_common(sp)
    sp.add_argument("--pulses", default="1e7", help="samples per distribution")
    sp.add_argument(
        "--boost-mean",
        action="store_true",
        help="negative control: run the battery at twice the budget mean",
    )
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSolutionBelowOne, QuadratureUnderResolved, OutOfDomain) as exc:
        print(f"analysis abort: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
