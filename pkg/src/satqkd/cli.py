"""Command-line entry points: ``sweep``, ``tables``, ``crossing``, ``critical-distance``.

Scenario settings resolve as flags > ``--config`` file > named preset.
``SATQKD_THREADS`` sets the worker count for distance sweeps.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import replace

from .adversary import IrudParams
from .keyrate import Protocol, YieldModel
from .optimizer import THREADS_ENV, SweepSpec, critical_distance, sweep_curve
from .presets import PRESETS, get_preset, preset_from_dict
from . import reproduce

log = logging.getLogger("satqkd")

CSV_HEADER = ("distance_km", "loss_db", "protocol", "mode", "mu", "nu1", "nu2",
              "rate_bits_per_pulse", "eve_info", "qber")
RATE_PER_SECOND_COLUMN = "rate_bits_per_second"

# scenario fields a flag may override
_PRESET_FLAGS = {
    "wavelength_nm": float,
    "turb_loss_db": float,
    "scatter_loss_db": float,
    "receiver_efficiency": float,
    "dark_count": float,
    "extra_loss_db": float,
}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return format(x, ".10g")
    return str(x)


def _choices(values, allow_all=True):
    return list(values) + (["all"] if allow_all else [])


def _protocols(name: str) -> list[Protocol]:
    return list(Protocol) if name == "all" else [Protocol(name)]


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def resolve_preset(scenario: str | None, config: dict, args: argparse.Namespace):
    """Apply config-file keys, then explicit flags, on top of the named preset.

    With no ``scenario`` the config's own ``name`` picks the base preset, so a
    config file can also define a new scenario.
    """
    cfg = dict(config.get("scenario", {}))
    if scenario is None:
        if "name" not in cfg:
            raise ValueError("give --scenario or a config 'scenario' section with a name")
        base = preset_from_dict(cfg)
    else:
        base = get_preset(scenario)
        if cfg:
            cfg.setdefault("name", base.name)
            base = preset_from_dict(cfg, base)
    overrides = {k: getattr(args, k) for k in _PRESET_FLAGS if getattr(args, k, None) is not None}
    return replace(base, **overrides) if overrides else base


def _setting(args, config, key, default=None):
    """Flag value if given, else the config's ``sweep`` entry, else ``default``."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get("sweep", {}).get(key, default)


def _spec_for(args, config, scenario, protocol) -> SweepSpec:
    preset = resolve_preset(scenario, config, args)
    i2 = _setting(args, config, "i2")
    irud = IrudParams() if i2 is None else IrudParams(i2=float(i2))
    return SweepSpec(
        protocol=protocol,
        preset=preset,
        lmin_km=_setting(args, config, "lmin"),
        lmax_km=_setting(args, config, "lmax"),
        step_km=float(_setting(args, config, "step", 10.0)),
        mu_step=float(_setting(args, config, "mu_step", 0.001)),
        mu_max=float(_setting(args, config, "mu_max", 1.0)),
        fixed_mu=_setting(args, config, "fixed_mu"),
        irud=irud,
        yield_model=YieldModel(_setting(args, config, "yield_model", YieldModel.ADDITIVE.value)),
        tail_bound=_setting(args, config, "tail_bound", "signal"),
    )


def sweep_rows(specs: list[SweepSpec], mode: str, pulse_rate_hz: float | None = None):
    for spec in specs:
        for pt in sweep_curve(spec, mode):
            row = [
                pt.distance_m / 1e3, pt.loss_db, spec.protocol.value, mode,
                pt.best_mu, pt.best_nu1, pt.best_nu2, pt.best_rate,
                pt.eve_info_at_optimum, pt.qber,
            ]
            if pulse_rate_hz is not None:
                row.append(pt.best_rate * pulse_rate_hz)
            yield row


def write_csv(rows, out, pulse_rate_hz: float | None = None) -> None:
    writer = csv.writer(out, lineterminator="\n")
    header = list(CSV_HEADER)
    if pulse_rate_hz is not None:
        header.append(RATE_PER_SECOND_COLUMN)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def cmd_sweep(args, config) -> int:
    protocols = _protocols(_setting(args, config, "protocol", "all"))
    specs = [_spec_for(args, config, args.scenario, p) for p in protocols]
    pulse_rate = _setting(args, config, "pulse_rate_hz")
    mode = _setting(args, config, "mode", "optimized")
    buf = io.StringIO()
    write_csv(sweep_rows(specs, mode, pulse_rate), buf, pulse_rate)
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        log.info("wrote %s", args.out)
    return 0


def _scenarios(name: str) -> list[str]:
    return list(reproduce.SCENARIOS) if name == "all" else [name]


def _cell(value, unit_fmt):
    return "none" if value is None else unit_fmt(value)


def cmd_tables(args, config) -> int:
    out = sys.stdout
    names = _scenarios(args.scenario)
    kw = {"mu_step": float(_setting(args, config, "mu_step", 0.001))}
    presets = [resolve_preset(n, config, args) for n in names]
    crit = reproduce.critical_distance_table(presets, **kw)
    rates = reproduce.max_rate_table(presets, **kw)

    def table(title, cells, fmt):
        out.write(f"{title}\n")
        out.write(f"{'scenario':<16}{'protocol':<14}{'computed':>12}{'reference':>12}{'deviation':>11}\n")
        for c in cells:
            dev = c.relative_deviation
            dev_s = "match" if c.both_none else ("" if dev is None else f"{dev:+.1%}")
            out.write(f"{c.scenario:<16}{c.protocol.value:<14}"
                      f"{_cell(c.computed, fmt):>12}{_cell(c.reference, fmt):>12}{dev_s:>11}\n")
        out.write("\n")

    table("Critical distance (km)", crit, lambda v: f"{v:.0f}")
    table("Maximum rate (bits/pulse)", rates, lambda v: f"{v:.2e}")
    return 0


def cmd_crossing(args, config) -> int:
    i2 = _setting(args, config, "i2")
    irud = IrudParams() if i2 is None else IrudParams(i2=float(i2))
    targets = dict(reproduce.REFERENCE_CROSSING_DB)
    if args.mu is not None:
        targets = {p: (args.mu, None) for p in targets}
    for proto, (mu, ref) in targets.items():
        loss = reproduce.eve_crossing_loss_db(proto, mu, irud)
        ref_s = "" if ref is None else f"  (reference {ref:g} dB)"
        sys.stdout.write(f"{proto.value:<8} mu={mu:g}  I_Eve=1 at {loss:.2f} dB{ref_s}\n")
    return 0


def cmd_critical_distance(args, config) -> int:
    for name in _scenarios(args.scenario):
        for proto in _protocols(_setting(args, config, "protocol", "all")):
            spec = _spec_for(args, config, name, proto)
            crit = critical_distance(spec, tolerance_km=args.tolerance)
            val = "none" if crit.distance_km is None else f"{crit.distance_km:.1f}"
            sys.stdout.write(f"{name},{proto.value},{val}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satqkd",
        description="Satellite QKD link budgets, key rates and critical distances.",
        epilog=f"Set {THREADS_ENV} to parallelise distance sweeps.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON file with 'scenario' and 'sweep' sections")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    parser.add_argument("--config", help="JSON file with 'scenario' and 'sweep' sections")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, allow_all):
        p.add_argument("--scenario", choices=_choices(PRESETS, allow_all),
                       default="all" if allow_all else None,
                       help=None if allow_all else "defaults to the config file's scenario")
        for key, typ in _PRESET_FLAGS.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
        p.add_argument("--mu-step", dest="mu_step", type=float)

    def grid_flags(p):
        p.add_argument("--protocol", choices=_choices(p_.value for p_ in Protocol),
                       help="default: all")
        p.add_argument("--lmin", type=float, help="km; default is the far-field onset")
        p.add_argument("--lmax", type=float, help="km")
        p.add_argument("--mu-max", dest="mu_max", type=float)
        p.add_argument("--fixed-mu", dest="fixed_mu", type=float)
        p.add_argument("--i2", type=float, help="Eve's information per kept two-photon copy")
        p.add_argument("--yield-model", dest="yield_model", choices=[m.value for m in YieldModel])
        p.add_argument("--tail-bound", dest="tail_bound", choices=["signal", "unit_yield"])

    p = sub.add_parser("sweep", parents=[common], help="rate-distance curve as CSV")
    scenario_flags(p, allow_all=False)
    grid_flags(p)
    p.add_argument("--step", type=float, help="km")
    p.add_argument("--mode", choices=["optimized", "fixed-mu"])
    p.add_argument("--out", help="output path; '-' or omitted for stdout")
    p.add_argument("--pulse-rate-hz", dest="pulse_rate_hz", type=float,
                   help="adds a bits/s column")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tables", parents=[common], help="critical distances and maximum rates vs reference")
    scenario_flags(p, allow_all=True)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("crossing", parents=[common], help="loss at which Eve's information reaches one")
    p.add_argument("--mu", type=float, help="override the reference intensities")
    p.add_argument("--i2", type=float)
    p.set_defaults(func=cmd_crossing)

    p = sub.add_parser("critical-distance", parents=[common], help="largest secure distance")
    scenario_flags(p, allow_all=True)
    grid_flags(p)
    p.add_argument("--tolerance", type=float, default=1.0, help="km")
    p.set_defaults(func=cmd_critical_distance)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (ValueError, KeyError, OSError) as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
