"""Command-line front end: ``magtrans <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import inout, oracle, sweep
from .effective import (
    CouplingSet,
    build_rwa_hamiltonian,
    couplings_from_config,
    transduction_rate,
    validity,
)
from .errors import DomainError, MagtransError
from .levels import Detunings, find_crossing, magnon_energy, optical_energy, spin_energy
from .params import DeviceConfig, resolve_config, total_couplings

TABLE_TOTALS = (("g_a_total", 1.9e9), ("g_b_total", 37e6), ("g_b_tilde_total", 45e6))
TABLE_RTOL = 0.05
DEFAULT_CONFIG = "case2"


def _complex(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag, "abs": abs(z)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return _complex(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _format(doc, as_json) -> str:
    if as_json:
        return json.dumps(_jsonable(doc), indent=1) + "\n"
    lines = []

    def walk(prefix, value):
        if isinstance(value, dict):
            for k, v in value.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        else:
            lines.append(f"{prefix}: {value}")

    walk("", doc)
    return "\n".join(lines) + "\n"


def _write(args, text):
    if args.out:
        sweep.emit_text(text, args.out)
    else:
        sys.stdout.write(text)


def _point(cfg: DeviceConfig, args) -> Detunings:
    """Detunings from explicit values, or from (B_z, omega_b) via the level scheme."""
    p = {}
    if args.delta is not None:
        p["delta"] = args.delta
        if args.delta_tilde is not None:
            p["delta_tilde"] = args.delta_tilde
        else:
            p["bz"] = cfg.static_field_bz if args.bz is None else args.bz
    elif args.delta_tilde is not None:
        p["delta_tilde"] = args.delta_tilde
        p["bz"] = cfg.static_field_bz if args.bz is None else args.bz
    else:
        p["bz"] = cfg.static_field_bz if args.bz is None else args.bz
        p["omega_b"] = cfg.cavities.omega_b if args.omega_b is None else args.omega_b
    delta, delta_t = sweep._detunings(cfg, p)
    dc = cfg.delta_cap if args.delta_cap is None else args.delta_cap
    return Detunings(float(delta), float(delta_t), float(dc))


def _model(cfg, args):
    c = couplings_from_config(cfg, rabi_pump=getattr(args, "rabi_pump", None))
    d = _point(cfg, args)
    return c, d, transduction_rate(c, d)


def cmd_levels(cfg, args):
    bz = cfg.static_field_bz if args.bz is None else args.bz
    doc = {"bz": bz, "spin": float(spin_energy(bz, cfg))}
    if cfg.has_magnet:
        doc["magnon"] = float(magnon_energy(bz, cfg))
        doc["crossing_bz"] = find_crossing(cfg)
    if cfg.erbium.delta_e_zero_field is not None:
        doc["optical"] = float(optical_energy(bz, cfg))
    doc["pump_frequency"] = cfg.cavities.omega_a - cfg.cavities.omega_b
    return doc


def _rate_doc(c, d, m, cfg, threshold):
    report = validity(c, d, cfg, threshold)
    return {
        "detunings": {"delta": d.delta, "delta_tilde": d.delta_tilde, "delta_cap": d.delta_cap},
        "s_over_omega": m.s_over_omega,
        "abs_s": abs(m.s_rate),
        "lambda_a": m.lambda_a,
        "lambda_b": m.lambda_b,
        "validity": {"ok": report.ok, "threshold": report.threshold, "ratios": report.ratios, "mask": report.mask},
    }


def cmd_rate(cfg, args):
    c, d, m = _model(cfg, args)
    return _rate_doc(c, d, m, cfg, args.threshold)


def cmd_eff(cfg, args):
    budget = inout.LossBudget.from_cavities(cfg.cavities)
    if args.s is not None:
        s = args.s
    else:
        s = _model(cfg, args)[2].s_rate
    doc = {
        "abs_s": abs(s),
        "efficiency": float(inout.efficiency(s, budget)),
        "efficiency_lossless": float(inout.efficiency_lossless(s, budget.kappa_a, budget.kappa_b)),
        "cooperativity": float(inout.cooperativity(s, budget.kappa_a, budget.kappa_b)),
        "eta_max": inout.eta_max(budget.ratio_a, budget.ratio_b),
        "eta_optimal": inout.eta_optimal(budget.ratio_a, budget.ratio_b),
    }
    if s != 0:
        doc["bandwidth"] = inout.bandwidth(s, budget.kappa_a, budget.kappa_b)
    return doc


def cmd_match(cfg, args):
    c, d, m = _model(cfg, args)
    cav = cfg.cavities
    ka_i, kb_i = (cav.kappa_a_i, cav.kappa_b_i) if args.intrinsic else (0.0, 0.0)
    doc = {"s_over_omega": m.s_over_omega, "intrinsic": args.intrinsic}
    if args.kappa_c is not None:
        doc["kappa_c"] = args.kappa_c
        doc["rabi_pump"] = inout.match_pump(args.kappa_c, m.s_over_omega, ka_i, kb_i)
    else:
        doc["rabi_pump"] = c.rabi_pump
        doc["kappa_c"] = inout.match_kappa(m.s_over_omega, c.rabi_pump, ka_i, kb_i)
    er = cfg.erbium
    if c.magnon_free:
        doc["closed_form_ratio"] = inout.matching_ratio_bare(er.n_er, er.g_b, er.g_a, d.delta_cap, d.delta)
    else:
        doc["closed_form_ratio"] = inout.matching_ratio_magnet(
            er.n_er, abs(c.h_perp), c.g_b_tilde, er.g_a, d.delta_cap, d.delta, d.delta_tilde
        )
    return doc


def demo_point():
    """Synthetic point where every elimination ratio is about 60 and the pulls cancel."""
    u = 1e6
    c = CouplingSet(g_a=2 * u, g_b=u, g_b_tilde=u, h_perp=-u, rabi_pump=u, n_er=1.0, n_fe=1.0)
    delta = delta_t = 60 * u
    pair = delta * delta_t - abs(c.h) ** 2
    cross = -2.0 * (c.h * c.g_tilde * np.conj(c.g_b)).real
    shift = cross + delta * abs(c.g_tilde) ** 2 + delta_t * abs(c.g_b) ** 2
    delta_cap = (abs(c.g_a) ** 2 * pair + abs(c.rabi_pump) ** 2 * abs(c.g_tilde) ** 2) / shift
    return c, Detunings(delta, delta_t, delta_cap)


def cmd_oracle(cfg, args):
    if args.demo:
        c, d = demo_point()
    else:
        full = couplings_from_config(cfg)
        # One ion: the five-level problem is a single-emitter model.
        c = CouplingSet(full.g_a, full.g_b, full.g_b_tilde, full.h_perp, full.rabi_pump, 1.0, full.n_fe)
        d = _point(cfg, args)
    m = transduction_rate(c, d)
    h = build_rwa_hamiltonian(c, d)
    t_end = args.duration if args.duration is not None else oracle.transfer_period(m)
    full_t = oracle.evolve_full(h, np.eye(5)[0], t_end, samples=args.samples)
    eff_t = oracle.evolve_effective(m, np.eye(2)[0], t_end, samples=args.samples)
    doc = {"t_end": t_end, "steps": full_t.steps, "dt": full_t.dt, "norm_drift": full_t.norm_drift}
    doc.update(oracle.compare(full_t, eff_t))
    if args.trajectory:
        rows = ["# t,p0,p1,p2,p3,p4,eff_p0,eff_p1"]
        for t, pf, pe in zip(full_t.times, full_t.populations, eff_t.populations):
            rows.append(",".join(repr(float(v)) for v in (t, *pf, *pe)))
        sweep.emit_text("\n".join(rows) + "\n", args.trajectory)
    return doc


def cmd_check_tables(cfg, args):
    got = total_couplings(cfg)
    doc, ok = {}, True
    for (name, expected), value in zip(TABLE_TOTALS, got):
        passed = abs(value - expected) <= TABLE_RTOL * expected
        ok &= passed
        doc[name] = {"value": value, "table": expected, "status": "PASS" if passed else "FAIL"}
    return doc, ok


def _fixed(pairs):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"--fixed expects name=value, got {item!r}")
        out[key.strip()] = float(value)
    return out


def cmd_sweep(cfg, args):
    x, y = sweep.AxisSpec.parse(args.x), sweep.AxisSpec.parse(args.y)
    return sweep.sweep2d(
        cfg, x, y, args.quantity, fixed=_fixed(args.fixed),
        adiabatic_threshold=args.adiabatic_threshold, threads=args.threads,
    )


def cmd_figure(cfg, args):
    return sweep.run_figure(args.name, cfg, count=args.count, threads=args.threads)


def _point_options(p):
    p.add_argument("--bz", type=float, help="static field in tesla (default: config)")
    p.add_argument("--omega-b", type=float, help="microwave resonator frequency in Hz")
    p.add_argument("--delta", type=float, help="spin detuning in Hz")
    p.add_argument("--delta-tilde", type=float, help="magnon detuning in Hz")
    p.add_argument("--delta-cap", type=float, help="optical detuning in Hz (default: config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magtrans", description="Magnon-assisted microwave-optical transduction model.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, help="config file path or built-in name (default: case2)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write output to FILE instead of stdout")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("levels", parents=[common], help="level energies and the magnon/spin crossing")
    p.add_argument("--bz", type=float)

    p = sub.add_parser("rate", parents=[common], help="transduction rate and validity at one point")
    _point_options(p)
    p.add_argument("--rabi-pump", type=float)
    p.add_argument("--threshold", type=float, default=10.0)

    p = sub.add_parser("eff", parents=[common], help="efficiency, cooperativity and bandwidth")
    _point_options(p)
    p.add_argument("--s", type=float, help="use this |S| in Hz instead of computing it")

    p = sub.add_parser("match", parents=[common], help="impedance-matching kappa_c or pump")
    _point_options(p)
    p.add_argument("--kappa-c", type=float, help="solve for the pump giving this kappa_c")
    p.add_argument("--intrinsic", action="store_true", help="include the config's intrinsic losses")

    p = sub.add_parser("sweep", parents=[common], help="two-dimensional grid sweep")
    p.add_argument("--x", required=True, help="axis as name[min:max:count:scale]")
    p.add_argument("--y", required=True, help="axis as name[min:max:count:scale]")
    p.add_argument("--quantity", default="s_over_omega", choices=sweep.QUANTITIES)
    p.add_argument("--fixed", action="append", metavar="NAME=VALUE")
    p.add_argument("--adiabatic-threshold", type=float)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("oracle", parents=[common], help="five-level dynamics versus the effective model")
    _point_options(p)
    p.add_argument("--demo", action="store_true", help="use the built-in validity-passing test point")
    p.add_argument("--duration", type=float, help="seconds (default: one transfer period)")
    p.add_argument("--samples", type=int, default=oracle.DEFAULT_SAMPLES)
    p.add_argument("--trajectory", help="also dump populations as CSV to this file")

    sub.add_parser("check-tables", parents=[common], help="coupling totals against the tabulated values")

    p = sub.add_parser("figure", parents=[common], help="emit the data behind a figure panel")
    p.add_argument("name", choices=sweep.FIGURES)
    p.add_argument("--count", type=int, help="points per axis (default: preset)")
    p.add_argument("--threads", type=int, default=1)
    return parser


COMMANDS = {
    "levels": cmd_levels,
    "rate": cmd_rate,
    "eff": cmd_eff,
    "match": cmd_match,
    "check-tables": cmd_check_tables,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
    "figure": cmd_figure,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = resolve_config(args.config)
        result = COMMANDS[args.command](cfg, args)
        status = 0
        if args.command == "check-tables":
            result, ok = result
            status = 0 if ok else 1
        if isinstance(result, (sweep.SweepResult, sweep.LevelCurves)):
            text = sweep.emit(result, "json" if args.json else "csv")
        else:
            text = _format(result, args.json)
        _write(args, text)
        return status
    except MagtransError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
