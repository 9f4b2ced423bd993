"""Command-line entry point: ``pfsl <subcommand> ...``.

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure, 3 I/O.
Set ``PFSL_LOG_LEVEL`` (e.g. ``INFO``) for progress messages on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from .analytic import Axis, contour_grid, fixed_varactor, performance
from .config import Config, config_from_dict, load_config
from .core import DesignPoint, VaractorModel, capacitance_at_bias
from .csvio import to_csv_text, write_trace_csv
from .errors import (ConfigError, ConvergenceError, DegenerateTopologyError, DomainError,
                     InfeasibleSynthesisError, NetlistSyntaxError, NoBifurcationError,
                     SingularImpedanceError, TraceError)
from .netlist_io import _Fail, parse_value, read_netlist, write_netlist

log = logging.getLogger("pfsl")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
NOMINAL_CV = 2.0e-12
NOMINAL_DELTA = 0.4
AXIS_NAMES = {"cv": "c_v", "c_v": "c_v", "ztx": "z_tx", "z_tx": "z_tx", "vdc": "v_dc",
              "v_dc": "v_dc", "f": "f_in", "fin": "f_in", "f_in": "f_in"}
METRIC_NAMES = {"pth": "p_th", "p_th": "p_th", "il": "il_ss", "il_ss": "il_ss",
                "pmax": "p_max", "p_max": "p_max"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _num(text: str) -> float:
    try:
        return parse_value(text)
    except _Fail as exc:
        raise argparse.ArgumentTypeError(exc.message) from None


def _axis(text: str) -> Axis:
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"axis must be name:start:stop:steps, got {text!r}")
    name = AXIS_NAMES.get(parts[0].lower())
    if name is None:
        raise argparse.ArgumentTypeError(f"unknown axis {parts[0]!r}")
    try:
        steps = int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"steps must be an integer, got {parts[3]!r}") from None
    try:
        return Axis(name, _num(parts[1]), _num(parts[2]), steps)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _dbm(p_w: float) -> str:
    return "n/a" if not (p_w > 0) or math.isinf(p_w) else f"{10 * math.log10(p_w / 1e-3):.2f} dBm"


def _config(args) -> Config:
    return load_config(args.config) if getattr(args, "config", None) else Config()


def _model(args, cfg: Config) -> VaractorModel | None:
    """Varactor law from --model (JSON) or the config; None means the nominal pinned one."""
    if getattr(args, "model", None):
        with open(args.model, encoding="utf-8") as fh:
            data = json.load(fh)
        if not (isinstance(data, dict) and "varactor" in data):
            data = {"varactor": data}
        return config_from_dict(data).varactor
    return cfg.varactor if cfg.varactor_given else None


def _varactor(args, cfg: Config, v_dc: float):
    model = _model(args, cfg)
    if model is None or args.cv is not None or args.delta is not None:
        base = capacitance_at_bias(model, v_dc) if model is not None else None
        c_v = args.cv if args.cv is not None else (base.c_v if base else NOMINAL_CV)
        delta = args.delta if args.delta is not None else (base.delta if base else NOMINAL_DELTA)
        q_v = model.q_v if model is not None else 15.0
        v_bi = model.v_bi if model is not None else 0.7
        return fixed_varactor(c_v, delta, q_v=q_v, v_dc=v_dc, v_bi=v_bi)
    return capacitance_at_bias(model, v_dc)


# --------------------------------------------------------------------------
# subcommands


def cmd_design(args) -> int:
    from .synthesis import synthesize_network
    cfg = _config(args)
    d = cfg.design
    f_opt = args.f_opt if args.f_opt is not None else d.f_opt
    z_tx = args.ztx if args.ztx is not None else d.z_tx
    l_a = args.la_seed if args.la_seed is not None else d.l_a_seed
    v_dc = args.vdc if args.vdc is not None else d.v_dc
    q_l = args.q_l if args.q_l is not None else d.q_l
    dv = _varactor(args, cfg, v_dc)
    dp = DesignPoint(z0=d.z0, f_in_opt=f_opt, q_l=q_l)
    sn = synthesize_network(dv, dp, z_tx, l_a, d.q_a)
    pm = performance(dv, dp, z_tx)
    print(f"design point   f_opt = {f_opt / 1e9:.6g} GHz, Z_tx = {z_tx:g} ohm, "
          f"V_DC = {v_dc:g} V, Z0 = {d.z0:g} ohm")
    print(f"varactor       C_v = {dv.c_v * 1e12:.4g} pF, delta = {dv.delta:.4g} /V, "
          f"Q_v = {dv.model.q_v:g}")
    print("network")
    for name, val, unit in (("L_a", sn.l_a, "nH"), ("C_a", sn.c_a, "pF"), ("L_b", sn.l_b, "nH"),
                            ("C_b", sn.c_b, "pF"), ("L_c", sn.l_c, "nH"), ("C_blk", sn.c_blk, "pF"),
                            ("L_t", sn.transformer.l_t, "nH"), ("C_t", sn.c_tx, "pF")):
        scale = 1e9 if unit == "nH" else 1e12
        print(f"  {name:6s} = {val * scale:10.5g} {unit}")
    print("analytic metrics")
    print(f"  P_th   = {_dbm(pm.p_th)}")
    print(f"  IL_ss  = {pm.il_ss_db:.3f} dB")
    print(f"  P_max  = {_dbm(pm.p_max)}")
    print(f"  V_th   = {pm.v_th:.4g} V")
    if args.emit_netlist:
        write_netlist(sn.netlist(), args.emit_netlist)
        print(f"netlist written to {args.emit_netlist}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .linear import sweep_sparams
    net = read_netlist(args.netlist)
    if len(net.ports) < 2:
        raise ConfigError("analyze needs a two-port netlist (two .port lines)")
    sw = sweep_sparams(net, args.f_start, args.f_stop, args.n)
    lo, hi = sw.band_edges()
    print(f"points          {len(sw)}")
    print(f"min IL          {-max(sw.s21_db):.3f} dB")
    print(f"3-dB band       {lo / 1e9:.5g} - {hi / 1e9:.5g} GHz")
    print(f"fractional BW   {100 * sw.fractional_bw:.2f} %")
    _emit(sw, args.out)
    return EXIT_OK


def _sweep_args(args, net):
    cfg = _config(args)
    s = cfg.solver
    f_in = args.f_in if args.f_in is not None else (net.cw_sources[0].value if net.cw_sources
                                                  else None)
    if f_in is None:
        raise ConfigError("netlist has no cw-source (V-line); give --f-in")
    p0 = args.p_start if args.p_start is not None else s.p_start_dbm
    p1 = args.p_stop if args.p_stop is not None else s.p_stop_dbm
    step = args.step if args.step is not None else s.step_db
    k = args.k if args.k is not None else s.k_harmonics
    return f_in, p0, p1, step, k


def _report(trace, dv, label=""):
    from .sweep import extract_pmax, extract_pth, is_report
    try:
        p_th = extract_pth(trace)
    except NoBifurcationError:
        print(f"{label}no bifurcation: P_sub never left the probe floor")
        return None
    rep = is_report(trace, dv, p_th=p_th)
    pm = extract_pmax(trace, dv, p_th)
    print(f"{label}P_th          {_dbm(p_th)}")
    print(f"{label}IL_ss         {rep.il_ss:.3f} dB")
    print(f"{label}P_max         {_dbm(pm.p_max)} (diode peak {pm.v_peak_max:.3f} V, "
          f"level {pm.level:.2f} V)")
    print(f"{label}IS_max<P_max  {rep.is_max_below_pmax:.2f} dB")
    return p_th, rep, pm


def _dv_of(net):
    xs = net.varactors
    if not xs:
        raise ConfigError("netlist has no varactor (X-line)")
    return xs[0].varactor


def cmd_sweep(args) -> int:
    from .sweep import power_sweep
    from .units import dbm_to_w
    net = read_netlist(args.netlist)
    if net.pag_source is None:
        raise ConfigError("netlist has no pAG source (A-line at f_in/2); sweep needs one")
    f_in, p0, p1, step, k = _sweep_args(args, net)
    trace = power_sweep(net, f_in, dbm_to_w(p0), dbm_to_w(p1), step, k_harmonics=k,
                        direction="down" if args.down else "up")
    print(f"swept {len(trace)} points {p0:g} -> {p1:g} dBm at {f_in / 1e9:.6g} GHz "
          f"({'all converged' if trace.all_converged else 'some points flagged'})")
    _report(trace.ascending(), _dv_of(net))
    _emit(trace, args.out)
    return EXIT_OK


def cmd_cascade(args) -> int:
    from .sweep import cascade_stages, power_sweep
    from .units import dbm_to_w
    net = read_netlist(args.netlist)
    if net.pag_source is None:
        raise ConfigError("netlist has no pAG source (A-line at f_in/2); cascade needs one")
    if args.m < 1:
        raise ConfigError("--m must be >= 1")
    f_in, p0, p1, step, k = _sweep_args(args, net)
    dv = _dv_of(net)
    out = {}
    for m in sorted({1, args.m}):
        trace = power_sweep(cascade_stages(net, m), f_in, dbm_to_w(p0), dbm_to_w(p1), step,
                            k_harmonics=k)
        print(f"m = {m}")
        out[m] = (_report(trace, dv, "  "), trace)
    if args.m > 1 and out[1][0] and out[args.m][0]:
        (p1_, r1, _), (pm_, rm, _) = out[1][0], out[args.m][0]
        print(f"delta P_th    {10 * math.log10(pm_ / p1_):+.2f} dB")
        print(f"delta IL_ss   {rm.il_ss - r1.il_ss:+.2f} dB")
        print(f"delta IS_max  {rm.is_max_below_pmax - r1.is_max_below_pmax:+.2f} dB")
    _emit(out[args.m][1], args.out)
    return EXIT_OK


def cmd_contour(args) -> int:
    cfg = _config(args)
    d = cfg.design
    v_dc = args.vdc if args.vdc is not None else d.v_dc
    dv = _varactor(args, cfg, v_dc)
    dp = DesignPoint(z0=d.z0, f_in_opt=args.f if args.f is not None else d.f_opt,
                     q_l=math.inf)
    z_tx = args.ztx if args.ztx is not None else d.z_tx
    grid = contour_grid(METRIC_NAMES[args.metric], args.x, args.y, dv, dp, z_tx,
                        track_bias=not args.fixed_cv)
    if grid.nan_count:
        log.warning("%d grid cells undefined (NaN)", grid.nan_count)
    _emit(grid, args.out, stdout_default=True)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from . import oracle, transient
    fixtures = oracle.default_fixtures()
    if args.netlist:
        from .units import dbm_to_w
        net = read_netlist(args.netlist)
        if not net.cw_sources:
            raise ConfigError("netlist has no cw-source (V-line)")
        f_in = net.cw_sources[0].value
        p = dbm_to_w(args.p_dbm) if args.p_dbm is not None else net.cw_sources[0].power
        fixtures = [oracle.Fixture(os.path.basename(args.netlist), net, f_in, p)]
    rep = oracle.run_oracle(fixtures, k_harmonics=args.k)
    print(f"transient kernel: {transient.KERNEL}")
    print(rep.summary())
    ok = rep.passed(args.tol)
    print(f"max error {rep.max_error:.3e} (limit {args.tol:g}): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERIC


def _emit(data, path, stdout_default=False):
    if path and path != "-":
        write_trace_csv(data, path)
        print(f"wrote {path}", file=sys.stderr)
    elif stdout_default or path == "-":
        sys.stdout.write(to_csv_text(data))


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pfsl", description="Parametric frequency selective limiter toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def common_varactor(p):
        p.add_argument("--model", help="JSON varactor model (flat or a config with 'varactor')")
        p.add_argument("--cv", type=_num, help="pin C_v at the bias (default 2p without --model)")
        p.add_argument("--delta", type=_num, help="pin delta (default 0.4 without --model)")
        p.add_argument("--config", help="JSON configuration file")

    p = sub.add_parser("design", help="synthesize a limiter and print analytic metrics")
    p.add_argument("--f-opt", type=_num)
    p.add_argument("--ztx", type=_num)
    p.add_argument("--la-seed", type=_num)
    p.add_argument("--vdc", type=_num)
    p.add_argument("--q-l", type=_num, help="inductor Q (inf for lossless)")
    p.add_argument("--emit-netlist", metavar="PATH")
    common_varactor(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("analyze", help="small-signal S-parameters over a band")
    p.add_argument("netlist")
    p.add_argument("--f-start", type=_num, required=True)
    p.add_argument("--f-stop", type=_num, required=True)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--out", help="CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_analyze)

    def sweep_opts(p):
        p.add_argument("netlist")
        p.add_argument("--f-in", type=_num)
        p.add_argument("--p-start", type=float, help="dBm")
        p.add_argument("--p-stop", type=float, help="dBm")
        p.add_argument("--step", type=float, help="dB")
        p.add_argument("--k", type=int, help="harmonics of f_in/2")
        p.add_argument("--out", help="CSV path ('-' for stdout)")
        p.add_argument("--config", help="JSON configuration file")

    p = sub.add_parser("sweep", help="HB power sweep and interference-suppression report")
    sweep_opts(p)
    p.add_argument("--down", action="store_true", help="sweep from high to low power")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cascade", help="compare an m-stage cascade with one stage")
    sweep_opts(p)
    p.add_argument("--m", type=int, default=2)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("contour", help="closed-form metric over a two-axis grid")
    p.add_argument("--metric", choices=sorted(METRIC_NAMES), required=True)
    p.add_argument("--x", type=_axis, required=True, help="name:start:stop:steps")
    p.add_argument("--y", type=_axis, required=True, help="name:start:stop:steps")
    p.add_argument("--ztx", type=_num)
    p.add_argument("--vdc", type=_num)
    p.add_argument("--f", type=_num)
    p.add_argument("--fixed-cv", action="store_true",
                   help="keep C_v and delta fixed when v_dc is an axis")
    p.add_argument("--out", help="CSV path (default stdout)")
    common_varactor(p)
    p.set_defaults(func=cmd_contour)

    p = sub.add_parser("oracle", help="harmonic balance versus the transient integrator")
    p.add_argument("netlist", nargs="?", help="custom fixture (default: built-in five)")
    p.add_argument("--p-dbm", type=float)
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--tol", type=float, default=0.01)
    p.set_defaults(func=cmd_oracle)
    return ap


def cli_main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PFSL_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("pfsl: a subcommand is required "
                             "(design, analyze, sweep, contour, cascade, oracle)")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (NetlistSyntaxError, ConfigError, DomainError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, NoBifurcationError, InfeasibleSynthesisError,
            DegenerateTopologyError, SingularImpedanceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # malformed JSON and the like
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
