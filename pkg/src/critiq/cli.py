"""``critiq`` command-line experiment runner.

Subcommands: constants, busy-tail, nstat, bravo, sweep, ui-check.  Each run
writes plot-ready CSV plus ``summary.json`` into ``--out``.  Exit status is
0 on success, 2 on a usage/config error and 3 when ``--check`` is set and a
tolerance check fails.

Settings can also come from ``--config FILE`` with ``key = value`` lines,
keys named like the long flags (``step-cap = 1e6``, ``check = true``).
Flags given on the command line win over the file, and the file wins over
the built-in defaults.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import qsim, report, rwalk, stats, streams, theory
from .dists import calibrate, parse_distribution
from .errors import CritiqError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CHECK = 3

DEFAULT_CHECK_POINTS = "1e2,1e3,1e4"


def _count(text: str) -> int:
    """Positive integer, scientific notation allowed (``1e7``)."""
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 1 and v == int(v)):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(v)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text: str) -> np.ndarray:
    """``a,b,c`` or ``geom:lo,hi,points``."""
    if text.startswith("geom:"):
        lo, hi, n = _floats(text[5:])
        return np.logspace(math.log10(lo), math.log10(hi), int(n))
    return np.asarray(_floats(text))


def _model_flags(p: argparse.ArgumentParser, with_rho: bool = True) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--arrival", default="exp:1", help="inter-arrival law, family:p1,p2,... (default exp:1)")
    g.add_argument("--service", default="exp:1", help="service law, family:p1,p2,... (default exp:1)")
    g.add_argument("--lambda", dest="lam", type=float, default=1.0, help="arrival rate (default 1)")
    if with_rho:
        g.add_argument("--rho", type=float, default=1.0, help="load E[V]/E[U] (default 1)")


def _run_flags(p: argparse.ArgumentParser, tol: float) -> None:
    g = p.add_argument_group("run")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${streams.THREADS_ENV} or 1)")
    g.add_argument("--out", default="critiq_out", help="output directory")
    g.add_argument("--config", default=None, help="key = value file; flags override it")
    g.add_argument("--check", action="store_true", help="exit 3 if the tolerance check fails")
    g.add_argument("--tol", type=float, default=tol, help=f"relative tolerance for --check (default {tol})")


def _cycle_flags(p: argparse.ArgumentParser, cycles: str) -> None:
    g = p.add_argument_group("cycles")
    g.add_argument("--cycles", type=_count, default=_count(cycles), help=f"busy cycles (default {cycles})")
    g.add_argument("--step-cap", type=_count, default=rwalk.DEFAULT_STEP_CAP, help="walk truncation (default 1e7)")


DIST_HELP = """distribution strings:
  exp:RATE  det:VALUE  erlang:K,RATE  hyperexp:P,RATE1,RATE2  h2:SCV[,MEAN]
  uniform:LOW,HIGH  lognormal:MU,SIGMA  pareto:ALPHA,SCALE (ALPHA > 2)
means are rescaled by --lambda/--rho, so only the shape matters."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critiq",
        description="Critical GI/G/1 busy-period and BRAVO experiments.",
        epilog=DIST_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    fmt = dict(epilog=DIST_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)

    p = sub.add_parser("constants", help="closed-form constants as JSON", **fmt)
    _model_flags(p)
    p.add_argument("--mean-idle", type=float, default=None, help="E[I] estimate for a general GI/G/1")
    p.add_argument("--out", default=None, help="also write summary.json here")
    p.add_argument("--config", default=None)

    p = sub.add_parser("busy-tail", help="busy-period survival and tail fit", **fmt)
    _model_flags(p)
    _run_flags(p, 0.10)
    _cycle_flags(p, "1e6")
    p.add_argument("--grid", type=_grid, default=_grid("geom:1,1e4,17"), help="x values for survival.csv")
    p.add_argument("--check-points", type=_floats, default=_floats(DEFAULT_CHECK_POINTS))
    p.add_argument("--window", type=_floats, default=[1e2, 1e4], help="fit window lo,hi")
    p.add_argument("--series-depth", type=int, default=1000, help="terms of the b series (0 skips)")
    p.add_argument("--series-reps", type=_count, default=100_000)
    p.add_argument("--cycles-csv", default=None, help="also write per-cycle records here")

    p = sub.add_parser("nstat", help="tail of the number served per busy period", **fmt)
    _model_flags(p)
    _run_flags(p, 0.10)
    _cycle_flags(p, "1e6")
    p.add_argument("--grid", type=_grid, default=_grid("geom:1,1e4,17"))
    p.add_argument("--check-points", type=_floats, default=_floats(DEFAULT_CHECK_POINTS))

    p = sub.add_parser("bravo", help="Var D(t) / E D(t) over a time grid", **fmt)
    _model_flags(p)
    _run_flags(p, 0.10)
    p.add_argument("--reps", type=_count, default=10_000)
    p.add_argument("--grid", type=_grid, default=qsim.geometric_grid())
    p.add_argument("--count", choices=("departures", "arrivals"), default="departures")

    p = sub.add_parser("sweep", help="final dispersion ratio across loads", **fmt)
    _model_flags(p, with_rho=False)
    _run_flags(p, 0.10)
    p.add_argument("--rho", type=_floats, default=[0.5, 0.8, 1.0, 1.25, 2.0])
    p.add_argument("--horizon", type=float, default=1e4)
    p.add_argument("--reps", type=_count, default=2000)

    p = sub.add_parser("ui-check", help="boundedness of E[Q(t)^2]/t", **fmt)
    _model_flags(p)
    _run_flags(p, 0.10)
    p.add_argument("--reps", type=_count, default=10_000)
    p.add_argument("--grid", type=_grid, default=qsim.geometric_grid())
    return parser


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def config_tokens(path: str | Path) -> list[str]:
    """Translate ``key = value`` lines into flag tokens."""
    tokens: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CritiqError(f"{path}:{lineno}: expected 'key = value'")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if flag == "--check":
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
            continue
        tokens += [flag, value]
    return tokens


def _model(args):
    rho = getattr(args, "rho", 1.0)
    return calibrate(parse_distribution(args.arrival), parse_distribution(args.service), args.lam, rho)


def _echo(args) -> dict:
    skip = {"threads", "out", "config", "cycles_csv"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _finish(args, out: Path, summary: dict, ok: bool | None) -> int:
    summary["config"] = _echo(args)
    if ok is not None:
        summary["check_passed"] = ok
    report.write_json(out / "summary.json", summary)
    print(report.dumps(summary))
    if args.check and ok is False:
        return EXIT_CHECK
    return EXIT_OK


def cmd_constants(args) -> int:
    model = _model(args)
    rep = theory.constants(model, args.mean_idle).as_dict()
    if args.out:
        report.write_json(Path(args.out) / "summary.json", rep)
    print(report.dumps(rep))
    return EXIT_OK


def _reference_constant(model, mean_idle_hat: float, which: str) -> tuple[float, str]:
    """Theory constant with the closed-form E[I] when one exists, else E^[I]."""
    th = theory.constants(model) if model.rho == 1.0 and not model.degenerate else None
    if th is not None and th.mean_idle is not None:
        ei, src = th.mean_idle, th.mean_idle_source
    else:
        ei, src = mean_idle_hat, "estimate"
    fn = theory.tail_constant if which == "busy" else theory.n_tail_constant
    return fn(ei, model.lam, model.ca2, model.cs2), src


def cmd_busy_tail(args) -> int:
    model = _model(args)
    out = Path(args.out)
    batch = rwalk.sample_cycles(model, args.cycles, args.seed, args.step_cap, args.threads)
    if args.cycles_csv:
        report.write_cycles(args.cycles_csv, batch)
    est = rwalk.estimate_constants(
        model, args.cycles, args.series_depth, args.seed, args.step_cap,
        args.series_reps, args.threads, batch=batch,
    )
    sorted_b = stats.SortedSamples.of(batch)
    curve = stats.empirical_survival(sorted_b, args.grid)
    report.write_csv(out / "survival.csv", report.SURVIVAL_HEADER, curve.rows())

    safe = args.step_cap * model.service.mean / 10
    fit = stats.fit_tail(sorted_b, tuple(args.window), safe_upper=safe)
    cmp = stats.compare_to_theory(fit, model, est, args.tol)
    report.write_json(out / "fit.json", cmp)

    ref, src = _reference_constant(model, est.mean_idle, "busy")
    pts = stats.empirical_survival(sorted_b, args.check_points)
    rel = np.abs(pts.scaled - ref) / ref
    ok = bool(cmp["pass"] and abs(fit.exponent + 0.5) <= 0.05 and np.all(rel <= args.tol))
    summary = {
        "model": model.describe(),
        **est.summary(),
        "fit": fit.as_dict(),
        "c_reference": ref,
        "c_reference_source": src,
        "check_points": [
            {"x": float(x), "sqrtx_survival": float(v), "rel_err": float(r)}
            for x, v, r in zip(pts.grid, pts.scaled, rel)
        ],
    }
    return _finish(args, out, summary, ok if args.check else None)


def cmd_nstat(args) -> int:
    model = _model(args)
    out = Path(args.out)
    batch = rwalk.sample_cycles(model, args.cycles, args.seed, args.step_cap, args.threads)
    est = rwalk.constants_from_cycles(model, batch)
    curve = rwalk.n_survival(batch, args.grid)
    report.write_csv(out / "n_survival.csv", report.N_SURVIVAL_HEADER, curve.rows())
    c_hat = theory.n_tail_constant(est.mean_idle, model.lam, model.ca2, model.cs2)
    pts = rwalk.n_survival(batch, args.check_points)
    rel = np.abs(pts.scaled - c_hat) / c_hat
    slope = rwalk.n_tail_slope(rwalk.n_survival(batch, np.logspace(2, 4, 21)))
    ok = bool(np.all(rel <= args.tol) and abs(slope + 0.5) <= 0.05)
    summary = {
        "model": model.describe(),
        "mean_idle": est.mean_idle,
        "se_idle": est.se_idle,
        "censored_fraction": est.censored_fraction,
        "n_tail_constant": c_hat,
        "slope": slope,
        "check_points": [
            {"n": float(n), "sqrtn_survival": float(v), "rel_err": float(r)}
            for n, v, r in zip(pts.grid, pts.scaled, rel)
        ],
    }
    return _finish(args, out, summary, ok if args.check else None)


def cmd_bravo(args) -> int:
    model = _model(args)
    out = Path(args.out)
    curve = qsim.bravo_curve(model, args.grid, args.reps, args.seed, args.threads, args.count)
    report.write_csv(out / "bravo.csv", report.BRAVO_HEADER, curve.rows())
    if args.count == "arrivals":
        target = model.ca2
    elif model.rho == 1.0 and not model.degenerate:
        target = theory.bravo_limit(model.ca2, model.cs2)
    else:
        target = None
    summary = {"model": model.describe(), "final_ratio": curve.final_ratio,
               "final_ci_half": float(curve.ratio_ci[-1]), "target": target,
               "monotone_within_ci": qsim.monotone_within_ci(curve)}
    ok = None
    if target is not None:
        rel = abs(curve.final_ratio - target) / target
        summary["rel_err"] = rel
        ok = rel <= args.tol and (args.count == "arrivals" or summary["monotone_within_ci"])
    return _finish(args, out, summary, ok if args.check else None)


def cmd_sweep(args) -> int:
    a, s = parse_distribution(args.arrival), parse_distribution(args.service)
    out = Path(args.out)
    rows = qsim.load_sweep(a, s, args.rho, args.horizon, args.reps, args.lam, args.seed, args.threads)
    report.write_csv(out / "sweep.csv", report.SWEEP_HEADER,
                     [(r.rho, r.t_horizon, r.ratio, r.ci_half) for r in rows])
    has_one = any(r.rho == 1.0 for r in rows)
    dip = qsim.dip_at_one(rows) if has_one else None
    summary = {"rows": [vars(r) for r in rows], "dip_at_rho_1": dip}
    ok = bool(dip) if has_one else None
    return _finish(args, out, summary, ok if args.check else None)


def cmd_ui_check(args) -> int:
    model = _model(args)
    out = Path(args.out)
    diag = qsim.ui_diagnostic(model, args.grid, args.reps, args.seed, args.threads)
    report.write_csv(out / "ui.csv", report.UI_HEADER, diag.rows())
    summary = {"model": model.describe(), "slope_per_log_t": diag.slope,
               "slope_ci_half": diag.slope_ci, "no_upward_trend": diag.no_upward_trend,
               "max_mean": float(diag.running_max[-1])}
    return _finish(args, out, summary, diag.no_upward_trend if args.check else None)


COMMANDS = {
    "constants": cmd_constants,
    "busy-tail": cmd_busy_tail,
    "nstat": cmd_nstat,
    "bravo": cmd_bravo,
    "sweep": cmd_sweep,
    "ui-check": cmd_ui_check,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg = _config_path(argv)
        if cfg is not None and argv and not argv[0].startswith("-"):
            argv = argv[:1] + config_tokens(cfg) + argv[1:]
    except (OSError, CritiqError) as exc:
        print(f"critiq: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except CritiqError as exc:
        print(f"critiq: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
