"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 no equilibrium,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Any, Iterable, Sequence

from . import __version__
from .core import DerivedConstants
from .errors import InvalidParameterError, NoEquilibriumError
from .game import CostPolicy, MixedStrategy, design_costs, mne_family, solve_equilibria, verify_mne
from .montecarlo import SimConfig, comparison_report, simulate
from .poa import poa_sweep
from .scenario import Scenario, ScenarioError, Sweep, load_scenario
from .throughput import optimal_mne, regime_map
from .validation import run_verification

EXIT_OK, EXIT_CONFIG, EXIT_NO_EQ, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("fdgame")


def fmt(v: Any) -> str:
    """Stable CSV cell: 12 significant digits, ``inf``, ``true``/``false``."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0.0:
            return "0"
        return format(v, ".12g")
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _emit(args: argparse.Namespace, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _scenario(args: argparse.Namespace) -> Scenario:
    if args.scenario:
        sc = load_scenario(args.scenario)
        if args.beta is not None:
            if sc.is_physical:
                raise ScenarioError("--beta overrides need a constants scenario")
            sc = Scenario(sc.name, sc.model.with_beta(args.beta), sc.costs, sc.sweeps, sc.simulation)
        return sc
    if args.iota_c is None or args.iota_f is None or args.beta is None:
        raise ScenarioError("give --scenario, or all of --iota-c, --iota-f and --beta")
    c = DerivedConstants(beta=args.beta, phi=args.phi if args.phi is not None else 1.0,
                         iota_c=args.iota_c, iota_f=args.iota_f)
    return Scenario("inline", c)


def _sweep(args: argparse.Namespace, sc: Scenario, key: str, default: Sweep) -> list[float]:
    if args.start is not None or args.stop is not None or args.step is not None:
        base = sc.sweep(key) or default
        sw = Sweep(base.start if args.start is None else args.start,
                   base.stop if args.stop is None else args.stop,
                   base.step if args.step is None else args.step)
        if sw.step <= 0:
            raise ScenarioError("--step must be positive")
    else:
        sw = sc.sweep(key) or default
    return sw.values()


def cmd_region(args: argparse.Namespace) -> int:
    sc = _scenario(args)
    c = sc.constants
    lo, hi = c.phi * c.p_cf, c.phi
    vals = _sweep(args, sc, "c_hd", Sweep(0.0, round(1.05 * c.phi, 6), round(c.phi / 200, 6)))
    if not args.no_edges:
        # the pinch points are where the region degenerates; always tabulate them
        vals += [v for v in (lo, hi) if vals[0] <= v <= vals[-1]]
        vals = sorted(set(vals))
    rows = []
    for ch in vals:
        try:
            fam = mne_family(c, ch)
            rows.append((ch, fam.pi_tfd_min, fam.pi_tfd_max, True))
        except NoEquilibriumError:
            rows.append((ch, math.nan, math.nan, False))
    if args.format == "json":
        _emit(args, to_json({"constants": c.to_dict(), "rows": [
            {"c_hd": r[0], "pi_tfd_min": r[1], "pi_tfd_max": r[2], "feasible": r[3]} for r in rows]}))
    else:
        _emit(args, to_csv(["c_hd", "pi_tfd_min", "pi_tfd_max", "feasible"], rows))
    if args.figure:
        from .plotting import plot_region
        plot_region(rows, c, args.figure)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    sc = _scenario(args)
    c = sc.constants
    if args.c_hd is not None:
        costs = CostPolicy(args.c_hd, args.c_fd if args.c_fd is not None else 2 * c.beta * args.c_hd)
    elif sc.costs is not None:
        costs = sc.costs
    else:
        raise ScenarioError("no half-duplex price: give --c-hd or a 'costs' block")
    fam = solve_equilibria(c, costs)
    x = args.pi_tfd if args.pi_tfd is not None else 0.5 * (fam.pi_tfd_min + fam.pi_tfd_max)
    pi = fam(x)
    ver = verify_mne(c, pi, costs)
    out = {"constants": c.to_dict(), "strategy": pi.to_dict(), "costs": costs.to_dict(),
           "family": fam.to_dict(), **ver.to_dict(), "equilibrium": ver.is_equilibrium()}
    if args.format == "csv":
        _emit(args, to_csv(["c_hd", "c_fd", "pi_w", "pi_tA", "pi_tB", "pi_tfd", "max_abs_residual"],
                           [(costs.c_hd, costs.c_fd, pi.pi_w, pi.pi_tA, pi.pi_tB, pi.pi_tfd,
                             ver.max_residual)]))
    else:
        _emit(args, to_json(out))
    return EXIT_OK


def cmd_design(args: argparse.Namespace) -> int:
    sc = _scenario(args)
    c = sc.constants
    if args.pi_tfd is not None:
        vals = [args.pi_tfd]
    else:
        vals = _sweep(args, sc, "pi_tfd", Sweep(0.0, 1.0, 0.05))
    rows = [design_costs(c, x) for x in vals]
    header = ["pi_tfd", "c_hd_min", "c_hd_max", "c_fd_min", "c_fd_max", "degenerate"]
    if args.format == "json":
        _emit(args, to_json({"constants": c.to_dict(), "rows": [r.to_dict() for r in rows]}))
    else:
        _emit(args, to_csv(header, [(r.target_pi_tfd, r.c_hd_min, r.c_hd_max, r.c_fd_min,
                                     r.c_fd_max, r.is_point) for r in rows]))
    return EXIT_OK


def _iota_grid(n: int) -> list[tuple[float, float]]:
    centres = [(k + 0.5) / n for k in range(n)]
    return [(ic, jf) for ic in centres for jf in centres if ic < jf]


def cmd_optimum(args: argparse.Namespace) -> int:
    grid_n = args.grid
    sc = None
    if args.scenario or args.iota_c is not None:
        sc = _scenario(args)
    if grid_n is None and sc is not None and "iota_grid" in sc.sweeps:
        grid_n = sc.sweeps["iota_grid"]["n"]
    if grid_n is not None:
        beta = args.beta if args.beta is not None else (sc.constants.beta if sc else None)
        if beta is None:
            raise ScenarioError("grid mode needs --beta or a scenario")
        rmap = regime_map(_iota_grid(grid_n), beta)
        rows = rmap.rows
        phi = 1.0
    else:
        if sc is None:
            raise ScenarioError("give --scenario, inline constants, or --grid")
        c = sc.constants
        phi = c.phi
        rows = [(c.iota_c, c.iota_f, optimal_mne(c))]
    header = ["iota_c", "iota_f", "boundary_label", "pi_w", "pi_thd", "pi_tfd",
              "t_star_over_phi", "enabling_c_hd_over_phi"]
    absolute = args.absolute and grid_n is None
    if args.absolute and grid_n is not None:
        raise ScenarioError("--absolute is only available for a single scenario")
    if absolute:
        header += ["t_star", "enabling_c_hd"]
    table = []
    for ic, jf, opt in rows:
        p = opt.profile
        row = [ic, jf, opt.boundary, p.pi_w, p.pi_thd, p.pi_tfd,
               opt.t_star / phi, opt.enabling_c_hd / phi]
        if absolute:
            row += [opt.t_star, opt.enabling_c_hd]
        table.append(row)
    if args.format == "json":
        _emit(args, to_json([dict(zip(header, r)) for r in table]))
    else:
        _emit(args, to_csv(header, table))
    if args.figure:
        from .plotting import plot_regimes
        plot_regimes(rows, rows[0][2].constants.beta if rows else float("nan"), args.figure)
    return EXIT_OK


def cmd_poa(args: argparse.Namespace) -> int:
    sc = _scenario(args)
    c = sc.constants
    pts = poa_sweep(c, _sweep(args, sc, "pi_tfd", Sweep(0.0, 1.0, 0.01)))
    if args.format == "json":
        _emit(args, to_json([{"pi_tfd": p.pi_tfd, "t_min": p.t_min, "t_star": p.t_star,
                              "poa": p.poa} for p in pts]))
    else:
        _emit(args, to_csv(["pi_tfd", "t_min", "t_star", "poa"],
                           [(p.pi_tfd, p.t_min, p.t_star, p.poa) for p in pts]))
    if args.figure:
        from .plotting import plot_poa
        plot_poa(pts, args.figure, label=rf"$\beta$ = {c.beta:g}")
    return EXIT_OK


def _pmf(text: str) -> MixedStrategy:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ScenarioError(f"cannot parse p.m.f. {text!r}") from None
    if len(vals) != 4:
        raise ScenarioError("a p.m.f. needs four comma-separated values (w, t_A, t_B, t_fd)")
    return MixedStrategy.from_array(vals)


def cmd_simulate(args: argparse.Namespace) -> int:
    sc = _scenario(args)
    sim = sc.simulation
    n_slots = args.slots if args.slots is not None else sim.get("n_slots", 1_000_000)
    seed = args.seed if args.seed is not None else sim.get("seed", 0)
    if args.profile:
        parts = args.profile.split(",")
        if len(parts) != 2:
            raise ScenarioError("--profile takes two comma-separated actions, e.g. t_fd,w")
        cfg = SimConfig.fixed(sc.model, parts[0], parts[1], n_slots, seed)
    elif args.pi1:
        pi1 = _pmf(args.pi1)
        cfg = SimConfig(sc.model, pi1, _pmf(args.pi2) if args.pi2 else pi1, n_slots, seed)
    elif "profile" in sim:
        cfg = SimConfig.fixed(sc.model, *sim["profile"], n_slots, seed)
    elif "pi1" in sim:
        cfg = SimConfig(sc.model, sim["pi1"], sim.get("pi2", sim["pi1"]), n_slots, seed)
    else:
        raise ScenarioError("nothing to simulate: give --profile, --pi1/--pi2 or a 'simulation' block")
    if args.c_hd is not None:
        c = sc.constants
        costs = CostPolicy(args.c_hd, args.c_fd if args.c_fd is not None else 2 * c.beta * args.c_hd)
    else:
        costs = sc.costs
    est = simulate(cfg, costs, workers=args.workers)
    report = comparison_report(cfg, est)
    if args.format == "csv":
        rows = [("aggregate", "", r["mean"], r["se"], r["analytic"], r["z"])
                for r in [report["aggregate_throughput"]]]
        rows += [(f"pair{i + 1}", "", r["mean"], r["se"], r["analytic"], r["z"])
                 for i, r in enumerate(report["pair_throughput"])]
        rows += [("success", f"{r['receiver']}|{r['own']}|{r['opp']}", r["mean"], r["se"],
                  r["analytic"], r["z"]) for r in report["success_rates"]]
        _emit(args, to_csv(["quantity", "key", "mean", "se", "analytic", "z"], rows))
    else:
        _emit(args, to_json(report))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    sc = _scenario(args)
    report = run_verification(sc, samples=args.samples,
                              n_slots=args.slots if args.slots is not None else 100_000,
                              seed=args.seed if args.seed is not None else 0,
                              montecarlo=not args.no_montecarlo, workers=args.workers)
    for line in report.lines():
        print(line, file=sys.stderr)
    if args.format == "json":
        _emit(args, to_json(report.to_dict()))
    elif args.format == "csv":
        _emit(args, to_csv(["check", "status", "message"],
                           [(c.name, c.status, c.message) for c in report.checks]))
    return EXIT_OK if report.ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--out", default="-", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, help="unsigned 64-bit simulation seed")
    common.add_argument("--slots", type=int, help="simulated slots")
    common.add_argument("--beta", type=float, help="override/inline beta")
    common.add_argument("--iota-c", type=float, help="inline iota_c (no scenario)")
    common.add_argument("--iota-f", type=float, help="inline iota_f (no scenario)")
    common.add_argument("--phi", type=float, help="inline phi (default 1, i.e. normalised)")
    common.add_argument("-v", "--verbose", action="store_true")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--start", type=float)
    sweep.add_argument("--stop", type=float)
    sweep.add_argument("--step", type=float)

    figure = argparse.ArgumentParser(add_help=False)
    figure.add_argument("--figure", help="also render the figure to this file (png, pdf, svg)")

    prices = argparse.ArgumentParser(add_help=False)
    prices.add_argument("--c-hd", type=float, help="half-duplex price")
    prices.add_argument("--c-fd", type=float, help="full-duplex price (default 2 beta c_hd)")

    p = argparse.ArgumentParser(prog="fdgame", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fdgame {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("region", parents=[common, sweep, figure],
                       help="feasible pi_tfd interval per half-duplex price")
    s.add_argument("--no-edges", action="store_true", help="do not insert the band end points")
    s.set_defaults(func=cmd_region, default_format="csv")

    s = sub.add_parser("solve", parents=[common, prices], help="one equilibrium and its residuals")
    s.add_argument("--pi-tfd", type=float, help="full-duplex probability (default: mid-interval)")
    s.set_defaults(func=cmd_solve, default_format="json")

    s = sub.add_parser("design", parents=[common, sweep],
                       help="prices placing an equilibrium at a target pi_tfd")
    s.add_argument("--pi-tfd", type=float, help="single target instead of a sweep")
    s.set_defaults(func=cmd_design, default_format="csv")

    s = sub.add_parser("optimum", parents=[common, figure],
                       help="throughput-optimal equilibrium, optionally over an (iota_c, iota_f) grid")
    s.add_argument("--grid", type=int, help="points per axis of the iota grid")
    s.add_argument("--absolute", action="store_true",
                   help="append un-normalised t_star and enabling_c_hd columns")
    s.set_defaults(func=cmd_optimum, default_format="csv")

    s = sub.add_parser("poa", parents=[common, sweep, figure], help="price of anarchy versus pi_tfd")
    s.set_defaults(func=cmd_poa, default_format="csv")

    s = sub.add_parser("simulate", parents=[common, prices], help="Monte-Carlo run with z-scores")
    s.add_argument("--profile", help="fixed profile, e.g. t_fd,w")
    s.add_argument("--pi1", help="pair-1 p.m.f. 'w,t_A,t_B,t_fd'")
    s.add_argument("--pi2", help="pair-2 p.m.f. (default: same as --pi1)")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate, default_format="json")

    s = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--no-montecarlo", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_verify, default_format="json")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("fdgame: error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except NoEquilibriumError as exc:
        print(f"fdgame: no equilibrium: {exc}", file=sys.stderr)
        return EXIT_NO_EQ
    except (ScenarioError, InvalidParameterError) as exc:
        print(f"fdgame: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
