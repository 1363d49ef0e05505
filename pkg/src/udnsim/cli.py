"""Command line front end: ``run``, ``sweep`` and ``analytics``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigurationError
from .network import active_bs_density, nb_pmf, truncated_nb_pmf
from .sweep import PRESETS, evaluate_point, load_sweep, preset, run_sweep, write_csv

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("udnsim")


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.drops is not None:
        out["drops"] = args.drops
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config).replace(**_overrides(args))
    row = evaluate_point(cfg, workers=args.workers, progress=args.verbose)
    write_csv([row], sys.stdout)
    return EXIT_RUNTIME if row.error else EXIT_OK


def cmd_sweep(args) -> int:
    if args.spec in PRESETS and not Path(args.spec).exists():
        spec = preset(args.spec)
    else:
        spec = load_sweep(args.spec)
    ov = _overrides(args)
    if ov:
        spec.base = spec.base.replace(**ov)
    rows = run_sweep(spec, workers=args.workers, progress=args.verbose)
    # written in one go so an interrupted run leaves no truncated table
    out = Path(args.out)
    tmp = out.with_name(out.name + ".part")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        write_csv(rows, fh)
    tmp.replace(out)
    failed = sum(1 for r in rows if r.error)
    if failed:
        log.error("%d of %d points failed", failed, len(rows))
    return EXIT_OK


def analytics_report(cfg, k_max: int = 50) -> str:
    nb = cfg.nb_model()
    lam, rho, q = nb.lam, nb.rho, nb.q
    k_u = cfg.k_u
    lines = [
        f"bs_density_per_km2 = {lam:.9g}",
        f"ue_density_per_km2 = {rho:.9g}",
        f"nb_q = {q:.9g}",
        f"lambda_tilde_per_km2 = {active_bs_density(nb):.9g}",
        f"k_u = {k_u}",
        "",
        "[nb_pmf]",
        "k,f_K",
    ]
    k = np.arange(k_max + 1)
    lines += [f"{i},{p:.9g}" for i, p in zip(k, nb_pmf(k, nb))]
    lines += ["", "[truncated_pmf]", "k,f_Khat"]
    if rho > 0:
        trunc = np.atleast_1d(truncated_nb_pmf(np.arange(1, k_u + 1), nb, k_u))
        lines += [f"{i},{p:.9g}" for i, p in zip(range(1, k_u + 1), trunc)]
        lines.append(f"sum,{float(np.sum(trunc)):.12g}")
    else:
        lines.append("# no active BSs at zero UE density")
    return "\n".join(lines) + "\n"


def cmd_analytics(args) -> int:
    cfg = load_config(args.config)
    sys.stdout.write(analytics_report(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--drops", type=int, default=None, help="override drops per point")
    common.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")

    p = argparse.ArgumentParser(prog="udnsim", description="Downlink ASE simulator for "
                                "dense multi-antenna networks.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="simulate one configuration")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", parents=[common], help="simulate a grid of configurations")
    s.add_argument("spec", help=f"sweep file or preset ({', '.join(PRESETS)})")
    s.add_argument("--out", required=True, help="CSV output path")
    s.set_defaults(func=cmd_sweep)
    a = sub.add_parser("analytics", help="closed-form load statistics, no simulation")
    a.add_argument("config")
    a.set_defaults(func=cmd_analytics)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
