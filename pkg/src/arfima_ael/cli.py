"""Command-line front end: simulate | estimate | stat | region | coverage.

Every run merges an optional flat key=value config file with command-line
flags (flags win), echoes the effective configuration into the output
directory, and derives all randomness from --seed, so outputs are
byte-reproducible from the echo file.

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence
(partial diagnostics are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from arfima_ael.coverage import run_coverage
from arfima_ael.elratio import AELConfig, ael_stat, chisq_quantile, el_stat
from arfima_ael.model import (
    DimensionMismatchError,
    InvalidParameterError,
    ModelSpec,
    ParamVector,
    validate,
)
from arfima_ael.regions import AxisSpec, evaluate_grid, extract_region, grid_to_rows
from arfima_ael.simulate import FAMILIES, simulate_arfima
from arfima_ael.spectral import periodogram
from arfima_ael.whittle import whittle_fit

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3


class NonConvergence(RuntimeError):
    pass


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip() != ""]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arfima-ael",
        description="Adjusted empirical likelihood inference for ARFIMA time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="flat key=value config file; flags override its entries")
        p.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="series output representation (simulate); other "
                            "commands use their documented fixed formats")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel workers; results are independent of this")

    def model_flags(p):
        p.add_argument("--p", type=int, default=0, help="AR order")
        p.add_argument("--q", type=int, default=0, help="MA order")
        p.add_argument("--phi", type=_float_list, default=[],
                       help="comma-separated AR coefficients")
        p.add_argument("--theta", type=_float_list, default=[],
                       help="comma-separated MA coefficients")
        p.add_argument("--d", type=float, default=0.3, help="fractional differencing")
        p.add_argument("--sigma2", type=float, default=1.0, help="innovation variance")

    p_sim = sub.add_parser("simulate", help="draw an ARFIMA sample path")
    common(p_sim)
    model_flags(p_sim)
    p_sim.add_argument("--family", choices=sorted(FAMILIES), default="gaussian")
    p_sim.add_argument("--T", type=int, default=1001,
                       help="series length; even values are mapped down to odd")

    p_est = sub.add_parser("estimate", help="Whittle fit from a series CSV")
    common(p_est)
    p_est.add_argument("--series", required=True, help="input CSV with header t,value")
    p_est.add_argument("--p", type=int, default=0)
    p_est.add_argument("--q", type=int, default=0)

    p_stat = sub.add_parser("stat", help="EL or AEL statistic at a supplied parameter point")
    common(p_stat)
    model_flags(p_stat)
    p_stat.add_argument("--series", required=True)
    p_stat.add_argument("--method", choices=("el", "ael"), default="ael")
    p_stat.add_argument("--a-n-rule", choices=("max1-halflog", "halflog"),
                        default="max1-halflog")

    p_reg = sub.add_parser("region", help="confidence-region grid over two coordinates")
    common(p_reg)
    p_reg.add_argument("--series", required=True)
    p_reg.add_argument("--p", type=int, default=0)
    p_reg.add_argument("--q", type=int, default=0)
    p_reg.add_argument("--method", choices=("EL", "AEL", "both"), default="both")
    p_reg.add_argument("--level", type=float, default=0.95)
    p_reg.add_argument("--axis1", default=None,
                       help="first grid coordinate (default: phi1/theta1 per orders)")
    p_reg.add_argument("--axis1-range", type=_float_list, default=None, metavar="LO,HI")
    p_reg.add_argument("--axis2", default="d")
    p_reg.add_argument("--axis2-range", type=_float_list, default=None, metavar="LO,HI")
    p_reg.add_argument("--steps", type=int, default=60, help="grid steps per axis")
    p_reg.add_argument("--a-n-rule", choices=("max1-halflog", "halflog"),
                       default="max1-halflog")

    p_cov = sub.add_parser("coverage", help="Monte Carlo coverage table (EL/EB/TB/AEL)")
    common(p_cov)
    p_cov.add_argument("--T", type=_int_list, default=[50, 70, 100, 200],
                       help="comma-separated series lengths")
    p_cov.add_argument("--d", type=_float_list, default=[0.1, 0.2, 0.3, 0.4, 0.49],
                       help="comma-separated true d values")
    p_cov.add_argument("--family", type=_str_list, default=["gaussian"],
                       help="comma-separated innovation families")
    p_cov.add_argument("--replicates", type=int, default=1000)
    p_cov.add_argument("--level", type=float, default=0.95)
    p_cov.add_argument("--a-n-rule", choices=("max1-halflog", "halflog"), default="halflog")
    p_cov.add_argument("--bartlett-reps", type=int, default=500)

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Expand --config entries into leading flags so explicit flags override."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    injected = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        key = key.strip()
        if key == "config":
            continue
        injected.extend([f"--{key}", value.strip()])
    return [argv[0]] + injected + argv[1:]


def _echo_config(args: argparse.Namespace, out: Path) -> None:
    skip = {"command", "config"}
    lines = []
    for dest, value in sorted(vars(args).items()):
        if dest in skip or value is None:
            continue
        flag = dest.replace("_", "-")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{flag}={value}")
    (out / "effective_config.txt").write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_series(path: str) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1] if data.shape[1] >= 2 else data[:, 0]


def _model_from_args(args) -> tuple[ModelSpec, ParamVector]:
    spec = ModelSpec(args.p, args.q)
    if args.p and len(args.phi) != args.p:
        raise DimensionMismatchError(f"--phi needs {args.p} values, got {len(args.phi)}")
    if args.q and len(args.theta) != args.q:
        raise DimensionMismatchError(f"--theta needs {args.q} values, got {len(args.theta)}")
    beta = ParamVector(phi=args.phi, theta=args.theta, d=args.d, sigma2=args.sigma2)
    report = validate(spec, beta)
    if not report.ok:
        raise InvalidParameterError("; ".join(report.violations))
    return spec, beta


def _cmd_simulate(args, out: Path) -> int:
    spec, beta = _model_from_args(args)
    ts = simulate_arfima(spec, beta, args.family, args.T, args.seed)
    if args.format == "csv":
        ts.to_csv(out / "series.csv")
    else:
        _write_json(out / "series.json",
                    {"t": list(range(1, ts.T + 1)), "value": ts.values.tolist()})
    _write_json(out / "series_meta.json", dict(ts.meta, seed=args.seed))
    return EXIT_OK


def _cmd_estimate(args, out: Path) -> int:
    spec = ModelSpec(args.p, args.q)
    pgram = periodogram(_load_series(args.series))
    fit = whittle_fit(spec, pgram)
    _write_json(out / "fit.json", fit.to_dict())
    if not fit.converged:
        log.error("fit did not converge: %s", fit.message)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _cmd_stat(args, out: Path) -> int:
    spec, beta = _model_from_args(args)
    pgram = periodogram(_load_series(args.series))
    cfg = AELConfig(args.a_n_rule)
    if args.method == "el":
        sol = el_stat(spec, beta, pgram)
        a_n = None
    else:
        sol = ael_stat(spec, beta, pgram, cfg)
        a_n = cfg.a_n(pgram.n)
    payload = {
        "beta": {"phi": beta.phi.tolist(), "theta": beta.theta.tolist(),
                 "d": beta.d, "sigma2": beta.sigma2},
        "stat": sol.stat if np.isfinite(sol.stat) else str(sol.stat),
        "status": sol.status,
        "xi": sol.xi.tolist(),
        "n": pgram.n,
        "a_n": a_n,
        "method": args.method,
    }
    _write_json(out / "stat.json", payload)
    if sol.status == "max-iter":
        return EXIT_NONCONVERGENCE
    return EXIT_OK


_DEFAULT_RANGES = {"d": (0.0, 0.5), "sigma2": (0.25, 4.0)}


def _axis(name: str, rng, steps: int) -> AxisSpec:
    if rng is None:
        lo, hi = _DEFAULT_RANGES.get(name, (0.0, 1.0))
    else:
        lo, hi = rng
    return AxisSpec(name, lo, hi, steps)


def _cmd_region(args, out: Path) -> int:
    spec = ModelSpec(args.p, args.q)
    series = _load_series(args.series)
    axis1_name = args.axis1
    if axis1_name is None:
        axis1_name = "phi1" if args.p else ("theta1" if args.q else "sigma2")
    axes = (_axis(axis1_name, args.axis1_range, args.steps),
            _axis(args.axis2, args.axis2_range, args.steps))
    methods = ("EL", "AEL") if args.method == "both" else (args.method,)
    cfg = AELConfig(args.a_n_rule)
    summary = {}
    try:
        for method in methods:
            grid = evaluate_grid(series, spec, axes, method=method, level=args.level,
                                 ael_cfg=cfg, jobs=args.jobs)
            region = extract_region(grid)
            with open(out / f"grid_{method}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow([axes[0].name, axes[1].name, "stat", "member"])
                for a1, a2, stat, member in grid_to_rows(grid):
                    w.writerow([f"{a1:.10g}", f"{a2:.10g}", f"{stat:.10g}", member])
            with open(out / f"boundary_{method}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["loop_id", axes[0].name, axes[1].name])
                for loop_id, loop in enumerate(region.loops):
                    for a1, a2 in loop:
                        w.writerow([loop_id, f"{a1:.10g}", f"{a2:.10g}"])
            summary[method] = {
                "area": region.area,
                "area_fraction": region.area_fraction,
                "empty": region.is_empty,
                "threshold": grid.threshold,
                "fixed": grid.fixed,
            }
    except RuntimeError as err:
        _write_json(out / "region_diagnostics.json", {"error": str(err)})
        log.error("%s", err)
        return EXIT_NONCONVERGENCE
    _write_json(out / "region_summary.json", summary)
    return EXIT_OK


def _cmd_coverage(args, out: Path) -> int:
    plan = [(T, d, fam) for fam in args.family for T in args.T for d in args.d]
    report = run_coverage(plan, replicates=args.replicates, level=args.level,
                          seed=args.seed, a_n_rule=args.a_n_rule,
                          bartlett_reps=args.bartlett_reps, jobs=args.jobs)
    report.to_table_csv(out / "coverage_table.csv")
    report.to_long_csv(out / "coverage_long.csv")
    _write_json(out / "coverage_meta.json", report.meta)
    return EXIT_OK


_DISPATCH = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "stat": _cmd_stat,
    "region": _cmd_region,
    "coverage": _cmd_coverage,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config(argv) if argv else argv
        args = parser.parse_args(argv)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = _DISPATCH[args.command](args, out)
    except (InvalidParameterError, DimensionMismatchError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonConvergence as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    _echo_config(args, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
