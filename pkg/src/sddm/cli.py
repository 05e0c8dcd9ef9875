"""Command-line interface.

Subcommands: ``estimate``, ``moments``, ``simulate``, ``optimize``, ``sweep``.

Exit codes: 0 success, 2 input/parse error, 3 domain precondition violated,
4 a required moment series diverges.

Every run writes a manifest (command, inputs with SHA-256, settings, seed,
version, timestamp) to ``<out>.manifest.json`` when ``--out`` is given, or to
stderr otherwise, so that primary outputs stay byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import io as sio
from .core import JointGrowthModel, MomentInputs, price_covariance
from .errors import (
    DegenerateProblem,
    EstimationError,
    InvalidModel,
    NonConvergent,
    SDDMError,
    TooLarge,
)
from .estimate import build_report, canonical_method
from .oracle import KERNEL, SimConfig, available_kernels, mc_price_moments, simulate_joint_paths, write_paths_csv
from .portfolio import (
    DEFAULT_ALPHA_GRID,
    UtilityDomainWarning,
    alpha_sweep,
    min_variance_portfolio,
    optimal_weight,
    return_moments,
    sweep_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_DIVERGENT = 0, 2, 3, 4


class UsageError(SDDMError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _manifest(command: str, inputs: Sequence[str], settings: dict[str, Any], seed=None) -> dict:
    return {
        "command": command,
        "inputs": [{"path": str(p), "sha256": sio.sha256_file(p)} for p in inputs],
        "config": settings,
        "seed": seed,
        "tool_version": _version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _emit(text: str, out: str | None, manifest: dict) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        sio.write_json(manifest, f"{out}.manifest.json")
    else:
        sys.stdout.write(text)
        sys.stderr.write(json.dumps({"manifest": manifest}, sort_keys=True) + "\n")


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = sio.read_config(args.config)
    if args.method:
        cfg = type(cfg)(**{**cfg.__dict__, "method": canonical_method(args.method)})
    dividends = [s for path in args.dividends for s in sio.read_dividends_csv(path)]
    prices = [sio.read_prices_csv(p) for p in (args.prices or [])]
    inputs = [*args.dividends, *(args.prices or []), args.config]
    provenance = {
        "dividends": [{"path": p, "sha256": sio.sha256_file(p)} for p in args.dividends],
        "prices": [{"path": p, "sha256": sio.sha256_file(p)} for p in (args.prices or [])],
        "config": {"path": args.config, "sha256": sio.sha256_file(args.config)},
    }
    report = build_report(dividends, prices, cfg, provenance)
    _emit(sio.write_json(report.to_dict()), args.out, _manifest("estimate", inputs, _settings(args)))
    return EXIT_OK


def cmd_moments(args: argparse.Namespace) -> int:
    pair = sio.load_pair(args.model, args.method, args.source)
    pm = price_covariance(pair)
    out = sio.price_moments_to_dict(pm)
    out["inputs"] = pair.to_dict()
    out["growth_covariance"] = pair.moment_inputs().growth_covariance
    out["return_moments"] = return_moments(pair).to_dict() if pm.all_exist else None
    _emit(sio.write_json(out), args.out, _manifest("moments", [args.model], _settings(args)))
    if not pm.all_exist and not args.allow_partial:
        missing = [f for f in ("variance_exists_a", "variance_exists_b", "covariance_exists") if not out[f]]
        print(f"error: non-convergent moments ({', '.join(missing)})", file=sys.stderr)
        return EXIT_DIVERGENT
    return EXIT_OK


def _horizon(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("horizon must be 'auto' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("horizon must be >= 1")
    return value


def cmd_simulate(args: argparse.Namespace) -> int:
    model = sio.load_full_model(args.model, args.method)
    cfg = SimConfig(
        n_paths=args.paths,
        seed=args.seed,
        horizon=args.horizon,
        antithetic=args.antithetic,
        epsilon=args.epsilon,
        workers=args.workers,
    )
    closed = price_covariance(model)
    est = mc_price_moments(model, cfg, args.kernel)
    result = {
        "estimates": {k: v for k, v in est.to_dict().items() if k != "kernel"},
        "closed_form": sio.price_moments_to_dict(closed),
        "within_4se": est.coverage(closed, 4.0),
        "n_paths": cfg.n_paths,
    }
    if args.paths_csv:
        pa, pb = simulate_joint_paths(model, cfg, args.kernel)
        write_paths_csv(args.paths_csv, pa, pb)
    settings = _settings(args) | {"kernel": args.kernel or KERNEL, "horizon": est.horizon}
    _emit(sio.write_json(result), args.out, _manifest("simulate", [args.model], settings, args.seed))
    return EXIT_OK


def _alphas(values: Sequence[str]) -> list[float]:
    out: list[float] = []
    for item in values:
        for part in item.split(","):
            if part.strip():
                out.append(float(part))
    return out


def cmd_optimize(args: argparse.Namespace) -> int:
    rm = sio.load_return_moments(args.model, args.method, args.source)
    alphas = _alphas(args.alpha)
    if not alphas:
        raise UsageError("give at least one --alpha")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UtilityDomainWarning)
        rows = [optimal_weight(a, rm, long_only=args.long_only).to_dict() for a in alphas]
    try:
        mvp = min_variance_portfolio(rm).to_dict()
    except DegenerateProblem:
        mvp = None
    result = {
        "return_moments": rm.to_dict(),
        "results": rows,
        "min_variance": mvp,
        "warnings": sorted({str(w.message) for w in caught}),
    }
    _emit(sio.write_json(result), args.out, _manifest("optimize", [args.model], _settings(args)))
    return EXIT_OK


def parse_alpha_grid(text: str) -> np.ndarray:
    """``lo:hi:n`` (log-spaced) or ``lo:hi:n:lin``."""
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
        raise UsageError(f"alpha grid {text!r} is not lo:hi:n[:log|lin]")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"alpha grid {text!r} is not lo:hi:n[:log|lin]") from None
    if n < 1:
        raise DegenerateProblem("empty alpha grid")
    if lo <= 0.0 or hi < lo:
        raise DegenerateProblem("alpha grid needs 0 < lo <= hi")
    if len(parts) == 4 and parts[3] == "lin":
        return np.linspace(lo, hi, n)
    return np.logspace(np.log10(lo), np.log10(hi), n)


def cmd_sweep(args: argparse.Namespace) -> int:
    rm = sio.load_return_moments(args.model, args.method, args.source)
    grid = DEFAULT_ALPHA_GRID if args.alpha_grid is None else parse_alpha_grid(args.alpha_grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UtilityDomainWarning)
        rows = alpha_sweep(rm, grid, long_only=args.long_only)
    _emit(sweep_csv(rows), args.out, _manifest("sweep", [args.model], _settings(args)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_pair_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", default="geometric_mean", choices=["geomean", "geometric_mean", "median"],
                   help="discretisation method when reading an estimation report")
    p.add_argument("--source", default="moments", choices=["moments", "model"],
                   help="report parameterisation: mixed-source moment inputs or the two-state model")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sddm", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate model inputs from dividend and price histories")
    p.add_argument("--dividends", nargs="+", required=True, help="dividend CSV(s): ticker,year,dividend")
    p.add_argument("--prices", nargs="+", help="weekly price CSV(s), one per stock: date,stock_close,index_close")
    p.add_argument("--config", required=True, help="JSON: risk_free_rate, market_return, method, return_convention")
    p.add_argument("--method", choices=["geomean", "geometric_mean", "median"], help="restrict to one method")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("moments", help="closed-form price moments with existence flags")
    p.add_argument("model")
    _add_pair_options(p)
    p.add_argument("--allow-partial", action="store_true", help="exit 0 even if a moment diverges")
    p.add_argument("--out")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("simulate", help="Monte Carlo price moments")
    p.add_argument("model")
    p.add_argument("--method", default="geometric_mean", choices=["geomean", "geometric_mean", "median"])
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=_horizon, default=None, help="'auto' (tail-bound rule) or N")
    p.add_argument("--epsilon", type=float, default=1e-9, help="relative tail tolerance for --horizon auto")
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--kernel", choices=list(available_kernels()))
    p.add_argument("--paths-csv", help="also write per-path prices (path_id,price_a,price_b)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="quadratic-utility optimal weights")
    p.add_argument("model", help="model, moment-input, report, return-moment or moments-output JSON")
    _add_pair_options(p)
    p.add_argument("--alpha", action="append", default=[], help="risk aversion; repeat or comma-separate")
    p.add_argument("--long-only", action="store_true", help="restrict weights to [0, 1]")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimal weight across a risk-aversion grid (CSV)")
    p.add_argument("model")
    _add_pair_options(p)
    p.add_argument("--alpha-grid", help="lo:hi:n (log-spaced) or lo:hi:n:lin; default 0.1:1000:60")
    p.add_argument("--long-only", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except sio.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergent as exc:
        print(f"error: non-convergent: {exc}", file=sys.stderr)
        return EXIT_DIVERGENT
    except (InvalidModel, EstimationError, DegenerateProblem, TooLarge, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
