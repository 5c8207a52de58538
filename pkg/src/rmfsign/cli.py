"""Command-line entry point: ``rmfsign <subcommand> [flags]``.

Primary output (CSV by default, or JSON) goes to stdout or ``--out``. A run
manifest with every parameter goes to stderr, or to ``--manifest`` /
``<out>.manifest.json`` when an output file is given. Exit codes: 0 success,
1 configuration error, 2 resource error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from importlib.metadata import PackageNotFoundError, version

from . import analytic, census, montecarlo, transforms
from .analytic import TGrid
from .errors import ConfigurationError, ResourceError
from .sampler import SignOracle, parse_seed
from .sieve import SieveEngine
from .transforms import TruncationSpec

SUBCOMMANDS = (
    "census",
    "verify-identity",
    "euler",
    "rstat",
    "fscan",
    "variance",
    "covariance",
    "clt",
    "tail",
    "ensemble-census",
)


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int(text: str) -> int:
    """Integer flag that also accepts 1e6 and 10^6."""
    s = text.strip()
    try:
        if "^" in s:
            b, e = s.split("^")
            return int(b) ** int(e)
        if "e" in s.lower():
            v = float(s)
            if v != int(v):
                raise ValueError
            return int(v)
        return int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", default="0", help="decimal or 0x-hex 64-bit seed (base seed for ensembles)")
    common.add_argument("--mode", default="random", choices=["random", "all_plus", "all_minus"])
    common.add_argument("--samples", type=_int, default=1000, help="ensemble size")
    common.add_argument("--t", type=float, action="append", help="evaluation point; repeatable")
    common.add_argument("--t2", type=float, help="second point for covariance")
    common.add_argument("--t-grid", help='e.g. "2^-2^i:i=1..4" or "0.25,0.0625,2^-8"')
    common.add_argument("--prime-limit", type=_int, default=10**5)
    common.add_argument("--x-limit", type=_int, default=10**5)
    common.add_argument("--exponent", type=float, default=0.5, help="census weight n^-exponent")
    common.add_argument("--checkpoints", help="comma-separated x values")
    common.add_argument("--workers", type=_int, default=1)
    common.add_argument("--block-size", type=_int, default=1 << 20)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", help="write primary output here instead of stdout")
    common.add_argument("--manifest", help="write the run manifest here instead of stderr")

    parser = _Parser(prog="rmfsign", description="Random completely multiplicative function laboratory.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _grid(args, default: str | None = None) -> TGrid:
    if args.t_grid:
        return TGrid.parse(args.t_grid)
    if args.t:
        return TGrid(tuple(sorted(set(args.t), reverse=True)))
    if default is None:
        raise ConfigurationError("give --t or --t-grid")
    return TGrid.parse(default)


def _values(args, default: str) -> list[float]:
    """Positive t values for commands not tied to the (0, 1/2) grid."""
    if args.t_grid:
        text = args.t_grid.replace(" ", "")
        if text.startswith("2^-2^i"):
            ts = list(TGrid.parse(text))
        else:
            ts = [analytic.parse_real(tok) for tok in text.split(",") if tok]
    else:
        ts = args.t or [float(default)]
    if any(not t > 0.0 for t in ts):
        raise ConfigurationError(f"t values must be > 0: {ts}")
    return sorted(set(ts), reverse=True)


def _checkpoints(args, top: int) -> list[int]:
    if not args.checkpoints:
        return census.default_checkpoints(top)
    try:
        return sorted({_int(tok) for tok in args.checkpoints.split(",") if tok.strip()})
    except argparse.ArgumentTypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _spec(args) -> TruncationSpec:
    return TruncationSpec(args.x_limit, args.prime_limit)


def _oracle(args) -> SignOracle:
    return SignOracle(parse_seed(args.seed), args.mode)


def _ensemble(args, grid: TGrid | None = None, checkpoints=()) -> montecarlo.EnsembleConfig:
    return montecarlo.EnsembleConfig(
        base_seed=parse_seed(args.seed),
        n_samples=args.samples,
        t_grid=grid or TGrid((0.25,)),
        spec=_spec(args),
        x_checkpoints=tuple(checkpoints),
        workers=args.workers,
        mode=args.mode,
    )


# each command returns (csv rows, json payload)


def cmd_census(args, engine):
    cps = _checkpoints(args, args.x_limit)
    x_max = max(args.x_limit, cps[-1])
    rep = census.sign_changes(
        _oracle(args), x_max, args.exponent, checkpoints=cps, engine=engine, workers=args.workers
    )
    return rep.checkpoints, rep.to_dict()


def cmd_verify_identity(args, engine):
    rows = [
        transforms.verify_identity(_oracle(args), t, _spec(args), engine, args.workers)
        for t in _values(args, "0.3")
    ]
    return rows, rows


def cmd_euler(args, engine):
    rows = []
    for t in _values(args, "1.0"):
        row = transforms.euler_vs_dirichlet(_oracle(args), t, _spec(args), engine, args.workers)
        res = transforms.euler_expansion_residue(_oracle(args), t, _spec(args), engine)
        row["expansion_residue"] = res["residue"]
        row["residue_bound"] = res["residue_bound"]
        rows.append(row)
    return rows, rows


def cmd_rstat(args, engine):
    rows = []
    for t in _grid(args, "2^-2^i:i=1..3"):
        rows.append(
            {
                "t": t,
                "prime_limit": args.prime_limit,
                "R": transforms.r_statistic(_oracle(args), t, _spec(args), engine),
                "max_term": transforms.r_max_term(t, args.prime_limit, engine),
                "var_trunc": analytic.truncated_r_variance(t, args.prime_limit, engine).value,
            }
        )
    return rows, rows


def cmd_fscan(args, engine):
    rows = transforms.f_ratio_scan(_oracle(args), _grid(args, "2^-2^i:i=1..3"), _spec(args), engine, args.workers)
    return rows, rows


def cmd_variance(args, engine):
    rows = []
    for t in _grid(args):
        v = analytic.r_variance(t)
        approx = analytic.leading_variance_approx(t)
        rows.append({"t": t, "exact": v.value, "leading_approx": approx, "difference": v.value - approx, "tail_bound": v.tail_bound})
    return rows, rows


def cmd_covariance(args, engine):
    if args.t2 is not None:
        if not args.t or len(args.t) != 1:
            raise ConfigurationError("--t2 needs exactly one --t")
        pairs = [(args.t[0], args.t2)]
    else:
        pairs = _grid(args).consecutive_pairs()
        if not pairs:
            raise ConfigurationError("covariance needs two t values")
    rows = []
    for t1, t2 in pairs:
        c = analytic.r_covariance(t1, t2)
        approx = analytic.leading_covariance_approx(max(t1, t2), min(t1, t2))
        rows.append(
            {"t1": t1, "t2": t2, "exact": c.value, "leading_approx": approx, "difference": c.value - approx, "tail_bound": c.tail_bound}
        )
    return rows, rows


def cmd_clt(args, engine):
    cfg = _ensemble(args, _grid(args, "2^-2^i:i=1..3"))
    stats = montecarlo.ensemble_r(cfg, engine)
    pairs = montecarlo.decorrelation_check(cfg, stats, engine)
    payload = stats.to_dict()
    payload["pairs"] = pairs
    return stats.rows(), payload


def cmd_tail(args, engine):
    cfg = _ensemble(args)
    rows = []
    for t in _values(args, "0.1"):
        r = montecarlo.tail_probability(cfg, t, engine)
        rows.append(
            {
                "t": r.t,
                "P": args.prime_limit,
                "n_samples": r.n_samples,
                "threshold": r.threshold,
                "frequency": r.frequency,
                "chebyshev_bound": r.chebyshev_bound,
                "band": r.band,
                "within_bound": r.within_bound,
            }
        )
    return rows, rows


def cmd_ensemble_census(args, engine):
    cps = _checkpoints(args, args.x_limit)
    cfg = _ensemble(args, checkpoints=cps)
    hist = montecarlo.ensemble_census(cfg, engine)
    return hist.rows(), hist.to_dict()


COMMANDS = {
    "census": cmd_census,
    "verify-identity": cmd_verify_identity,
    "euler": cmd_euler,
    "rstat": cmd_rstat,
    "fscan": cmd_fscan,
    "variance": cmd_variance,
    "covariance": cmd_covariance,
    "clt": cmd_clt,
    "tail": cmd_tail,
    "ensemble-census": cmd_ensemble_census,
}


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def render(rows: list[dict], payload, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        if args.workers < 1:
            raise ConfigurationError("--workers must be >= 1")
        engine = SieveEngine(block_size=args.block_size)
        rows, payload = COMMANDS[args.command](args, engine)
    except ConfigurationError as exc:
        print(f"rmfsign: configuration error: {exc}", file=stderr)
        return 1
    except ResourceError as exc:
        print(f"rmfsign: resource error: {exc}", file=stderr)
        return 2
    text = render(rows, payload, args.format)
    manifest = {
        "subcommand": args.command,
        "parameters": {k: v for k, v in vars(args).items() if k not in ("command", "manifest")},
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "tool_version": _tool_version(),
        "wall_clock_seconds": time.perf_counter() - start,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    sidecar = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if sidecar:
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    else:
        print(json.dumps(manifest), file=stderr)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
