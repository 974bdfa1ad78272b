"""Command line interface: ``sqfastica <subcommand> [options]``.

Every option may also come from a ``--config`` file of ``key = value`` lines
(keys are the long option names without dashes, e.g. ``max-iter = 500``);
options given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .asymptotics import are, check_g_conditions, expected_mdi_limit
from .distributions import parse_dist_spec
from .estimators import DEFAULT_MAX_ITER, DEFAULT_TOL, METHODS, fastica
from .exceptions import IdentifiabilityError
from .harness import SimulationConfig, are_table, contour_grid, emit, run_simulation, to_csv, to_json
from .mdi import minimum_distance_index
from .nonlinearities import NONLINEARITIES, make_nonlinearity

# Default rows/columns of the efficiency table.
TABLE_DISTS = "ep:1,ep:1.5,ep:1.75,normal,ep:3,ep:4,uniform,gamma:1,gamma:3,gamma:6"


_CONFIG_ALIASES = {"in": "infile"}


def read_config(path) -> Dict[str, object]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("\"'")
        if value.lower() in ("true", "yes", "on"):
            value = True
        elif value.lower() in ("false", "no", "off"):
            value = False
        key = key.lstrip("-").replace("-", "_")
        out[_CONFIG_ALIASES.get(key, key)] = value
    return out


def _csv_list(text: str) -> List[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _add_nl(p):
    p.add_argument("--nonlinearity", default="tanh", choices=NONLINEARITIES)
    p.add_argument("--a", type=float, default=1.0, help="tuning constant of tanh/gaus")


def _add_fit(p):
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--seed", type=int, default=0)


def _add_out(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqfastica",
        description="FastICA estimators (defl, sym, sym2) and their efficiencies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", default=None, help="key = value file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo run of n (p-1) D^2")
    p.add_argument("--dist1", default="ep:1")
    p.add_argument("--dist2", default="ep:4")
    p.add_argument("--dists", default=None, help="comma separated list, overrides --dist1/--dist2")
    p.add_argument("--method", default="defl,sym,sym2", help="comma separated subset of defl,sym,sym2")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--M", type=int, default=1000)
    p.add_argument("--omega", default=None, help="CSV file with the mixing matrix")
    p.add_argument("--jobs", type=int, default=1)
    _add_nl(p)
    _add_fit(p)
    _add_out(p)

    p = sub.add_parser("are", help="asymptotic relative efficiencies")
    p.add_argument("--dist1", default="ep:1")
    p.add_argument("--dist2", default="normal")
    p.add_argument("--table", action="store_true", help="print a table over --dists instead")
    p.add_argument("--dists", default=TABLE_DISTS)
    p.add_argument("--compare", choices=("s2s", "s2d"), default="s2s")
    p.add_argument("--lower-nonlinearity", default="tanh", choices=NONLINEARITIES)
    p.add_argument("--mode", choices=("asymptotic", "finite"), default="asymptotic")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--M", type=int, default=1000)
    _add_nl(p)
    _add_fit(p)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out", default=None)

    p = sub.add_parser("contour", help="ARE or n (p-1) D^2 grid over shape parameters")
    p.add_argument("--family", choices=("EP", "Gamma", "ep", "gamma"), default="EP")
    p.add_argument("--shapes", default="1,1.5,2,3,4", help="comma separated shape values")
    p.add_argument("--method", default="sym2,defl", help="method pair (or list in finite mode)")
    p.add_argument("--mode", choices=("asymptotic", "finite"), default="asymptotic")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--M", type=int, default=200)
    _add_nl(p)
    _add_fit(p)
    _add_out(p)

    p = sub.add_parser("estimate", help="fit an unmixing matrix to CSV data")
    p.add_argument("--method", choices=METHODS, default="sym2")
    p.add_argument("--in", dest="infile", required=False, help="CSV, n rows x p columns")
    p.add_argument("--out", default=None, help="JSON output path (stdout if omitted)")
    _add_nl(p)
    _add_fit(p)

    p = sub.add_parser("mdi", help="minimum distance index of Gamma against Omega")
    p.add_argument("--gamma", required=False)
    p.add_argument("--omega", required=False)
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("check-g", help="check the def/sym/sym2 conditions for G")
    p.add_argument("--dist1", default="mix4:z1")
    p.add_argument("--dist2", default="mix4:z2")
    p.add_argument("--grid", type=int, default=721)
    _add_nl(p)
    return parser


def _load_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit(result, fmt, out):
    if out:
        emit(result, fmt, out)
    else:
        _write(to_csv(result) if fmt == "csv" else to_json(result), None)


def cmd_simulate(args) -> int:
    specs = _csv_list(args.dists) if args.dists else [args.dist1, args.dist2]
    dists = tuple(parse_dist_spec(s) for s in specs)
    omega = _load_matrix(args.omega) if args.omega else None
    cfg = SimulationConfig(
        dists, args.n, args.M, tuple(_csv_list(args.method)),
        make_nonlinearity(args.nonlinearity, args.a), omega, args.seed, args.tol, args.max_iter,
    )
    _emit(run_simulation(cfg, n_jobs=args.jobs), args.format, args.out)
    return 0


def cmd_are(args) -> int:
    nl = make_nonlinearity(args.nonlinearity, args.a)
    if args.table:
        dists = [parse_dist_spec(s) for s in _csv_list(args.dists)]
        lower = make_nonlinearity(args.lower_nonlinearity, args.a)
        methods = ("sym2", "sym") if args.compare == "s2s" else ("sym2", "defl")
        finite = args.mode == "finite"
        table = are_table(dists, [nl, lower], n=args.n, M=args.M if finite else None,
                          seed=args.seed, methods=methods, tol=args.tol, max_iter=args.max_iter)
        if args.format == "text":
            _write(table.format(), args.out)
        else:
            _emit(table, args.format, args.out)
        return 0
    d1, d2 = parse_dist_spec(args.dist1), parse_dist_spec(args.dist2)
    lines = [f"{d1} vs {d2}, {nl}"]
    for a, b in (("sym2", "defl"), ("sym2", "sym"), ("sym", "defl")):
        try:
            v = f"{are(a, b, d1, d2, nl):.6f}"
        except IdentifiabilityError as exc:
            v = f"undefined ({exc})"
        lines.append(f"ARE({a},{b}) = {v}")
    for m in METHODS:
        try:
            lines.append(f"limit E[n(p-1)D^2] {m:4s} = {expected_mdi_limit(m, [d1, d2], nl):.6f}")
        except IdentifiabilityError:
            lines.append(f"limit E[n(p-1)D^2] {m:4s} = undefined")
    _write("\n".join(lines), args.out)
    return 0


def cmd_contour(args) -> int:
    grid = contour_grid(
        args.family, [float(s) for s in _csv_list(args.shapes)], tuple(_csv_list(args.method)),
        make_nonlinearity(args.nonlinearity, args.a), args.mode, args.n, args.M, args.seed,
        args.tol, args.max_iter,
    )
    _emit(grid, args.format, args.out)
    return 0


def cmd_estimate(args) -> int:
    if not args.infile:
        raise SystemExit("estimate: --in is required")
    X = _load_matrix(args.infile).T
    est = fastica(X, args.method, make_nonlinearity(args.nonlinearity, args.a),
                  tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    _write(json.dumps(est.to_dict(), indent=2), args.out)
    return 0


def cmd_mdi(args) -> int:
    if not args.gamma or not args.omega:
        raise SystemExit("mdi: --gamma and --omega are required")
    G, Om = _load_matrix(args.gamma), _load_matrix(args.omega)
    d = minimum_distance_index(G, Om)
    lines = [f"D = {d:.17g}"]
    if args.n is not None:
        lines.append(f"n(p-1)D^2 = {args.n * (G.shape[0] - 1) * d * d:.17g}")
    _write("\n".join(lines), None)
    return 0


def cmd_check_g(args) -> int:
    rep = check_g_conditions(parse_dist_spec(args.dist1), parse_dist_spec(args.dist2),
                             make_nonlinearity(args.nonlinearity, args.a), args.grid)
    _write("\n".join(rep.lines()), None)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "are": cmd_are,
    "contour": cmd_contour,
    "estimate": cmd_estimate,
    "mdi": cmd_mdi,
    "check-g": cmd_check_g,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # re-parse with the file values as defaults of the chosen subcommand
        values = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = set(values) - known
        if unknown:
            parser.error(f"unknown keys in {args.config}: {', '.join(sorted(unknown))}")
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
