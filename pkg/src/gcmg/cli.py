"""Command-line entry point.

Exit status: 0 on success, 1 for configuration errors, 2 for runtime or data
errors (including sweeps with failed points).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .baselines import DegenerateInputError
from .game import ConfigError, GameConfig
from .predictor import TruncatedRunError
from .sources import InsufficientDataError, PriceFileError

log = logging.getLogger("gcmg")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

SUBCOMMANDS = {
    "ns-sweep": "ns_sweep",
    "min-vs-maj": "min_vs_maj",
    "lambda-sweep": "lambda_sweep",
    "regime-switch": "regime_switch",
    "m-sweep": "m_sweep",
    "utility-trace": "utility_trace",
    "predict": "predict",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def load_config_file(path) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment, keys may use - or _."""
    values = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _common(p: argparse.ArgumentParser, predict: bool = False):
    p.add_argument("--config", help="flat key=value file; command-line flags override it")
    p.add_argument("--m", type=int, default=3, help="memory length")
    p.add_argument("--n", type=int, default=1, help="number of agents")
    p.add_argument("--s", type=int, default=2, help="strategies per agent (space=draw)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="utility discount in [0, 1]")
    p.add_argument("--payoff", choices=["step", "prop", "scaled"], default="step")
    p.add_argument("--kind", choices=["minority", "majority"], default="minority")
    p.add_argument("--space", choices=["draw", "rss", "fss"], default="rss")
    p.add_argument("--grand-canonical", action=argparse.BooleanOptionalAction, default=True,
                   help="give every agent the zero (stay out) strategy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=False, help="output directory")
    p.add_argument("--window", type=int, default=100, help="sliding window for psi")
    p.add_argument("-v", "--verbose", action="store_true")
    if predict:
        p.add_argument("csv", type=Path, help="price file (header row, chronological)")
        p.add_argument("--column", default="price")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--order", type=int, default=1, help="Wiener baseline order")
        p.add_argument("--trace", action="store_true", help="also dump per-step utilities")
    else:
        p.add_argument("--replicas", type=int, default=None)
        p.add_argument("--horizon", type=int, default=ex.DEFAULT_HORIZON)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--only-point", type=int, default=None,
                       help="re-run a single grid point (ids are listed in the manifest)")
        p.add_argument("--source", choices=ex.SOURCES, default=None)
        p.add_argument("--csv", default=None, help="use a price file as the source")
        p.add_argument("--column", default="price")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--ns-grid", type=_int_list, default=None)
        p.add_argument("--n-grid", type=_int_list, default=None)
        p.add_argument("--lambda-grid", type=_float_list, default=None)
        p.add_argument("--m-grid", type=_int_list, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcmg", description="Grand canonical minority game sign predictor")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "ns-sweep": "correctness vs pool size NS for S=2, S=5, N=1 and the RSS/FSS agents",
        "min-vs-maj": "minority vs majority game over a grid of N",
        "lambda-sweep": "final correctness vs lambda on the regime-switching AR(3)",
        "regime-switch": "correctness over time for a few lambdas across the regime switch",
        "m-sweep": "correctness vs memory length",
        "utility-trace": "per-step utilities of every strategy (single agent)",
        "predict": "predict return signs of a price CSV and compare with a Wiener filter",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text, description=text), predict=name == "predict")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        try:
            values = load_config_file(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, raw in values.items():
            dest = {"lambda": "lam", "n": "n", "s": "s"}.get(key, key)
            if dest not in known or dest in ("config", "help"):
                raise ConfigError(f"{args.config}: unknown key {key!r}")
            action = known[dest]
            if isinstance(action, argparse.BooleanOptionalAction):
                defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                defaults[dest] = action.type(raw)
            else:
                defaults[dest] = raw
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _base(args) -> ex.Base:
    return ex.Base(
        N=args.n, S=args.s, m=args.m, lam=args.lam, payoff=args.payoff, kind=args.kind,
        space=args.space, grand_canonical=args.grand_canonical, source=args.source,
        csv=args.csv, column=args.column, delimiter=args.delimiter,
    )


def cmd_sweep(args) -> int:
    name = SUBCOMMANDS[args.command]
    grid = {"ns": args.ns_grid, "n": args.n_grid, "lam": args.lambda_grid, "m": args.m_grid}
    points = ex.build_points(name, _base(args), {k: v for k, v in grid.items() if v})
    replicas = args.replicas if args.replicas is not None else (
        1 if name == "utility_trace" else ex.DEFAULT_REPLICAS)
    if replicas < 1 or args.horizon < 1 or args.jobs < 1:
        raise ConfigError("replicas, horizon and jobs must be >= 1")
    spec = ex.ExperimentSpec(
        name=name, points=points, replicas=replicas, base_seed=args.seed, horizon=args.horizon,
        out_dir=args.out or Path(f"results/{name}"), jobs=args.jobs, window=args.window,
        trace=name in ("regime_switch", "utility_trace"),
        utilities=name == "utility_trace",
        ceiling=not args.csv and (args.source or "") != "noise",
    )
    result = ex.run_experiment(spec, only_point=args.only_point)
    for row in result.aggregate:
        label = " ".join(f"{k}={row[k]}" for k in ("series", "N", "S", "m", "lam", "kind") if k in row)
        print(f"[{row['point_id']:3d}] {label}  psi={row['psi_mean']:.4f} +/- {row['psi_std']:.4f}")
    print(f"wrote {spec.out_dir}")
    if not result.complete:
        log.error("%d point(s) failed; see manifest", len(result.failures))
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_predict(args) -> int:
    lam = 0.97 if args.lam is None else args.lam
    cfg = GameConfig(N=args.n, S=args.s, m=args.m, lam=lam, payoff=args.payoff, kind=args.kind,
                     space=args.space, grand_canonical=args.grand_canonical, seed=args.seed)
    out = args.out or Path("results/predict")
    report = ex.predict_prices(args.csv, cfg, out, args.column, args.delimiter, args.window,
                               args.order, args.trace)
    print(f"steps={report.n_steps} scored={report.n_scored}")
    print(f"psi_final={report.psi_final:.4f} psi_test_half={report.psi_test_half:.4f} "
          f"wiener_psi={report.wiener_psi:.4f}")
    print(f"wrote {out}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "predict":
            return cmd_predict(args)
        return cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PriceFileError, InsufficientDataError, ex.InsufficientSignalError,
            DegenerateInputError, TruncatedRunError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
