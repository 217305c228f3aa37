"""Command-line front end. Results go to stdout as JSON (or CSV for sweeps).

Exit codes: 0 success, 1 when the model rejects the input (infeasible
market, out-of-range parameter), 2 on usage errors. Failures print a one-line
JSON diagnostic to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import coalitions, duopoly, experiments
from .data_impact import CostModel, FirmProfile
from .errors import OligoshareError
from .market import MarketParams, Mode, solve_equilibrium


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _diagnose(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False))


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _cost_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", type=float, default=0.1, help="cost floor")
    p.add_argument("--b", type=float, default=0.1, help="learning overhead")
    p.add_argument("--beta", type=float, default=1.0, help="learning-curve exponent")
    p.add_argument("--max-overhead-ratio", type=float, default=0.2)


def _pair_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--consent1", type=float, default=1.0)
    p.add_argument("--consent2", type=float, default=1.0)
    p.add_argument("--gamma", type=float, required=True)
    _cost_args(p)


def _pair(args) -> tuple[FirmProfile, FirmProfile]:
    model = CostModel(args.a, args.b, args.beta, args.max_overhead_ratio)
    return (
        FirmProfile(0, args.n1, model, args.consent1),
        FirmProfile(1, args.n2, model, args.consent2),
    )


def load_profiles(path: str) -> list[FirmProfile]:
    """Read firms from JSON: a list (or ``{"firms": [...]}``) of objects with ``n``.

    Optional keys per firm: ``id`` (defaults to position), ``a``, ``b``,
    ``beta``, ``max_overhead_ratio``, ``consent_fraction``.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read profiles file {path!r}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("firms")
    if not isinstance(data, list) or not all(isinstance(f, dict) and "n" in f for f in data):
        raise UsageError("profiles file must hold a list of firm objects with an 'n' key")
    out = []
    for k, f in enumerate(data):
        model = CostModel(
            f.get("a", 0.1), f.get("b", 0.1), f.get("beta", 1.0), f.get("max_overhead_ratio", 0.2)
        )
        out.append(FirmProfile(f.get("id", k), f["n"], model, f.get("consent_fraction", 1.0)))
    return out


def _parse_partition(text: str) -> coalitions.Partition:
    try:
        blocks = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--partition must be JSON like [[0,1],[2]]: {exc}") from None
    if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
        raise UsageError("--partition must be a JSON list of id lists")
    return coalitions.Partition(blocks)


def cmd_equilibrium(args) -> int:
    costs = args.costs
    params = MarketParams(len(costs), args.gamma, Mode.parse(args.mode), args.budget)
    _emit(solve_equilibrium(costs, params).to_dict())
    return 0


def cmd_share2(args) -> int:
    p1, p2 = _pair(args)
    _emit(duopoly.full_share_decision(p1, p2, args.gamma, args.mode).to_dict())
    return 0


def cmd_threshold(args) -> int:
    print(f"{duopoly.share_threshold(args.gamma, args.beta, args.mode):.6f}")
    return 0


def cmd_bargain(args) -> int:
    p1, p2 = _pair(args)
    if args.closed_form:
        out = duopoly.bargaining_closed_form(p1, p2, args.gamma)
    else:
        out = duopoly.bargaining_exact(p1, p2, args.gamma, strict=args.strict)
    _emit(out.to_dict())
    return 0


def cmd_coalition(args) -> int:
    profiles = load_profiles(args.profiles)
    if args.action == "solve":
        solve = coalitions.brute_force_game_solve if args.brute_force else coalitions.sequential_game_solve
        result = solve(profiles, args.gamma)
        payload = result.to_dict()
        payload["avg_coalition_size"] = coalitions.avg_coalition_size(result.partition)
    elif args.action == "core-check":
        if args.partition:
            part = _parse_partition(args.partition)
        else:
            part = coalitions.theorem3_partition(profiles, args.gamma)
        payload = {
            "partition": part.to_list(),
            "in_core": coalitions.alpha_core_membership(part, profiles, args.gamma),
        }
    else:
        report = coalitions.treaty_report(profiles, args.gamma)
        payload = report.to_dict()
        payload["universal_treaty"] = coalitions.universal_treaty_is_equilibrium(profiles, args.gamma)
    _emit(payload)
    return 0


def cmd_sweep(args) -> int:
    try:
        config = experiments.ExperimentConfig.load(args.config, seed=args.seed)
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
    except experiments.tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config {args.config!r} is not valid TOML: {exc}") from None
    fmt = experiments.OutputFormat(args.format or config.output_format)
    rows = experiments.run_sweep(config)
    text = experiments.render(rows, fmt)
    target = args.output or config.output
    if target and target != "-":
        experiments.write_rows(rows, target, fmt)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oligoshare", description="Data sharing between competing firms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("equilibrium", help="market equilibrium for given marginal costs")
    p.add_argument("--costs", type=_float_list, required=True, help="e.g. 0.2,0.3")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="cournot")
    p.add_argument("--budget", type=float, default=None)
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("share2", help="full data sharing decision for two firms")
    _pair_args(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="cournot")
    p.set_defaults(func=cmd_share2)

    p = sub.add_parser("threshold", help="break-even partner data share")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="cournot")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("bargain", help="Nash bargaining over sharing fractions")
    _pair_args(p)
    how = p.add_mutually_exclusive_group()
    how.add_argument("--exact", action="store_true", help="numeric maximiser (default)")
    how.add_argument("--closed-form", action="store_true", help="approximate closed form")
    p.add_argument("--strict", action="store_true", help="fail when no sharing is individually rational")
    p.set_defaults(func=cmd_bargain)

    p = sub.add_parser("coalition", help="coalition formation among many firms")
    p.add_argument("action", choices=["solve", "core-check", "treaty"])
    p.add_argument("--profiles", required=True, help="JSON file with the firms")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--brute-force", action="store_true", help="use the game-tree oracle (m <= 4)")
    p.add_argument("--partition", help="JSON block list for core-check, e.g. [[0,1],[2]]")
    p.set_defaults(func=cmd_coalition)

    p = sub.add_parser("sweep", help="Monte Carlo sweep of the coalition game")
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", help="output path ('-' for stdout)")
    p.add_argument("--format", choices=[f.value for f in experiments.OutputFormat])
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _diagnose("usage", str(exc))
        return 2
    except OligoshareError as exc:
        _diagnose(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
