"""Command-line entry point. Reports go to stdout (or ``--out``) as JSON."""

from __future__ import annotations

import argparse
import json
import re
import secrets
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bitextract import BUDGET_EXHAUSTED, DEFAULT_EXTRACTION_BUDGET, BitQuery, extract_bit, extract_stream
from .coinlab import ExactCoin, MixtureCoin, RandomBits, converging_from_target
from .errors import BudgetExhausted, BudgetRefused, CoinOracleError, OracleUnavailable
from .estimator import DEFAULT_TOSS_BUDGET, AccuracySpec, estimate_once, estimate_sequence
from .harness import ACCEPTANCE_SCENARIOS, DEFAULT_ALPHA, SCENARIOS, run_meta_trials
from .machines import (
    DEFAULT_STEP_BUDGET,
    MachineCatalog,
    load_machine,
    run_ground_truth,
    run_with_coin,
    universal_run,
)
from .numeric import as_rational, rational_to_bitstream
from .oracle import CoinOracle, encode_set, set_fixture

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_STAT_FAIL = 4
EXIT_ERROR = 5


class UsageError(Exception):
    pass


_RATIONAL = r"\d+(?:/\d+)?"


def _rational(text: str) -> Fraction:
    try:
        r = as_rational(text)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise UsageError(f"bad rational {text!r}") from exc
    if not 0 <= r <= 1:
        raise UsageError(f"{text} is outside [0, 1]")
    return r


def _bias_stream(spec: str):
    if spec.startswith("set:"):
        parts = spec.split(":")
        if len(parts) < 3:
            raise UsageError("named bias reads set:<fixture>:<direct|guarded>")
        mode = parts[-1]
        fixture = ":".join(parts[1:-1])
        return encode_set(set_fixture(fixture), mode)
    return rational_to_bitstream(_rational(spec))


def build_coin(spec: str, seed: int):
    """Coin from the ``--coin`` grammar.

    ``exact:<a>/<b>``, ``exact:set:<fixture>:<mode>``, ``converging:<a>/<b>``,
    ``mixture:(<a>/<b>@<w>/<v>)+`` or ``mixture:uniform:<a>/<b>:<c>/<d>``.
    """
    kind, _, rest = spec.partition(":")
    src = RandomBits(seed)
    try:
        if kind == "exact":
            return ExactCoin(_bias_stream(rest), src)
        if kind == "converging":
            return converging_from_target(_bias_stream(rest), src)
        if kind == "mixture":
            if rest.startswith("uniform:"):
                m = re.fullmatch(rf"uniform:({_RATIONAL}):({_RATIONAL})", rest)
                if not m:
                    raise UsageError("uniform mixture reads mixture:uniform:<a>/<b>:<c>/<d>")
                return MixtureCoin(src, uniform=(_rational(m[1]), _rational(m[2])))
            pairs = re.findall(rf"\(({_RATIONAL})@({_RATIONAL})\)", rest)
            if not pairs or "".join(f"({x}@{w})" for x, w in pairs) != rest:
                raise UsageError("discrete mixture reads mixture:(<a>/<b>@<w>/<v>)+")
            return MixtureCoin(src, components=[(_rational(x), _rational(w)) for x, w in pairs])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown coin kind {kind!r}")


def coin_from_config(cfg: dict, seed: Optional[int] = None):
    """Coin from a config mapping ``{kind, bias, seed, distribution}``."""
    kind = cfg.get("kind")
    s = cfg.get("seed", seed)
    if s is None:
        raise UsageError("coin config needs a seed")
    if kind in ("exact", "converging"):
        return build_coin(f"{kind}:{cfg['bias']}", int(s))
    if kind == "mixture":
        dist = cfg.get("distribution")
        if not dist:
            raise UsageError("mixture config needs a distribution")
        body = "".join(f"({v}@{w})" for v, w in dist)
        return build_coin(f"mixture:{body}", int(s))
    raise UsageError(f"unknown coin kind {kind!r}")


def _resolve_coin(args):
    arg = args.coin
    if arg.endswith(".json") and Path(arg).is_file():
        cfg = json.loads(Path(arg).read_text())
        if "seed" in cfg:
            args.seed = int(cfg["seed"])
        return coin_from_config(cfg, args.seed)
    return build_coin(arg, args.seed)


def _emit(record: dict, out: Optional[str]) -> None:
    text = json.dumps(record, sort_keys=True, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def _record(args, **payload) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": args.command, "seed": args.seed,
            "config": _config(args), **payload}


# -- subcommands --------------------------------------------------------------


def cmd_estimate(args) -> int:
    coin = _resolve_coin(args)
    if args.sequence:
        if args.kmax is None:
            raise UsageError("--sequence needs --kmax")
        ests = list(estimate_sequence(coin, args.j, args.kmax, budget=args.toss_budget))
        payload = {"sequence": [e.as_dict() for e in ests],
                   "p_hat": str(ests[-1].value), "n": sum(e.tosses_used for e in ests),
                   "heads": sum(e.heads for e in ests)}
    else:
        est = estimate_once(coin, AccuracySpec(args.j, args.k), budget=args.toss_budget)
        payload = {"p_hat": str(est.value), "n": est.tosses_used, "heads": est.heads}
    _emit(_record(args, **payload), args.out)
    return EXIT_OK


def cmd_extract(args) -> int:
    coin = _resolve_coin(args)
    if args.bit is not None:
        tr = extract_bit(coin, BitQuery(args.bit, args.j, args.toss_budget))
        payload = {
            "bit": None if tr.exhausted else tr.outcome,
            "outcome": "budget_exhausted" if tr.exhausted else "bit",
            "k_final": tr.k_final,
            "p_hat_final": None if tr.p_hat_final is None else str(tr.p_hat_final),
            "tosses_total": tr.tosses_total,
        }
        _emit(_record(args, **payload), args.out)
        return EXIT_BUDGET if tr.exhausted else EXIT_OK
    if not args.stream or args.count is None:
        raise UsageError("extract needs --bit <l> or --stream --count <m>")
    ex = extract_stream(coin, args.j, args.toss_budget)
    bits = []
    for b in ex:
        if b is BUDGET_EXHAUSTED:
            break
        bits.append(b)
        if len(bits) == args.count:
            break
    done = len(bits) == args.count
    payload = {
        "bits": bits,
        "outcome": "complete" if done else "budget_exhausted",
        "k_final": [e.k for e in ex.emitted[: len(bits)]],
        "tosses_total": ex.tosses_total,
    }
    _emit(_record(args, **payload), args.out)
    return EXIT_OK if done else EXIT_BUDGET


def cmd_encode(args) -> int:
    X = set_fixture(args.set)
    stream = encode_set(X, args.mode)
    _emit(_record(args, bits=stream.prefix(args.bits), set=X.description), args.out)
    return EXIT_OK


def cmd_run_machine(args) -> int:
    m = load_machine(args.file)
    X = set_fixture(args.set)
    if args.coin_backed:
        oracle = CoinOracle(ExactCoin(encode_set(X, args.mode), RandomBits(args.seed)),
                            args.j, args.mode, args.toss_budget)
        run = run_with_coin(m, oracle, args.input, args.j, args.step_budget)
    else:
        run = run_ground_truth(m, X, args.input, args.step_budget)
    _emit(_record(args, **run.as_dict()), args.out)
    return EXIT_OK if run.halted else EXIT_BUDGET


def cmd_universal(args) -> int:
    catalog = MachineCatalog.from_directory(args.catalog)
    X = set_fixture(args.set)
    oracle = CoinOracle(ExactCoin(encode_set(X, args.mode), RandomBits(args.seed)),
                        args.j, args.mode, args.toss_budget)
    try:
        run = universal_run(catalog, args.j, args.n, args.m, oracle, args.step_budget)
    except IndexError as exc:
        raise UsageError(str(exc)) from exc
    _emit(_record(args, machine=catalog[args.n].name, **run.as_dict()), args.out)
    return EXIT_OK if run.halted else EXIT_BUDGET


def cmd_verify(args) -> int:
    if args.all:
        names = list(ACCEPTANCE_SCENARIOS)
    elif args.scenario:
        names = [args.scenario]
    else:
        raise UsageError("verify needs --scenario <name> or --all")
    reports = []
    for name in names:
        if name not in SCENARIOS:
            raise UsageError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
        rep = run_meta_trials(name, args.trials, args.alpha, args.seed, args.workers)
        print(f"{name}: {rep.failures}/{rep.trials} failures, p={rep.p_value:.4g} "
              f"-> {'pass' if rep.verdict else 'FAIL'}", file=sys.stderr)
        reports.append(rep.to_dict())
    record = _record(args, reports=reports) if args.all else {**_record(args), **reports[0]}
    _emit(record, args.out)
    return EXIT_OK if all(r["verdict"] == "pass" for r in reports) else EXIT_STAT_FAIL


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coinoracle", description="Biased coins as oracles: simulation lab.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, toss_budget=None):
        sp.add_argument("--seed", type=int, default=None, help="root seed (default: random, always echoed)")
        sp.add_argument("--out", default=None, help="write JSON here instead of stdout")
        if toss_budget is not None:
            sp.add_argument("--toss-budget", type=int, default=toss_budget)

    sp = sub.add_parser("estimate", help="estimate a coin's bias")
    sp.add_argument("--coin", required=True)
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--sequence", action="store_true")
    sp.add_argument("--kmax", type=int)
    common(sp, DEFAULT_TOSS_BUDGET)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("extract", help="extract bits of a coin's bias")
    sp.add_argument("--coin", required=True)
    sp.add_argument("--j", type=int, required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--bit", type=int)
    g.add_argument("--stream", action="store_true")
    sp.add_argument("--count", type=int)
    common(sp, DEFAULT_EXTRACTION_BUDGET)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("encode", help="binary encoding of a set fixture")
    sp.add_argument("--set", required=True)
    sp.add_argument("--mode", choices=("direct", "guarded"), default="direct")
    sp.add_argument("--bits", type=int, default=32)
    common(sp)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("run-machine", help="run an oracle machine description")
    sp.add_argument("--file", required=True)
    sp.add_argument("--set", required=True)
    sp.add_argument("--input", type=int, required=True)
    sp.add_argument("--coin-backed", action="store_true")
    sp.add_argument("--j", type=int, default=4)
    sp.add_argument("--mode", choices=("direct", "guarded"), default="guarded")
    sp.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET)
    common(sp, DEFAULT_EXTRACTION_BUDGET)
    sp.set_defaults(func=cmd_run_machine)

    sp = sub.add_parser("universal", help="run catalog machine n on input m with a coin oracle")
    sp.add_argument("--catalog", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--j", type=int, required=True)
    sp.add_argument("--set", default="evens")
    sp.add_argument("--mode", choices=("direct", "guarded"), default="guarded")
    sp.add_argument("--step-budget", type=int, default=DEFAULT_STEP_BUDGET)
    common(sp, DEFAULT_EXTRACTION_BUDGET)
    sp.set_defaults(func=cmd_universal)

    sp = sub.add_parser("verify", help="run statistical meta-trial scenarios")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--scenario")
    g.add_argument("--all", action="store_true")
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.seed is None:
            args.seed = secrets.randbits(64)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetRefused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (BudgetExhausted, OracleUnavailable) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (CoinOracleError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
