"""Command-line entry point.

Exit codes: 0 success, 1 user error (bad config or arguments), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import tomli

from . import analytics
from .config import OPTIONS, ConfigError, validate_config
from .randomness import OffspringSpec

USER_ERROR, INTERNAL_ERROR = 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _graph(text: str) -> dict:
    """``lattice:2``, ``line``, ``tree:16``, ``decorated:200``."""
    family, _, arg = text.partition(":")
    key = {"lattice": "d", "tree": "d", "decorated": "n"}.get(family)
    if key is None:
        if family == "line" and not arg:
            return {"family": "line"}
        raise UsageError(f"unknown graph '{text}'")
    try:
        return {"family": family, key: int(arg)}
    except ValueError:
        raise UsageError(f"graph '{text}' needs an integer parameter") from None


def _offspring(text: str) -> dict:
    """``deterministic:3``, ``poisson:2.5``, ``geometric:0.4``, ``finite:0=0.3,3=0.7``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "deterministic":
            return {"kind": kind, "params": {"k": int(arg)}}
        if kind == "poisson":
            return {"kind": kind, "params": {"lam": float(arg)}}
        if kind == "geometric":
            return {"kind": kind, "params": {"q": float(arg)}}
        if kind == "finite":
            pairs = (item.split("=") for item in arg.split(","))
            return {"kind": kind, "params": {"weights": {k.strip(): float(v) for k, v in pairs}}}
    except ValueError:
        raise UsageError(f"cannot parse offspring '{text}'") from None
    raise UsageError(f"unknown offspring kind '{kind}'")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got '{text}'") from None


def _option(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep:
        raise UsageError(f"--option expects key=value, got '{text}'")
    try:
        return key.strip(), tomli.loads(f"v = {value}")["v"]
    except tomli.TOMLDecodeError:
        return key.strip(), value


def _load_base(args) -> dict:
    if args.config and args.from_manifest:
        raise UsageError("use either --config or --from-manifest")
    try:
        if args.config:
            return tomli.loads(Path(args.config).read_text())
        if args.from_manifest:
            return dict(json.loads(Path(args.from_manifest).read_text())["config"])
    except OSError as exc:
        raise ConfigError(f"<config>: cannot read: {exc}") from None
    except (tomli.TOMLDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"<config>: cannot parse: {exc}") from None
    return {}


def build_config(args):
    data = _load_base(args)
    if data.get("experiment", args.command) != args.command:
        raise ConfigError(f"experiment: config is for '{data['experiment']}', not '{args.command}'")
    data["experiment"] = args.command
    if args.graph:
        data["graph"] = _graph(args.graph)
    if args.offspring:
        data["offspring"] = _offspring(args.offspring)
    for name in ("p", "trials", "seed", "engine", "workers"):
        if getattr(args, name) is not None:
            data[name] = getattr(args, name)
    if args.p_grid is not None:
        data["p_grid"] = _floats(args.p_grid)
    if args.no_seed_match:
        data["seed_matched"] = False
    if args.out is not None:
        data["output_dir"] = args.out
    stop = dict(data.get("stop", {}))
    for name in ("max_steps", "max_total_parasites", "max_radius"):
        if getattr(args, name) is not None:
            stop[name] = getattr(args, name)
    if args.no_sealed:
        stop["detect_sealed"] = False
    if stop:
        data["stop"] = stop
    if args.option:
        opts = dict(data.get("options", {}))
        opts.update(_option(o) for o in args.option)
        data["options"] = opts
    return validate_config(data)


def _bound(text: str):
    return text if text == "unbounded" else int(text)


def _add_experiment(sub, name: str):
    p = sub.add_parser(name, help=f"run the {name} campaign")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--from-manifest", help="re-run the configuration recorded in a manifest.json")
    p.add_argument("--graph", help="lattice:D | line | tree:D | decorated:N")
    p.add_argument("--offspring", help="deterministic:K | poisson:M | geometric:Q | finite:0=0.3,3=0.7")
    p.add_argument("--p", type=float)
    p.add_argument("--p-grid", help="comma-separated p values")
    p.add_argument("--no-seed-match", action="store_true", help="independent seeds per grid point")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--engine", choices=("vertex", "parasite"))
    p.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--max-steps", type=_bound)
    p.add_argument("--max-total-parasites", type=_bound)
    p.add_argument("--max-radius", type=_bound)
    p.add_argument("--no-sealed", action="store_true", help="disable sealed-frontier detection")
    p.add_argument("--option", action="append", metavar="KEY=VALUE",
                   help="experiment option; VALUE is parsed as a TOML value")


def _add_analytics(sub):
    p = sub.add_parser("analytics", help="closed-form quantities")
    q = p.add_subparsers(dest="quantity", required=True, parser_class=_Parser)
    for name in ("escape", "escape-exit"):
        e = q.add_parser(name)
        e.add_argument("--n", type=int, required=True)
        e.add_argument("--l", type=int, required=True)
    e = q.add_parser("decorated-mean")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--p", type=float, required=True)
    e = q.add_parser("bgw")
    e.add_argument("--offspring", required=True)
    e.add_argument("--p", type=float, default=1.0)
    e = q.add_parser("bounds")
    e.add_argument("--offspring", required=True)
    e.add_argument("--max-degree", type=int)
    e = q.add_parser("wilson")
    e.add_argument("--successes", type=int, required=True)
    e.add_argument("--trials", type=int, required=True)
    e.add_argument("--level", type=float, default=0.95)


def _analytics(args) -> dict:
    match args.quantity:
        case "escape":
            return {"quantity": "escape_prob_interior", "n": args.n, "l": args.l,
                    "value": analytics.escape_prob_interior(args.n, args.l)}
        case "escape-exit":
            return {"quantity": "escape_prob_exit", "n": args.n, "l": args.l,
                    "value": analytics.escape_prob_exit(args.n, args.l)}
        case "decorated-mean":
            return {"quantity": "decorated_offspring_mean", "n": args.n, "p": args.p,
                    "value": analytics.decorated_offspring_mean(args.n, args.p)}
        case "bgw":
            r = analytics.bgw_extinction(OffspringSpec.from_dict(_offspring(args.offspring)), args.p)
            return {"quantity": "bgw_extinction", "p": args.p, "extinction_prob": r.extinction_prob,
                    "survival_prob": r.survival_prob, "mean_offspring": r.mean_offspring}
        case "bounds":
            a = OffspringSpec.from_dict(_offspring(args.offspring))
            out = {"quantity": "pc_lower_bounds", "theorem1_bound": analytics.theorem1_bound(a)}
            if args.max_degree is not None:
                out["degree_bound"] = analytics.degree_bound(args.max_degree)
            return out
        case "wilson":
            lo, hi = analytics.wilson_interval(args.successes, args.trials, args.level)
            return {"quantity": "wilson_interval", "ci_lo": lo, "ci_hi": hi}
    raise AssertionError(args.quantity)  # pragma: no cover


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simi", description="Spatial infection model with host immunity.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in OPTIONS:
        _add_experiment(sub, name)
    _add_analytics(sub)
    return parser


def run_cli(argv=None) -> int:
    from .output import dumps, execute

    try:
        args = make_parser().parse_args(argv)
        if args.command == "analytics":
            print(dumps(_analytics(args)))
            return 0
        cfg = build_config(args)
        result, manifest = execute(cfg)
        print(dumps({"experiment": cfg.experiment, "config_hash": manifest["config_hash"],
                     "output_dir": cfg.output_dir, **result.summary}))
        return 0
    except (UsageError, ConfigError) as exc:
        print(f"simi: error: {exc}", file=sys.stderr)
        return USER_ERROR
    except ValueError as exc:
        # domain errors raised by the library on user-supplied values
        print(f"simi: error: {exc}", file=sys.stderr)
        return USER_ERROR
    except OSError as exc:
        print(f"simi: I/O error: {exc}", file=sys.stderr)
        return USER_ERROR
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return INTERNAL_ERROR


def main():  # pragma: no cover
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()
