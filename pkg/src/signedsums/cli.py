"""Command-line driver.

Exit codes: 0 success, 1 failed verdict, 2 invalid flags, 3 precondition failure.
"""
from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import gaussmeasure as gm
from . import report as rpt
from . import tdelta as td
from .experiments import (
    greedy_balance,
    rescale_to_volume,
    verify_cor34,
    verify_gluskin_milman,
    verify_hajela,
    verify_lp_scaling,
    verify_rotation_general,
    verify_thm15_ball,
    verify_thm16_body,
)
from .geometry import load_vectors, log_volume, min_sign_norm, parse_body
from .randsrc import ALGORITHM, RandomStream
from .signsets import parse_signset
from .verdict import DEFAULT_CONSTANTS, PreconditionError, TheoremVerdict

EXIT_FAILED, EXIT_USAGE, EXIT_PRECONDITION = 1, 2, 3

VERIFY_NAMES = [
    "hajela", "rotation", "gluskin-milman", "cor34", "thm15", "thm16", "lp-scaling",
    "tdelta-bounds", "barvinok", "polar", "kv", "comparison",
]

# A desk-scale sweep used by `report` when no config lists experiments.
DEFAULT_SUITE = [
    ["gamma", "--body", "lp:inf", "--n", "16", "--t", "1.0", "--exact"],
    ["gamma", "--body", "lp:inf", "--n", "16", "--t", "1.0", "--mc", "--samples", "200000"],
    ["tdelta", "--body", "lp:inf", "--n", "16", "--delta", "0.5", "--exact"],
    ["verify", "hajela", "--n", "24", "--delta", "0.3333333333333333", "--signset", "random:16",
     "--trials", "2000"],
    ["verify", "tdelta-bounds", "--body", "lp:2", "--n", "8", "--delta", "0.25", "--exact"],
    ["verify", "barvinok", "--a", "20", "--n", "32"],
    ["verify", "polar", "--body", "lp:inf", "--n", "8", "--samples", "100000"],
    ["verify", "gluskin-milman", "--n", "4", "--m", "4", "--lambdas", "0.5,0.5,0.5,0.5",
     "--t", "0.4", "--samples", "100000"],
    ["verify", "cor34", "--n", "1", "--trials", "20000"],
    ["verify", "cor34", "--n", "8", "--trials", "2000"],
    ["verify", "thm15", "--body-d", "lp:inf", "--n", "12", "--delta", "0.5",
     "--signset", "random:4", "--trials", "2000"],
    ["verify", "kv", "--body", "lp:inf", "--n", "8", "--t", "0.4", "--exact"],
    ["verify", "comparison", "--body", "lp:inf", "--n", "16", "--t", "0.0625",
     "--samples", "100000"],
]


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="u64 master seed")
    p.add_argument("--stream-id", type=int, default=0, help=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=1, help="worker count (never changes results)")
    p.add_argument("--config", help="JSON file of flag defaults; flags override it")


def _mode_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="mode", action="store_const", const=gm.EXACT)
    g.add_argument("--mc", dest="mode", action="store_const", const=gm.MONTE_CARLO)
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo sample count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signedsums", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gamma", help="Gaussian measure of a dilate tD")
    p.add_argument("--body", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    _mode_flags(p)
    _common(p)

    p = sub.add_parser("median", help="median of ||Z||_D")
    p.add_argument("--body", required=True)
    p.add_argument("--n", type=int, required=True)
    _mode_flags(p)
    _common(p)

    p = sub.add_parser("tdelta", help="solve for t_{D,delta}")
    p.add_argument("--body", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    _mode_flags(p)
    _common(p)

    p = sub.add_parser("stats", help="Gaussian statistics of a body")
    p.add_argument("--body", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    _common(p)

    p = sub.add_parser("verify", help="run one theorem verifier")
    p.add_argument("name", choices=VERIFY_NAMES)
    p.add_argument("--n", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--body-k", default=None)
    p.add_argument("--body-d", "--body", dest="body_d", default=None)
    p.add_argument("--signset", default="random:1")
    p.add_argument("--t", type=float)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--vectors", help="vectors file for the rotation check (default: e_1..e_n)")
    p.add_argument("--lambdas", help="comma-separated coefficients (gluskin-milman)")
    p.add_argument("--m", type=int, default=1, help="number of bodies V_i (gluskin-milman)")
    p.add_argument("--a", type=float, default=20.0, help="dilation for the barvinok check")
    p.add_argument("--p", type=float, default=4.0, help="exponent for lp-scaling")
    p.add_argument("--ns", default="16,32,64", help="comma-separated dimensions for lp-scaling")
    p.add_argument("--set-size", type=int, default=256)
    p.add_argument("--point-trials", type=int, default=500)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--gamma-samples", type=int, default=1_000_000)
    _mode_flags(p)
    _common(p)

    p = sub.add_parser("balance", help="sign a list of vectors")
    p.add_argument("method", choices=["greedy", "exhaustive"])
    p.add_argument("--body", required=True)
    p.add_argument("--vectors", required=True)
    _common(p)

    p = sub.add_parser("report", help="run a sweep and write manifest, CSV and plot scripts")
    p.add_argument("--out", required=True)
    _common(p)

    p = sub.add_parser("replay", help="re-run a manifest's commands and compare every result")
    p.add_argument("manifest")
    _common(p)
    return parser


class _Parser:
    """argparse wrapper that raises instead of exiting, and honours --config."""

    def __init__(self):
        self.parser = build_parser()

    def parse(self, argv: list[str]) -> argparse.Namespace:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("command", nargs="?")
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        cfg = {}
        if known.config and known.command in self._subparsers():
            try:
                cfg = json.loads(Path(known.config).read_text())
            except (OSError, ValueError) as exc:
                raise UsageError(f"unreadable config {known.config}: {exc}") from exc
            sub = self._subparsers()[known.command]
            flat = {k.replace("-", "_"): v for k, v in cfg.items() if k != "experiments"}
            for action in sub._actions:
                if action.dest in flat:
                    action.required = False
            sub.set_defaults(**flat)
        args = self._parse(self.parser, argv)
        args._config = cfg
        return args

    def _subparsers(self) -> dict:
        for action in self.parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                return action.choices
        return {}

    @staticmethod
    def _parse(parser, argv):
        try:
            return parser.parse_args(argv)
        except SystemExit as exc:
            raise UsageError(f"invalid arguments: {' '.join(argv)}") from exc


# ---------------------------------------------------------------------------
# commands


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required flags: " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _body(spec: str, n: int):
    try:
        return parse_body(spec, n)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_gamma(args, s):
    D = _body(args.body, args.n)
    est = gm.gamma_measure(D, args.t, args.mode, args.samples, s, args.threads)
    return "gamma", est, {"n": args.n, "t": args.t, "body_d": args.body}


def cmd_median(args, s):
    D = _body(args.body, args.n)
    m = gm.gaussian_median(D, args.mode, args.samples, s, args.threads)
    return "median", {"median": m, "method": gm._mode(args.mode, D)}, {"n": args.n, "body_d": args.body}


def cmd_tdelta(args, s):
    D = _body(args.body, args.n)
    res = td.t_delta(D, args.delta, args.mode, args.samples, s, args.threads)
    return "tdelta", res, {"n": args.n, "delta": args.delta, "body_d": args.body}


def cmd_stats(args, s):
    D = _body(args.body, args.n)
    return "stats", gm.gauss_stats(D, args.samples, s, args.threads), {"n": args.n, "body_d": args.body}


def _verify(args, s) -> TheoremVerdict:
    name, w = args.name, args.threads
    if name == "barvinok":
        _need(args, "n")
        return td.barvinok_ball_check(args.a, args.n)
    if name == "lp-scaling":
        ns = [int(v) for v in args.ns.split(",")]
        return verify_lp_scaling(args.p, ns, args.set_size, args.trials, s, args.delta, w).verdict()
    _need(args, "n")
    n = args.n
    body_d = args.body_d
    if name in ("tdelta-bounds", "polar", "kv", "comparison"):
        _need(args, "body_d")
        D = _body(body_d, n)
        if name == "tdelta-bounds":
            _need(args, "delta")
            return td.t_delta_bounds_check(D, args.delta, args.mode, args.samples, s, w)
        if name == "polar":
            return td.polar_identity_check(D, args.samples, s, w)
        _need(args, "t")
        if name == "kv":
            return gm.kv_smallball_check(D, args.t, args.samples, s, w, args.mode)
        return gm.comparison_check(D, args.t, args.samples, s, w)
    if name == "hajela":
        _need(args, "delta")
        s_set, s_run = s.split(2)
        S = parse_signset(args.signset, n, s_set, args.delta)
        return verify_hajela(n, args.delta, S, args.trials, s_run, DEFAULT_CONSTANTS, w)
    if name == "gluskin-milman":
        _need(args, "t")
        D = _body(body_d or "lp:2", n)
        V = rescale_to_volume(_body(args.body_k or body_d or "lp:2", n), log_volume(D))
        lambdas = [float(v) for v in args.lambdas.split(",")] if args.lambdas else [1.0] * args.m
        if len(lambdas) != args.m:
            raise UsageError("--lambdas must list --m coefficients")
        return verify_gluskin_milman([V] * args.m, D, lambdas, args.t, args.samples, s, w)
    if name == "cor34":
        K = _body(args.body_k or "lp:2", n)
        D = _body(body_d or "lp:2", n)
        return verify_cor34(K, D, args.trials, s, DEFAULT_CONSTANTS, w)

    _need(args, "delta")
    D = _body(body_d or "lp:inf", n)
    s_set, s_run = s.split(2)
    S = parse_signset(args.signset, n, s_set, args.delta)
    if name == "rotation":
        xs = load_vectors(args.vectors) if args.vectors else np.eye(n)
        t = args.t
        if t is None:
            t = args.tau * td.t_delta(D, args.delta, args.mode, args.gamma_samples, s_run.split(1)[0], w).t_value
        return verify_rotation_general(xs, D, args.delta, args.tau, S, t, args.trials, s_run,
                                       args.mode, args.gamma_samples, w)
    if name == "thm15":
        return verify_thm15_ball(D, args.delta, S, args.t, args.trials, s_run, args.mode,
                                 args.gamma_samples, DEFAULT_CONSTANTS, w)
    # thm16
    K = _body(args.body_k or "lp:inf", n)
    t = args.t
    if t is None:
        t = 0.999 * td.t_delta(D, args.delta, args.mode, args.gamma_samples, s_run.split(1)[0], w).t_value / 10
    return verify_thm16_body(K, D, args.delta, S, t, args.trials, args.point_trials, s_run,
                             args.mode, args.gamma_samples, DEFAULT_CONSTANTS, w)


def cmd_verify(args, s):
    v = _verify(args, s)
    params = {k: v.params.get(k) for k in ("n", "delta", "t", "body_k", "body_d")}
    if params["body_d"] is None and args.body_d:
        params["body_d"] = args.body_d
    if params["body_k"] is None and args.body_k:
        params["body_k"] = args.body_k
    return "verdict", v, params


def cmd_balance(args, s):
    xs = load_vectors(args.vectors)
    D = _body(args.body, xs.shape[1])
    if args.method == "greedy":
        signs, value = greedy_balance(xs, D)
    else:
        value, signs = min_sign_norm(xs, D)
    return "balance", {"signs": signs.tolist(), "value": value, "method": args.method}, {
        "n": xs.shape[1], "body_d": args.body}


COMMANDS = {
    "gamma": cmd_gamma,
    "median": cmd_median,
    "tdelta": cmd_tdelta,
    "stats": cmd_stats,
    "verify": cmd_verify,
    "balance": cmd_balance,
}


def execute(argv: list[str]) -> tuple[dict, int]:
    """Run one non-report command; returns ``(record, exit_code)``."""
    args = _Parser().parse(argv)
    if args.command in ("report", "replay"):
        raise UsageError(f"{args.command} cannot be nested")
    s = RandomStream(args.seed, args.stream_id)
    try:
        kind, result, params = COMMANDS[args.command](args, s)
    except (UsageError, PreconditionError):
        raise
    except gm.UnsupportedExactError as exc:
        raise PreconditionError(str(exc)) from exc
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    record = {"kind": kind, "command": shlex.join(argv), "params": params,
              "result": rpt.plain(result)}
    code = 0
    if kind == "verdict" and not record["result"]["pass"]:
        code = EXIT_FAILED
    return record, code


def run_report(args, argv: list[str]) -> int:
    experiments = DEFAULT_SUITE
    cfg = getattr(args, "_config", None)
    if cfg and "experiments" in cfg:
        experiments = [list(map(str, e)) for e in cfg["experiments"]]
    results, code = [], 0
    for i, exp in enumerate(experiments):
        sub_argv = exp + ["--seed", str(args.seed), "--stream-id", str(i), "--threads", str(args.threads)]
        try:
            record, c = execute(sub_argv)
        except PreconditionError as exc:
            record, c = {"kind": "error", "command": shlex.join(exp), "params": {},
                         "result": {"error": str(exc)}}, EXIT_PRECONDITION
        results.append(record)
        code = max(code, c)
    command = shlex.join(["signedsums"] + argv)
    manifest = {
        "run_id": rpt.run_id_for(command, args.seed),
        "timestamp": rpt.utc_timestamp(),
        "seed": args.seed,
        "rng_algorithm": ALGORITHM,
        "constants": DEFAULT_CONSTANTS.as_dict(),
        "command": command,
        "results": results,
    }
    paths = rpt.write_report(args.out, manifest)
    print(rpt.dumps(paths))
    return code


def replay_manifest(path) -> list[str]:
    """Re-execute each recorded command; returns the commands whose results differ."""
    manifest = json.loads(Path(path).read_text())
    mismatched = []
    for record in manifest["results"]:
        if record["kind"] == "error":
            continue
        fresh, _ = execute(shlex.split(record["command"]))
        # compare through the serialiser so both sides see identical float text
        if rpt.dumps(fresh["result"]) != rpt.dumps(record["result"]):
            mismatched.append(record["command"])
    return mismatched


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _Parser().parse(argv)
        if args.command == "report":
            return run_report(args, argv)
        if args.command == "replay":
            bad = replay_manifest(args.manifest)
            print(rpt.dumps({"replayed": True, "mismatched": bad}))
            return EXIT_FAILED if bad else 0
        record, code = execute(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    out = dict(record["result"]) if isinstance(record["result"], dict) else {"value": record["result"]}
    out.setdefault("seed", args.seed)
    out.setdefault("rng_algorithm", ALGORITHM)
    if record["kind"] == "verdict":
        out["constants"] = DEFAULT_CONSTANTS.as_dict()
    print(rpt.dumps(out))
    return code


if __name__ == "__main__":
    sys.exit(main())
