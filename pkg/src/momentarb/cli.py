"""
Command-line front end.

Every invocation writes one JSON report (stdout or ``--out``) that validates
against the packaged report schema, plus a one-line summary on stderr. The
exit code is the machine contract:

====  =====================================================
0     feasible / bound computed / transition found
1     arbitrage detected / infeasible
2     marginal verdict or numerical trouble
64    input error (bad JSON, schema violation, grid cap)
====  =====================================================

The solver iteration cap can be raised with ``MOMENTARB_MAX_ITER``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .conic import DEFAULT_TOL
from .engine import ArbitrageError, ArbitrageReport, Call, Verdict, check_no_arbitrage, price_bounds
from .marketfile import InputError, digest, dumps_report, load_market, load_measure, parse_target
from .martingale import convex_order_check, find_transition
from .oracle import GridCapError, oracle_bound, oracle_feasible

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_ARBITRAGE", "EXIT_MARGINAL", "EXIT_INPUT"]

EXIT_OK, EXIT_ARBITRAGE, EXIT_MARGINAL, EXIT_INPUT = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="momentarb", description="Static-arbitrage checks and price bounds via moment relaxations.")
    p.add_argument("--version", action="version", version=f"momentarb {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, degree=True):
        sp.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
        if degree:
            sp.add_argument("--degree", type=int, help="relaxation degree d (default: the file's, else 2)")
            sp.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver tolerance")

    c = sub.add_parser("check", help="test quoted prices for static arbitrage")
    c.add_argument("market", type=Path)
    common(c)

    b = sub.add_parser("bound", help="no-arbitrage bound on a target payoff")
    b.add_argument("market", type=Path)
    b.add_argument("--target", required=True, help="e.g. x1, call:x1:0.4, spread_straddle:x1:x2:0")
    b.add_argument("--direction", choices=("upper", "lower"), default="upper")
    common(b)

    o = sub.add_parser("oracle", help="grid LP feasibility or bound")
    o.add_argument("market", type=Path)
    o.add_argument("--grid", type=int, default=51, help="points per axis L")
    o.add_argument("--target")
    o.add_argument("--direction", choices=("upper", "lower"), default="upper")
    common(o, degree=False)

    m = sub.add_parser("martingale", help="martingale transition between two measures")
    m.add_argument("mu", type=Path)
    m.add_argument("nu", type=Path)
    common(m, degree=False)
    return p


def _degree_arg(args) -> Optional[int]:
    if args.degree is not None and args.degree < 1:
        raise InputError(f"--degree must be at least 1, got {args.degree}")
    return args.degree


def _check_dict(r: ArbitrageReport) -> dict:
    return {
        "verdict": r.verdict.value,
        "degree": r.degree,
        "margin": r.margin,
        "beta": r.beta,
        "blocks": [{"label": l, "dim": d} for l, d in zip(r.block_labels, r.block_dims)],
        "moments": r.moments,
        "static_violations": r.static_violations,
        "note": r.note,
        "solver": r.solver,
    }


_VERDICT_EXIT = {
    Verdict.NO_ARBITRAGE_DETECTED: EXIT_OK,
    Verdict.ARBITRAGE: EXIT_ARBITRAGE,
    Verdict.MARGINAL: EXIT_MARGINAL,
}


def _cmd_check(args, report: dict) -> tuple[int, str]:
    mf = load_market(args.market)
    report["input_digest"] = mf.digest
    report["conversions"] = [c.to_dict() for c in mf.conversions]
    r = check_no_arbitrage(mf.market, _degree_arg(args), tol=args.tol)
    report["check"] = _check_dict(r)
    return _VERDICT_EXIT[r.verdict], f"{r.verdict.value} at degree {r.degree} (margin {r.margin:.3g})"


def _cmd_bound(args, report: dict) -> tuple[int, str]:
    mf = load_market(args.market)
    report["input_digest"] = mf.digest
    report["conversions"] = [c.to_dict() for c in mf.conversions]
    target = parse_target(args.target, mf.market)
    try:
        res = price_bounds(mf.market, target, args.direction, _degree_arg(args), tol=args.tol)
    except ArbitrageError as exc:
        report["check"] = _check_dict(exc.report)
        code = _VERDICT_EXIT[exc.report.verdict]
        return code, f"base market not certified feasible: {exc.report.verdict.value}"
    out = {
        "target": args.target,
        "direction": res.direction,
        "value": res.value,
        "degree": res.degree,
        "pinned": res.pinned,
        "solver": res.solver,
    }
    if isinstance(target, Call):
        forward = float(np.dot(target.coefficients, mf.market.prices))
        out["straddle_value"] = res.straddle_value
        out["conversion"] = {
            "name": args.target,
            "forward": forward,
            "strike": target.strike,
            "call_price": res.value,
            "straddle_price": res.straddle_value,
        }
    report["bound"] = out
    return EXIT_OK, f"{args.direction} bound on {args.target} at degree {res.degree}: {res.value:.9g}"


def _cmd_oracle(args, report: dict) -> tuple[int, str]:
    mf = load_market(args.market)
    report["input_digest"] = mf.digest
    report["conversions"] = [c.to_dict() for c in mf.conversions]
    if args.grid < 2:
        raise InputError(f"--grid must be at least 2, got {args.grid}")
    try:
        feas = oracle_feasible(mf.market, args.grid)
    except GridCapError as exc:
        L, n = args.grid, mf.market.n_assets
        raise InputError(f"grid of {L}^{n} = {L ** n} points ({exc.n_points} with strike points) exceeds the cap") from exc
    out = {"grid": args.grid, "n_points": feas.n_points, "feasible": feas.feasible, "slack": feas.slack}
    report["oracle"] = out
    if not feas.feasible:
        return EXIT_ARBITRAGE, f"no grid measure matches the prices (slack {feas.slack:.3g})"
    if args.target is None:
        out["witness"] = {"points": feas.measure.points, "weights": feas.measure.weights}
        return EXIT_OK, f"grid measure found on {feas.n_points} points"
    target = parse_target(args.target, mf.market)
    res = oracle_bound(mf.market, target, args.direction, args.grid)
    out.update(
        n_points=res.n_points,
        witness={"points": res.measure.points, "weights": res.measure.weights},
        target=args.target,
        direction=args.direction,
        value=res.value,
    )
    return EXIT_OK, f"grid {args.direction} value of {args.target}: {res.value:.9g}"


def _cmd_martingale(args, report: dict) -> tuple[int, str]:
    mu, nu = load_measure(args.mu), load_measure(args.nu)
    report["input_digest"] = digest(args.mu.read_bytes() + args.nu.read_bytes())
    try:
        Q = find_transition(mu, nu)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out: dict = {"feasible": Q is not None}
    if Q is not None:
        out["transition"] = Q.matrix
        out["residual"] = Q.residual
    if mu.dim == 1:
        co = convex_order_check(mu, nu)
        out["convex_order"] = {"ordered": co.ordered, "mean_gap": co.mean_gap, "worst_violation": co.worst_violation}
    report["martingale"] = out
    if Q is None:
        return EXIT_ARBITRAGE, "no martingale transition maps mu to nu"
    return EXIT_OK, "martingale transition found"


_COMMANDS = {"check": _cmd_check, "bound": _cmd_bound, "oracle": _cmd_oracle, "martingale": _cmd_martingale}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    report: dict = {"tool": "momentarb", "version": __version__, "command": "check", "exit_code": EXIT_INPUT,
                    "input_digest": None}
    out_path = None
    try:
        args = build_parser().parse_args(argv)
        report["command"] = args.command
        out_path = args.out
        code, summary = _COMMANDS[args.command](args, report)
    except InputError as exc:
        code, summary = EXIT_INPUT, f"input error: {exc}"
        report["error"] = {"message": str(exc), "details": [{"path": p, "message": m} for p, m in exc.details]}
    except GridCapError as exc:
        code, summary = EXIT_INPUT, f"input error: {exc}"
        report["error"] = {"message": str(exc)}
    except RuntimeError as exc:
        code, summary = EXIT_MARGINAL, f"solver trouble: {exc}"
        report["error"] = {"message": str(exc)}
    report["exit_code"] = code
    text = dumps_report(report)
    if out_path is not None:
        try:
            out_path.write_text(text + "\n")
        except OSError as exc:
            print(text)
            print(f"momentarb: cannot write {out_path}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        print(text)
    print(f"momentarb {report['command']}: {summary}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
