"""Batch command-line front end.

Subcommands: verify (safety check against a problem file), robust (local
robustness around one input), reach (reachable-set bounds only).  A
machine-readable JSON report goes to --out or stdout; a short human summary
goes to stderr.  Exit codes: 0 Safe/True, 1 Unsafe/False, 2
Unknown/Inconclusive, 3 timeout, 4 usage or parse error.
"""

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .model_io import (
    Box,
    NnetParseError,
    ProblemFormatError,
    normalize_input_box,
    parse_nnet,
    parse_problem,
)
from .reachability import ReachTimeout, reach_approx, reach_exact
from .star import Star
from .verifier import (
    ROBUST_FALSE,
    ROBUST_INCONCLUSIVE,
    ROBUST_TRUE,
    SAFE,
    UNKNOWN,
    UNSAFE,
    check_local_robustness,
    check_safety,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_UNKNOWN = 2
EXIT_TIMEOUT = 3
EXIT_USAGE = 4

_VERDICT_EXIT = {
    SAFE: EXIT_OK,
    ROBUST_TRUE: EXIT_OK,
    UNSAFE: EXIT_VIOLATION,
    ROBUST_FALSE: EXIT_VIOLATION,
    UNKNOWN: EXIT_UNKNOWN,
    ROBUST_INCONCLUSIVE: EXIT_UNKNOWN,
    None: EXIT_OK,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="starverify", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--network", required=True, help="NNET network file")
        p.add_argument("--method", choices=["exact", "overapprox"], default=None)
        p.add_argument("--timeout", type=float, default=None, help="wall-clock budget in seconds")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=None, help="report JSON path (default: stdout)")

    verify = sub.add_parser("verify", help="check safety properties from a problem file")
    common(verify)
    verify.add_argument("--problem", required=True, help="problem JSON file")

    reach = sub.add_parser("reach", help="compute reachable-set bounding boxes only")
    common(reach)
    reach.add_argument("--problem", required=True, help="problem JSON file")

    robust = sub.add_parser("robust", help="check delta-local robustness at one input")
    common(robust)
    robust.add_argument("--input", required=True, help="comma-separated input values")
    robust.add_argument("--delta", type=float, required=True)
    robust.add_argument("--label", type=int, required=True)
    robust.add_argument("--label-rule", choices=["max", "min"], default="max")
    robust.add_argument("--threshold", type=float, default=0.5)
    return parser


def _digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _base_report(command, method, digests, threads):
    return {
        "tool_version": __version__,
        "command": command,
        "verdict": None,
        "method": method,
        "reach_time_seconds": 0.0,
        "check_time_seconds": 0.0,
        "output_star_count": 0,
        "stars_per_layer": [],
        "lp_call_count": 0,
        "input_digests": digests,
        "threads": threads,
    }


def _fill_reach(report, result):
    report["reach_time_seconds"] = result.stats.total_seconds
    report["output_star_count"] = len(result.output_stars)
    report["stars_per_layer"] = list(result.stats.stars_per_layer)
    report["lp_call_count"] = result.stats.lp_calls


def _fill_timeout(report, exc):
    report["verdict"] = "Timeout"
    report["timed_out"] = True
    report["completed_layers"] = exc.completed_layers
    report["reach_time_seconds"] = exc.stats.total_seconds
    report["stars_per_layer"] = list(exc.stats.stars_per_layer)
    report["lp_call_count"] = exc.stats.lp_calls


def _star_box(star):
    lower, upper = star.bounding_box()
    return [lower.tolist(), upper.tolist()]


def _input_star(problem, meta):
    if isinstance(problem.input_set, Box):
        lower, upper = problem.input_set.lower, problem.input_set.upper
        if problem.normalize_inputs:
            lower, upper = normalize_input_box(meta, lower, upper)
        return Star.from_box(lower, upper)
    if problem.normalize_inputs:
        raise UsageError("normalize applies only to box input sets")
    return Star.from_polyhedron(problem.input_set)


def _run_reach(net, star, method, timeout, threads):
    if method == "exact":
        return reach_exact(net, star, timeout=timeout, threads=threads)
    return reach_approx(net, star, timeout=timeout)


def _cmd_verify(args, report_only_reach=False):
    net, meta = parse_nnet(_read(args.network))
    problem = parse_problem(_read(args.problem))
    method = args.method or problem.method
    timeout = args.timeout if args.timeout is not None else problem.timeout_seconds
    digests = {"network": _digest(args.network), "problem": _digest(args.problem)}
    report = _base_report("reach" if report_only_reach else "verify", method, digests, args.threads)
    star = _input_star(problem, meta)
    try:
        result = _run_reach(net, star, method, timeout, args.threads)
    except ReachTimeout as exc:
        _fill_timeout(report, exc)
        return EXIT_TIMEOUT, report
    _fill_reach(report, result)

    if report_only_reach or not problem.unsafe_regions:
        report["output_boxes"] = [_star_box(s) for s in result.output_stars]
        report["verdict"] = None
        return EXIT_OK, report

    t0 = time.monotonic()
    verdict = check_safety(result, problem.unsafe_regions)
    report["check_time_seconds"] = time.monotonic() - t0
    report["verdict"] = verdict.status
    report["violated_regions"] = verdict.violated_regions
    if verdict.counter_input_stars:
        report["counter_input_boxes"] = [_star_box(s) for s in verdict.counter_input_stars]
    return _VERDICT_EXIT[verdict.status], report


def _cmd_robust(args):
    net, _meta = parse_nnet(_read(args.network))
    try:
        x = np.array([float(tok) for tok in args.input.split(",") if tok.strip() != ""])
    except ValueError:
        raise UsageError(f"--input must be comma-separated numbers, got {args.input!r}")
    method = args.method or "exact"
    timeout = args.timeout if args.timeout is not None else 48 * 3600.0
    report = _base_report("robust", method, {"network": _digest(args.network)}, args.threads)
    report["delta"] = args.delta
    report["expected_label"] = args.label
    t0 = time.monotonic()
    try:
        result = check_local_robustness(
            net,
            x,
            args.delta,
            args.label,
            method=method,
            label_rule=args.label_rule,
            threshold=args.threshold,
            timeout=timeout,
            threads=args.threads,
        )
    except ReachTimeout as exc:
        _fill_timeout(report, exc)
        return EXIT_TIMEOUT, report
    report["check_time_seconds"] = max(0.0, time.monotonic() - t0 - result.reach.stats.total_seconds)
    _fill_reach(report, result.reach)
    report["verdict"] = result.status
    return _VERDICT_EXIT[result.status], report


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _emit(report, out_path):
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    verdict = report.get("verdict")
    summary = f"starverify {report['command']}: verdict={verdict} "
    summary += (
        f"stars={report['output_star_count']} "
        f"reach={report['reach_time_seconds']:.3f}s check={report['check_time_seconds']:.3f}s"
    )
    print(summary, file=sys.stderr)


def run(argv):
    """Run the CLI on argv (without the program name); returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.command == "verify":
            code, report = _cmd_verify(args)
        elif args.command == "reach":
            code, report = _cmd_verify(args, report_only_reach=True)
        else:
            code, report = _cmd_robust(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NnetParseError, ProblemFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report, args.out)
    return code


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
