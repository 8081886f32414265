"""Command line front end.

Exit codes: 0 success, 2 malformed input, 3 size cap exceeded, 4 a bound
check failed during ``diagnose``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from .canonical import congestion_census, canonical_path
from .core import CapExceeded, GibbsParams, InvalidMatching, check_matching
from .exact import BoundViolated, build_exact_chain, diagnose
from .problems import KINDS, ProblemFormatError, load_problem
from .sampler import ChainConfig, run, write_trace_csv

EXIT_INPUT = 2
EXIT_CAP = 3
EXIT_BOUND = 4


class InputError(Exception):
    pass


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def load_instance(path: str, kind: str):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read problem file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return load_problem(data, kind).instance()
    except (ProblemFormatError, InvalidMatching, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def parse_matching(text: str, inst, name: str):
    try:
        raw = json.loads(text) if text.strip().startswith("[") else [int(x) for x in text.split(",")]
        return check_matching(raw, inst.m, inst.n)
    except (ValueError, TypeError) as exc:
        raise InputError(f"--{name}: {exc}") from exc


def parse_schedule(text: str | None) -> tuple[tuple[int, float], ...]:
    if not text:
        return ()
    out = []
    try:
        for part in text.split(","):
            start, beta = part.split(":")
            out.append((int(start), float(beta)))
    except ValueError as exc:
        raise InputError(f"--schedule: expected 'step:beta,step:beta,...', got {text!r}") from exc
    return tuple(out)


def cmd_run(args) -> int:
    if args.stride < 1:
        raise InputError("--stride must be >= 1")
    inst = load_instance(args.problem, args.kind)
    try:
        cfg = ChainConfig(GibbsParams(args.beta), args.steps, args.seed, args.lazy,
                          parse_schedule(args.schedule))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    initial = parse_matching(args.initial, inst, "initial") if args.initial else None
    state, trace = run(inst, cfg, initial, stride=args.stride)
    if args.trace:
        buf = io.StringIO()
        write_trace_csv(trace, buf)
        atomic_write(args.trace, buf.getvalue())
    summary = {
        "best": list(state.best),
        "best_utility": state.best_utility,
        "final": list(state.current),
        "final_utility": state.current_utility,
        "acceptance_rate": state.acceptance_rate,
        "steps": state.step,
    }
    print(json.dumps(summary))
    return 0


def cmd_diagnose(args) -> int:
    if not 0 < args.eps < 1:
        raise InputError("--eps must lie in (0, 1)")
    try:
        params = GibbsParams(args.beta)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    inst = load_instance(args.problem, args.kind)
    chain = build_exact_chain(inst, params, lazy=args.lazy)
    report = diagnose(chain, args.eps)
    text = report.to_json()
    if args.report:
        atomic_write(args.report, text + "\n")
    else:
        print(text)
    if args.tv:
        from .exact import mixing_curve
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "d"])
        for t, d in enumerate(mixing_curve(chain, args.eps)):
            w.writerow([t, repr(float(d))])
        atomic_write(args.tv, buf.getvalue())
    print(f"phi={report.phi:.6g} phi_bound={report.phi_bound:.6g} "
          f"tau_eps={report.tau_eps} tau_bound={report.tau_bound:.6g}", file=sys.stderr)
    if report.failed:
        raise BoundViolated(report.failed, report)
    return 0


def _census_payload(inst) -> dict:
    census = congestion_census(inst)
    rows = sorted(census.by_matching().items())
    return {
        "n_states": census.n_states,
        "max_congestion": census.max_congestion,
        "below_state_count": census.max_congestion < census.n_states,
        "transitions": [{"from": list(a), "to": list(b), "count": c} for (a, b), c in rows],
    }


def cmd_paths(args) -> int:
    inst = load_instance(args.problem, args.kind)
    if args.source is None or args.target is None:
        raise InputError("paths needs --from and --to")
    src = parse_matching(args.source, inst, "from")
    dst = parse_matching(args.target, inst, "to")
    payload: object = canonical_path(inst, src, dst).to_json()
    if args.census:
        payload = {"path": payload, "census": _census_payload(inst)}
    _emit(payload, args.out)
    return 0


def cmd_census(args) -> int:
    inst = load_instance(args.problem, args.kind)
    _emit(_census_payload(inst), args.out)
    return 0


def _emit(payload, out: str | None) -> None:
    text = json.dumps(payload)
    if out:
        atomic_write(out, text + "\n")
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", required=True, help="problem JSON file")
    common.add_argument("--kind", required=True, choices=KINDS + ("coloring",))

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--beta", type=float, default=1.0)
    chain.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="mcmatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common, chain], help="run the optimiser")
    r.add_argument("--steps", type=int, default=10_000)
    r.add_argument("--lazy", action=argparse.BooleanOptionalAction, default=False)
    r.add_argument("--schedule", help="beta schedule 'step:beta,...' (overrides --beta from each step)")
    r.add_argument("--initial", help="starting matching, e.g. 0,2,1")
    r.add_argument("--trace", help="write trace CSV here")
    r.add_argument("--stride", type=int, default=1)
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("diagnose", parents=[common, chain], help="exact small-instance diagnostics")
    d.add_argument("--lazy", action=argparse.BooleanOptionalAction, default=True)
    d.add_argument("--eps", type=float, default=0.01)
    d.add_argument("--report", help="write report JSON here instead of stdout")
    d.add_argument("--tv", help="write the total variation curve CSV here")
    d.set_defaults(func=cmd_diagnose)

    pa = sub.add_parser("paths", parents=[common], help="canonical path between two matchings")
    pa.add_argument("--from", dest="source")
    pa.add_argument("--to", dest="target")
    pa.add_argument("--census", action="store_true")
    pa.add_argument("--out")
    pa.set_defaults(func=cmd_paths)

    c = sub.add_parser("census", parents=[common], help="congestion of every transition")
    c.add_argument("--out")
    c.set_defaults(func=cmd_census)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except BoundViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUND


if __name__ == "__main__":
    sys.exit(main())
