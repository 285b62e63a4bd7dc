"""``gfuzz`` command-line entry point: check, run, verify, div, lemmas."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .dist import Dist, Grid, parse_dist_file
from .divergence import check_composability, divergence_table
from .errors import GFuzzError
from .interp import EvalConfig, format_value, make_predicate, run_program
from .lang.context import format_ctx
from .lang.parser import parse_term
from .lang.printer import pretty_type
from .metricspace import FinRel, at_most_one, check_lemmas, parse_space, path_metric
from .verify import DbUniverse, verify_bound

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_VERIFY_GRID = "-12,12,0.05"
COMPOSABILITY_SUITE = ("SD", "KL", "XD", "HD", "ED")


class UsageError(Exception):
    pass


@dataclass
class Config:
    grid: Grid | None
    tol: float
    seed: int
    trials: int
    jobs: int
    json: bool

    @classmethod
    def from_args(cls, args) -> "Config":
        text = getattr(args, "grid", None) or os.environ.get("GFUZZ_GRID")
        try:
            grid = Grid.parse(text) if text else None
        except (ValueError, ArithmeticError) as exc:
            raise UsageError(f"bad grid: {exc}") from None
        tol = getattr(args, "tol", 1e-9)
        if not tol > 0:
            raise UsageError("--tol must be positive")
        return cls(grid, tol, getattr(args, "seed", 0), getattr(args, "trials", 1000),
                   max(1, getattr(args, "jobs", 1)), args.json)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def emit_json(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=False))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _diagnostic(path: str, err: GFuzzError) -> str:
    where = f"{path}:{err.span}" if err.span else path
    return f"{where}: error[{err.code}]: {err.message}"


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6g}"


# -- subcommands ---------------------------------------------------------------

def cmd_check(args, cfg: Config) -> int:
    source = _read(args.file)
    from .typecheck import infer
    try:
        j = infer({}, parse_term(source))
    except GFuzzError as err:
        if cfg.json:
            emit_json({"file": args.file, "ok": False, "errors": [err.to_record()]})
        else:
            print(_diagnostic(args.file, err), file=sys.stderr)
        return EXIT_FAIL
    usage = {k: str(v) for k, v in sorted(j.usage.items())}
    if cfg.json:
        emit_json({"file": args.file, "ok": True, "type": pretty_type(j.type), "usage": usage})
    else:
        print(pretty_type(j.type))
        if usage:
            print(f"usage {format_ctx(j.usage)}")
    return EXIT_OK


def _load_inputs(paths):
    inputs, predicates = [], {}
    for p in paths or []:
        text = _read(p) if os.path.exists(p) else p
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"input {p!r} is not JSON: {exc.msg}") from None
        if isinstance(raw, dict) and "predicates" in raw:
            predicates.update({k: make_predicate(v) for k, v in raw["predicates"].items()})
        inputs.append(raw)
    return inputs, predicates


def cmd_run(args, cfg: Config) -> int:
    source = _read(args.file)
    inputs, preds = _load_inputs(args.input)
    if args.universe:
        preds.update(DbUniverse.load(args.universe).predicates)
    try:
        res = run_program(source, inputs, EvalConfig(grid=cfg.grid, predicates=preds))
    except GFuzzError as err:
        if cfg.json:
            emit_json({"file": args.file, "ok": False, "errors": [err.to_record()]})
        else:
            print(_diagnostic(args.file, err), file=sys.stderr)
        return EXIT_FAIL
    v = res.value
    if isinstance(v, Dist):
        rows = sorted(((format_value(x), float(q)) for x, q in v.items()), key=lambda r: _num_key(r[0]))
        if cfg.json:
            emit_json({"file": args.file, "ok": True, "type": pretty_type(res.judgment.type), "mode": v.mode,
                       "support": [{"value": x, "prob": q} for x, q in rows]})
        else:
            print(f"# {pretty_type(res.judgment.type)}")
            for x, q in sorted(v.items(), key=lambda kv: _num_key(format_value(kv[0]))):
                print(f"{format_value(x)}\t{q if v.mode == 'EXACT' else repr(float(q))}")
        if args.out:
            from .plotting import plot_distribution, write_csv
            out = Path(args.out)
            stem = Path(args.file).stem
            write_csv(out / f"{stem}_dist.csv", ["value", "probability"], rows)
            plot_distribution([r[0] for r in rows], [r[1] for r in rows], out / f"{stem}_dist.png", stem)
    else:
        if cfg.json:
            emit_json({"file": args.file, "ok": True, "type": pretty_type(res.judgment.type),
                       "value": format_value(v)})
        else:
            print(format_value(v))
    return EXIT_OK


def _num_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def cmd_verify(args, cfg: Config) -> int:
    source = _read(args.file)
    try:
        universe = DbUniverse.load(args.universe)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"bad universe file {args.universe}: {exc}") from None
    grid = cfg.grid or Grid.parse(DEFAULT_VERIFY_GRID)
    try:
        report = verify_bound(source, universe, args.k, grid, cfg.tol, cfg.jobs, program_id=args.file)
    except GFuzzError as err:
        if cfg.json:
            emit_json({"file": args.file, "ok": False, "errors": [err.to_record()]})
        else:
            print(_diagnostic(args.file, err), file=sys.stderr)
        return EXIT_FAIL
    if cfg.json:
        emit_json(report.to_dict())
    else:
        print(f"program   {report.program}")
        print(f"type      {report.type}")
        print(f"check     {report.divergence} at k={report.k} (hamming {report.hamming}), claimed {report.claimed}")
        print(f"grid      {report.grid}")
        print(f"pairs     {report.pair_count}")
        print(f"bound     {_fmt(report.bound)}")
        print(f"measured  {_fmt(report.max_measured)}")
        print(f"result    {'PASS' if report.passed else 'FAIL'}")
    if args.out:
        from .plotting import plot_pair_measurements, write_csv
        out = Path(args.out)
        stem = Path(args.file).stem
        write_csv(out / f"{stem}_verify.csv", ["left", "right", "measured", "bound"],
                  [(p.left, p.right, p.measured, report.bound) for p in report.pairs])
        plot_pair_measurements([p.measured for p in report.pairs], report.bound,
                               out / f"{stem}_verify.png", f"{stem}: {report.divergence} per pair")
    return EXIT_OK if report.passed else EXIT_FAIL


def _load_dist(path: str) -> Dist:
    try:
        return parse_dist_file(_read(path))
    except GFuzzError as err:
        raise UsageError(f"{path}: {err.message}") from None


def cmd_div(args, cfg: Config) -> int:
    mu, nu = _load_dist(args.a), _load_dist(args.b)
    table = divergence_table(mu, nu, args.eps)
    if cfg.json:
        emit_json({"a": args.a, "b": args.b, "eps": args.eps, "divergences": table})
    else:
        print("\t".join(table))
        print("\t".join(_fmt(v) for v in table.values()))
    if args.out:
        from .plotting import plot_divergence_table, write_csv
        out = Path(args.out)
        write_csv(out / "divergences.csv", ["divergence", "value"], table.items())
        plot_divergence_table(table, out / "divergences.png", f"{Path(args.a).name} vs {Path(args.b).name}")
    return EXIT_OK


def _space_summary(space) -> dict:
    if isinstance(space, FinRel):
        pm = path_metric(space)
        return {"kind": "relation", "carrier": list(space.carrier),
                "path_metric": [[str(v) for v in row] for row in pm.dist],
                "QPX=X": at_most_one(pm) == space}
    q = at_most_one(space)
    pq = path_metric(q)
    return {"kind": "metric", "carrier": list(space.carrier),
            "at_most_one": sorted(sorted(map(str, e)) for e in q.edges if len(e) == 2),
            "PQ": [[str(v) for v in row] for row in pq.dist]}


def cmd_lemmas(args, cfg: Config) -> int:
    start = time.perf_counter()
    lemmas = check_lemmas(args.samples, cfg.seed)
    comps = [check_composability(d, cfg.trials, cfg.seed, cfg.jobs, cfg.tol) for d in COMPOSABILITY_SUITE]
    space = None
    if args.space:
        try:
            space = _space_summary(parse_space(_read(args.space)))
        except (ValueError, GFuzzError) as exc:
            raise UsageError(f"{args.space}: {exc}") from None
    ok = lemmas.passed and all(c.passed for c in comps) and (space is None or space.get("QPX=X", True))
    if cfg.json:
        emit_json({"seed": cfg.seed, "passed": ok, "lemmas": lemmas.to_dict(),
                   "composability": [c.to_dict() for c in comps], "space": space,
                   "runtime": time.perf_counter() - start})
    else:
        for r in lemmas.results:
            tag = "sampled" if r.sampled else "exhaustive" if r.functions_checked else ""
            print(f"{r.name:<24} instances={r.instances:<4} failures={r.failures} {tag}".rstrip())
        for c in comps:
            print(f"composability {c.divergence:<10} trials={c.trials} violations={c.violations} "
                  f"max={_fmt(c.max_violation)}")
        if space is not None:
            print(json.dumps(space))
        print("PASS" if ok else "FAIL")
    if args.out:
        from .plotting import plot_check_summary, write_csv
        out = Path(args.out)
        rows = [(r.name, r.instances, r.failures) for r in lemmas.results]
        rows += [(f"compose {c.divergence}", c.trials, c.violations) for c in comps]
        write_csv(out / "lemmas.csv", ["check", "instances", "failures"], rows)
        plot_check_summary([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
                           out / "lemmas.png", f"seed {cfg.seed}")
    return EXIT_OK if ok else EXIT_FAIL


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--grid", help="lo,hi,step for mechanism discretization (default: $GFUZZ_GRID)")
    common.add_argument("--tol", type=float, default=1e-9, help="verification tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--out", help="directory for CSV tables and PNG figures")

    p = argparse.ArgumentParser(prog="gfuzz", description="Graded Fuzz checker, evaluator and privacy verifier.")
    p.add_argument("--version", action="version", version=f"gfuzz {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="infer the type and sensitivities of a program")
    c.add_argument("file")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", parents=[common], help="evaluate a program on JSON inputs")
    r.add_argument("file")
    r.add_argument("--input", action="append", help="JSON file or literal; repeat for curried arguments")
    r.add_argument("--universe", help="universe file supplying count[] predicates")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", parents=[common], help="check the typed privacy bound on adjacent databases")
    v.add_argument("file")
    v.add_argument("--universe", required=True)
    v.add_argument("--k", help="distance in the domain metric (default: the !-scale of the argument)")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("div", parents=[common], help="divergence table between two distribution files")
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--eps", type=float, default=1.0, help="eps for the skew divergence")
    d.set_defaults(func=cmd_div)

    m = sub.add_parser("lemmas", parents=[common], help="metric-space lemma and composability suites")
    m.add_argument("--samples", type=int, default=100, help="random relations per lemma")
    m.add_argument("--space", help="relation or metric file to analyse")
    m.set_defaults(func=cmd_lemmas)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = Config.from_args(args)
        if getattr(args, "trials", 1) < 1:
            raise UsageError("--trials must be >= 1")
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"gfuzz: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
