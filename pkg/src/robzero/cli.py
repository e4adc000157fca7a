"""Command line interface: ``robzero robustness|gen|optimize|experiment``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .domain import CUBE, TORUS
from .fields import (
    GAUSSIAN,
    POWER,
    FieldFormatError,
    ObjectiveField,
    SampledField,
    gen_gaussian,
    gen_hopf,
    gen_quadratic,
    gen_random_quadratic,
    load_field,
    parse_norm,
    save_field,
)
from .filtration import CUBICAL, SIMPLEXWISE, TooCoarse
from .obstruction import LEMMA, SIMPLICIAL_START, Options, RobustnessReport, robustness_report
from .robopt import opt_curve

SCHEMA = 1

EXIT_OK = 0
EXIT_IO = 1
EXIT_TOO_COARSE = 2
EXIT_INCONCLUSIVE = 3

log = logging.getLogger("robzero")


def _number(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def report_document(rep: RobustnessReport, source: str) -> dict:
    res = rep.result
    diag = dict(res.diagnostics)
    timings = diag.pop("timings", {})
    return {
        "schema": SCHEMA,
        "input": source,
        "alpha": rep.alpha,
        "norm": rep.norm,
        "mode": rep.mode,
        "depth": "secondary" if rep.secondary else "primary",
        "start": diag.pop("start", None),
        "r0": rep.r0,
        "r1": rep.r1,
        "r2": rep.r2,
        "lower_bound": rep.lower_bound,
        "upper_bound": rep.upper_bound,
        "upper_cap": rep.cap,
        "no_guarantee_of_zero": not rep.zero_guaranteed,
        "nonexistence_robustness": rep.nonexistence,
        "heuristic": rep.heuristic,
        "matrix": {k: v for k, v in diag.items() if k != "mode"},
        "timings": timings,
    }


def _options(args) -> Options:
    mode = CUBICAL if args.cubical else SIMPLEXWISE if args.simplicial else None
    return Options(mode=mode, secondary=args.secondary, start=args.start)


def cmd_robustness(args) -> int:
    f = load_field(args.input)
    if args.norm:
        f = SampledField(f.domain, f.values, f.alpha, parse_norm(args.norm), f.heuristic_alpha)
    rep = robustness_report(f, _options(args))
    doc = report_document(rep, str(args.input))
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    log.info("r0=%s r1=%s r2=%s bounds=[%s, %s]", rep.r0, rep.r1, rep.r2, rep.lower_bound, rep.upper_bound)
    return EXIT_INCONCLUSIVE if rep.inconclusive else EXIT_OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _generate(kind: str, args, seed: int | None = None) -> SampledField:
    seed = args.seed if seed is None else seed
    if kind == "quadratic":
        return gen_quadratic(args.n, args.grid)
    if kind == "hopf":
        return gen_hopf(args.n, args.grid)
    if kind == "gaussian":
        return gen_gaussian(args.dims, args.grid, args.codomain, args.spectrum, args.l, args.topology, seed,
                            args.safety)
    if kind == "quadratic-random":
        return gen_random_quadratic(args.grid, seed)
    raise ValueError(f"unknown generator {kind!r}")


def cmd_gen(args) -> int:
    f = _generate(args.kind, args)
    save_field(f, args.out, binary=not args.text)
    log.info("wrote %s: %d vertices, alpha=%r", args.out, f.domain.vertex_count, f.alpha)
    return EXIT_OK


def cmd_optimize(args) -> int:
    f = load_field(args.input)
    obj = load_field(args.objective)
    if obj.domain != f.domain:
        raise FieldFormatError("objective grid does not match the input grid")
    curve = opt_curve(f, ObjectiveField.from_sampled(obj), args.r_max, _options(args))
    _emit(curve.to_csv(), args.out)
    return EXIT_OK


def _sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def _run_sample(job) -> dict:
    args, index = job
    t0 = time.perf_counter()
    f = _generate(args.kind, args, _sample_seed(args.seed, index))
    row = {"sample": index, "r0": "", "r1": "", "r2": "", "seconds": ""}
    try:
        rep = robustness_report(f, _options(args))
    except TooCoarse:
        row["r0"] = "too_coarse"
        return row
    row.update(r0=rep.r0, r1=rep.r1, r2="" if rep.r2 is None else rep.r2)
    row["seconds"] = round(time.perf_counter() - t0, 3)
    return row


def summarize(rows: list[dict], l_value, grid: int) -> dict:
    """Summary statistics over per-sample rows (sentinels count as ``r1 = r0``)."""
    ok = [r for r in rows if r["r0"] != "too_coarse"]
    r0s = [r["r0"] for r in ok]
    nontrivial = [r["r1"] for r in ok if isinstance(r["r1"], float)]
    secondary_up = [r for r in ok if isinstance(r["r2"], float)
                    and (not isinstance(r["r1"], float) or r["r2"] > r["r1"])]
    with_r2 = [r for r in ok if r["r2"] != ""]
    return {
        "l": l_value,
        "g": grid,
        "r0": float(np.mean(r0s)) if r0s else "",
        "frac_r1_gt_r0": len(nontrivial) / len(ok) if ok else "",
        "avg_r1_nontrivial": float(np.mean(nontrivial)) if nontrivial else "",
        "max_r1": max(nontrivial) if nontrivial else "",
        "frac_r2_gt_r1": len(secondary_up) / len(with_r2) if with_r2 else "",
    }


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("ROBZERO_THREADS", "1")))
    except ValueError:
        return 1


def cmd_experiment(args) -> int:
    jobs = [(args, i) for i in range(args.count)]
    workers = min(_workers(), max(1, args.count))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_run_sample, jobs))
    else:
        rows = [_run_sample(j) for j in jobs]
    for r in rows:
        log.info("sample %s: r0=%s r1=%s r2=%s", r["sample"], r["r0"], r["r1"], r["r2"])
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["sample", "r0", "r1", "r2", "seconds"])
    for r in rows:
        writer.writerow([r["sample"], r["r0"], r["r1"], r["r2"], r["seconds"] if args.timings else ""])
    summary = summarize(rows, args.l if args.kind == "gaussian" else "", args.grid)
    writer.writerow([])
    writer.writerow(list(summary))
    writer.writerow(list(summary.values()))
    _emit(out.getvalue(), args.out)
    return EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--cubical", action="store_true", help="cubical filtration (default for dims >= 4)")
    mode.add_argument("--simplicial", action="store_true", help="simplexwise filtration")
    sec = p.add_mutually_exclusive_group()
    sec.add_argument("--secondary", dest="secondary", action="store_true", default=None,
                     help="also compute the secondary obstruction")
    sec.add_argument("--primary-only", dest="secondary", action="store_false")
    p.add_argument("--start", choices=[LEMMA, SIMPLICIAL_START], default=None,
                   help="first level: the guaranteed alpha n^(1/p) or the simplicial threshold")


def _add_generator_flags(p: argparse.ArgumentParser, kind: str | None) -> None:
    p.add_argument("--grid", type=int, required=True, help="vertices per axis")
    p.add_argument("--seed", type=int, default=0)
    if kind in ("quadratic", "hopf"):
        p.add_argument("--n", type=int, required=True, help="codomain dimension")
    if kind in (None, "gaussian"):
        p.add_argument("--l", type=float, default=3.0, help="spectrum parameter")
        p.add_argument("--spectrum", choices=[POWER, GAUSSIAN], default=POWER)
        p.add_argument("--dims", type=int, default=4)
        p.add_argument("--codomain", type=int, default=3)
        p.add_argument("--topology", choices=[CUBE, TORUS], default=CUBE)
        p.add_argument("--safety", type=float, default=1.0, help="factor on the empirical alpha")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robzero", description="Certified robustness of zeros of sampled fields.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("robustness", help="bound the robustness of zero of a ROBF field")
    p.add_argument("--input", required=True)
    p.add_argument("--norm", choices=["1", "2", "inf"], help="override the file's norm")
    p.add_argument("--out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("gen", help="write a benchmark or random field")
    gen = p.add_subparsers(dest="kind", required=True)
    for kind in ("quadratic", "hopf", "gaussian", "quadratic-random"):
        g = gen.add_parser(kind)
        _add_generator_flags(g, kind)
        g.add_argument("--out", required=True)
        g.add_argument("--text", action="store_true", help="text body instead of binary")
        g.set_defaults(func=cmd_gen)

    p = sub.add_parser("optimize", help="lower bounds on the worst-case optimum curve")
    p.add_argument("--input", required=True)
    p.add_argument("--objective", required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment", help="batch statistics over random fields")
    p.add_argument("--generator", dest="kind", choices=["gaussian", "quadratic-random"], default="gaussian")
    _add_generator_flags(p, None)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--timings", action="store_true", help="include wall-clock seconds (not reproducible)")
    p.add_argument("--out")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, stream=sys.stderr,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except TooCoarse as exc:
        print(f"robzero: input too coarse: {exc}", file=sys.stderr)
        return EXIT_TOO_COARSE
    except (OSError, FieldFormatError) as exc:
        print(f"robzero: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"robzero: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
