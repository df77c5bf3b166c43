"""Command-line interface: ``geosampling <command> [options]``.

Every stochastic command needs ``--seed``.  Reports go to stdout (or
``--report``) as JSON or plain text; layouts are written with ``--out``.
Wall-clock timings are only printed to stderr with ``--timing``, so that
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from .chaotic import MoveParams, Trace, run_chaotic
from .design import (Design, design_of, draw_cell, draw_sample, entropy, first_order,
                     second_order, sweep)
from .estimator import estimate_report
from .exceptions import ConvergenceError, DomainError, IngestionError, InvariantError
from .grid import DEFAULT_GRID, check_grid, to_cells
from .io import ingest_population, read_layout, write_layout
from .layout import BarLayout, madow_layout, pps_probabilities, random_layout
from .optimizer import SearchParams, search
from .oracle import ReferenceDesign, maxent_design, poisson_design, total_variation

EXIT_USAGE = 2
EXIT_FAILURE = 1


class CommandError(Exception):
    """Bad combination of arguments detected after parsing."""


# -- output helpers -------------------------------------------------------

def _emit(doc: dict, args, text_lines: Optional[list[str]] = None) -> None:
    if args.format == "json":
        out = json.dumps(doc, indent=1) + "\n"
    else:
        out = "\n".join(text_lines if text_lines is not None else _flatten(doc)) + "\n"
    if getattr(args, "report", None):
        Path(args.report).write_text(out)
    else:
        sys.stdout.write(out)


def _flatten(doc: dict, prefix: str = "") -> list[str]:
    lines = []
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.extend(_flatten(value, name + "."))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                lines.extend(_flatten(item, f"{name}[{i}]."))
        else:
            lines.append(f"{name}: {value}")
    return lines


def _write_csv(path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    Path(path).write_text(buf.getvalue())


def _need_seed(args) -> int:
    if args.seed is None:
        raise CommandError(f"'{args.command}' is stochastic and needs an explicit --seed")
    return args.seed


def _sample_str(sample) -> str:
    return "{" + ",".join(map(str, sample)) + "}"


# -- inputs ---------------------------------------------------------------

def _population(args):
    if not args.pop:
        return None
    exclude = [e for e in (args.exclude_ids or "").split(",") if e.strip()]
    return ingest_population(args.pop, x_col=args.x_col, y_col=args.y_col, z_col=args.z_col,
                             id_col=args.id_col, exclude_ids=exclude)


def _fip(args, population) -> tuple[list[int], float]:
    """First-order masses in cells from ``--pi`` or from ``--pop``/``--x-col``/``--n``."""
    grid = args.grid
    if args.pi:
        try:
            probs = [float(v) for v in args.pi.split(",")]
        except ValueError:
            raise CommandError(f"--pi must be comma-separated numbers, got {args.pi!r}") from None
        return to_cells(probs, grid)
    if population is None or population.x is None:
        raise CommandError("give --pi, or --pop with --x-col and --n")
    if args.n is None:
        raise CommandError("--n (sample size) is required with --x-col")
    return to_cells(pps_probabilities(population.x.tolist(), args.n), grid)


def _design_doc(layout: BarLayout) -> tuple[dict, Design]:
    design = design_of(layout)
    g = layout.grid
    bounds, _ = sweep(layout)
    doc = {
        "grid_resolution": g,
        "n_units": layout.n_units,
        "intervals": layout.interval_count,
        "strips": len(bounds) - 1,
        "samples": [{"sample": list(s), "cells": m, "probability": m / g} for s, m in sorted(design.masses.items())],
        "fip": first_order(layout),
        "sip": second_order(layout).tolist(),
        "entropy": entropy(design),
        "expected_size": design.expected_size(),
        "size_variance": design.size_variance(),
        "fixed_size": design.is_fixed_size,
    }
    return doc, design


def _reference_doc(ref: ReferenceDesign) -> dict:
    return {
        "kind": ref.kind,
        "n_units": ref.n_units,
        "entropy": ref.entropy(),
        "fip": ref.first_order().tolist(),
        "samples": [{"sample": list(s), "probability": p} for s, p in sorted(ref.probs.items())],
    }


def _oracle_for(kind: str, layout: BarLayout) -> Optional[ReferenceDesign]:
    if kind == "none":
        return None
    pi = layout.probabilities()
    return poisson_design(pi) if kind == "poisson" else maxent_design(pi)


# -- commands -------------------------------------------------------------

def cmd_construct(args) -> None:
    population = _population(args)
    fip, residual = _fip(args, population)
    if args.method == "madow":
        layout = madow_layout(fip, args.grid)
    else:
        layout = random_layout(fip, random.Random(_need_seed(args)), args.grid)
    if args.out:
        write_layout(layout, args.out)
    design = design_of(layout)
    doc = {
        "method": args.method,
        "grid_resolution": args.grid,
        "n_units": layout.n_units,
        "fip": list(layout.fip),
        "fip_rounding_residual": residual,
        "expected_size": design.expected_size(),
        "fixed_size": design.is_fixed_size,
        "samples": len(design),
    }
    _emit(doc, args)


def cmd_chaotic(args) -> None:
    layout = read_layout(args.input)
    params = MoveParams(alpha=args.alpha, iterations=args.iters, seed=_need_seed(args),
                        anchor=args.anchor, selection=args.selection, unit_choice=args.unit_choice)
    oracle = _oracle_for(args.oracle, layout)
    result, trace = run_chaotic(layout, params, mode=args.mode, checkpoints=args.checkpoints, oracle=oracle)
    if args.out:
        write_layout(result, args.out)
    if args.trace:
        _write_csv(args.trace, Trace.COLUMNS,
                   [[getattr(r, c) for c in Trace.COLUMNS] for r in trace.rows])
    if args.figure:
        from .plotting import plot_series
        xs = [r.move for r in trace.rows]
        plot_series(xs, {"entropy": [r.entropy for r in trace.rows]}, args.figure,
                    xlabel="moves", ylabel="entropy (nats)")
    last = trace.rows[-1]
    doc = {
        "mode": args.mode,
        "seed": params.seed,
        "alpha": params.alpha,
        "iterations": params.iterations,
        "variant": params.variant,
        "applied": trace.applied,
        "skipped": trace.skipped,
        "entropy_start": trace.rows[0].entropy,
        "entropy_end": last.entropy,
        "strips_end": last.strips,
        "intervals_end": result.interval_count,
    }
    if last.max_sip_gap is not None:
        doc["max_sip_gap_end"] = last.max_sip_gap
    if last.tv_to_oracle is not None:
        doc["oracle"] = args.oracle
        doc["oracle_entropy"] = oracle.entropy()
        doc["tv_to_oracle_end"] = last.tv_to_oracle
    _emit(doc, args)


def cmd_draw(args) -> None:
    layout = read_layout(args.input)
    draws = []
    if args.cell is not None:
        if not 0 <= args.cell < layout.grid:
            raise CommandError(f"--cell must lie in [0, {layout.grid})")
        draws.append({"cell": args.cell, "sample": list(draw_cell(layout, args.cell))})
    else:
        rng = random.Random(_need_seed(args))
        for _ in range(args.count):
            cell = rng.randrange(layout.grid)
            draws.append({"cell": cell, "sample": list(draw_cell(layout, cell))})
    doc = {"seed": args.seed, "draws": draws}
    _emit(doc, args, [f"{d['cell']}\t{_sample_str(d['sample'])}" for d in draws])


def cmd_evaluate(args) -> None:
    layout = read_layout(args.input)
    doc, design = _design_doc(layout)
    population = _population(args)
    if population is not None:
        if population.z is None:
            raise CommandError("--pop for evaluate needs --z-col")
        if population.n_units != layout.n_units:
            raise CommandError(f"population has {population.n_units} rows, layout {layout.n_units} units")
        sample = tuple(sorted(int(v) for v in args.sample.split(","))) if args.sample else None
        doc["estimates"] = estimate_report(design, population.z, sample).to_dict()
    lines = [f"grid_resolution: {doc['grid_resolution']}",
             f"units: {doc['n_units']}  intervals: {doc['intervals']}  strips: {doc['strips']}",
             f"entropy: {doc['entropy']:.6f}",
             f"expected_size: {doc['expected_size']:.6f}  size_variance: {doc['size_variance']:.6f}",
             "sample\tcells\tprobability"]
    lines += [f"{_sample_str(s['sample'])}\t{s['cells']}\t{s['probability']:.9f}" for s in doc["samples"]]
    lines.append("fip: " + " ".join(str(p) for p in doc["fip"]))
    lines += ["sip:"] + [" ".join(str(v) for v in row) for row in doc["sip"]]
    if "estimates" in doc:
        lines += [f"{k}: {v}" for k, v in doc["estimates"].items()]
    _emit(doc, args, lines)


def cmd_optimize(args) -> None:
    population = _population(args)
    if population is None or population.z is None:
        raise CommandError("optimize needs --pop with --z-col")
    fip, residual = _fip(args, population)
    params = SearchParams(iterations=args.lambda_, nodes_per_iteration=args.nodes,
                          max_open_set_size=args.open_max, moves_per_candidate=args.moves_per_candidate,
                          alpha=args.alpha, criterion=args.criterion, seed=_need_seed(args),
                          workers=args.workers)
    report = search(population.z, fip, params, args.grid)
    if args.timing:
        print(f"wall time: {report.wall_time:.3f} s", file=sys.stderr)
    if args.out:
        write_layout(report.best_layout, args.out)
    if args.trajectory:
        _write_csv(args.trajectory, ("iteration", "best_cost", "open_size"),
                   [[i, c, report.open_sizes[i - 1] if i else 1] for i, c in enumerate(report.trajectory)])
    if args.figure:
        from .plotting import plot_series
        plot_series(list(range(len(report.trajectory))), {"best cost": report.trajectory}, args.figure,
                    xlabel="iteration", ylabel=f"criterion {args.criterion}", logy=True)
    doc = {
        "criterion": args.criterion,
        "seed": params.seed,
        "iterations": params.iterations,
        "nodes_per_iteration": params.nodes_per_iteration,
        "max_open_set_size": params.max_open_set_size,
        "fip_rounding_residual": residual,
        "initial_cost": report.initial_cost,
        "best_cost": report.best_cost,
        "efficiency": report.efficiency,
        "expanded": report.expanded,
        "duplicates": report.duplicates,
        "evicted": report.evicted,
        "early_stop": report.early_stop,
    }
    _emit(doc, args)


def cmd_oracle(args) -> None:
    if args.input:
        pi = read_layout(args.input).probabilities()
    elif args.pi:
        pi = [float(v) for v in args.pi.split(",")]
    else:
        raise CommandError("oracle needs --in or --pi")
    ref = poisson_design(pi) if args.kind == "poisson" else maxent_design(pi, tol=args.tol)
    doc = _reference_doc(ref)
    if args.input:
        doc["tv_to_layout"] = total_variation(design_of(read_layout(args.input)), ref)
    lines = [f"kind: {ref.kind}", f"entropy: {doc['entropy']:.9f}", "sample\tprobability"]
    lines += [f"{_sample_str(s['sample'])}\t{s['probability']:.12f}" for s in doc["samples"]]
    if "tv_to_layout" in doc:
        lines.append(f"tv_to_layout: {doc['tv_to_layout']:.9f}")
    _emit(doc, args, lines)


def cmd_plot(args) -> None:
    from .plotting import plot_layout
    layout = read_layout(args.input)
    if not args.out:
        raise CommandError("plot needs --out")
    count = plot_layout(layout, args.out, title=args.title)
    _emit({"figure": str(args.out), "rectangles": count}, args)


# -- parser ---------------------------------------------------------------

def _grid(value: str) -> int:
    try:
        return check_grid(int(value))
    except (ValueError, DomainError):
        raise argparse.ArgumentTypeError(f"grid must be a positive integer, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=_grid, default=DEFAULT_GRID, help="grid resolution G (cells on [0,1))")
    common.add_argument("--seed", type=int, help="RNG seed; required by stochastic commands")
    common.add_argument("--in", dest="input", help="input layout document")
    common.add_argument("--out", help="output layout document (figure for 'plot')")
    common.add_argument("--report", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--timing", action="store_true", help="print wall time to stderr")

    pop = argparse.ArgumentParser(add_help=False)
    pop.add_argument("--pop", help="population CSV with a header row")
    pop.add_argument("--x-col", help="auxiliary size variable for PPS probabilities")
    pop.add_argument("--y-col")
    pop.add_argument("--z-col", help="evaluation variable")
    pop.add_argument("--id-col", help="row identifier column (default: row number)")
    pop.add_argument("--exclude-ids", help="comma-separated ids to drop (e.g. outliers)")
    pop.add_argument("--n", type=int, help="sample size for PPS probabilities")
    pop.add_argument("--pi", help="comma-separated inclusion probabilities")

    parser = argparse.ArgumentParser(prog="geosampling", description="Geometric sampling designs on an exact grid.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common, pop], help="build an initial layout")
    p.add_argument("--method", choices=("madow", "random"), default="madow")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("chaotic", parents=[common], help="apply random moves to a layout")
    p.add_argument("--mode", choices=("free", "fixed"), default="free")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--checkpoints", type=int, default=10)
    p.add_argument("--selection", choices=("mass", "uniform"), default="mass")
    p.add_argument("--anchor", choices=("bottom", "random"), default="bottom")
    p.add_argument("--unit-choice", choices=("symmetric", "literal"), default="symmetric")
    p.add_argument("--oracle", choices=("none", "poisson", "maxent"), default="none")
    p.add_argument("--trace", help="CSV file for the checkpoint trace")
    p.add_argument("--figure", help="entropy trace figure (SVG)")
    p.set_defaults(func=cmd_chaotic)

    p = sub.add_parser("draw", parents=[common], help="draw samples from a layout")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--cell", type=int, help="use this grid cell instead of a random one")
    p.set_defaults(func=cmd_draw)

    p = sub.add_parser("evaluate", parents=[common, pop], help="design and estimator report")
    p.add_argument("--sample", help="comma-separated unit ids of an observed sample")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", parents=[common, pop], help="best-first search for low-variance layouts")
    p.add_argument("--criterion", choices=("c1", "c2", "c3"), default="c1")
    p.add_argument("--lambda", dest="lambda_", type=int, default=500, help="iterations")
    p.add_argument("--nodes", type=int, default=20, help="children per iteration")
    p.add_argument("--open-max", type=int, default=100)
    p.add_argument("--moves-per-candidate", type=int, default=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trajectory", help="CSV file for the best-cost trajectory")
    p.add_argument("--figure", help="trajectory figure (SVG)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("oracle", parents=[common], help="Poisson or maximum-entropy reference design")
    p.add_argument("--kind", choices=("poisson", "maxent"), default="maxent")
    p.add_argument("--pi", help="comma-separated inclusion probabilities")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", parents=[common], help="render a layout as a bar chart")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        args.func(args)
    except CommandError as exc:
        print(f"{parser.prog} {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, IngestionError, InvariantError, ConvergenceError, OSError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.timing and args.command != "optimize":
        print(f"wall time: {time.perf_counter() - started:.3f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
