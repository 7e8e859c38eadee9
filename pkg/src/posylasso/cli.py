"""Command-line entry point: ``posylasso <command> ...``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 unconverged fit.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline, plotting
from .basis import ExponentGrid, build_basis, build_design_matrix, load_grid
from .errors import ConfigError, DataError, IntegrityError, NumericalError, PosyError
from .model import load_model, relative_error, save_model
from .solver import SolverConfig, eliminate_features

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_UNCONVERGED = 0, 1, 2, 3

log = logging.getLogger("posylasso")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _sigma(text: str):
    if text == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a number") from None
    if not (v >= 0):
        raise argparse.ArgumentTypeError("sigma must be nonnegative")
    return v


def _add_problem_args(p, gamma_required=True):
    p.add_argument("--data", required=True, help="CSV with columns w_1..w_n,y")
    p.add_argument("--grid", required=True,
                   help="YAML/JSON exponent grid file, or 'example1' for the built-in grid")
    if gamma_required:
        p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--weights", choices=pipeline.WEIGHT_KINDS, default="colnorm")
    p.add_argument("--sigma", type=_sigma, default=None, metavar="auto|VALUE",
                   help="ridge parameter; auto = gamma/10 (uniform) or min(lambda)/10 (colnorm)")
    p.add_argument("--unconstrained", action="store_true",
                   help="drop the nonnegativity constraint (signed coefficients)")


def _add_solver_args(p):
    p.add_argument("--tol", type=float, default=1e-6, help="absolute duality-gap tolerance")
    p.add_argument("--rel-tol", type=float, default=None,
                   help="gap tolerance relative to ||y||; overrides --tol")
    p.add_argument("--max-epochs", type=int, default=100_000)
    p.add_argument("--kernel-cache-mb", type=float, default=256.0,
                   help="memory budget for cached kernel columns (0 disables)")
    p.add_argument("--shuffle", action="store_true", help="randomize the sweep order each epoch")
    p.add_argument("--seed", type=int, default=None, help="seed for --shuffle")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="posylasso", description="Sparse posynomial identification.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="identify one model")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--out", default="model.json")
    p.add_argument("--trace", default=None, help="write per-epoch primal/dual/gap CSV")
    p.add_argument("--figure", default=None, help="measured-vs-model figure (PNG/PDF)")
    p.add_argument("--allow-unconverged", action="store_true")

    p = sub.add_parser("sweep", help="Pareto sweep over log-spaced gamma")
    _add_problem_args(p, gamma_required=False)
    _add_solver_args(p)
    p.add_argument("--gamma-min", type=float, required=True)
    p.add_argument("--gamma-max", type=float, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="pareto.csv")
    p.add_argument("--figure", default=None, help="defaults to the --out path with .png")
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("eliminate", help="report safe feature elimination")
    _add_problem_args(p)
    p.add_argument("--out", default=None, help="write kept/eliminated indices as JSON")

    p = sub.add_parser("eval", help="relative error of a model on a data file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("loo", help="leave-one-out validation")
    _add_problem_args(p)
    _add_solver_args(p)
    p.add_argument("--margin", type=float, default=0.075,
                   help="fraction of each input range excluded at both ends")
    p.add_argument("--out", default="loo.csv")
    p.add_argument("--figure", default=None)
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("gen-example1", help="synthetic three-variable benchmark data")
    p.add_argument("--m", type=int, default=600)
    p.add_argument("--noise", type=float, default=0.01, help="noise-to-signal std ratio")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _grid(arg: str) -> ExponentGrid:
    if arg == "example1":
        return pipeline.EXAMPLE1_GRID
    return load_grid(arg)


def _scheme(args, gamma: float) -> pipeline.WeightScheme:
    if args.sigma is None:
        return pipeline.WeightScheme(args.weights, gamma)
    return pipeline.WeightScheme(args.weights, gamma, "explicit", args.sigma)


def _config(args, data) -> SolverConfig:
    tol = args.tol
    if args.rel_tol is not None:
        tol = args.rel_tol * float(np.linalg.norm(data.responses))
    return SolverConfig(
        gap_tolerance=tol,
        max_epochs=args.max_epochs,
        kernel_cache_bytes=int(args.kernel_cache_mb * 2**20),
        shuffle=args.shuffle,
        seed=args.seed,
    )


def _load(args):
    data = pipeline.ingest(args.data)
    basis = build_basis(_grid(args.grid))
    return data, basis


def cmd_fit(args) -> int:
    data, basis = _load(args)
    trace = []
    res = pipeline.fit(data, basis, _scheme(args, args.gamma), _config(args, data),
                       nonnegative=not args.unconstrained, trace=trace.append)
    sol = res.solution
    save_model(res.model, args.out)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "primal", "dual", "gap", "support", "max_delta"])
            w.writeheader()
            w.writerows(trace)
    if args.figure:
        plotting.fit_figure(data.responses, res.problem.phi @ sol.x, args.figure)
    rep = sol.elimination
    print(f"columns: {rep.original_n} -> {rep.reduced_n} after elimination")
    print(f"epochs: {sol.epochs_used}  objective: {sol.objective:.10g}  gap: {sol.gap:.3g}  "
          f"converged: {sol.converged}")
    print(f"cardinality: {sol.cardinality}  RE: {res.relative_error:.6g}  time: {sol.wall_time:.2f}s")
    print(f"model: {res.model}")
    if not sol.converged and not args.allow_unconverged:
        print("error: solver did not reach the gap tolerance (use --allow-unconverged)", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    data, basis = _load(args)
    spec = pipeline.SweepSpec(args.gamma_min, args.gamma_max, args.count)
    design = build_design_matrix(basis, data)
    rows = pipeline.sweep(design, data.responses, _scheme(args, args.gamma_min), spec,
                          _config(args, data), nonnegative=not args.unconstrained, jobs=args.jobs)
    pipeline.write_pareto_csv(rows, args.out)
    if not args.no_figure:
        fig = args.figure or str(Path(args.out).with_suffix(".png"))
        plotting.pareto_figure(rows, fig)
        print(f"figure: {fig}")
    print(f"{'gamma':>12} {'card':>5} {'RE':>12} {'gap':>10} conv")
    for r in rows:
        note = f"  ({r.error})" if r.error else ""
        print(f"{r.gamma:12.4g} {r.cardinality:5d} {r.relative_error:12.6g} {r.gap:10.3g} "
              f"{'yes' if r.converged else 'no'}{note}")
    return EXIT_OK


def cmd_eliminate(args) -> int:
    data, basis = _load(args)
    design = build_design_matrix(basis, data)
    problem = pipeline.make_problem(design, data.responses, _scheme(args, args.gamma),
                                    not args.unconstrained)
    rep = eliminate_features(problem)
    print(f"kept (F): {rep.reduced_n}  eliminated (E): {rep.eliminated.size}  of {rep.original_n}")
    if args.out:
        Path(args.out).write_text(json.dumps({
            "original_n": rep.original_n,
            "reduced_n": rep.reduced_n,
            "kept": rep.kept.tolist(),
            "eliminated": rep.eliminated.tolist(),
        }) + "\n")
    else:
        print("kept indices:", " ".join(map(str, rep.kept.tolist())))
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = pipeline.ingest(args.data)
    print(f"RE: {relative_error(model, None, data.responses, data):.6g}")
    return EXIT_OK


def cmd_loo(args) -> int:
    data, basis = _load(args)
    res = pipeline.loo_validate(data, basis, _scheme(args, args.gamma), args.margin,
                                _config(args, data), nonnegative=not args.unconstrained)
    if res.empty:
        print("validation set is empty for this margin")
        return EXIT_OK
    pipeline.write_loo_csv(res, data, args.out)
    if not args.no_figure:
        plotting.loo_figure(res, args.figure or str(Path(args.out).with_suffix(".png")))
    print(f"validation points: {res.indices.size}  AE: {res.ae:.6g}  "
          f"mean kept columns: {res.kept_columns.mean():.1f}")
    return EXIT_OK


def cmd_gen_example1(args) -> int:
    data = pipeline.generate_example1(args.seed, args.m, args.noise)
    pipeline.write_dataset(data, args.out)
    print(f"wrote {data.m} samples (seed {args.seed}, noise {args.noise}) to {args.out}")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "eliminate": cmd_eliminate,
    "eval": cmd_eval,
    "loo": cmd_loo,
    "gen-example1": cmd_gen_example1,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DataError, IntegrityError, NumericalError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, PosyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
