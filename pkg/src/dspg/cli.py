"""Command-line interface.

Subcommands: ``solve`` (one instance to a report document), ``generate``
(synthetic instances), ``evaluate`` (recovery metrics of a solution against
the true precision) and ``sweep`` (solve over a penalty grid, emitting CSV
rows and optionally a rendered figure).

Exit codes: 0 success, 2 infeasible starting point, 3 iteration budget or
line search exhausted (for sweeps: any failed row), 4 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import formats, generate, metrics, model, solver
from .linalg import NotPositiveDefinite

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NOT_CONVERGED = 3
EXIT_BAD_INPUT = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for
    # infeasible starts and reports bad input as 4.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dspg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--instance", required=True, help="instance manifest (JSON)")
    p.add_argument("--out", required=True, help="report document to write")
    p.add_argument("--eps", type=float, default=1e-5, help="stopping tolerance (default 1e-5)")
    p.add_argument("--max-iter", type=int, default=20000, help="outer iteration cap")
    p.add_argument("--no-cleanup", action="store_true",
                   help="keep small nonzeros on constrained entries of the recovered solution")
    p.add_argument("--init", help="initial dual point, JSON {'y': [...], 'w_matrix': path}")
    p.add_argument("--trace", help="write per-iteration CSV here")
    p.add_argument("--solution", help="write the recovered solution matrix here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("generate", help="generate a synthetic instance")
    p.add_argument("--family", required=True, choices=generate.FAMILIES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, default=0.1,
                   help="off-diagonal fill fraction for the random family (default 0.1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None,
                   help="Gaussian draws for the sample covariance (default 2n)")
    p.add_argument("--constraint-fraction", type=float, default=None,
                   help="fraction of true zero positions turned into equality constraints")
    p.add_argument("--rho", type=float, default=None,
                   help="uniform penalty level written to the manifest (default 5/n)")
    p.add_argument("--mu", type=float, default=1.0, help="log-det weight (default 1)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("evaluate", help="score a solution against the true precision")
    p.add_argument("--solution", required=True, help="solution matrix file")
    p.add_argument("--truth", required=True, help="true precision matrix file")
    p.add_argument("--threshold", type=float, default=metrics.DEFAULT_THRESHOLD,
                   help="nonzero magnitude threshold (default 0.05)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="solve over a grid of uniform penalty levels")
    p.add_argument("--instance", required=True, help="instance manifest with uniform rho")
    p.add_argument("--rho-grid", required=True, help="comma-separated penalty levels")
    p.add_argument("--out", required=True, help="CSV of per-level results")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--threshold", type=float, default=metrics.DEFAULT_THRESHOLD,
                   help="nonzero magnitude threshold for the nnz column (default 0.05)")
    p.add_argument("--parallel", type=int, default=1, help="concurrent solves")
    p.add_argument("--plot", help="render the time/nonzeros figure to this file")
    p.set_defaults(func=_cmd_sweep)
    return parser


def _solve_exit(status: solver.SolveStatus) -> int:
    if status is solver.SolveStatus.CONVERGED:
        return EXIT_OK
    if status is solver.SolveStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_NOT_CONVERGED


def _cmd_solve(args) -> int:
    inst = formats.read_instance(args.instance)
    init = None
    if args.init:
        y, W = formats.load_init(args.init)
        init = (y if y is not None else np.zeros(inst.m),
                W if W is not None else np.zeros((inst.n, inst.n)))
    cfg = solver.SolverConfig(eps=args.eps, max_outer=args.max_iter)
    report = solver.solve(inst, init=init, cfg=cfg, cleanup=not args.no_cleanup)
    Path(args.out).write_text(formats.report_text(report, cfg.eps))
    if args.trace:
        formats.write_trace_csv(args.trace, report.trace)
    if args.solution and report.X is not None:
        formats.write_matrix(args.solution, report.X)
    if report.message:
        print(report.message, file=sys.stderr)
    print(f"{report.status.value} after {report.iterations} iterations "
          f"({report.wall_time:.3g}s), report written to {args.out}")
    return _solve_exit(report.status)


def _cmd_generate(args) -> int:
    spec = generate.GenSpec(n=args.n, family=args.family, density=args.density,
                            seed=args.seed, samples=args.samples)
    precision = generate.gen_precision(spec)
    C = generate.sample_covariance(precision, spec.sample_count, spec.seed)
    pattern = None
    metadata = {
        "generator": "dspg",
        "family": spec.family,
        "seed": spec.seed,
        "samples": spec.sample_count,
    }
    if spec.family == "random":
        metadata["density"] = spec.density
    else:
        metadata["family_definition"] = "repo-defined variant"
    if args.constraint_fraction is not None:
        _, pattern = generate.build_zero_constraints(precision, args.constraint_fraction,
                                                     spec.seed)
        metadata["constraint_fraction"] = args.constraint_fraction
    rho = args.rho if args.rho is not None else 5.0 / spec.n
    if rho < 0:
        raise formats.ValidationError("--rho must be >= 0")
    manifest = formats.write_instance(args.out_dir, C, args.mu, rho,
                                      zero_pattern=pattern, truth=precision,
                                      metadata=metadata)
    print(f"wrote {manifest}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    X = formats.read_matrix(args.solution)
    truth = formats.read_matrix(args.truth)
    rep = metrics.support_scores(truth, X, threshold=args.threshold)
    for key in ("loss_e", "loss_q", "sensitivity", "specificity",
                "tp", "tn", "fp", "fn", "nnz", "threshold"):
        val = getattr(rep, key)
        print(f"{key},{val:.12g}" if isinstance(val, float) else f"{key},{val}")
    return EXIT_OK


def _parse_grid(text: str):
    try:
        grid = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise formats.ValidationError(f"cannot parse --rho-grid {text!r}") from None
    if not grid:
        raise formats.ValidationError("--rho-grid is empty")
    for r in grid:
        if not (np.isfinite(r) and r >= 0):
            raise formats.ValidationError(f"penalty level {r!r} must be a finite value >= 0")
    return grid


def _cmd_sweep(args) -> int:
    manifest = json.loads(Path(args.instance).read_text())
    if not isinstance(manifest.get("rho"), dict) or "uniform" not in manifest["rho"]:
        raise formats.ValidationError(
            "sweep needs an instance with uniform rho; matrix-valued rho has no scaling rule")
    inst = formats.read_instance(args.instance)
    grid = _parse_grid(args.rho_grid)
    cfg = solver.SolverConfig(eps=args.eps, max_outer=args.max_iter)

    def run(r: float):
        sub = model.build_instance(inst.C, r, inst.mu, constraints=inst.constraints,
                                   zero_pattern=inst.zero_pattern, verify_surjective=False)
        rep = solver.solve(sub, cfg=cfg)
        nnz = int((np.abs(rep.X) >= args.threshold).sum()) if rep.X is not None else 0
        return {
            "rho": r,
            "time_s": rep.wall_time,
            "iters": rep.iterations,
            "primal_obj": rep.primal_obj,
            "dual_obj": rep.dual_obj,
            "gap": rep.gap,
            "nnz": nnz,
            "status": rep.status.value,
        }

    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(run, grid))
    else:
        rows = [run(r) for r in grid]

    # Result rows are a pure function of the inputs; wall times are not, so
    # they go to a sibling file and stay out of the deterministic CSV.
    out = Path(args.out)
    lines = ["rho,iters,primal_obj,dual_obj,gap,nnz,status"]
    lines.extend(
        f"{r['rho']:.12g},{r['iters']},{r['primal_obj']:.12g},"
        f"{r['dual_obj']:.12g},{r['gap']:.12g},{r['nnz']},{r['status']}"
        for r in rows
    )
    out.write_text("\n".join(lines) + "\n")
    times = out.with_name(out.name + ".times.csv")
    time_lines = ["rho,time_s"]
    time_lines.extend(f"{r['rho']:.12g},{r['time_s']:.6g}" for r in rows)
    times.write_text("\n".join(time_lines) + "\n")

    if args.plot:
        from . import plots

        plots.render_sweep(rows, args.plot)
    failed = [r for r in rows if r["status"] != "Converged"]
    print(f"{len(rows) - len(failed)}/{len(rows)} rows converged, results in {out}")
    return EXIT_NOT_CONVERGED if failed else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (formats.ParseError, formats.ValidationError, NotPositiveDefinite,
            ValueError, OSError) as exc:
        print(f"dspg: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
