"""Command-line interface: generate, solve, benchmark, verify, cycle-count.

Every subcommand echoes its fully resolved configuration (seed included)
so any output can be replayed exactly from the artifact alone. All
randomness flows from explicit seeds; repeated invocations are
byte-identical except for wall-time fields.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .annealer import AnnealConfig, RunResult, anneal
from .baselines import GahmcConfig, SaConfig, gahmc_anneal, sa_anneal
from .bench import (
    ExperimentSpec,
    estimate_success,
    brute_force_ground,
    make_solver,
    read_rows_csv,
    rows_to_lines,
    run_experiment,
    summarize,
    write_rows_csv,
    RESULT_FIELDS,
)
from .fixedpoint import FixedFormat, fx_anneal, state_machine_trace
from .hmc import HmcParams
from .model import ProblemFormatError, load_problem, save_problem
from .problems import FAMILIES, GenSpec, GenerationError, generate


def _add_hmc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=2.0, help="tanh sharpness (default 2.0)")
    p.add_argument("--epsilon", type=float, default=0.1, help="integrator step size (default 0.1)")
    p.add_argument("--inner-steps", type=int, default=10, help="integrator steps per trajectory (default 10)")


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta-start", type=float, default=0.1, help="initial inverse temperature (default 0.1)")
    p.add_argument("--beta-end", type=float, default=10.0, help="final inverse temperature (default 10.0)")
    p.add_argument("--outer-steps", type=int, default=1000, help="outer annealing steps (default 1000)")
    p.add_argument("--beta-rule", choices=("geometric", "adaptive"), default="geometric")
    p.add_argument("--adapt-target", type=float, default=0.5, help="target acceptance rate (adaptive rule)")


def _add_fixed_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--total-bits", type=int, default=32, help="fixed-point word width (default 32)")
    p.add_argument("--frac-bits", type=int, default=16, help="fixed-point fractional bits (default 16)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phia", description=__doc__)
    parser.add_argument("--version", action="version", version=f"phia {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a benchmark instance")
    p_gen.add_argument("--family", required=True, choices=FAMILIES)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--p", type=float, default=0.5, help="edge probability (maxcut_dense)")
    p_gen.add_argument("--alpha", type=float, default=2.1, help="clause ratio (nae_3_sat)")
    p_gen.add_argument("--q", type=float, default=0.5, help="zero-coupling probability (sk_uniform)")
    p_gen.add_argument("--out", "-o", required=True, help="output problem file; metadata goes to <out>.meta.json")

    p_solve = sub.add_parser("solve", help="solve a problem file")
    p_solve.add_argument("problem", help="problem file in the text format")
    p_solve.add_argument("--solver", choices=("phia", "phia-fixed", "sa", "gahmc"), default="phia")
    p_solve.add_argument("--seed", type=int, default=0)
    _add_hmc_flags(p_solve)
    _add_schedule_flags(p_solve)
    _add_fixed_flags(p_solve)
    p_solve.add_argument("--sweeps", type=int, default=1000, help="sweeps for the sa solver")
    p_solve.add_argument("--trajectory-time", type=float, default=math.pi, help="integration time for gahmc")
    p_solve.add_argument("--trace", action="store_true", help="record the best-energy trace")
    p_solve.add_argument("--out", "-o", help="write the JSON result record here (default stdout only)")

    p_bench = sub.add_parser("bench", help="run a TTS experiment grid")
    p_bench.add_argument("--family", required=True, choices=FAMILIES)
    p_bench.add_argument("--n-grid", required=True, help="comma-separated sizes, e.g. 64,128,256")
    p_bench.add_argument("--instances", type=int, default=10)
    p_bench.add_argument("--runs", type=int, default=10)
    p_bench.add_argument("--solvers", default="phia,sa", help="comma-separated solver ids")
    p_bench.add_argument("--seed", type=int, default=0)
    _add_hmc_flags(p_bench)
    _add_schedule_flags(p_bench)
    _add_fixed_flags(p_bench)
    p_bench.add_argument("--sweeps", type=int, default=1000, help="sweeps for the sa solver")
    p_bench.add_argument("--trajectory-time", type=float, default=math.pi)
    p_bench.add_argument("--reference", choices=("auto", "brute", "sa-ensemble"), default="auto")
    p_bench.add_argument("--csv", help="also export the rows as CSV")
    p_bench.add_argument("--out", "-o", help="write line-delimited rows here (default stdout)")

    p_verify = sub.add_parser("verify", help="oracle-equivalence suite against exact enumeration")
    p_verify.add_argument("--n-max", type=int, default=12)
    p_verify.add_argument("--instances", type=int, default=20)
    p_verify.add_argument("--family", choices=FAMILIES, default="sk_ising")
    p_verify.add_argument("--seed", type=int, default=0)
    _add_hmc_flags(p_verify)
    _add_schedule_flags(p_verify)

    p_cycles = sub.add_parser("cycles", help="print the per-state cycle ledger")
    p_cycles.add_argument("--n", type=int, required=True)
    p_cycles.add_argument("--L", type=int, required=True)
    p_cycles.add_argument("--clk-ns", type=float, default=10.0)
    p_cycles.add_argument("--out", "-o", help="write the JSON ledger here")

    p_summary = sub.add_parser("summary", help="median TTS per (family, n, solver) from a results CSV")
    p_summary.add_argument("results", help="CSV produced by `phia bench --csv`")

    p_report = sub.add_parser("report", help="render scaling figures and fit tables from a results CSV")
    p_report.add_argument("results", help="CSV produced by `phia bench --csv`")
    p_report.add_argument("--outdir", required=True)
    p_report.add_argument("--min-points", type=int, default=3)

    return parser


def _spins_string(s: np.ndarray) -> str:
    return "".join("+" if si > 0 else "-" for si in s)


def _result_record(result: RunResult) -> dict:
    rec = {
        "best_E": result.best_E,
        "best_s": _spins_string(result.best_s),
        "acceptance_rate": result.acceptance_rate,
        "outer_steps_run": result.outer_steps_run,
        "wall_time": result.wall_time,
        "divergences": result.divergences,
    }
    if result.saturation_events is not None:
        rec["saturation_events"] = result.saturation_events
    if result.energy_trace is not None:
        rec["energy_trace"] = result.energy_trace
    return rec


def _emit(record: dict, out_path: str | None) -> None:
    text = json.dumps(record, indent=2, sort_keys=True)
    print(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def cmd_gen(args) -> int:
    spec = GenSpec(family=args.family, n=args.n, seed=args.seed, p=args.p, alpha=args.alpha, q=args.q)
    problem = generate(spec)
    save_problem(problem, args.out)
    meta = {
        "command": "gen",
        "family": spec.family,
        "n": spec.n,
        "seed": spec.seed,
        "p": spec.p,
        "alpha": spec.alpha,
        "q": spec.q,
        "couplings": problem.num_couplings,
        "problem_file": args.out,
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(meta, sort_keys=True))
    return 0


def _solver_config(args):
    hmc = HmcParams(gamma=args.gamma, epsilon=args.epsilon, n_steps=args.inner_steps)
    if args.solver in ("phia", "phia-fixed"):
        return AnnealConfig(
            hmc=hmc,
            beta_start=args.beta_start,
            beta_end=args.beta_end,
            outer_steps=args.outer_steps,
            beta_rule=args.beta_rule,
            adapt_target=args.adapt_target,
            seed=args.seed,
            trace=getattr(args, "trace", False),
        )
    if args.solver == "sa":
        return SaConfig(
            sweeps=args.sweeps,
            beta_start=args.beta_start,
            beta_end=args.beta_end,
            beta_rule=args.beta_rule,
            adapt_target=args.adapt_target,
            seed=args.seed,
        )
    return GahmcConfig(
        trajectory_time=args.trajectory_time,
        outer_steps=args.outer_steps,
        beta_start=args.beta_start,
        beta_end=args.beta_end,
        beta_rule=args.beta_rule,
        adapt_target=args.adapt_target,
        seed=args.seed,
    )


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    config = _solver_config(args)
    if args.solver == "phia":
        result = anneal(problem, config)
    elif args.solver == "phia-fixed":
        fmt = FixedFormat(total_bits=args.total_bits, frac_bits=args.frac_bits)
        result = fx_anneal(problem, config, fmt)
    elif args.solver == "sa":
        result = sa_anneal(problem, config)
    else:
        result = gahmc_anneal(problem, config)

    record = {
        "command": "solve",
        "problem": args.problem,
        "n": problem.n,
        "solver": args.solver,
        "seed": args.seed,
        "config": _config_dict(config, args),
        "result": _result_record(result),
    }
    _emit(record, args.out)
    return 0


def _config_dict(config, args) -> dict:
    from dataclasses import asdict

    out = asdict(config)
    if args.solver == "phia-fixed":
        out["total_bits"] = args.total_bits
        out["frac_bits"] = args.frac_bits
    return out


def cmd_bench(args) -> int:
    try:
        n_grid = tuple(int(tok) for tok in args.n_grid.split(",") if tok)
    except ValueError:
        print(f"error: invalid --n-grid {args.n_grid!r}; expected comma-separated integers", file=sys.stderr)
        return 2
    solver_ids = [tok.strip() for tok in args.solvers.split(",") if tok.strip()]
    solvers = []
    for sid in solver_ids:
        options: dict = {}
        if sid in ("phia", "phia-fixed"):
            options.update(
                gamma=args.gamma,
                epsilon=args.epsilon,
                n_steps=args.inner_steps,
                beta_start=args.beta_start,
                beta_end=args.beta_end,
                outer_steps=args.outer_steps,
                beta_rule=args.beta_rule,
                adapt_target=args.adapt_target,
            )
            if sid == "phia-fixed":
                options.update(total_bits=args.total_bits, frac_bits=args.frac_bits)
        elif sid == "sa":
            options.update(
                sweeps=args.sweeps,
                beta_start=args.beta_start,
                beta_end=args.beta_end,
                beta_rule=args.beta_rule,
                adapt_target=args.adapt_target,
            )
        elif sid == "gahmc":
            options.update(
                trajectory_time=args.trajectory_time,
                outer_steps=args.outer_steps,
                beta_start=args.beta_start,
                beta_end=args.beta_end,
            )
        solvers.append(make_solver(sid, **options))

    spec = ExperimentSpec(
        family=args.family,
        n_grid=n_grid,
        instances=args.instances,
        runs=args.runs,
        solvers=tuple(solvers),
        reference=args.reference,
        seed=args.seed,
    )
    rows = run_experiment(spec)

    config_line = json.dumps(
        {
            "command": "bench",
            "family": args.family,
            "n_grid": list(n_grid),
            "instances": args.instances,
            "runs": args.runs,
            "solvers": solver_ids,
            "reference": args.reference,
            "seed": args.seed,
            "fields": list(RESULT_FIELDS),
        },
        sort_keys=True,
    )
    lines = [f"# {config_line}"] + rows_to_lines(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    if args.csv:
        write_rows_csv(rows, args.csv, header_comment=config_line)

    print("# median TTS per (family, n, solver)")
    for family, n, solver, med in summarize(rows):
        print(f"# {family} n={n} {solver}: {med:.6g}")
    return 0


def cmd_verify(args) -> int:
    if args.n_max > 24:
        print("error: --n-max above 24 exceeds the enumeration oracle", file=sys.stderr)
        return 2
    config = AnnealConfig(
        hmc=HmcParams(gamma=args.gamma, epsilon=args.epsilon, n_steps=args.inner_steps),
        beta_start=args.beta_start,
        beta_end=args.beta_end,
        outer_steps=args.outer_steps,
        beta_rule=args.beta_rule,
        adapt_target=args.adapt_target,
    )
    seeds = np.random.SeedSequence(args.seed).generate_state(args.instances, dtype=np.uint64)
    hits = 0
    for k, inst_seed in enumerate(seeds):
        problem = generate(GenSpec(family=args.family, n=args.n_max, seed=int(inst_seed)))
        ground, _ = brute_force_ground(problem)
        from dataclasses import replace as _replace

        result = anneal(problem, _replace(config, seed=int(inst_seed) ^ 0x5EED))
        if result.best_E <= ground + 1.0e-9:
            hits += 1
        print(f"instance {k}: ground={ground:g} best={result.best_E:g} hit={result.best_E <= ground + 1e-9}")
    fraction = hits / args.instances
    record = {
        "command": "verify",
        "family": args.family,
        "n_max": args.n_max,
        "instances": args.instances,
        "outer_steps": args.outer_steps,
        "seed": args.seed,
        "success_fraction": fraction,
    }
    print(json.dumps(record, sort_keys=True))
    return 0


def cmd_cycles(args) -> int:
    trace = state_machine_trace(args.n, args.L, args.clk_ns)
    est = trace.estimate
    header = f"{'state':>5}  {'behavior':<36} {'cycles':>14} {'cycles(ceil)':>12}"
    print(header)
    print("-" * len(header))
    for visit in trace.visits:
        cyc = visit.cycles
        label = visit.name if visit.iterations == 1 else f"{visit.name} (x{visit.iterations})"
        print(f"{visit.state:>5}  {label:<36} {str(cyc):>14} {math.ceil(cyc):>12}")
    print(f"total: {est.t_est} Clk = {est.microseconds:.6g} us at clk {args.clk_ns} ns")
    record = {
        "command": "cycles",
        "n": args.n,
        "L": args.L,
        "clk_ns": args.clk_ns,
        "t_s1": str(est.t_s1),
        "t_s2": str(est.t_s2),
        "t_d": str(est.t_d),
        "t_s3": str(est.t_s3),
        "t_est": str(est.t_est),
        "ceil": est.ceil_cycles(),
        "nanoseconds": est.nanoseconds,
    }
    print(json.dumps(record, sort_keys=True))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_summary(args) -> int:
    rows = read_rows_csv(args.results)
    for family, n, solver, med in summarize(rows):
        print(f"{family} n={n} {solver}: median_tts={med:.6g}")
    return 0


def cmd_report(args) -> int:
    from .report import render_report

    rows = read_rows_csv(args.results)
    produced = render_report(rows, args.outdir, min_points=args.min_points)
    for kind, path in produced.items():
        print(f"{kind}: {path}")
    if "fits" not in produced:
        print("note: too few finite sizes for a scaling fit; wrote the summary only")
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "bench": cmd_bench,
    "verify": cmd_verify,
    "cycles": cmd_cycles,
    "summary": cmd_summary,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ProblemFormatError as exc:
        print(f"error: problem file: {exc}", file=sys.stderr)
        return 3
    except GenerationError as exc:
        print(f"error: generator: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
