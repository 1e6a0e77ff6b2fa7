"""Time-to-solution metrics, ground-truth oracles, and experiment orchestration.

TTS is the expected wall time to hit the target energy at least once with
99 percent confidence:

    TTS = T1 * max(1, lg(1 - 0.99) / lg(1 - P))

where T1 is the single-run time and P the per-run success probability.
The bracketed factor is read as a plain ratio floored at one run; the
integer-ceiling reading is also reported for comparison. P = 0 maps to an
infinite sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ._accel import maybe_jit
from .annealer import AnnealConfig, RunResult, anneal
from .baselines import GahmcConfig, SaConfig, gahmc_anneal, sa_anneal
from .fixedpoint import FixedFormat, fx_anneal
from .model import IsingProblem, energy
from .problems import INTEGER_FAMILIES, GenSpec, generate

__all__ = [
    "CONFIDENCE",
    "TTS_INFINITE",
    "TtsRecord",
    "tts",
    "tts_details",
    "estimate_success",
    "brute_force_ground",
    "Solver",
    "make_solver",
    "SOLVER_IDS",
    "ExperimentSpec",
    "ResultRow",
    "RESULT_FIELDS",
    "run_experiment",
    "rows_to_lines",
    "write_rows_csv",
    "read_rows_csv",
    "summarize",
    "ScalingFit",
    "ScalingReport",
    "scaling_report",
]

CONFIDENCE = 0.99
TTS_INFINITE = math.inf

# enumeration beyond this size is refused; use the ensemble reference policy
BRUTE_FORCE_MAX_N = 24


@dataclass(frozen=True)
class TtsRecord:
    """Success statistics of repeated runs against a reference energy."""

    t1: float
    p: float
    tts: float
    runs: int
    successes: int
    failures: int = 0
    best_e: float = math.inf


def tts(t1: float, p: float) -> float:
    """Expected time-to-solution at 99 percent confidence.

    The ratio is computed with the same 1 - CONFIDENCE expression in the
    numerator so tts(t1, CONFIDENCE) == t1 holds exactly.
    """
    if not t1 > 0:
        raise ValueError(f"t1 must be > 0, got {t1}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return TTS_INFINITE
    if p == 1.0:
        return t1
    ratio = math.log(1.0 - CONFIDENCE) / math.log(1.0 - p)
    return t1 * max(1.0, ratio)


def tts_details(t1: float, p: float) -> dict:
    """Both readings of the bracketed factor: floored ratio and integer runs."""
    value = tts(t1, p)
    if p in (0.0, 1.0):
        ratio = math.inf if p == 0.0 else 1.0
    else:
        ratio = math.log(1.0 - CONFIDENCE) / math.log(1.0 - p)
    ceil_runs = math.inf if p == 0.0 else max(1, math.ceil(ratio))
    return {
        "tts": value,
        "raw_ratio": ratio,
        "tts_ceil_runs": math.inf if p == 0.0 else t1 * ceil_runs,
    }


# -- ground-truth oracle -----------------------------------------------------


def _gray_code_scan(J, h, s, f):
    """Gray-code walk over all 2^n configurations with O(n) work per step.

    f caches the local field J s + h; flipping one spin updates both the
    energy and the field incrementally. Returns the minimum energy, the
    Gray code of its first witness, and the number of visited states whose
    energy ties the minimum within a small absolute slack.
    """
    n = s.shape[0]
    E = 0.0
    for i in range(n):
        E -= 0.5 * s[i] * (f[i] + h[i])
    best = E
    best_code = 0
    count = 1
    tol = 1.0e-9 * (1.0 + abs(best))
    total = 1 << n
    for k in range(1, total):
        kk = k
        b = 0
        while kk & 1 == 0:
            kk >>= 1
            b += 1
        E += 2.0 * s[b] * f[b]
        old = s[b]
        for j in range(n):
            f[j] -= 2.0 * old * J[j, b]
        s[b] = -old
        if E < best - tol:
            best = E
            best_code = k ^ (k >> 1)
            count = 1
            tol = 1.0e-9 * (1.0 + abs(best))
        elif E <= best + tol:
            count += 1
    return best, best_code, count


_gray_code_scan_fast = maybe_jit(_gray_code_scan)


def brute_force_ground(problem: IsingProblem) -> tuple[float, int]:
    """Exact minimum energy by Gray-code enumeration, with minimizer count.

    Refused for n > 24. The reported minimum is re-evaluated exactly at
    the witness configuration, so incremental rounding cannot bias it.
    For non-integer coefficients the minimizer count uses a small absolute
    tolerance.
    """
    n = problem.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={n} > {BRUTE_FORCE_MAX_N}; use an ensemble reference")
    J = problem.dense_couplings()
    s = np.ones(n, dtype=np.float64)
    f = J @ s + problem.h
    _, best_code, count = _gray_code_scan_fast(J, problem.h, s, f)
    witness = np.array([1.0 - 2.0 * ((best_code >> i) & 1) for i in range(n)])
    return energy(problem, witness), int(count)


def ground_state(problem: IsingProblem) -> tuple[float, np.ndarray]:
    """Minimum energy and one witness configuration (enumeration oracle)."""
    n = problem.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force refused for n={n} > {BRUTE_FORCE_MAX_N}")
    J = problem.dense_couplings()
    s = np.ones(n, dtype=np.float64)
    f = J @ s + problem.h
    _, best_code, _ = _gray_code_scan_fast(J, problem.h, s, f)
    witness = np.array([1.0 - 2.0 * ((best_code >> i) & 1) for i in range(n)])
    return energy(problem, witness), witness


# -- solvers -----------------------------------------------------------------


@dataclass(frozen=True)
class Solver:
    """A named solver with its configuration bound; run() overrides the seed."""

    name: str
    config: object
    fmt: FixedFormat | None = None

    def run(self, problem: IsingProblem, seed: int) -> RunResult:
        cfg = replace(self.config, seed=int(seed))
        if isinstance(cfg, SaConfig):
            return sa_anneal(problem, cfg)
        if isinstance(cfg, GahmcConfig):
            return gahmc_anneal(problem, cfg)
        if self.fmt is not None:
            return fx_anneal(problem, cfg, self.fmt)
        return anneal(problem, cfg)


SOLVER_IDS = ("phia", "phia-fixed", "sa", "gahmc")


def make_solver(solver_id: str, **options) -> Solver:
    """Build a solver from its id; options override configuration defaults."""
    if solver_id == "phia":
        return Solver("phia", _build_anneal_config(options))
    if solver_id == "phia-fixed":
        fmt = FixedFormat(
            total_bits=int(options.pop("total_bits", 32)),
            frac_bits=int(options.pop("frac_bits", 16)),
        )
        return Solver("phia-fixed", _build_anneal_config(options), fmt=fmt)
    if solver_id == "sa":
        return Solver("sa", SaConfig(**options))
    if solver_id == "gahmc":
        return Solver("gahmc", GahmcConfig(**options))
    raise ValueError(f"unknown solver id {solver_id!r}; choose from {', '.join(SOLVER_IDS)}")


def _build_anneal_config(options: dict) -> AnnealConfig:
    from .hmc import HmcParams

    hmc_keys = {"gamma", "epsilon", "n_steps"}
    hmc_kwargs = {k: options.pop(k) for k in list(options) if k in hmc_keys}
    return AnnealConfig(hmc=HmcParams(**hmc_kwargs), **options)


# -- success estimation --------------------------------------------------------


def estimate_success(
    problem: IsingProblem,
    solver: Solver,
    reference_E: float,
    runs: int,
    tol: float = 1.0e-9,
    seed: int = 0,
) -> TtsRecord:
    """Run the solver `runs` times with derived seeds and score successes.

    A run succeeds when its best energy reaches reference_E + tol. Solver
    failures are counted as non-successes and excluded from the mean
    single-run time.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    seeds = np.random.SeedSequence(int(seed)).generate_state(runs, dtype=np.uint64)
    times = []
    successes = 0
    failures = 0
    best_e = math.inf
    for run_seed in seeds:
        try:
            result = solver.run(problem, int(run_seed))
        except Exception:
            failures += 1
            continue
        times.append(result.wall_time)
        best_e = min(best_e, result.best_E)
        if result.best_E <= reference_E + tol:
            successes += 1
    t1 = float(np.mean(times)) if times else math.nan
    p = successes / runs
    value = tts(t1, p) if times else TTS_INFINITE
    return TtsRecord(t1=t1, p=p, tts=value, runs=runs, successes=successes, failures=failures, best_e=best_e)


# -- experiment orchestration ---------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """A grid of (family, n) cells, instances per cell, and solvers to score.

    reference selects the target-energy policy: "auto" enumerates exactly
    for n <= 24 and otherwise takes the best of an independent annealing
    ensemble (ref_runs runs at ref_budget_factor times the sa budget);
    "brute" and "sa-ensemble" force one policy. tol overrides the default
    success tolerance (exact for integer families, relative for
    fractional ones).
    """

    family: str
    n_grid: tuple[int, ...]
    instances: int = 10
    runs: int = 10
    solvers: tuple[Solver, ...] = ()
    reference: str = "auto"
    ref_runs: int = 32
    ref_budget_factor: int = 10
    tol: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.n_grid:
            raise ValueError("n_grid must be non-empty")
        if self.instances < 1 or self.runs < 1:
            raise ValueError("instances and runs must be >= 1")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        if self.reference not in ("auto", "brute", "sa-ensemble"):
            raise ValueError(f"unknown reference policy {self.reference!r}")


@dataclass(frozen=True)
class ResultRow:
    family: str
    n: int
    instance_seed: int
    solver: str
    t1: float
    p: float
    tts: float
    best_e: float
    reference_e: float
    ref_policy: str
    runs: int
    successes: int
    tol: float


RESULT_FIELDS = tuple(f.name for f in fields(ResultRow))


def _default_tol(family: str, reference_e: float) -> float:
    if family in INTEGER_FAMILIES:
        return 1.0e-9
    return 1.0e-6 * (1.0 + abs(reference_e))


def _sa_budget(spec: ExperimentSpec) -> int:
    for solver in spec.solvers:
        if isinstance(solver.config, SaConfig):
            return solver.config.sweeps
    return 1000


def _reference_energy(problem: IsingProblem, spec: ExperimentSpec, instance_seed: int) -> tuple[float, str]:
    use_brute = spec.reference == "brute" or (spec.reference == "auto" and problem.n <= BRUTE_FORCE_MAX_N)
    if use_brute:
        e, _ = brute_force_ground(problem)
        return e, "brute-force"
    sweeps = spec.ref_budget_factor * _sa_budget(spec)
    config = SaConfig(sweeps=sweeps)
    best = math.inf
    # the 981 label keeps the reference stream disjoint from solver streams
    seeds = np.random.SeedSequence([int(spec.seed), int(instance_seed) & 0xFFFFFFFF, 981]).generate_state(
        spec.ref_runs, dtype=np.uint64
    )
    for ref_seed in seeds:
        result = sa_anneal(problem, replace(config, seed=int(ref_seed)))
        best = min(best, result.best_E)
    return best, f"best-of-{spec.ref_runs}-sa-{sweeps}-sweeps"


def run_experiment(spec: ExperimentSpec, progress=None) -> list[ResultRow]:
    """Generate instances, resolve references, score every solver.

    Rows are deterministic given the spec except for the wall-time-derived
    fields (t1 and tts). Per-row failures are recorded in the counts; the
    experiment never aborts on a failed run.
    """
    rows: list[ResultRow] = []
    for n_index, n in enumerate(spec.n_grid):
        for k in range(spec.instances):
            instance_seed = int(
                np.random.SeedSequence([int(spec.seed), n_index, k]).generate_state(1, dtype=np.uint64)[0]
            )
            problem = generate(GenSpec(family=spec.family, n=n, seed=instance_seed))
            reference_e, policy = _reference_energy(problem, spec, instance_seed)
            tol = spec.tol if spec.tol is not None else _default_tol(spec.family, reference_e)
            for solver_index, solver in enumerate(spec.solvers):
                record = estimate_success(
                    problem,
                    solver,
                    reference_e,
                    runs=spec.runs,
                    tol=tol,
                    seed=int(
                        np.random.SeedSequence([int(spec.seed), n_index, k, solver_index]).generate_state(
                            1, dtype=np.uint64
                        )[0]
                    ),
                )
                rows.append(
                    ResultRow(
                        family=spec.family,
                        n=n,
                        instance_seed=instance_seed,
                        solver=solver.name,
                        t1=record.t1,
                        p=record.p,
                        tts=record.tts,
                        best_e=record.best_e,
                        reference_e=reference_e,
                        ref_policy=policy,
                        runs=record.runs,
                        successes=record.successes,
                        tol=tol,
                    )
                )
                if progress is not None:
                    progress(rows[-1])
    return rows


def rows_to_lines(rows: list[ResultRow]) -> list[str]:
    """Space-separated records in RESULT_FIELDS order, one row per line."""
    lines = []
    for row in rows:
        lines.append(" ".join(_format_cell(getattr(row, name)) for name in RESULT_FIELDS))
    return lines


def _format_cell(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def write_rows_csv(rows: list[ResultRow], path: str, header_comment: str | None = None) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(RESULT_FIELDS)
        for row in rows:
            writer.writerow([_format_cell(getattr(row, name)) for name in RESULT_FIELDS])


def read_rows_csv(path: str) -> list[ResultRow]:
    import csv

    rows: list[ResultRow] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    for rec in reader:
        rows.append(
            ResultRow(
                family=rec["family"],
                n=int(rec["n"]),
                instance_seed=int(rec["instance_seed"]),
                solver=rec["solver"],
                t1=float(rec["t1"]),
                p=float(rec["p"]),
                tts=float(rec["tts"]),
                best_e=float(rec["best_e"]),
                reference_e=float(rec["reference_e"]),
                ref_policy=rec["ref_policy"],
                runs=int(rec["runs"]),
                successes=int(rec["successes"]),
                tol=float(rec["tol"]),
            )
        )
    return rows


def summarize(rows: list[ResultRow]) -> list[tuple[str, int, str, float]]:
    """Median TTS per (family, n, solver), sorted."""
    groups: dict[tuple[str, int, str], list[float]] = {}
    for row in rows:
        groups.setdefault((row.family, row.n, row.solver), []).append(row.tts)
    out = []
    for (family, n, solver), values in sorted(groups.items()):
        out.append((family, n, solver, _median_with_inf(values)))
    return out


def _median_with_inf(values: list[float]) -> float:
    ordered = sorted(values)
    mid = len(ordered) // 2
    if len(ordered) % 2:
        return ordered[mid]
    return 0.5 * (ordered[mid - 1] + ordered[mid])  # averages with inf stay inf


# -- scaling fits -----------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    solver: str
    ns: tuple[int, ...]
    medians: tuple[float, ...]
    exponent: float
    intercept: float
    stderr: float
    ci95: float


@dataclass(frozen=True)
class ScalingReport:
    fits: dict[str, ScalingFit]
    # median-TTS ratio of every solver against the first, per shared n
    ratios: dict[str, tuple[tuple[int, float], ...]] = field(default_factory=dict)


def scaling_report(rows: list[ResultRow], min_points: int = 3) -> ScalingReport:
    """Least-squares slope of log median TTS against log n, per solver.

    Points with infinite medians are dropped; fewer than min_points
    finite points is an error. The 95 percent confidence band uses the
    t-distribution on the regression residuals.
    """
    from scipy import stats

    medians: dict[str, dict[int, float]] = {}
    for family_n_solver, med in ((r, m) for r, m in _summary_pairs(rows)):
        _, n, solver = family_n_solver
        medians.setdefault(solver, {})[n] = med

    fits: dict[str, ScalingFit] = {}
    for solver, by_n in medians.items():
        pts = sorted((n, m) for n, m in by_n.items() if math.isfinite(m) and m > 0)
        if len(pts) < min_points:
            raise ValueError(
                f"solver {solver!r} has {len(pts)} finite median points; need >= {min_points} for a fit"
            )
        ns = np.array([p[0] for p in pts], dtype=float)
        ms = np.array([p[1] for p in pts], dtype=float)
        reg = stats.linregress(np.log(ns), np.log(ms))
        df = len(pts) - 2
        tcrit = float(stats.t.ppf(0.975, df)) if df > 0 else math.inf
        fits[solver] = ScalingFit(
            solver=solver,
            ns=tuple(int(n) for n in ns),
            medians=tuple(float(m) for m in ms),
            exponent=float(reg.slope),
            intercept=float(reg.intercept),
            stderr=float(reg.stderr),
            ci95=tcrit * float(reg.stderr),
        )

    ratios: dict[str, tuple[tuple[int, float], ...]] = {}
    names = list(fits)
    if len(names) > 1:
        base = medians[names[0]]
        for other in names[1:]:
            shared = sorted(set(base) & set(medians[other]))
            series = tuple(
                (n, medians[other][n] / base[n])
                for n in shared
                if math.isfinite(base[n]) and base[n] > 0 and math.isfinite(medians[other][n])
            )
            ratios[f"{other}/{names[0]}"] = series
    return ScalingReport(fits=fits, ratios=ratios)


def _summary_pairs(rows):
    groups: dict[tuple[str, int, str], list[float]] = {}
    for row in rows:
        groups.setdefault((row.family, row.n, row.solver), []).append(row.tts)
    for key, values in sorted(groups.items()):
        yield key, _median_with_inf(values)
