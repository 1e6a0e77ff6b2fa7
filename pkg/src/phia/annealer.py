"""Outer annealing loop: temperature schedule, momentum refresh, best tracking.

Each outer step resamples the momenta, integrates one trajectory, applies
the Metropolis rule on the hard-sign total energy, and advances the
inverse temperature. The best sign configuration ever seen is returned,
not the final one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import hmc
from .model import IsingProblem, energy

__all__ = ["AnnealConfig", "RunResult", "rng_streams", "next_beta", "anneal"]


def rng_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent counter-based (Philox) streams for one run.

    Streams are spawned from a single seed so that each consumer (state
    init, momentum refresh, acceptance draws, ...) advances independently
    and parallel restarts stay reproducible.
    """
    ss = np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(count)]


@dataclass(frozen=True)
class AnnealConfig:
    """Outer-loop configuration; all defaults are declared, not tuned per instance."""

    hmc: hmc.HmcParams = field(default_factory=hmc.HmcParams)
    beta_start: float = 0.1
    beta_end: float = 10.0
    outer_steps: int = 1000
    beta_rule: str = "geometric"  # or "adaptive"
    adapt_target: float = 0.5
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError(f"need 0 < beta_start <= beta_end, got {self.beta_start}, {self.beta_end}")
        if self.outer_steps < 1:
            raise ValueError(f"outer_steps must be >= 1, got {self.outer_steps}")
        if self.beta_rule not in ("geometric", "adaptive"):
            raise ValueError(f"unknown beta_rule {self.beta_rule!r}")
        if not 0.0 < self.adapt_target < 1.0:
            raise ValueError(f"adapt_target must lie in (0, 1), got {self.adapt_target}")


@dataclass
class RunResult:
    """Outcome of one annealing run.

    best_E always equals energy(problem, best_s) exactly; wall_time is the
    only field excluded from reproducibility guarantees.
    """

    best_s: np.ndarray
    best_E: float
    wall_time: float
    outer_steps_run: int
    acceptance_rate: float
    energy_trace: list[tuple[int, float]] | None = None
    divergences: int = 0
    saturation_events: int | None = None


def next_beta(beta: float, acc_rate: float, config: AnnealConfig) -> float:
    """Advance the inverse temperature by one outer step.

    Geometric rule multiplies by r = (beta_end/beta_start)^(1/outer_steps).
    The adaptive rule additionally scales r by 1.05 when the acceptance
    rate exceeds the target and by 1/1.05 when it falls short (equality
    leaves the geometric step unchanged). The result is clamped to
    [beta_start, beta_end].
    """
    r = (config.beta_end / config.beta_start) ** (1.0 / config.outer_steps)
    if config.beta_rule == "adaptive":
        if acc_rate > config.adapt_target:
            r *= 1.05
        elif acc_rate < config.adapt_target:
            r /= 1.05
    return min(max(beta * r, config.beta_start), config.beta_end)


def anneal(problem: IsingProblem, config: AnnealConfig) -> RunResult:
    """Run the annealer; deterministic given (problem, config.seed).

    Divergent trajectories are rejected and counted, never fatal. Best
    tracking inspects the sign configuration after every inner step (via
    the trajectory's improvement list), so rejected trajectories still
    contribute any better configurations they crossed.
    """
    t0 = time.perf_counter()
    rng_init, rng_mom, rng_acc = rng_streams(config.seed, 3)
    n = problem.n

    x = rng_init.standard_normal(n)
    v = rng_init.standard_normal(n)
    best_s = hmc.sign(x)
    best_E = energy(problem, best_s)

    beta = config.beta_start
    accepted = 0
    divergences = 0
    trace: list[tuple[int, float]] | None = [] if config.trace else None

    for step in range(config.outer_steps):
        v = rng_mom.standard_normal(n)
        state = hmc.PhaseState(x, v)
        H_old = hmc.hamiltonian(problem, state, beta)
        params = replace(config.hmc, beta=beta)
        try:
            result = hmc.trajectory(problem, state, params)
        except hmc.TrajectoryDivergence:
            divergences += 1
        else:
            for e, s in result.improvements:
                if e < best_E:
                    best_E = e
                    best_s = s
            H_new = hmc.hamiltonian(problem, result.state, beta)
            if hmc.accept(H_old, H_new, rng_acc.random()):
                x = result.state.x
                v = result.state.v
                accepted += 1
        beta = next_beta(beta, accepted / (step + 1), config)
        if trace is not None:
            trace.append((step, best_E))

    return RunResult(
        best_s=best_s,
        best_E=best_E,
        wall_time=time.perf_counter() - t0,
        outer_steps_run=config.outer_steps,
        acceptance_rate=accepted / config.outer_steps,
        energy_trace=trace,
        divergences=divergences,
    )
