"""Reference solvers: single-flip Metropolis annealing and exact zero-cross HMC.

The single-flip annealer is the conventional sequential baseline. The
exact solver integrates the same continuous relaxation as the main
annealer but in closed form: between sign changes every coordinate is an
independent unit harmonic oscillator, and each zero crossing either
passes the discrete energy barrier (momentum shrinks accordingly) or
reflects off it. Exact dynamics conserve the total energy, so every
trajectory is accepted.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ._accel import maybe_jit
from .annealer import AnnealConfig, RunResult, next_beta, rng_streams
from .hmc import PhaseState, hamiltonian, sign
from .model import IsingProblem, energy, flip_delta

__all__ = ["SaConfig", "GahmcConfig", "sa_anneal", "gahmc_anneal"]


@dataclass(frozen=True)
class SaConfig:
    """Single-flip annealer configuration; schedule fields mirror AnnealConfig."""

    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    beta_rule: str = "geometric"
    adapt_target: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError(f"need 0 < beta_start <= beta_end, got {self.beta_start}, {self.beta_end}")
        if self.beta_rule not in ("geometric", "adaptive"):
            raise ValueError(f"unknown beta_rule {self.beta_rule!r}")


@dataclass(frozen=True)
class GahmcConfig:
    """Exact zero-cross dynamics configuration.

    trajectory_time is the total integration time per outer step; pi gives
    every coordinate roughly one crossing opportunity per trajectory.
    """

    trajectory_time: float = math.pi
    outer_steps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    beta_rule: str = "geometric"
    adapt_target: float = 0.5
    seed: int = 0
    max_events: int = 10_000

    def __post_init__(self):
        if not self.trajectory_time > 0:
            raise ValueError(f"trajectory_time must be > 0, got {self.trajectory_time}")
        if self.outer_steps < 1:
            raise ValueError(f"outer_steps must be >= 1, got {self.outer_steps}")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError(f"need 0 < beta_start <= beta_end, got {self.beta_start}, {self.beta_end}")


def _sa_schedule_config(config: SaConfig) -> AnnealConfig:
    # reuse the shared schedule stepper; only the schedule fields matter
    return AnnealConfig(
        beta_start=config.beta_start,
        beta_end=config.beta_end,
        outer_steps=config.sweeps,
        beta_rule=config.beta_rule,
        adapt_target=config.adapt_target,
    )


def _sweep(s, ptr, idx, val, h, beta, order, us, E, best_E, best_s):
    """One Metropolis sweep in the given visit order; returns bookkeeping.

    Flips spin i with probability min(1, exp(-beta*delta)); improving or
    neutral moves always pass. New best configurations are copied into
    best_s in place (improvements are rare, so the copies are cheap).
    """
    accepted = 0
    for k in range(order.shape[0]):
        i = order[k]
        f = h[i]
        for m in range(ptr[i], ptr[i + 1]):
            f += val[m] * s[idx[m]]
        delta = 2.0 * s[i] * f
        if delta <= 0.0 or us[k] < math.exp(-beta * delta):
            s[i] = -s[i]
            E += delta
            accepted += 1
            if E < best_E:
                best_E = E
                for j in range(s.shape[0]):
                    best_s[j] = s[j]
    return E, best_E, accepted


_sweep_fast = maybe_jit(_sweep)


def sa_anneal(problem: IsingProblem, config: SaConfig) -> RunResult:
    """Single-flip Metropolis annealing; deterministic given config.seed.

    Each sweep visits every spin exactly once in a fresh random order.
    The running energy is tracked incrementally; the reported best is
    re-evaluated exactly from the stored configuration.
    """
    t0 = time.perf_counter()
    rng_init, rng_sweep = rng_streams(config.seed, 2)
    n = problem.n
    sched = _sa_schedule_config(config)

    s = np.where(rng_init.random(n) < 0.5, -1.0, 1.0)
    E = energy(problem, s)
    best_s = s.copy()
    best_E = E

    beta = config.beta_start
    accepted_total = 0
    for sweep_no in range(config.sweeps):
        order = rng_sweep.permutation(n)
        us = rng_sweep.random(n)
        E, best_E, acc = _sweep_fast(
            s, problem.adj_ptr, problem.adj_idx, problem.adj_val, problem.h, beta, order, us, E, best_E, best_s
        )
        accepted_total += acc
        acc_rate = accepted_total / ((sweep_no + 1) * n)
        beta = next_beta(beta, acc_rate, sched)

    best_E = energy(problem, best_s)
    return RunResult(
        best_s=best_s,
        best_E=best_E,
        wall_time=time.perf_counter() - t0,
        outer_steps_run=config.sweeps,
        acceptance_rate=accepted_total / (config.sweeps * n),
        energy_trace=None,
    )


def _first_zero_times(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Earliest t > 0 with x*cos(t) + v*sin(t) = 0, per coordinate.

    Writing the oscillation as R*sin(t + phi) with phi = atan2(x, v), the
    zeros sit at t = k*pi - phi. A coordinate already at the origin next
    returns after half a period; a fully resting coordinate never crosses.
    """
    phi = np.arctan2(x, v)
    t = (-phi) % np.pi
    t[t == 0.0] = np.pi
    t[(x == 0.0) & (v == 0.0)] = np.inf
    return t


def _exact_trajectory(problem, x, v, s, E, beta, total_time, max_events, best):
    """Evolve the piecewise-harmonic dynamics for total_time.

    Coordinates advance lazily: each stores its state at its own last
    event (t_last, x0, v0) and is only touched when it reaches zero or at
    the end of the trajectory. Crossing coordinate i costs the discrete
    barrier beta*flip_delta; sufficient kinetic energy passes through with
    v' = sign(v)*sqrt(v^2 - 2*barrier), otherwise the momentum reflects.
    Simultaneous events resolve to the lowest index (argmin convention).
    """
    n = x.shape[0]
    t_last = np.zeros(n)
    x0 = x.copy()
    v0 = v.copy()
    t_hit = _first_zero_times(x0, v0)
    best_E, best_s = best

    events = 0
    while events < max_events:
        i = int(np.argmin(t_hit))
        t = t_hit[i]
        if t >= total_time:
            break
        dt = t - t_last[i]
        w = -x0[i] * math.sin(dt) + v0[i] * math.cos(dt)
        delta = flip_delta(problem, s, i)
        barrier = beta * delta
        if 0.5 * w * w > barrier:
            w = math.copysign(math.sqrt(w * w - 2.0 * barrier), w)
            s[i] = -s[i]
            E += delta
            # E is tracked incrementally; re-evaluate exactly before recording
            if E < best_E + 1.0e-9 * (1.0 + abs(best_E)):
                e_exact = energy(problem, s)
                if e_exact < best_E:
                    best_E = e_exact
                    best_s = s.copy()
        else:
            w = -w
        x0[i] = 0.0
        v0[i] = w
        t_last[i] = t
        t_hit[i] = t + math.pi
        events += 1

    dt = total_time - t_last
    c = np.cos(dt)
    sn = np.sin(dt)
    x_end = x0 * c + v0 * sn
    v_end = -x0 * sn + v0 * c
    return x_end, v_end, s, E, events, (best_E, best_s)


def gahmc_anneal(problem: IsingProblem, config: GahmcConfig) -> RunResult:
    """Exact zero-cross annealing; every trajectory is accepted.

    The candidate configuration is the sign vector at the trajectory end;
    crossings inside a trajectory also update the best-so-far since each
    successful crossing changes exactly one spin at known energy cost.
    """
    t0 = time.perf_counter()
    rng_init, rng_mom = rng_streams(config.seed, 2)
    n = problem.n
    sched = AnnealConfig(
        beta_start=config.beta_start,
        beta_end=config.beta_end,
        outer_steps=config.outer_steps,
        beta_rule=config.beta_rule,
        adapt_target=config.adapt_target,
    )

    x = rng_init.standard_normal(n)
    s = sign(x)
    E = energy(problem, s)
    best_E = E
    best_s = s.copy()
    beta = config.beta_start

    for _ in range(config.outer_steps):
        v = rng_mom.standard_normal(n)
        x, v, s, E, _, (best_E, best_s) = _exact_trajectory(
            problem, x, v, s, E, beta, config.trajectory_time, config.max_events, (best_E, best_s)
        )
        beta = next_beta(beta, 1.0, sched)

    best_E = energy(problem, best_s)
    return RunResult(
        best_s=best_s,
        best_E=best_E,
        wall_time=time.perf_counter() - t0,
        outer_steps_run=config.outer_steps,
        acceptance_rate=1.0,
        energy_trace=None,
    )


def exact_trajectory(problem: IsingProblem, state: PhaseState, beta: float, total_time: float, max_events: int = 10_000):
    """Public single-trajectory entry point (used by conservation audits).

    Returns (end_state, end_signs, events). The end state satisfies
    hamiltonian(end) == hamiltonian(start) up to crossing-ordering
    roundoff.
    """
    x = state.x.copy()
    v = state.v.copy()
    s = sign(x)
    E = energy(problem, s)
    x2, v2, s2, _, events, _ = _exact_trajectory(
        problem, x, v, s, E, beta, total_time, max_events, (np.inf, None)
    )
    return PhaseState(x2, v2), s2, events
