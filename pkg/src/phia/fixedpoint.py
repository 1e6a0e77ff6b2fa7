"""Fixed-point datapath emulation and the per-state cycle model.

Values live as raw two's-complement integers scaled by 2^-frac_bits.
Rounding is round-to-nearest-even and overflow saturates; every
saturation event is counted so runs can report how hard they pressed the
format limits. The derivative of the tanh surrogate is replaced by a
quadratic polynomial fitted against the exact function, evaluated with
one squaring, two multiplies, and two adds; this is what makes fractional
coefficients tractable on a narrow datapath.

The cycle model is independent of the arithmetic emulation: it counts
control-flow cycles of the five-state annealing engine symbolically
(exact rational arithmetic, since odd problem sizes make some state
costs fractional in clock units).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .annealer import AnnealConfig, RunResult, next_beta, rng_streams
from .model import IsingProblem, energy

__all__ = [
    "FixedFormat",
    "FxStatus",
    "fx_quantize",
    "fx_to_real",
    "fx_add",
    "fx_sub",
    "fx_mul",
    "DtanhPoly",
    "fit_dtanh_poly",
    "fx_poly_dtanh",
    "fx_anneal",
    "CycleModelParams",
    "CycleEstimate",
    "cycle_estimate",
    "StateVisit",
    "StateMachineTrace",
    "state_machine_trace",
    "STATE_NAMES",
]


@dataclass(frozen=True)
class FixedFormat:
    """Signed fixed-point format: total_bits wide, frac_bits fractional.

    Rounding is round-to-nearest-even and overflow saturates (both fixed
    policies, not knobs). Arithmetic (add/mul) requires total_bits <= 32
    so products fit exactly in int64 intermediates; quantization alone
    supports up to 64 bits.
    """

    total_bits: int = 32
    frac_bits: int = 16

    def __post_init__(self):
        if not 0 < self.frac_bits < self.total_bits <= 64:
            raise ValueError(
                f"need 0 < frac_bits < total_bits <= 64, got {self.frac_bits}/{self.total_bits}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def real_max(self) -> float:
        return self.raw_max / self.scale

    @property
    def real_min(self) -> float:
        return self.raw_min / self.scale

    @property
    def resolution(self) -> float:
        return 1.0 / self.scale

    def _require_arithmetic(self) -> None:
        if self.total_bits > 32:
            raise ValueError(f"fixed-point arithmetic supports total_bits <= 32, got {self.total_bits}")


class FxStatus:
    """Mutable saturation-event counter threaded through fx operations."""

    def __init__(self):
        self.saturations = 0


def _saturate(raw, fmt: FixedFormat, status: FxStatus | None):
    raw = np.asarray(raw, dtype=np.int64)
    clipped = np.clip(raw, fmt.raw_min, fmt.raw_max)
    if status is not None:
        status.saturations += int(np.count_nonzero(clipped != raw))
    return clipped


def fx_quantize(x, fmt: FixedFormat, status: FxStatus | None = None):
    """Nearest representable raw value; ties to even, saturating at the limits."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot quantize non-finite values")
    scaled = np.rint(x * fmt.scale)  # rint rounds half to even
    out = _saturate(scaled.astype(np.int64), fmt, status)
    # values beyond int64 after scaling would wrap before the clip; catch them
    if np.any(np.abs(x) > 2.0 ** (63 - fmt.frac_bits)):
        out = np.where(np.abs(x) > 2.0 ** (63 - fmt.frac_bits), np.where(x > 0, fmt.raw_max, fmt.raw_min), out)
        if status is not None:
            status.saturations += int(np.count_nonzero(np.abs(x) > 2.0 ** (63 - fmt.frac_bits)))
    if out.ndim == 0:
        return int(out)
    return out


def fx_to_real(raw, fmt: FixedFormat):
    raw = np.asarray(raw, dtype=np.int64)
    out = raw / fmt.scale
    if out.ndim == 0:
        return float(out)
    return out


def fx_add(a, b, fmt: FixedFormat, status: FxStatus | None = None):
    fmt._require_arithmetic()
    return _saturate(np.asarray(a, np.int64) + np.asarray(b, np.int64), fmt, status)


def fx_sub(a, b, fmt: FixedFormat, status: FxStatus | None = None):
    fmt._require_arithmetic()
    return _saturate(np.asarray(a, np.int64) - np.asarray(b, np.int64), fmt, status)


def _shift_round_nearest_even(p: np.ndarray, k: int) -> np.ndarray:
    # arithmetic right shift with round-to-nearest, ties to even; the
    # floor shift keeps remainders non-negative for negative inputs too
    q = p >> k
    r = p - (q << k)
    half = np.int64(1) << (k - 1)
    round_up = (r > half) | ((r == half) & ((q & 1) == 1))
    return q + round_up.astype(np.int64)


def fx_mul(a, b, fmt: FixedFormat, status: FxStatus | None = None):
    fmt._require_arithmetic()
    p = np.asarray(a, np.int64) * np.asarray(b, np.int64)  # exact for <= 32-bit operands
    return _saturate(_shift_round_nearest_even(p, fmt.frac_bits), fmt, status)


# -- polynomial surrogate for the tanh derivative -------------------------


@dataclass(frozen=True)
class DtanhPoly:
    """Quadratic least-squares surrogate of gamma*(1 - tanh^2(gamma*x)).

    coeffs (a, b, c) multiply powers of u = gamma*x, fitted over
    |x| <= x_max. max_fit_error is the measured maximum absolute error on
    a dense grid of the fit domain and is the declared accuracy bound.
    Raw coefficients are pre-folded with gamma (a*g^2, b*g, c) so the
    fixed-point evaluation is one squaring, two multiplies, and two adds.
    """

    gamma: float
    x_max: float
    coeffs: tuple[float, float, float]
    max_fit_error: float
    fmt: FixedFormat
    raw_c2: int
    raw_c1: int
    raw_c0: int
    raw_x_max: int

    def real_eval(self, x):
        """Float evaluation with the same clamp rules (reference path)."""
        x = np.asarray(x, dtype=np.float64)
        a, b, c = self.coeffs
        u = self.gamma * x
        val = np.maximum(a * u * u + b * u + c, 0.0)
        return np.where(np.abs(x) >= self.x_max, 0.0, val)


@lru_cache(maxsize=32)
def fit_dtanh_poly(gamma: float, fmt: FixedFormat = FixedFormat(), x_max: float | None = None) -> DtanhPoly:
    """Fit the quadratic surrogate; domain defaults to |x| <= 3/gamma.

    Beyond 3/gamma the true derivative is under one percent of its peak,
    so the evaluation clamps to zero there.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if x_max is None:
        x_max = 3.0 / gamma
    grid = np.linspace(-x_max, x_max, 20001)
    u = gamma * grid
    target = gamma * (1.0 - np.tanh(u) ** 2)
    a, b, c = np.polyfit(u, target, 2)
    fitted = a * u * u + b * u + c
    max_err = float(np.max(np.abs(fitted - target))) * (1.0 + 1e-9) + 1e-15
    if max(abs(a), abs(b), abs(c), x_max) > fmt.real_max:
        raise ValueError("fit coefficients exceed the fixed-point range")
    return DtanhPoly(
        gamma=float(gamma),
        x_max=float(x_max),
        coeffs=(float(a), float(b), float(c)),
        max_fit_error=max_err,
        fmt=fmt,
        raw_c2=fx_quantize(a * gamma * gamma, fmt),
        raw_c1=fx_quantize(b * gamma, fmt),
        raw_c0=fx_quantize(c, fmt),
        raw_x_max=fx_quantize(x_max, fmt),
    )


def fx_poly_dtanh(x_raw, gamma: float, fmt: FixedFormat = FixedFormat(), status: FxStatus | None = None,
                  poly: DtanhPoly | None = None):
    """Fixed-point quadratic surrogate of the tanh derivative.

    Evaluates c2*x^2 + c1*x + c0 (gamma folded into the coefficients),
    clamped to zero below and zero outside |x| >= x_max. Exactly one
    squaring, two multiplies, and two adds in fixed point.
    """
    if poly is None:
        poly = fit_dtanh_poly(gamma, fmt)
    x_raw = np.asarray(x_raw, dtype=np.int64)
    sq = fx_mul(x_raw, x_raw, fmt, status)
    t2 = fx_mul(np.int64(poly.raw_c2), sq, fmt, status)
    t1 = fx_mul(np.int64(poly.raw_c1), x_raw, fmt, status)
    out = fx_add(fx_add(t2, t1, fmt, status), np.int64(poly.raw_c0), fmt, status)
    out = np.maximum(out, 0)
    out = np.where(np.abs(x_raw) >= poly.raw_x_max, 0, out)
    if out.ndim == 0:
        return int(out)
    return out


# -- fixed-point annealer ---------------------------------------------------


def _fx_problem_tables(problem: IsingProblem, fmt: FixedFormat):
    # refuse out-of-range coefficients up front rather than saturating them
    limit = fmt.real_max
    if problem.num_couplings and np.max(np.abs(problem.vals)) > limit:
        raise ValueError(f"coupling magnitude exceeds fixed-point range {limit:g}")
    if problem.n and np.max(np.abs(problem.h), initial=0.0) > limit:
        raise ValueError(f"field magnitude exceeds fixed-point range {limit:g}")
    vals_fx = fx_quantize(problem.vals, fmt) if problem.num_couplings else np.zeros(0, np.int64)
    h_fx = fx_quantize(problem.h, fmt)
    J_fx = np.zeros((problem.n, problem.n), dtype=np.int64)
    if problem.num_couplings:
        J_fx[problem.rows, problem.cols] = vals_fx
        J_fx[problem.cols, problem.rows] = vals_fx
    return vals_fx, h_fx, J_fx


def _fx_spin_energy_raw(s_int: np.ndarray, f_exact: np.ndarray, h_fx: np.ndarray) -> int:
    # E = -(s.f + s.h)/2 with f = J s + h; the sum is always even because
    # the coupling part is doubly counted, so the halving shift is exact
    tot = int(s_int @ f_exact) + int(s_int @ h_fx)
    return -(tot >> 1)


def fx_anneal(problem: IsingProblem, config: AnnealConfig, fmt: FixedFormat = FixedFormat()) -> RunResult:
    """Annealing loop with all state held in the fixed-point format.

    Positions, momenta, local fields, energies, and the tanh-derivative
    surrogate all live in fmt; the Metropolis comparison converts the
    (fixed) energy difference to a float only for the exponential. The
    reported best_E is the exact float energy of the best configuration,
    so integer-coefficient problems reproduce float results exactly.
    """
    fmt._require_arithmetic()
    t0 = time.perf_counter()
    status = FxStatus()
    _, h_fx, J_fx = _fx_problem_tables(problem, fmt)
    n = problem.n

    params = config.hmc
    poly = fit_dtanh_poly(params.gamma, fmt)
    eps_fx = np.int64(fx_quantize(params.epsilon, fmt))

    rng_init, rng_mom, rng_acc = rng_streams(config.seed, 3)
    x = np.asarray(fx_quantize(rng_init.standard_normal(n), fmt, status), np.int64)
    v = np.asarray(fx_quantize(rng_init.standard_normal(n), fmt, status), np.int64)

    def spin_vector(x_raw: np.ndarray) -> np.ndarray:
        return np.where(x_raw >= 0, np.int64(1), np.int64(-1))

    def fx_hamiltonian(x_raw, v_raw, e_raw, beta_fx):
        be = fx_mul(np.int64(beta_fx), np.int64(e_raw), fmt, status)
        xx = _saturate(np.sum(fx_mul(x_raw, x_raw, fmt, status)), fmt, status)
        vv = _saturate(np.sum(fx_mul(v_raw, v_raw, fmt, status)), fmt, status)
        kin = fx_add(_shift_round_nearest_even(np.asarray(xx), 1), _shift_round_nearest_even(np.asarray(vv), 1), fmt, status)
        return int(fx_add(be, kin, fmt, status))

    s0 = spin_vector(x)
    f0 = J_fx @ s0 + h_fx
    best_raw = _fx_spin_energy_raw(s0, f0, h_fx)
    best_s = s0.astype(np.float64)
    best_E = energy(problem, best_s)

    beta = config.beta_start
    accepted = 0
    trace: list[tuple[int, float]] | None = [] if config.trace else None

    for step in range(config.outer_steps):
        beta_fx = fx_quantize(beta, fmt, status)
        v = np.asarray(fx_quantize(rng_mom.standard_normal(n), fmt, status), np.int64)
        s = spin_vector(x)
        f_exact = J_fx @ s + h_fx
        e_raw = _saturate(_fx_spin_energy_raw(s, f_exact, h_fx), fmt, status)
        H_old = fx_hamiltonian(x, v, e_raw, beta_fx)

        xt, vt = x, v
        traj_best_raw = None
        traj_best_s = None
        for _ in range(params.n_steps):
            xt = fx_add(xt, fx_mul(eps_fx, vt, fmt, status), fmt, status)
            s = spin_vector(xt)
            f_exact = J_fx @ s + h_fx
            f = _saturate(f_exact, fmt, status)
            dts = fx_poly_dtanh(xt, params.gamma, fmt, status, poly=poly)
            force = fx_mul(np.int64(beta_fx), fx_mul(dts, f, fmt, status), fmt, status)
            vt = fx_add(vt, fx_mul(eps_fx, fx_sub(force, xt, fmt, status), fmt, status), fmt, status)
            e_raw = _fx_spin_energy_raw(s, f_exact, h_fx)
            if traj_best_raw is None or e_raw < traj_best_raw:
                traj_best_raw = e_raw
                traj_best_s = s
        if traj_best_raw is not None and traj_best_raw <= best_raw:
            e_exact = energy(problem, traj_best_s.astype(np.float64))
            if e_exact < best_E:
                best_E = e_exact
                best_s = traj_best_s.astype(np.float64)
            best_raw = min(best_raw, traj_best_raw)

        s = spin_vector(xt)
        f_exact = J_fx @ s + h_fx
        e_raw = _saturate(_fx_spin_energy_raw(s, f_exact, h_fx), fmt, status)
        H_new = fx_hamiltonian(xt, vt, e_raw, beta_fx)
        dH = (H_new - H_old) / fmt.scale
        u = rng_acc.random()
        if dH <= 0.0 or u < math.exp(-dH):
            x, v = xt, vt
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
        saturation_events=status.saturations,
    )


# -- cycle-cost model --------------------------------------------------------

STATE_NAMES = {
    1: "initialization",
    2: "first momentum update",
    3: "gradient iterations",
    4: "acceptance and temperature update",
    5: "best-result bookkeeping",
}


@dataclass(frozen=True)
class CycleModelParams:
    """Reference design timing: 100 MHz clock, so one cycle is 10 ns."""

    n: int
    L: int
    clk_ns: float = 10.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if not self.clk_ns > 0:
            raise ValueError(f"clk_ns must be > 0, got {self.clk_ns}")


@dataclass(frozen=True)
class CycleEstimate:
    """Closed-form cycle counts for one annealing step, in clock units.

    Counts are exact rationals: the initialization and first-update states
    cost n/2 + const cycles, which is fractional for odd n (the reference
    design's rounding is unspecified, so both the exact value and the
    ceiling are reported). t_est = t_s1 + t_s2 + t_s3 is always an
    integer because the two half-n terms combine.
    """

    n: int
    L: int
    clk_ns: float
    t_s1: Fraction
    t_s2: Fraction
    t_d: Fraction
    t_s3: Fraction
    t_est: Fraction

    def ceil_cycles(self) -> dict[str, int]:
        return {
            "t_s1": math.ceil(self.t_s1),
            "t_s2": math.ceil(self.t_s2),
            "t_d": math.ceil(self.t_d),
            "t_s3": math.ceil(self.t_s3),
            "t_est": math.ceil(self.t_est),
        }

    @property
    def nanoseconds(self) -> float:
        return float(self.t_est) * self.clk_ns

    @property
    def microseconds(self) -> float:
        return self.nanoseconds / 1000.0


def cycle_estimate(n: int, L: int, clk_ns: float = 10.0) -> CycleEstimate:
    """Per-state and total cycle counts for a single run.

    With f = floor(n/32) (the shared 32-way adder tree refills once per
    32 spins):

        t_s1  = n/2 + 5
        t_s2  = n/2 + 10 + (n+2)f
        t_d   = n + 12 + (n+2)f          (datapath latency per iteration)
        t_s3  = L*(2n + 25 + (n+2)f)     (= L*t_d + L*(13+n))
        t_est = (2L+1)n + 15 + 25L + (L+1)(n+2)f
    """
    CycleModelParams(n, L, clk_ns)
    f = n // 32
    t_s1 = Fraction(n, 2) + 5
    t_s2 = Fraction(n, 2) + 10 + (n + 2) * f
    t_d = Fraction(n + 12 + (n + 2) * f)
    t_s3 = Fraction(L * (2 * n + 25 + (n + 2) * f))
    t_est = Fraction((2 * L + 1) * n + 15 + 25 * L + (L + 1) * (n + 2) * f)
    assert t_s1 + t_s2 + t_s3 == t_est
    return CycleEstimate(n=n, L=L, clk_ns=clk_ns, t_s1=t_s1, t_s2=t_s2, t_d=t_d, t_s3=t_s3, t_est=t_est)


@dataclass(frozen=True)
class StateVisit:
    state: int
    name: str
    cycles: Fraction
    iterations: int = 1


@dataclass(frozen=True)
class StateMachineTrace:
    """Cycle ledger for one outer annealing step of the 5-state engine.

    States 4 and 5 (acceptance/temperature and best-result bookkeeping)
    are control-only and carry no cycle cost in the single-run estimate,
    which covers states 1-3.
    """

    n: int
    L: int
    clk_ns: float
    visits: tuple[StateVisit, ...]
    estimate: CycleEstimate

    @property
    def totals(self) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for visit in self.visits:
            out[visit.state] = out.get(visit.state, Fraction(0)) + visit.cycles
        return out

    @property
    def total_cycles(self) -> Fraction:
        return sum((v.cycles for v in self.visits), Fraction(0))


def state_machine_trace(n: int, L: int, clk_ns: float = 10.0) -> StateMachineTrace:
    """Simulate the 1->2->3->4->5 control flow of one outer step.

    State 3 loops the gradient update L times, each iteration paying the
    datapath latency t_d plus 13+n cycles of staging; the summed ledger
    reproduces the closed-form totals exactly.
    """
    est = cycle_estimate(n, L, clk_ns)
    per_iter = est.t_d + (13 + n)
    visits = (
        StateVisit(1, STATE_NAMES[1], est.t_s1),
        StateVisit(2, STATE_NAMES[2], est.t_s2),
        StateVisit(3, STATE_NAMES[3], per_iter * L, iterations=L),
        StateVisit(4, STATE_NAMES[4], Fraction(0)),
        StateVisit(5, STATE_NAMES[5], Fraction(0)),
    )
    trace = StateMachineTrace(n=n, L=L, clk_ns=clk_ns, visits=visits, estimate=est)
    assert trace.totals[3] == est.t_s3
    return trace
