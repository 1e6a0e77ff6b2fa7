"""Gradient-based HMC dynamics over continuous relaxations of spin vectors.

Binary spins are coupled to continuous positions through s = sign(x),
giving the total energy

    H(x, v) = beta * E(sign(x)) + ||x||^2 / 2 + ||v||^2 / 2.

The momentum update needs d(sign)/dx, which is zero almost everywhere, so
sign is smoothed to tanh(gamma*x) for the chain-rule factor only; the
coupling-weighted local field is still evaluated on the hard signs. One
integrator step moves positions with the current momenta and then moves
momenta with the force at the new positions, so all components update in
parallel from a shared snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import IsingProblem, energy

__all__ = [
    "PhaseState",
    "HmcParams",
    "TrajectoryDivergence",
    "TrajectoryResult",
    "sign",
    "tanh_sign",
    "dtanh_sign",
    "quasi_gradient",
    "hamiltonian",
    "smoothed_hamiltonian",
    "smoothed_grad_x",
    "v_dot",
    "em_update",
    "trajectory",
    "accept",
]

# Positions or momenta beyond this magnitude abort the trajectory; large
# beta*gamma products can otherwise blow up the explicit integrator.
DIVERGENCE_LIMIT = 1.0e6


class TrajectoryDivergence(RuntimeError):
    """Raised when a trajectory leaves the finite/bounded region."""


@dataclass
class PhaseState:
    """Continuous positions x and momenta v, both length n."""

    x: np.ndarray
    v: np.ndarray

    def copy(self) -> "PhaseState":
        return PhaseState(self.x.copy(), self.v.copy())


@dataclass(frozen=True)
class HmcParams:
    """Inner-dynamics parameters.

    gamma   : sharpness of the tanh surrogate for sign.
    epsilon : integrator step size.
    n_steps : integrator steps per trajectory.
    beta    : inverse temperature scaling the spin energy inside H.
    """

    gamma: float = 2.0
    epsilon: float = 0.1
    n_steps: int = 10
    beta: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


def sign(x):
    """Hard sign with sign(0) = +1 (fixed convention; ties are measure-zero)."""
    return np.where(np.asarray(x, dtype=np.float64) >= 0.0, 1.0, -1.0)


def tanh_sign(x, gamma: float):
    """Smooth surrogate tanh(gamma*x) for the hard sign."""
    return np.tanh(gamma * np.asarray(x, dtype=np.float64))


def dtanh_sign(x, gamma: float):
    """Derivative gamma*(1 - tanh^2(gamma*x)); peaks at gamma for x=0."""
    t = np.tanh(gamma * np.asarray(x, dtype=np.float64))
    return gamma * (1.0 - t * t)


def quasi_gradient(problem: IsingProblem, s: np.ndarray) -> np.ndarray:
    """Local field sum_j J_ij s_j + h_i; equals -dE/ds_i at s."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (problem.n,):
        raise ValueError(f"configuration length {s.shape} does not match n={problem.n}")
    return problem.local_field(s)


def hamiltonian(problem: IsingProblem, state: PhaseState, beta: float) -> float:
    """beta*E(sign(x)) + ||x||^2/2 + ||v||^2/2 (hard-sign total energy)."""
    x, v = state.x, state.v
    return float(beta * energy(problem, sign(x)) + 0.5 * (x @ x) + 0.5 * (v @ v))


def smoothed_hamiltonian(problem: IsingProblem, state: PhaseState, beta: float, gamma: float) -> float:
    """Differentiable surrogate: the spin energy evaluated at tanh(gamma*x)."""
    x, v = state.x, state.v
    return float(beta * energy(problem, tanh_sign(x, gamma)) + 0.5 * (x @ x) + 0.5 * (v @ v))


def smoothed_grad_x(problem: IsingProblem, x: np.ndarray, beta: float, gamma: float) -> np.ndarray:
    """Analytic x-gradient of the smoothed total energy.

    Component i is x_i - beta * dtanh_sign(x_i) * (sum_j J_ij tanh(g x_j) + h_i).
    """
    t = tanh_sign(x, gamma)
    return x - beta * dtanh_sign(x, gamma) * problem.local_field(t)


def _v_dot_from_field(x: np.ndarray, f: np.ndarray, beta: float, gamma: float) -> np.ndarray:
    return beta * dtanh_sign(x, gamma) * f - x


def v_dot(problem: IsingProblem, x: np.ndarray, beta: float, gamma: float, smooth_field: bool = False) -> np.ndarray:
    """Momentum time-derivative.

    The default hybrid form evaluates the local field on the hard signs
    and smooths only the chain-rule factor. With smooth_field=True the
    field too is evaluated at tanh(gamma*x), which makes v_dot the exact
    negative x-gradient of the smoothed total energy (used for gradient
    testing).
    """
    x = np.asarray(x, dtype=np.float64)
    s = tanh_sign(x, gamma) if smooth_field else sign(x)
    return _v_dot_from_field(x, quasi_gradient(problem, s), beta, gamma)


def _check_bounded(x: np.ndarray, v: np.ndarray) -> None:
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise TrajectoryDivergence("non-finite state encountered")
    if max(np.max(np.abs(x)), np.max(np.abs(v))) > DIVERGENCE_LIMIT:
        raise TrajectoryDivergence(f"state magnitude exceeded {DIVERGENCE_LIMIT:g}")


def em_update(problem: IsingProblem, state: PhaseState, params: HmcParams) -> PhaseState:
    """One position-then-momentum integrator step.

    x' = x + eps*v, then v' = v + eps*v_dot(x'). Every component of each
    half-update reads only the pre-update snapshot, so the step is a
    data-parallel map plus one shared local-field reduction.
    """
    eps = params.epsilon
    x = state.x + eps * state.v
    f = quasi_gradient(problem, sign(x))
    v = state.v + eps * _v_dot_from_field(x, f, params.beta, params.gamma)
    _check_bounded(x, v)
    return PhaseState(x, v)


@dataclass
class TrajectoryResult:
    state: PhaseState
    # strictly improving (energy, spins) pairs in the order encountered
    improvements: list[tuple[float, np.ndarray]] = field(default_factory=list)


def trajectory(problem: IsingProblem, state: PhaseState, params: HmcParams) -> TrajectoryResult:
    """Run n_steps integrator steps, recording every strict best-energy improvement.

    The sign configuration is inspected after every step: intermediate
    states often cross better configurations than the endpoint at
    negligible cost, since the local field needed for the force also
    yields the spin energy via E(s) = -(s.f + s.h)/2.
    """
    eps = params.epsilon
    x = state.x
    v = state.v
    h = problem.h
    best_E = np.inf
    improvements: list[tuple[float, np.ndarray]] = []
    for _ in range(params.n_steps):
        x = x + eps * v
        s = sign(x)
        f = quasi_gradient(problem, s)
        v = v + eps * _v_dot_from_field(x, f, params.beta, params.gamma)
        _check_bounded(x, v)
        # fast energy from the already-computed field; candidates are
        # re-evaluated exactly before being recorded
        e_fast = -0.5 * float(s @ f + h @ s)
        if e_fast < best_E + 1.0e-9 * (1.0 + abs(best_E)):
            e_exact = energy(problem, s)
            if e_exact < best_E:
                best_E = e_exact
                improvements.append((e_exact, s.copy()))
    return TrajectoryResult(PhaseState(x, v), improvements)


def accept(H_old: float, H_new: float, u: float) -> bool:
    """Metropolis rule: accept iff u < min(1, exp(-(H_new - H_old))).

    Exact dynamics would conserve H, but the tanh smoothing and the finite
    step size do not, so the correction keeps sampling consistent. Only
    the difference enters; shifting both energies never changes the
    decision.
    """
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    dH = H_new - H_old
    if dH <= 0.0:
        return True
    if not np.isfinite(dH):
        return False
    return u < np.exp(-dH)
