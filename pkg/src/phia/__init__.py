"""Parallel HMC Ising annealer: solvers, benchmarks, and datapath emulation."""

__version__ = "0.1.0"

from .annealer import AnnealConfig, RunResult, anneal, next_beta
from .baselines import GahmcConfig, SaConfig, gahmc_anneal, sa_anneal
from .bench import (
    ExperimentSpec,
    TtsRecord,
    brute_force_ground,
    estimate_success,
    make_solver,
    run_experiment,
    scaling_report,
    tts,
)
from .fixedpoint import FixedFormat, cycle_estimate, fx_anneal, state_machine_trace
from .hmc import HmcParams, PhaseState
from .model import (
    IsingProblem,
    ProblemFormatError,
    boltzmann_weight,
    energy,
    flip_delta,
    load_problem,
    save_problem,
)
from .problems import FAMILIES, GenSpec, cut_value, generate

__all__ = [
    "__version__",
    "AnnealConfig",
    "RunResult",
    "anneal",
    "next_beta",
    "GahmcConfig",
    "SaConfig",
    "gahmc_anneal",
    "sa_anneal",
    "ExperimentSpec",
    "TtsRecord",
    "brute_force_ground",
    "estimate_success",
    "make_solver",
    "run_experiment",
    "scaling_report",
    "tts",
    "FixedFormat",
    "cycle_estimate",
    "fx_anneal",
    "state_machine_trace",
    "HmcParams",
    "PhaseState",
    "IsingProblem",
    "ProblemFormatError",
    "boltzmann_weight",
    "energy",
    "flip_delta",
    "load_problem",
    "save_problem",
    "FAMILIES",
    "GenSpec",
    "cut_value",
    "generate",
]
