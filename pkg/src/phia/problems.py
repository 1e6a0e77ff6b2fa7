"""Benchmark instance generators for the seven standard problem families.

Every family emits an IsingProblem whose coefficients lie in a declared
domain:

    maxcut_dense  J in {-1 per edge}, h = 0   (Erdos-Renyi, edge prob p)
    maxcut_d3     J in {-1 per edge}, h = 0   (random 3-regular graph)
    sk_bool       J in {0, 1},        h = 0   (all pairs)
    sk_ising      J in {-1, +1},      h = 0   (all pairs)
    sk_uniform    J in {0} u U(0,1),  h = 0   (zero with prob q)
    nae_3_sat     J integer,          h = 0   (clause-pair accumulation)
    spin_model    J, h in U(-1, 1)            (the only family with fields)

Max-cut edges map to J = -1 so that minimizing the spin energy maximizes
the cut; all families then share a single "minimize energy" objective.
Explicitly zero couplings are omitted (energy-equivalent canonical form).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import IsingProblem, as_spins

__all__ = ["FAMILIES", "INTEGER_FAMILIES", "GenSpec", "GenerationError", "generate", "cut_value"]

FAMILIES = (
    "maxcut_dense",
    "maxcut_d3",
    "sk_bool",
    "sk_ising",
    "sk_uniform",
    "nae_3_sat",
    "spin_model",
)

# families whose coefficients (and thus energies) are integers
INTEGER_FAMILIES = frozenset({"maxcut_dense", "maxcut_d3", "sk_bool", "sk_ising", "nae_3_sat"})


class GenerationError(ValueError):
    """Infeasible generator specification."""


@dataclass(frozen=True)
class GenSpec:
    """Family, size, seed, and the family-specific knobs.

    p     : edge probability (maxcut_dense)
    alpha : clause-to-variable ratio (nae_3_sat); 2.1 sits near the
            satisfiability threshold
    q     : zero-coupling probability (sk_uniform)
    """

    family: str
    n: int
    seed: int = 0
    p: float = 0.5
    alpha: float = 2.1
    q: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise GenerationError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.n < 2:
            raise GenerationError(f"n must be >= 2, got {self.n}")
        if self.family == "maxcut_d3" and (self.n < 4 or self.n % 2):
            raise GenerationError(f"maxcut_d3 needs even n >= 4, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise GenerationError(f"edge probability p must lie in [0, 1], got {self.p}")
        if not self.alpha > 0:
            raise GenerationError(f"clause ratio alpha must be > 0, got {self.alpha}")
        if not 0.0 <= self.q <= 1.0:
            raise GenerationError(f"sparsity q must lie in [0, 1], got {self.q}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def _three_regular_edges(n: int, rng: np.random.Generator, max_attempts: int = 1000) -> list[tuple[int, int]]:
    # configuration model: pair up 3 stubs per vertex, reject draws with
    # self-loops or multi-edges (acceptance probability is bounded away
    # from zero for degree 3)
    for _ in range(max_attempts):
        stubs = np.repeat(np.arange(n), 3)
        rng.shuffle(stubs)
        a = stubs[0::2]
        b = stubs[1::2]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        if np.any(lo == hi):
            continue
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        return [(int(i), int(j)) for i, j in zip(lo, hi)]
    raise GenerationError(f"no simple 3-regular graph found in {max_attempts} pairing attempts")


def generate(spec: GenSpec) -> IsingProblem:
    """Draw an instance; identical specs (including seed) yield identical problems."""
    rng = _rng(spec.seed)
    n = spec.n
    h = None
    meta: dict = {"family": spec.family, "seed": spec.seed}

    if spec.family == "maxcut_dense":
        iu, ju = _pair_indices(n)
        mask = rng.random(iu.size) < spec.p
        triples = [(int(i), int(j), -1.0) for i, j in zip(iu[mask], ju[mask])]
        meta["p"] = spec.p
    elif spec.family == "maxcut_d3":
        edges = _three_regular_edges(n, rng)
        triples = [(i, j, -1.0) for i, j in edges]
    elif spec.family == "sk_bool":
        iu, ju = _pair_indices(n)
        vals = rng.integers(0, 2, size=iu.size)
        keep = vals == 1
        triples = [(int(i), int(j), 1.0) for i, j in zip(iu[keep], ju[keep])]
    elif spec.family == "sk_ising":
        iu, ju = _pair_indices(n)
        vals = 2.0 * rng.integers(0, 2, size=iu.size) - 1.0
        triples = [(int(i), int(j), float(v)) for i, j, v in zip(iu, ju, vals)]
    elif spec.family == "sk_uniform":
        iu, ju = _pair_indices(n)
        zero_draw = rng.random(iu.size)
        vals = rng.random(iu.size)
        keep = zero_draw >= spec.q
        triples = [(int(i), int(j), float(v)) for i, j, v in zip(iu[keep], ju[keep], vals[keep])]
        meta["q"] = spec.q
    elif spec.family == "nae_3_sat":
        m = round(spec.alpha * n)
        if m < 1:
            raise GenerationError(f"alpha={spec.alpha} with n={n} yields no clauses")
        acc: dict[tuple[int, int], float] = {}
        for _ in range(m):
            vs = rng.choice(n, size=3, replace=False)
            pol = 2 * rng.integers(0, 2, size=3) - 1
            for a in range(3):
                for b in range(a + 1, 3):
                    i, j = int(vs[a]), int(vs[b])
                    if i > j:
                        i, j = j, i
                    acc[(i, j)] = acc.get((i, j), 0.0) - float(pol[a] * pol[b])
        triples = [(i, j, v) for (i, j), v in acc.items() if v != 0.0]
        meta["alpha"] = spec.alpha
        meta["clauses"] = m
    elif spec.family == "spin_model":
        iu, ju = _pair_indices(n)
        vals = rng.uniform(-1.0, 1.0, size=iu.size)
        triples = [(int(i), int(j), float(v)) for i, j, v in zip(iu, ju, vals)]
        h = rng.uniform(-1.0, 1.0, size=n)
    else:  # pragma: no cover - guarded by GenSpec validation
        raise GenerationError(f"unknown family {spec.family!r}")

    return IsingProblem(n, triples, h, metadata=meta)


def cut_value(problem: IsingProblem, s: np.ndarray) -> int:
    """Number of edges crossing the partition induced by s.

    Only meaningful for max-cut instances, where every stored coupling is
    one unweighted edge: cut = (|E| - sum_edges s_i s_j) / 2.
    """
    family = problem.metadata.get("family", "")
    if not family.startswith("maxcut"):
        raise ValueError(f"cut_value requires a maxcut family, got {family or 'untagged problem'!r}")
    s = as_spins(s, problem.n)
    return int(np.count_nonzero(s[problem.rows] != s[problem.cols]))
