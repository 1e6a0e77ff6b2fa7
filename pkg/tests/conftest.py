import numpy as np
import pytest

from phia.model import IsingProblem


def random_problem(n: int, seed: int, density: float = 1.0, with_fields: bool = True) -> IsingProblem:
    """Dense-ish random instance used across test modules."""
    rng = np.random.default_rng(seed)
    triples = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                triples.append((i, j, float(rng.normal())))
    h = rng.normal(size=n) if with_fields else None
    return IsingProblem(n, triples, h)


def random_spins(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.where(rng.random(n) < 0.5, -1.0, 1.0)


@pytest.fixture
def small_problem() -> IsingProblem:
    return IsingProblem(3, [(0, 1, 1.0), (0, 2, -1.0), (1, 2, 2.0)], [0.5, 0.0, -0.5])
