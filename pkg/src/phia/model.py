"""Ising problem representation, energy evaluation, and the text file format.

The energy of a spin configuration s in {-1,+1}^n is

    E(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i

with couplings stored once per unordered pair (i < j). A symmetric
per-row adjacency index is built at construction so that single-spin
energy differences cost O(degree) and local-field evaluations reduce to
one matrix-vector product.
"""

from __future__ import annotations

import math
import sys
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "IsingProblem",
    "ProblemFormatError",
    "as_spins",
    "energy",
    "flip_delta",
    "boltzmann_weight",
    "load_problem",
    "parse_problem",
    "save_problem",
    "format_problem",
]

# Above this size the dense symmetric coupling matrix is not materialized
# and matrix-vector products go through a CSR representation instead.
_DENSE_LIMIT = 1024

_EXP_MAX = math.log(sys.float_info.max)  # ~709.78; exp() saturates past this


class ProblemFormatError(ValueError):
    """Malformed problem file; message carries the offending line number."""


class IsingProblem:
    """Immutable sparse Ising instance.

    Parameters
    ----------
    n : number of spins (>= 1).
    couplings : iterable of (i, j, J_ij) with 0 <= i < j < n, no duplicate
        pairs. Stored in canonical (i, j)-sorted order.
    fields : local field vector h of length n (defaults to zeros).
    metadata : free-form mapping (problem family, generator seed, knobs).

    Instances are treated as immutable after construction and are safe to
    share across concurrent workers.
    """

    def __init__(
        self,
        n: int,
        couplings: Iterable[tuple[int, int, float]] = (),
        fields: Sequence[float] | np.ndarray | None = None,
        metadata: dict | None = None,
    ):
        n = int(n)
        if n < 1:
            raise ValueError(f"spin count must be >= 1, got {n}")
        self.n = n

        trip = list(couplings)
        rows = np.array([t[0] for t in trip], dtype=np.int64)
        cols = np.array([t[1] for t in trip], dtype=np.int64)
        vals = np.array([t[2] for t in trip], dtype=np.float64)
        if np.any(rows == cols):
            bad = int(rows[rows == cols][0])
            raise ValueError(f"self-coupling ({bad},{bad}) rejected; fold constants into h explicitly")
        if np.any((rows < 0) | (cols < 0) | (rows >= n) | (cols >= n)):
            raise ValueError("coupling index out of range")
        if np.any(rows > cols):
            raise ValueError("couplings must be given with i < j")
        if not np.all(np.isfinite(vals)):
            raise ValueError("couplings must be finite")
        # canonical order: sort by (i, j); makes energy independent of the
        # input list order and exposes duplicates as adjacent keys
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        keys = rows * n + cols
        if keys.size > 1 and np.any(np.diff(keys) == 0):
            k = int(np.flatnonzero(np.diff(keys) == 0)[0])
            raise ValueError(f"duplicate coupling pair ({int(rows[k])},{int(cols[k])})")
        self.rows = rows
        self.cols = cols
        self.vals = vals

        if fields is None:
            h = np.zeros(n, dtype=np.float64)
        else:
            h = np.asarray(fields, dtype=np.float64).copy()
            if h.shape != (n,):
                raise ValueError(f"field vector must have length {n}, got shape {h.shape}")
            if not np.all(np.isfinite(h)):
                raise ValueError("fields must be finite")
        self.h = h

        self.metadata = dict(metadata) if metadata else {}

        self._build_adjacency()
        self._dense: np.ndarray | None = None
        self._csr = None

    def _build_adjacency(self) -> None:
        # symmetric CSR over both (i,j) and (j,i) so each row lists all
        # neighbors of a spin
        n = self.n
        src = np.concatenate([self.rows, self.cols])
        dst = np.concatenate([self.cols, self.rows])
        val = np.concatenate([self.vals, self.vals])
        counts = np.bincount(src, minlength=n)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        order = np.argsort(src, kind="stable")
        self.adj_ptr = ptr
        self.adj_idx = dst[order]
        self.adj_val = val[order]

    # -- derived views ----------------------------------------------------

    @property
    def num_couplings(self) -> int:
        return int(self.vals.size)

    def degree(self, i: int) -> int:
        return int(self.adj_ptr[i + 1] - self.adj_ptr[i])

    def dense_couplings(self) -> np.ndarray:
        """Symmetric dense coupling matrix (zero diagonal); cached."""
        if self._dense is None:
            if self.n > 4096:
                raise ValueError("dense coupling matrix refused for n > 4096")
            J = np.zeros((self.n, self.n), dtype=np.float64)
            J[self.rows, self.cols] = self.vals
            J[self.cols, self.rows] = self.vals
            self._dense = J
        return self._dense

    def sym_matvec(self, vec: np.ndarray) -> np.ndarray:
        """Product of the symmetric coupling matrix with a length-n vector."""
        if self.n <= _DENSE_LIMIT:
            return self.dense_couplings() @ vec
        if self._csr is None:
            from scipy import sparse

            ij = np.concatenate([self.rows, self.cols])
            ji = np.concatenate([self.cols, self.rows])
            vv = np.concatenate([self.vals, self.vals])
            self._csr = sparse.csr_matrix((vv, (ij, ji)), shape=(self.n, self.n))
        return self._csr @ vec

    def local_field(self, s: np.ndarray) -> np.ndarray:
        """sum_j J_ij s_j + h_i for every spin i."""
        return self.sym_matvec(s) + self.h

    def __repr__(self) -> str:
        fam = self.metadata.get("family", "custom")
        return f"IsingProblem(n={self.n}, couplings={self.num_couplings}, family={fam!r})"


def as_spins(values: Sequence[float] | np.ndarray, n: int | None = None) -> np.ndarray:
    """Validate and return a float64 spin vector with entries exactly +-1."""
    s = np.asarray(values, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError("spin configuration must be a 1-d vector")
    if n is not None and s.shape != (n,):
        raise ValueError(f"spin configuration must have length {n}, got {s.shape[0]}")
    if not np.all(np.abs(s) == 1.0):
        raise ValueError("spin entries must be exactly -1 or +1")
    return s


def energy(problem: IsingProblem, s: np.ndarray) -> float:
    """E(s) = -sum_{i<j} J_ij s_i s_j - h.s in double precision.

    Accepts any real vector of length n (the bilinear form extends the
    definition off the +-1 hypercube, used by the smoothed dynamics).
    Summation over couplings is numpy's pairwise reduction, which bounds
    rounding drift for large instances.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (problem.n,):
        raise ValueError(f"configuration length {s.shape} does not match n={problem.n}")
    pair = problem.vals * s[problem.rows] * s[problem.cols]
    return float(-pair.sum() - problem.h @ s)


def flip_delta(problem: IsingProblem, s: np.ndarray, i: int) -> float:
    """energy(s with spin i flipped) - energy(s), in O(degree(i)).

    Spin i contributes -s_i (sum_j J_ij s_j + h_i); flipping it negates
    that term, so the difference is twice its current value.
    """
    if not 0 <= i < problem.n:
        raise IndexError(f"spin index {i} out of range for n={problem.n}")
    lo = problem.adj_ptr[i]
    hi = problem.adj_ptr[i + 1]
    f = problem.adj_val[lo:hi] @ s[problem.adj_idx[lo:hi]] + problem.h[i]
    return float(2.0 * s[i] * f)


def boltzmann_weight(E: float, beta: float) -> float:
    """Unnormalized Boltzmann weight exp(-beta*E).

    The partition function is never computed; only weights and energy
    differences are used. Overflow saturates to the largest finite double.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    arg = -beta * E
    if arg >= _EXP_MAX:
        return sys.float_info.max
    return math.exp(arg)


# -- text file format ---------------------------------------------------
#
#   ising <n>
#   J <i> <j> <value>      one coupling per line, 0 <= i < j < n
#   h <i> <value>          local field entries (omitted entries are 0)
#   # comment              '#' starts a comment anywhere on a line
#
# Indices are 0-based. Duplicate pairs or field indices are load errors.


def _parse_value(token: str, lineno: int, source: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ProblemFormatError(f"{source}:{lineno}: invalid numeric value {token!r}") from None
    if not math.isfinite(v):
        raise ProblemFormatError(f"{source}:{lineno}: non-finite value {token!r}")
    return v


def _parse_index(token: str, n: int, lineno: int, source: str) -> int:
    try:
        i = int(token)
    except ValueError:
        raise ProblemFormatError(f"{source}:{lineno}: invalid index {token!r}") from None
    if not 0 <= i < n:
        raise ProblemFormatError(f"{source}:{lineno}: index {i} out of range [0, {n})")
    return i


def parse_problem(text: str, source: str = "<string>") -> IsingProblem:
    """Parse the problem text format; diagnostics carry line numbers."""
    n = None
    couplings: list[tuple[int, int, float]] = []
    seen_pairs: set[tuple[int, int]] = set()
    h_entries: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if parts[0] != "ising" or len(parts) != 2:
                raise ProblemFormatError(f"{source}:{lineno}: expected header 'ising <n>', got {line!r}")
            try:
                n = int(parts[1])
            except ValueError:
                raise ProblemFormatError(f"{source}:{lineno}: invalid spin count {parts[1]!r}") from None
            if n < 1:
                raise ProblemFormatError(f"{source}:{lineno}: spin count must be >= 1, got {n}")
            continue
        kind = parts[0]
        if kind == "J":
            if len(parts) != 4:
                raise ProblemFormatError(f"{source}:{lineno}: expected 'J <i> <j> <value>', got {line!r}")
            i = _parse_index(parts[1], n, lineno, source)
            j = _parse_index(parts[2], n, lineno, source)
            if i == j:
                raise ProblemFormatError(f"{source}:{lineno}: self-coupling ({i},{i}) rejected")
            if i > j:
                raise ProblemFormatError(f"{source}:{lineno}: coupling indices must satisfy i < j")
            if (i, j) in seen_pairs:
                raise ProblemFormatError(f"{source}:{lineno}: duplicate coupling pair ({i},{j})")
            seen_pairs.add((i, j))
            couplings.append((i, j, _parse_value(parts[3], lineno, source)))
        elif kind == "h":
            if len(parts) != 3:
                raise ProblemFormatError(f"{source}:{lineno}: expected 'h <i> <value>', got {line!r}")
            i = _parse_index(parts[1], n, lineno, source)
            if i in h_entries:
                raise ProblemFormatError(f"{source}:{lineno}: duplicate field entry for spin {i}")
            h_entries[i] = _parse_value(parts[2], lineno, source)
        else:
            raise ProblemFormatError(f"{source}:{lineno}: unknown record type {kind!r}")
    if n is None:
        raise ProblemFormatError(f"{source}: empty problem file (missing 'ising <n>' header)")
    h = np.zeros(n)
    for i, v in h_entries.items():
        h[i] = v
    return IsingProblem(n, couplings, h)


def load_problem(path: str) -> IsingProblem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read(), source=str(path))


def format_problem(problem: IsingProblem) -> str:
    """Canonical text form: sorted couplings, then nonzero fields."""
    lines = [f"ising {problem.n}"]
    for i, j, v in zip(problem.rows, problem.cols, problem.vals):
        lines.append(f"J {int(i)} {int(j)} {float(v)!r}")
    for i in np.flatnonzero(problem.h):
        lines.append(f"h {int(i)} {float(problem.h[i])!r}")
    return "\n".join(lines) + "\n"


def save_problem(problem: IsingProblem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_problem(problem))
