import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phia.model import (
    IsingProblem,
    ProblemFormatError,
    as_spins,
    boltzmann_weight,
    energy,
    flip_delta,
    format_problem,
    load_problem,
    parse_problem,
    save_problem,
)

from conftest import random_problem, random_spins


def reference_energy(problem: IsingProblem, s) -> float:
    """Independent pairwise-loop oracle, written before the vectorized path."""
    total = 0.0
    for i, j, v in zip(problem.rows, problem.cols, problem.vals):
        total -= v * s[i] * s[j]
    for i in range(problem.n):
        total -= problem.h[i] * s[i]
    return total


class TestConstruction:
    def test_rejects_n_zero(self):
        with pytest.raises(ValueError):
            IsingProblem(0)

    def test_rejects_self_coupling(self):
        with pytest.raises(ValueError, match="self-coupling"):
            IsingProblem(3, [(1, 1, 2.0)])

    def test_rejects_duplicate_pair(self):
        with pytest.raises(ValueError, match="duplicate"):
            IsingProblem(3, [(0, 1, 1.0), (0, 1, 2.0)])

    def test_rejects_reversed_indices(self):
        with pytest.raises(ValueError):
            IsingProblem(3, [(2, 0, 1.0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            IsingProblem(3, [(0, 3, 1.0)])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            IsingProblem(2, [(0, 1, math.inf)])
        with pytest.raises(ValueError):
            IsingProblem(2, fields=[0.0, math.nan])

    def test_coupling_order_is_canonical(self):
        a = IsingProblem(4, [(0, 1, 1.0), (2, 3, 2.0), (0, 3, 3.0)])
        b = IsingProblem(4, [(0, 3, 3.0), (0, 1, 1.0), (2, 3, 2.0)])
        s = random_spins(4, 7)
        assert energy(a, s) == energy(b, s)
        assert np.array_equal(a.rows, b.rows)
        assert np.array_equal(a.vals, b.vals)


class TestEnergy:
    def test_single_spin_field(self):
        p = IsingProblem(1, [], [1.0])
        assert energy(p, [1.0]) == -1.0

    def test_two_spin_coupling(self):
        p = IsingProblem(2, [(0, 1, 1.0)])
        assert energy(p, [1.0, 1.0]) == -1.0

    def test_three_spin_oracle_value(self, small_problem):
        # frozen from the independent oracle evaluation
        assert energy(small_problem, [1.0, -1.0, 1.0]) == 4.0

    def test_matches_reference_on_random_instances(self):
        for seed in range(5):
            p = random_problem(10, seed, density=0.6)
            s = random_spins(10, seed + 100)
            assert energy(p, s) == pytest.approx(reference_energy(p, s), rel=1e-12)

    def test_dimension_mismatch(self, small_problem):
        with pytest.raises(ValueError):
            energy(small_problem, [1.0, 1.0])

    def test_spin_inversion_symmetry_without_fields(self):
        for seed in range(5):
            p = random_problem(8, seed, with_fields=False)
            s = random_spins(8, seed)
            assert energy(p, s) == energy(p, -s)


class TestFlipDelta:
    def test_single_spin(self):
        p = IsingProblem(1, [], [1.0])
        assert flip_delta(p, np.array([1.0]), 0) == 2.0

    def test_two_spin(self):
        p = IsingProblem(2, [(0, 1, 1.0)])
        assert flip_delta(p, np.array([1.0, 1.0]), 0) == 2.0

    def test_matches_full_reevaluation(self):
        p = random_problem(10, 3, density=0.7)
        s = random_spins(10, 4)
        for i in range(10):
            flipped = s.copy()
            flipped[i] = -flipped[i]
            expected = energy(p, flipped) - energy(p, s)
            assert flip_delta(p, s, i) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_index_out_of_range(self, small_problem):
        with pytest.raises(IndexError):
            flip_delta(small_problem, np.ones(3), 3)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_consistency_property(self, seed):
        p = random_problem(6, seed % 1000, density=0.8)
        s = random_spins(6, seed % 997)
        i = seed % 6
        flipped = s.copy()
        flipped[i] = -flipped[i]
        assert energy(p, flipped) == pytest.approx(energy(p, s) + flip_delta(p, s, i), rel=1e-12, abs=1e-12)


class TestBoltzmannWeight:
    def test_zero_energy(self):
        assert boltzmann_weight(0.0, 5.0) == 1.0

    def test_infinite_temperature(self):
        assert boltzmann_weight(1.0, 0.0) == 1.0

    def test_analytic_value(self):
        assert boltzmann_weight(2.0, 0.5) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_overflow_saturates(self):
        assert boltzmann_weight(-1e6, 1e6) == sys.float_info.max

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            boltzmann_weight(1.0, -0.1)


class TestSpinValidation:
    def test_accepts_pm_one(self):
        s = as_spins([1, -1, 1])
        assert s.dtype == np.float64

    def test_rejects_other_values(self):
        with pytest.raises(ValueError):
            as_spins([1.0, 0.5, -1.0])

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            as_spins([1.0, -1.0], n=3)


class TestFileFormat:
    def test_round_trip(self, tmp_path, small_problem):
        path = tmp_path / "toy.ising"
        save_problem(small_problem, str(path))
        loaded = load_problem(str(path))
        assert loaded.n == small_problem.n
        assert np.array_equal(loaded.vals, small_problem.vals)
        assert np.array_equal(loaded.h, small_problem.h)
        # canonical files round-trip byte-identically
        save_problem(loaded, str(tmp_path / "again.ising"))
        assert (tmp_path / "toy.ising").read_bytes() == (tmp_path / "again.ising").read_bytes()

    def test_comments_and_blanks(self):
        text = "# a toy instance\nising 2\n\nJ 0 1 0.5  # coupling\nh 1 -2\n"
        p = parse_problem(text)
        assert p.n == 2
        assert p.vals.tolist() == [0.5]
        assert p.h.tolist() == [0.0, -2.0]

    def test_duplicate_pair_names_line(self):
        text = "ising 2\nJ 0 1 1\nJ 0 1 2\n"
        with pytest.raises(ProblemFormatError, match=":3:"):
            parse_problem(text)

    def test_duplicate_field_names_line(self):
        text = "ising 2\nh 0 1\nh 0 2\n"
        with pytest.raises(ProblemFormatError, match=":3:"):
            parse_problem(text)

    def test_self_coupling_rejected(self):
        with pytest.raises(ProblemFormatError, match="self-coupling"):
            parse_problem("ising 2\nJ 1 1 1\n")

    def test_index_out_of_range(self):
        with pytest.raises(ProblemFormatError, match="out of range"):
            parse_problem("ising 2\nJ 0 2 1\n")

    def test_non_finite_value(self):
        with pytest.raises(ProblemFormatError, match="non-finite"):
            parse_problem("ising 2\nJ 0 1 inf\n")

    def test_missing_header(self):
        with pytest.raises(ProblemFormatError, match="header"):
            parse_problem("J 0 1 1\n")

    def test_unknown_record(self):
        with pytest.raises(ProblemFormatError, match="unknown record"):
            parse_problem("ising 2\nQ 0 1 1\n")

    def test_fractional_values_parse(self):
        p = parse_problem("ising 2\nJ 0 1 0.333333333333\n")
        assert p.vals[0] == 0.333333333333

    def test_format_uses_roundtrippable_reprs(self, small_problem):
        text = format_problem(small_problem)
        reparsed = parse_problem(text)
        assert np.array_equal(reparsed.vals, small_problem.vals)
        assert np.array_equal(reparsed.h, small_problem.h)


class TestAdjacency:
    def test_degree_and_matvec(self):
        p = random_problem(12, 5, density=0.4)
        J = p.dense_couplings()
        s = random_spins(12, 6)
        assert np.allclose(p.sym_matvec(s), J @ s)
        for i in range(12):
            assert p.degree(i) == int(np.count_nonzero(J[i]))

    def test_local_field(self):
        p = random_problem(9, 8, density=0.5)
        s = random_spins(9, 9)
        assert np.allclose(p.local_field(s), p.dense_couplings() @ s + p.h)
