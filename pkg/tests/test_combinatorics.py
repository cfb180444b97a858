import math
from itertools import product

import numpy as np
import pytest

from relu_angle.bessel import bessel_P, bessel_Q
from relu_angle.combinatorics import (
    _entries_cov,
    _j_values,
    canonical_pattern,
    count_irreducible,
    expected_J_weight,
    irreducible_polynomial,
    is_reducible,
    is_source,
    monomial_pattern_values,
    monomial_sum,
    path_weight_sum,
    pattern_table_check,
    table_sum,
)
from relu_angle.errors import BudgetExceeded
from relu_angle.jfuncs import j_closed


class TestPathSums:
    def test_figure_constants(self):
        assert [path_weight_sum("J*", (0, n), (6, 8)) for n in (8, 6, 4, 2)] == \
            [{0: 15}, {0: 45}, {0: 15}, {0: 1}]
        assert [path_weight_sum("J*", (1, n), (6, 8)) for n in (7, 5, 3)] == [{0: 33}, {0: 14}, {0: 1}]

    def test_naive_matches_memo(self):
        for scheme in ("J", "J*", "P", "Q"):
            for a in range(0, 8):
                for b in range(0, 9):
                    for src in [(0, 0), (0, 2), (1, 1), (1, 3)]:
                        assert path_weight_sum(scheme, src, (a, b), naive=True) == \
                            path_weight_sum(scheme, src, (a, b))

    def test_star_graph_gives_bessel(self):
        for a in range(1, 9):
            for b in range(a, 13):
                for n in range(b + 1):
                    assert path_weight_sum("J*", (0, n), (a, b)).get(0, 0) == bessel_P(a, b - n)
                    assert path_weight_sum("J*", (1, n), (a, b)).get(0, 0) == bessel_Q(a - 1, b - n)

    def test_j_graph_weights(self):
        for a in range(2, 9):
            for b in range(a, 11):
                for n in range(b + 1):
                    for row in (0, 1):
                        assert path_weight_sum("J", (row, n), (a, b)) == expected_J_weight((row, n), (a, b))

    def test_p_and_q_graphs_from_origin(self):
        # P(a, b) counts weighted paths from (0, 0); Q likewise from (0, 0)
        for a in range(0, 12):
            for b in range(a % 2, a + 1, 2):
                assert path_weight_sum("P", (0, 0), (a, b)).get(0, 0) == bessel_P(a, b)
                assert path_weight_sum("Q", (0, 0), (a, b)).get(0, 0) == bessel_Q(a, b)

    def test_unreachable_is_zero(self):
        assert path_weight_sum("J", (0, 5), (4, 3)) == {}
        assert path_weight_sum("J", (1, 0), (4, 4)) == {}  # parity of a mismatched

    def test_sources(self):
        for n in range(6):
            assert is_source("J", (0, n)) and is_source("J", (1, n))
            assert is_source("J*", (0, n))
        for a in range(2, 6):
            for b in range(1, 6):
                assert not is_source("J", (a, b))

    def test_lattice_bound(self):
        with pytest.raises(ValueError):
            path_weight_sum("J", (0, 0), (31, 31))
        with pytest.raises(ValueError):
            path_weight_sum("X", (0, 0), (2, 2))

    def test_acyclic(self):
        # every edge strictly increases a + b
        from relu_angle.combinatorics import _in_edges

        for scheme in ("J", "J*", "P", "Q"):
            for a in range(10):
                for b in range(10):
                    for (u, v), _, _ in _in_edges(scheme, a, b):
                        assert u + v < a + b

    def test_reconstruction_from_sources(self):
        theta = np.linspace(0.05, 3.1, 25)
        base = {}
        for n in range(7):
            base[0, n] = j_closed((0, n), theta)
            base[1, n] = j_closed((1, n), theta)
        c = np.cos(theta)
        for a in range(2, 7):
            for b in range(a, 7):
                total = np.zeros_like(theta)
                for row in (0, 1):
                    for n in range(b + 1):
                        for p, coeff in path_weight_sum("J", (row, n), (a, b)).items():
                            total += coeff * c ** p * base[row, n]
                ref = j_closed((a, b), theta)
                np.testing.assert_allclose(total, ref, rtol=1e-10, atol=1e-14)


def _naive_count(k, n):
    count = 0
    for t in product(range(n), repeat=2 * k):
        pairs = [set(t[2 * m:2 * m + 2]) for m in range(k)]
        if all(pairs[m] & set().union(*(pairs[o] for o in range(k) if o != m)) for m in range(k)):
            count += 1
    return count


class TestIrreducible:
    def test_two_points(self):
        assert count_irreducible(2, 3) == 63

    def test_three_points_at_six(self):
        assert count_irreducible(3, 6) == 20526

    def test_four_points_at_five(self):
        assert count_irreducible(4, 5) == 48 * 0 + 544 * 120 + 1268 * 120 + 844 * 60 + 123 * 20 + 5

    @pytest.mark.parametrize("k,n_max", [(2, 12), (3, 8), (4, 6)])
    def test_matches_polynomial(self, k, n_max):
        for n in range(1, n_max + 1):
            assert count_irreducible(k, n) == irreducible_polynomial(k, n)

    def test_against_plain_python(self):
        assert count_irreducible(3, 4) == _naive_count(3, 4)
        assert count_irreducible(2, 5) == _naive_count(2, 5)

    def test_budget(self):
        with pytest.raises(BudgetExceeded) as info:
            count_irreducible(4, 7, budget=1000)
        assert info.value.required == 7 ** 8


class TestPatterns:
    def test_canonical(self):
        assert canonical_pattern((5, 2, 5, 7)) == "abac"
        assert canonical_pattern((3, 3, 3, 3)) == "aaaa"
        assert is_reducible((0, 0, 1, 1)) and not is_reducible((0, 1, 1, 2))

    def test_eleven_irreducible_patterns(self):
        pats = {canonical_pattern(c) for c in product(range(4), repeat=4) if not is_reducible(c)}
        assert len(pats) == 11

    @pytest.mark.parametrize("table", ["var_R", "var_Rsin2", "cov"])
    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, math.pi / 2, 2.4, math.pi])
    def test_residual(self, table, theta):
        for n in range(2, 9):
            assert pattern_table_check(table, n, theta) <= 1e-10

    def test_examples(self):
        assert pattern_table_check("var_R", 4, 0.5) <= 1e-10
        assert pattern_table_check("cov", 5, math.pi / 2) <= 1e-10
        assert table_sum("var_Rsin2", 5, 0.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("table", ["var_R", "var_Rsin2", "cov"])
    def test_monomial_route_agrees(self, table):
        for theta in (0.2, 1.3, 2.9):
            for n in (2, 3, 5):
                assert monomial_sum(table, n, theta) == pytest.approx(table_sum(table, n, theta),
                                                                       rel=1e-12, abs=1e-14)

    def test_three_index_cov_rows(self):
        # the shared value of the two-index rows does not carry over to rows
        # with three distinct indices; the monomial expansion decides
        theta = 0.9
        J = _j_values(theta)
        rows = _entries_cov(J)
        for config in [(0, 1, 0, 2), (0, 1, 2, 0), (0, 1, 1, 2), (0, 1, 2, 1)]:
            e1, e2, e12 = monomial_pattern_values("cov", config, theta)
            np.testing.assert_allclose(rows[canonical_pattern(config)], (e1, e2, e12), rtol=1e-13)
            assert abs(e12 - (J[2, 2] ** 2 - 2 * J[3, 1] ** 2 + 2.25)) > 1e-3

    def test_bad_n(self):
        with pytest.raises(ValueError):
            pattern_table_check("var_R", 9, 0.5)
        with pytest.raises(ValueError):
            pattern_table_check("nope", 4, 0.5)
