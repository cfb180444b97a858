import math

import numpy as np
import pytest

from relu_angle.dynamics import moments_of_R
from relu_angle.errors import AccuracyNotReached
from relu_angle.jfuncs import j_closed, phi_moment
from relu_angle.oracle import (
    CorrelatedPairSpec,
    adaptive_tensor_gl,
    j_quadrature,
    mc_expectation,
    mc_R_statistics,
    r_samples,
)


def relu(x):
    return np.maximum(x, 0.0)


class TestQuadrature:
    @pytest.mark.parametrize("theta", [0.01, 0.4, 1.0, math.pi / 2, 2.2, 3.0, 3.13])
    def test_matches_closed(self, theta):
        for a in range(5):
            for b in range(5):
                r = j_quadrature((a, b), theta)
                assert abs(r.estimate - j_closed((a, b), theta)) <= 1e-10
                assert r.abs_error_bound <= 1e-10

    def test_regression(self):
        # mpmath reference 5.0048137460747965...
        assert j_quadrature((4, 2), 0.7).estimate == pytest.approx(5.004813746074796, rel=1e-13)

    def test_endpoints(self):
        for k in range(7):
            assert j_quadrature((k, 0), 0.0).estimate == pytest.approx(phi_moment(k) if k else 0.5, rel=1e-11)
        assert j_quadrature((3, 2), 0.0).estimate == pytest.approx(phi_moment(5), rel=1e-11)
        assert j_quadrature((2, 2), math.pi).estimate == 0.0

    def test_independence(self):
        assert j_quadrature((2, 2), math.pi / 2).estimate == pytest.approx(0.25, abs=1e-12)

    def test_symmetry(self):
        assert j_quadrature((3, 1), 1.1).estimate == pytest.approx(j_quadrature((1, 3), 1.1).estimate, abs=1e-12)

    def test_budget(self):
        with pytest.raises(AccuracyNotReached) as info:
            j_quadrature((4, 4), 1.0, target_abs_err=1e-14, max_nodes=2000)
        assert info.value.bound > 1e-14

    def test_bad_input(self):
        with pytest.raises(ValueError):
            j_quadrature((1, 1), -0.1)
        with pytest.raises(ValueError):
            j_quadrature((-1, 1), 1.0)

    def test_generic_integrator(self):
        est, err = adaptive_tensor_gl(lambda u, x: np.exp(u) * np.cos(x) + 0 * u, (0, 1), (0, 2), 1e-12)
        assert est == pytest.approx((math.e - 1) * math.sin(2), abs=1e-12)


class TestMonteCarlo:
    def test_spec(self):
        spec = CorrelatedPairSpec(1.0)
        assert spec.correlation == pytest.approx(math.cos(1.0))
        with pytest.raises(ValueError):
            CorrelatedPairSpec(4.0)

    @pytest.mark.parametrize("idx", [(1, 1), (2, 2), (3, 1)])
    def test_unbiased(self, idx):
        a, b = idx
        spec = CorrelatedPairSpec(0.8, seed=11, samples=400_000)
        r = mc_expectation(lambda g, h: relu(g) ** a * relu(h) ** b, spec)
        assert abs(r.estimate - j_closed(idx, 0.8)) <= 4 * r.std_error

    def test_correlation_built_in(self):
        spec = CorrelatedPairSpec(0.5, seed=1, samples=200_000)
        r = mc_expectation(lambda g, h: g * h, spec)
        assert abs(r.estimate - math.cos(0.5)) <= 4 * r.std_error

    def test_deterministic(self):
        spec = CorrelatedPairSpec(0.5, seed=4, samples=70_000)
        f = lambda g, h: relu(g) * relu(h)
        assert mc_expectation(f, spec) == mc_expectation(f, spec)

    def test_r_samples_shapes_and_seed(self):
        r1, s1 = r_samples(0.3, 4, 50, seed=2)
        r2, s2 = r_samples(0.3, 4, 50, seed=2)
        assert r1.shape == (50,)
        np.testing.assert_array_equal(r1, r2)
        np.testing.assert_array_equal(s1, s2)
        assert np.all(s1 >= 0)

    def test_r_statistics_small(self):
        stats = mc_R_statistics(0.5, 4, 100_000, seed=5)
        exact = moments_of_R(0.5, 4).as_dict()
        for key, val in stats.values().items():
            assert abs(val - exact[key]) <= 4 * stats.errors()[key], key
