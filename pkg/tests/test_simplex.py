import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phiregret.simplex import (
    as_loss_vector,
    as_prob_vector,
    as_stochastic_matrix,
    outer_product,
    stationary_distribution,
)


class TestProbVector:
    def test_valid(self):
        p = as_prob_vector([0.25, 0.75])
        assert np.allclose(p, [0.25, 0.75])

    def test_clamps_tiny_negative(self):
        p = as_prob_vector([1.0 + 5e-13, -5e-13])
        assert p.min() >= 0 and abs(p.sum() - 1) < 1e-12

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            as_prob_vector([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            as_prob_vector([1.5, -0.5])

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_prob_vector([np.nan, 1.0])


class TestLossVector:
    def test_range(self):
        np.testing.assert_array_equal(as_loss_vector([0.0, 1.0]), [0.0, 1.0])
        with pytest.raises(ValueError):
            as_loss_vector([0.0, 1.5])
        with pytest.raises(ValueError):
            as_loss_vector([-0.1, 0.5])


class TestStochasticMatrix:
    def test_valid(self):
        m = as_stochastic_matrix([[0.5, 0.5], [1.0, 0.0]])
        assert m.shape == (2, 2)

    def test_rejects_bad_row(self):
        with pytest.raises(ValueError):
            as_stochastic_matrix([[0.5, 0.6], [1.0, 0.0]])


class TestOuterProduct:
    def test_values(self):
        M = outer_product(np.array([0.25, 0.75]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(M, [[0.25, 0.0], [0.75, 0.0]])


class TestStationary:
    def test_periodic_two_cycle(self):
        # period-2 chain: the damped iteration still finds the invariant measure
        p = stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-8)

    def test_identity_gives_uniform(self):
        p = stationary_distribution(np.eye(4))
        np.testing.assert_allclose(p, np.full(4, 0.25), atol=1e-8)

    def test_two_state_analytic(self):
        # [[1-a, a], [b, 1-b]] has stationary [b, a] / (a + b)
        a, b = 0.3, 0.1
        p = stationary_distribution(np.array([[1 - a, a], [b, 1 - b]]))
        np.testing.assert_allclose(p, [b / (a + b), a / (a + b)], atol=1e-8)

    def test_absorbing_state(self):
        phi = np.array([[1.0, 0.0], [1.0, 0.0]])
        p = stationary_distribution(phi)
        np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-6)

    @settings(deadline=None, max_examples=40)
    @given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=2, max_value=8))
    def test_fixed_point_residual(self, seed, d):
        rng = np.random.default_rng(seed)
        phi = rng.dirichlet(np.ones(d), size=d)
        p = stationary_distribution(phi)
        assert p.min() >= 0
        assert abs(p.sum() - 1) < 1e-9
        assert np.abs(p - phi.T @ p).sum() < 1e-8

    def test_rejects_nonstochastic(self):
        with pytest.raises(ValueError):
            stationary_distribution(np.array([[0.5, 0.6], [0.5, 0.5]]))
