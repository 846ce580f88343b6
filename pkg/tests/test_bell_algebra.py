from unittest.mock import patch

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repeaterlab.services import bell_algebra
from repeaterlab.services.bell_algebra import BellDiagonal
from repeaterlab.services.core import gate_error_prob

Q_G = gate_error_prob(0.999)

bell_states = st.tuples(*[st.floats(min_value=1e-3, max_value=1.0)] * 4).map(
    lambda weights: BellDiagonal.from_array(np.array(weights) / sum(weights))
)


def random_states(seed, count):
    weights = np.random.default_rng(seed).dirichlet(np.ones(4), size=count)
    return [BellDiagonal.from_array(w) for w in weights]

# -----------------------------------------------
# 1. Bell-Diagonal State
# -----------------------------------------------
def test_bell_diagonal_from_fidelity():
    s = BellDiagonal.from_fidelity(0.9)
    assert (s.a, s.b, s.c, s.d) == (0.9, pytest.approx(0.1), 0.0, 0.0)
    assert s.fidelity == 0.9
    assert s.is_normalized

@pytest.mark.parametrize("coefficients", [
    (0.5, 0.5, 0.1, 0.0),      # sums above one
    (1.1, -0.1, 0.0, 0.0),     # negative entry
    (float("nan"), 0.0, 0.0, 0.0),
])
def test_bell_diagonal_rejects_invalid(coefficients):
    with pytest.raises(ValueError):
        BellDiagonal(*coefficients)

def test_bell_diagonal_allows_subnormalized():
    s = BellDiagonal(0.7, 0.1, 0.0, 0.0)
    assert not s.is_normalized
    assert s.total == pytest.approx(0.8)

# -----------------------------------------------
# 2. Ideal Purification and Swapping
# -----------------------------------------------
def test_purify_ideal_example():
    outcome = bell_algebra.purify_ideal(BellDiagonal(0.9, 0.1, 0.0, 0.0))
    assert outcome.success_prob == pytest.approx(0.82)
    assert outcome.state.as_array() == pytest.approx([0.987805, 0.0, 0.012195, 0.0], abs=1e-6)

def test_purify_ideal_zero_success_probability():
    with patch("repeaterlab.services.bell_algebra.logger") as mock_logger:
        with pytest.raises(RuntimeError) as exc_info:
            bell_algebra.purify_ideal(BellDiagonal(0.0, 0.0, 0.0, 0.0))
        assert "Failed to purify" in str(exc_info.value)
        error_calls = [call for call in mock_logger.error.call_args_list if "zero success probability" in str(call)]
        assert len(error_calls) > 0

def test_perfect_pair_is_a_fixed_point():
    perfect = BellDiagonal(1.0, 0.0, 0.0, 0.0)
    outcome = bell_algebra.purify_ideal(perfect)
    assert outcome.state == perfect
    assert outcome.success_prob == 1.0
    assert bell_algebra.swap_ideal(perfect) == perfect

def test_swap_ideal_example():
    s = bell_algebra.swap_ideal(BellDiagonal(0.82, 0.18, 0.0, 0.0))
    assert s.as_array() == pytest.approx([0.7048, 0.2952, 0.0, 0.0])

def test_ideal_operations_normalized_on_random_states():
    # 4000 states x 3 operations
    for s in random_states(7, 4000):
        assert bell_algebra.purify_ideal(s).state.total == pytest.approx(1.0, abs=1e-12)
        assert bell_algebra.swap_ideal(s).total == pytest.approx(1.0, abs=1e-12)
        assert bell_algebra.purify_imperfect_exact(s, Q_G).state.total == pytest.approx(1.0, abs=1e-12)

@settings(max_examples=1000, deadline=None)
@given(s=bell_states, q=st.floats(min_value=0.0, max_value=0.1))
def test_imperfect_purification_normalized(s, q):
    outcome = bell_algebra.purify_imperfect_exact(s, q)
    assert outcome.state.total == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= outcome.success_prob <= 1.0

# -----------------------------------------------
# 3. Exact Purification With Gate Errors
# -----------------------------------------------
def test_imperfect_purification_reduces_to_ideal():
    for s in random_states(11, 200):
        exact = bell_algebra.purify_imperfect_exact(s, 0.0)
        ideal = bell_algebra.purify_ideal(s)
        assert exact.state.as_array() == pytest.approx(ideal.state.as_array(), abs=1e-14)
        assert exact.success_prob == pytest.approx(ideal.success_prob, abs=1e-14)

def test_imperfect_purification_linear_in_small_q():
    # Finite-difference slopes at 1e-6 and 1e-5 agree
    for s in random_states(13, 50):
        ideal = bell_algebra.purify_ideal(s).state.as_array()
        slopes = [
            (bell_algebra.purify_imperfect_exact(s, q).state.as_array() - ideal) / q
            for q in (1e-6, 1e-5)
        ]
        assert np.allclose(slopes[0], slopes[1], atol=1e-3)

@pytest.mark.parametrize("q_g", [-0.1, 0.5, 0.7])
def test_imperfect_purification_rejects_q(q_g):
    with pytest.raises(ValueError) as exc_info:
        bell_algebra.purify_imperfect_exact(BellDiagonal.from_fidelity(0.9), q_g)
    assert "Gate error probability" in str(exc_info.value)

def test_gate_errors_lower_the_output_fidelity():
    s = BellDiagonal.from_fidelity(0.95)
    ideal = bell_algebra.purify_ideal(s)
    noisy = bell_algebra.purify_imperfect_exact(s, 1e-2)
    assert noisy.state.a < ideal.state.a

# -----------------------------------------------
# 4. Worst-Case Bounds
# -----------------------------------------------
def test_purify_lower_bound_example():
    outcome = bell_algebra.purify_lower_bound(BellDiagonal(0.9, 0.1, 0.0, 0.0), Q_G, 3)
    assert outcome.success_prob == pytest.approx(0.81231, abs=1e-5)
    assert outcome.state.a == pytest.approx(0.97854, abs=1e-5)
    assert outcome.state.b == 0.0

def test_swap_lower_bound_example():
    s = bell_algebra.swap_lower_bound(BellDiagonal(0.82, 0.18, 0.0, 0.0), Q_G, 3)
    assert s.a == pytest.approx(0.70149, abs=1e-5)
    assert s.b == pytest.approx(0.2952)

def test_bounds_reject_empty_blocks():
    with pytest.raises(ValueError):
        bell_algebra.purify_lower_bound(BellDiagonal.from_fidelity(0.9), Q_G, 0)
    with pytest.raises(ValueError):
        bell_algebra.swap_lower_bound(BellDiagonal.from_fidelity(0.9), Q_G, 0)

def test_lower_bound_below_exact_on_restricted_domain():
    # A in [0.8, 1], B = 1 - A, C = D = 0, q_g <= 1e-3
    for A in np.linspace(0.8, 1.0, 201):
        s = BellDiagonal(A, 1.0 - A, 0.0, 0.0)
        for q in (0.0, 1e-6, 1e-5, 1e-4, 5e-4, 1e-3):
            lower = bell_algebra.purify_lower_bound(s, q, 1)
            exact = bell_algebra.purify_imperfect_exact(s, q)
            assert lower.success_prob <= exact.success_prob + 1e-15
            assert lower.state.a <= exact.state.a + 1e-15

def test_k_rounds_composition():
    s = BellDiagonal(0.9, 0.05, 0.03, 0.02)
    unchanged = bell_algebra.purify_k_rounds_lower(s, Q_G, 3, 0)
    assert unchanged.state == s
    assert unchanged.success_prob == 1.0

    first = bell_algebra.purify_ideal(s)
    second = bell_algebra.purify_ideal(first.state)
    two = bell_algebra.purify_k_rounds_lower(s, Q_G, 3, 2)
    assert two.state.as_array() == pytest.approx(second.state.as_array())
    expected = first.success_prob * second.success_prob * (1 - Q_G) ** (4 * 3 * 3)
    assert two.success_prob == pytest.approx(expected, rel=1e-12)

def test_k_rounds_rejects_negative_rounds():
    with pytest.raises(ValueError) as exc_info:
        bell_algebra.purify_k_rounds_lower(BellDiagonal.from_fidelity(0.9), Q_G, 3, -1)
    assert "non-negative" in str(exc_info.value)
