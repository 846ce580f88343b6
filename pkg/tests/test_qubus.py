import math
from itertools import product

import numpy as np
import pytest

from repeaterlab.services import qubus
from repeaterlab.services.qubus import QubusPlan, QubusScheme

THETA = 0.01

# -----------------------------------------------
# 1. Single Qubus Scheme
# -----------------------------------------------
def test_single_qubus_coefficients():
    assert qubus.single_qubus_coefficients(3) == [1, 2, -3]
    assert qubus.single_qubus_coefficients(5) == [1, 2, 4, 8, -15]

def test_single_qubus_three_qubit_table():
    plan = qubus.single_qubus_phases(3, THETA)
    in_theta = {pattern: round(phase / THETA) for pattern, phase in plan.per_state_phases.items()}
    assert in_theta == {
        "000": 0, "001": 3, "010": -2, "011": 1,
        "100": -1, "101": 2, "110": -3, "111": 0,
    }
    assert plan.scheme == QubusScheme.SINGLE
    assert plan.qubus_count == 1

@pytest.mark.parametrize("n", range(2, 11))
def test_single_qubus_separates_non_codeword_patterns(n):
    theta = math.pi / 2**n
    verdict = qubus.feasibility(n, theta)
    assert verdict.feasible
    phases = qubus.single_qubus_phases(n, theta).per_state_phases
    distinct = {round(phase / theta) for pattern, phase in phases.items() if pattern != "1" * n}
    assert len(distinct) == 2**n - 1

def test_plan_rejects_rotated_codeword():
    with pytest.raises(ValueError) as exc_info:
        QubusPlan(2, THETA, QubusScheme.SINGLE, {"00": 0.0, "01": 0.01, "10": -0.01, "11": 0.02})
    assert "must stay unrotated" in str(exc_info.value)

def test_single_qubus_rejects_small_blocks():
    with pytest.raises(ValueError):
        qubus.single_qubus_phases(1, THETA)
    with pytest.raises(ValueError):
        qubus.single_qubus_phases(3, 0.0)

# -----------------------------------------------
# 2. Feasibility
# -----------------------------------------------
def test_eleven_qubit_block_is_infeasible():
    verdict = qubus.feasibility(11, THETA)
    assert not verdict.feasible
    assert 3.2 <= verdict.max_phase / math.pi <= 3.3

def test_three_qubit_block_is_feasible():
    verdict = qubus.feasibility(3, THETA)
    assert verdict.feasible
    assert verdict.max_phase == pytest.approx(3 * THETA)
    assert verdict.collisions == ()

def test_wrapped_phases_collide():
    # Max phase 3 * (2 pi / 3) = 2 pi, so 001 lands on 000
    verdict = qubus.feasibility(3, 2 * math.pi / 3)
    assert not verdict.feasible
    assert ("000", "001") in verdict.collisions or ("001", "000") in verdict.collisions

def test_feasibility_without_enumeration():
    assert qubus.feasibility(20, 1e-7).feasible
    assert not qubus.feasibility(20, 1e-3).feasible

# -----------------------------------------------
# 3. Chained Qubus Scheme
# -----------------------------------------------
def test_chained_phases_three_qubits():
    plan = qubus.chained_qubus_phases(3, THETA)
    assert plan.qubus_count == 2
    for phases in plan.per_state_phases:
        assert set(np.round(np.array(list(phases.values())) / THETA).astype(int)) <= {-1, 0, 1}

@pytest.mark.parametrize("n", range(2, 11))
def test_chained_phases_separate_patterns(n):
    plan = qubus.chained_qubus_phases(n, THETA)
    signatures = {}
    for pattern in ("".join(bits) for bits in product("01", repeat=n)):
        key = tuple(round(phases[pattern] / THETA) for phases in plan.per_state_phases)
        signatures.setdefault(key, []).append(pattern)
    merged = [patterns for patterns in signatures.values() if len(patterns) > 1]
    assert merged == [["0" * n, "1" * n]]

# -----------------------------------------------
# 4. Homodyne Discrimination
# -----------------------------------------------
def test_homodyne_error_at_quoted_amplitude():
    beta = 9 / THETA**2
    error = qubus.homodyne_error(beta, THETA)
    assert error < 1e-5
    assert error == pytest.approx(3.4e-6, rel=0.1)

def test_homodyne_error_small_amplitude():
    assert qubus.homodyne_error(1 / THETA**2, THETA) > 0.2

def test_homodyne_error_decreasing():
    betas = np.logspace(2, 6, 50)
    errors = [qubus.homodyne_error(b, THETA) for b in betas]
    assert all(x >= y for x, y in zip(errors, errors[1:]))
    thetas = np.linspace(1e-3, math.pi / 2, 50)
    errors = [qubus.homodyne_error(1e4, t) for t in thetas]
    assert all(x >= y for x, y in zip(errors, errors[1:]))

def test_homodyne_error_rejects_bad_amplitude():
    with pytest.raises(ValueError):
        qubus.homodyne_error(0.0, THETA)

def test_min_beta_inverts_homodyne_error():
    beta = qubus.min_beta(THETA, 1e-5)
    assert beta == pytest.approx(85_300, rel=0.01)
    assert qubus.homodyne_error(beta, THETA) == pytest.approx(1e-5, rel=1e-8)
    assert qubus.homodyne_error(0.99 * beta, THETA) > 1e-5

@pytest.mark.parametrize("theta, target", [(THETA, 0.5), (THETA, 0.0), (4.0, 1e-5)])
def test_min_beta_rejects_out_of_range(theta, target):
    with pytest.raises(ValueError):
        qubus.min_beta(theta, target)
