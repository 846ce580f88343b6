import logging
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, erfcinv

from repeaterlab.config import Config

logger = logging.getLogger(__name__)

PHASE_TOL = 1e-9
MAX_ENUMERATED_QUBITS = 16


class QubusScheme(str, Enum):
    SINGLE = "single"
    CHAINED = "chained"


@dataclass(frozen=True)
class QubusPlan:
    """
    Phases picked up by the qubus(es) for every n-bit pattern, qubit 1 leftmost.

    For the single scheme per_state_phases maps pattern -> phase; for the
    chained scheme it is a tuple with one such map per qubus.
    """
    n: int
    theta_rad: float
    scheme: QubusScheme
    per_state_phases: object

    def __post_init__(self):
        maps = self.per_state_phases if self.scheme == QubusScheme.CHAINED else (self.per_state_phases,)
        for pattern in ("0" * self.n, "1" * self.n):
            if any(abs(phases[pattern]) > PHASE_TOL for phases in maps):
                raise ValueError(f"Codeword pattern {pattern} must stay unrotated.")

    @property
    def qubus_count(self):
        return len(self.per_state_phases) if self.scheme == QubusScheme.CHAINED else 1


class Feasibility(NamedTuple):
    feasible: bool
    max_phase: float
    collisions: tuple


def _patterns(n):
    return ["".join(bits) for bits in product("01", repeat=n)]


def _check_size(n, theta):
    if n < 2:
        raise ValueError(f"A qubus sequence needs at least 2 qubits, got {n}.")
    if theta <= 0:
        raise ValueError(f"Interaction angle must be positive, got {theta}.")


def single_qubus_coefficients(n):
    return [2 ** (j - 1) for j in range(1, n)] + [-(2 ** (n - 1) - 1)]


# =========================================
# 1. Single Qubus Scheme
# =========================================
def single_qubus_phases(n, theta):
    """
    Phase table of the sequence U^1(theta) U^2(2 theta) ... U^n(-(2^(n-1) - 1) theta).

    A qubit in |1> contributes -c_j theta relative to |0>, so the codeword
    patterns 0...0 and 1...1 both stay at phase 0.

    Parameters:
    - n (int): Qubits in the block (>= 2).
    - theta (float): Elementary rotation angle in rad.
    Returns:
    - QubusPlan: The single-scheme phase table.
    """
    _check_size(n, theta)
    coefficients = np.array(single_qubus_coefficients(n))
    phases = {}
    for pattern in _patterns(n):
        bits = np.array([int(b) for b in pattern])
        phases[pattern] = float(-theta * (coefficients @ bits))
    return QubusPlan(n, theta, QubusScheme.SINGLE, phases)


def _wrapped_collisions(phases):
    # Adjacent entries after sorting on the circle, including the wrap-around pair
    items = sorted(phases.items(), key=lambda item: item[1] % (2 * np.pi))
    wrapped = [phase % (2 * np.pi) for _, phase in items]
    collisions = []
    for i in range(len(items)):
        j = (i + 1) % len(items)
        gap = (wrapped[j] - wrapped[i]) % (2 * np.pi)
        if i != j and min(gap, 2 * np.pi - gap) < PHASE_TOL:
            collisions.append((items[i][0], items[j][0]))
    return collisions


# =========================================
# 2. Feasibility
# =========================================
def feasibility(n, theta):
    """
    The single scheme works while (2^(n-1) - 1) theta <= pi and the
    non-codeword patterns keep distinct phases modulo 2 pi.

    Parameters:
    - n (int): Qubits in the block.
    - theta (float): Elementary rotation angle in rad.
    Returns:
    - Feasibility: Verdict, the largest accumulated phase and any colliding pattern pairs.
    """
    _check_size(n, theta)
    max_phase = (2 ** (n - 1) - 1) * theta
    if n <= MAX_ENUMERATED_QUBITS:
        phases = dict(single_qubus_phases(n, theta).per_state_phases)
        del phases["1" * n]
        collisions = _wrapped_collisions(phases)
    elif max_phase <= np.pi + PHASE_TOL:
        # Phase differences are integer multiples of theta up to 2 max_phase
        extreme = ("0" * (n - 1) + "1", "1" * (n - 1) + "0")
        collisions = [extreme] if abs(max_phase - np.pi) < PHASE_TOL else []
    else:
        collisions = []
    feasible = max_phase <= np.pi + PHASE_TOL and not collisions
    if not feasible:
        logger.info(f"Single qubus infeasible for n={n}, theta={theta}: max phase {max_phase / np.pi:.3f} pi")
    return Feasibility(feasible, float(max_phase), tuple(collisions))


# =========================================
# 3. Chained Qubus Scheme
# =========================================
def chained_qubus_phases(n, theta):
    """
    n - 1 qubuses, qubus j coupling qubits j and j + 1 with alternating
    +theta/2 and -theta/2 rotations. Each qubus sees 0 for equal adjacent
    bits and +-theta otherwise.

    Returns:
    - QubusPlan: One phase map per qubus.
    """
    _check_size(n, theta)
    signs = [(-1) ** i for i in range(n)]
    maps = tuple({} for _ in range(n - 1))
    for pattern in _patterns(n):
        spins = [1 - 2 * int(b) for b in pattern]
        for j in range(n - 1):
            maps[j][pattern] = theta / 2 * (signs[j] * spins[j] + signs[j + 1] * spins[j + 1])
    return QubusPlan(n, theta, QubusScheme.CHAINED, maps)


# =========================================
# 4. Homodyne Discrimination
# =========================================
def homodyne_error(beta, theta):
    """
    Midpoint x-quadrature error between |beta> and |beta e^(+-i theta)>.

    Parameters:
    - beta (float): Coherent-state amplitude (> 0).
    - theta (float): Phase rotation in rad.
    Returns:
    - float: (1/2) erfc(beta (1 - cos theta) / (2 sigma sqrt 2)), sigma^2 the quadrature variance.
    """
    if beta <= 0:
        raise ValueError(f"Coherent-state amplitude must be positive, got {beta}.")
    sigma = np.sqrt(Config.QUADRATURE_VARIANCE)
    separation = beta * 2.0 * np.sin(theta / 2.0) ** 2
    return float(0.5 * erfc(separation / (2.0 * sigma * np.sqrt(2.0))))


def min_beta(theta, target):
    """
    Smallest coherent-state amplitude with homodyne_error(beta, theta) <= target,
    from the closed-form inverse of erfc.

    Raises:
    - ValueError: If target is outside (0, 1/2) or theta outside (0, pi].
    """
    if not 0 < target < 0.5:
        raise ValueError(f"Target error must lie in (0, 1/2), got {target}.")
    if not 0 < theta <= np.pi:
        raise ValueError(f"Interaction angle must lie in (0, pi], got {theta}.")
    sigma = np.sqrt(Config.QUADRATURE_VARIANCE)
    return float(2.0 * sigma * np.sqrt(2.0) * erfcinv(2.0 * target) / (2.0 * np.sin(theta / 2.0) ** 2))
