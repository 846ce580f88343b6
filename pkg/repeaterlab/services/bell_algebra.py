import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class BellDiagonal:
    """
    Bell-diagonal two-qubit state a|phi+><phi+| + b|phi-><phi-| + c|psi+><psi+| + d|psi-><psi-|.

    Lower-bound operations scale only the leading coefficient, so their
    outputs may sum to less than one; everything else stays normalized.
    """
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        coefficients = (self.a, self.b, self.c, self.d)
        if any(not np.isfinite(x) for x in coefficients):
            raise ValueError(f"Bell coefficients must be finite, got {coefficients}.")
        if min(coefficients) < -NORMALIZATION_TOL:
            raise ValueError(f"Bell coefficients must be non-negative, got {coefficients}.")
        if sum(coefficients) > 1 + NORMALIZATION_TOL:
            raise ValueError(f"Bell coefficients sum to {sum(coefficients)} > 1.")

    @classmethod
    def from_fidelity(cls, F):
        # Pair as delivered by the channel: only phase-flip noise
        return cls(F, 1.0 - F, 0.0, 0.0)

    @classmethod
    def from_array(cls, values):
        a, b, c, d = (float(v) for v in values)
        return cls(a, b, c, d)

    @property
    def fidelity(self):
        return self.a

    @property
    def total(self):
        return self.a + self.b + self.c + self.d

    @property
    def is_normalized(self):
        return abs(self.total - 1.0) <= NORMALIZATION_TOL

    def as_array(self):
        return np.array([self.a, self.b, self.c, self.d])


@dataclass(frozen=True)
class PurifyOutcome:
    state: BellDiagonal
    success_prob: float

    def __post_init__(self):
        if not -NORMALIZATION_TOL <= self.success_prob <= 1 + NORMALIZATION_TOL:
            raise ValueError(f"Success probability {self.success_prob} outside [0, 1].")


# =========================================
# 1. Ideal Purification
# =========================================
def purify_ideal(s):
    """
    One round of two-pair purification with perfect local operations.

    Parameters:
    - s (BellDiagonal): State of each of the two input pairs.
    Returns:
    - PurifyOutcome: Normalized output state and the success probability
      P = (A + D)^2 + (B + C)^2.
    Raises:
    - RuntimeError: If the success probability vanishes.
    """
    A, B, C, D = s.a, s.b, s.c, s.d
    P = (A + D) ** 2 + (B + C) ** 2
    if P <= 0:
        logger.error(f"Error purifying {s}: zero success probability")
        raise RuntimeError("Failed to purify: zero success probability")
    state = BellDiagonal(
        (A**2 + D**2) / P,
        2 * A * D / P,
        (B**2 + C**2) / P,
        2 * B * C / P,
    )
    return PurifyOutcome(state, P)


# =========================================
# 2. Ideal Entanglement Swapping
# =========================================
def swap_ideal(s):
    """
    Deterministic swap of two identical adjacent pairs.

    Parameters:
    - s (BellDiagonal): State of both connected pairs.
    Returns:
    - BellDiagonal: State of the joined pair.
    """
    A, B, C, D = s.a, s.b, s.c, s.d
    return BellDiagonal(
        A**2 + B**2 + C**2 + D**2,
        2 * (A * B + C * D),
        2 * (A * C + B * D),
        2 * (B * C + A * D),
    )


# =========================================
# 3. Exact Purification With Gate Errors
# =========================================
def purify_imperfect_exact(s, q_g):
    """
    One purification round where each CNOT suffers the two-qubit Z-error
    channel with per-qubit probability q_g.

    The expressions are kept in their published expanded form.

    Parameters:
    - s (BellDiagonal): State of each of the two input pairs.
    - q_g (float): Gate error probability in [0, 1/2).
    Returns:
    - PurifyOutcome: Normalized output state and success probability.
    Raises:
    - ValueError: If q_g is outside [0, 1/2).
    - RuntimeError: If the success probability vanishes.
    """
    if not 0 <= q_g < 0.5:
        raise ValueError(f"Gate error probability must lie in [0, 1/2), got {q_g}.")
    A, B, C, D = s.a, s.b, s.c, s.d
    q = q_g

    P = (B + C) ** 2 + (A + D) ** 2 - 2 * (A - B - C + D) ** 2 * q + 2 * (A - B - C + D) ** 2 * q**2
    if P <= 0:
        logger.error(f"Error purifying {s} at q_g={q_g}: zero success probability")
        raise RuntimeError("Failed to purify: zero success probability")

    a_num = (
        D**2 + A**2 * (1 + 2 * (-1 + q) * q) ** 2
        - 2 * A * (-1 + q) * q * (C + 2 * D + 2 * (B - C - 2 * D) * q + 2 * (-B + C + 2 * D) * q**2)
        - 2 * D * (-1 + q) * q * (-2 * D - 2 * (C + D) * (-1 + q) * q + B * (1 + 2 * (-1 + q) * q))
    )
    b_num = (
        -2 * D * (-1 + q) * q * (C + D - 2 * (-B + C + D) * q + 2 * (-B + C + D) * q**2)
        + 2 * A**2 * q * (1 + q * (-3 - 2 * (-2 + q) * q))
        + 2 * A * (D * (1 + 2 * (-1 + q) * q) ** 2
                   - (-1 + q) * q * (-2 * C * (-1 + q) * q + B * (1 + 2 * (-1 + q) * q)))
    )
    c_num = (
        C**2 + B**2 * (1 + 2 * (-1 + q) * q) ** 2
        - 2 * C * (-1 + q) * q * (-2 * C - 2 * (C + D) * (-1 + q) * q + A * (1 + 2 * (-1 + q) * q))
        - 2 * B * (-1 + q) * q * (-2 * A * (-1 + q) * q + D * (1 + 2 * (-1 + q) * q)
                                  + C * (2 + 4 * (-1 + q) * q))
    )
    d_num = (
        -2 * C * (-1 + q) * q * (C + D - 2 * (-A + C + D) * q + 2 * (-A + C + D) * q**2)
        + 2 * B**2 * q * (1 + q * (-3 - 2 * (-2 + q) * q))
        + 2 * B * (C * (1 + 2 * (-1 + q) * q) ** 2
                   - (-1 + q) * q * (-2 * D * (-1 + q) * q + A * (1 + 2 * (-1 + q) * q)))
    )
    state = BellDiagonal(a_num / P, b_num / P, c_num / P, d_num / P)
    return PurifyOutcome(state, P)


# =========================================
# 4. Worst-Case Bounds
# =========================================
def purify_lower_bound(s, q_g, n):
    """
    Purification with every gate failure counted against the leading
    coefficient: both P and A' pick up (1 - q_g)^(4n).

    Parameters:
    - s (BellDiagonal): Input pair state.
    - q_g (float): Gate error probability.
    - n (int): Physical qubits per encoded block.
    Returns:
    - PurifyOutcome: Sub-normalized state and the lower-bound success probability.
    """
    if n < 1:
        raise ValueError("Block size n must be at least 1.")
    ideal = purify_ideal(s)
    factor = (1.0 - q_g) ** (4 * n)
    state = BellDiagonal(ideal.state.a * factor, ideal.state.b, ideal.state.c, ideal.state.d)
    return PurifyOutcome(state, ideal.success_prob * factor)


def swap_lower_bound(s, q_g, n):
    """
    Parameters:
    - s (BellDiagonal): State of both connected pairs.
    - q_g (float): Gate error probability.
    - n (int): Physical qubits per encoded block.
    Returns:
    - BellDiagonal: swap_ideal(s) with the leading coefficient scaled by (1 - q_g)^(2n).
    """
    if n < 1:
        raise ValueError("Block size n must be at least 1.")
    ideal = swap_ideal(s)
    return BellDiagonal(ideal.a * (1.0 - q_g) ** (2 * n), ideal.b, ideal.c, ideal.d)


def purify_k_rounds_lower(s, q_g, n, k):
    """
    k nested purification rounds: ideal recursions for the state, all gate
    loss pushed into the success probability as (1 - q_g)^(4n(2^k - 1)).

    Parameters:
    - s (BellDiagonal): Initial pair state.
    - q_g (float): Gate error probability.
    - n (int): Physical qubits per encoded block.
    - k (int): Number of rounds (0 returns s unchanged with probability 1).
    Returns:
    - PurifyOutcome: State after k ideal rounds, chain success probability.
    """
    if k < 0:
        raise ValueError("Number of purification rounds must be non-negative.")
    if n < 1:
        raise ValueError("Block size n must be at least 1.")
    state, chain_prob = s, 1.0
    for _ in range(k):
        outcome = purify_ideal(state)
        state, chain_prob = outcome.state, chain_prob * outcome.success_prob
    return PurifyOutcome(state, chain_prob * (1.0 - q_g) ** (4 * n * (2**k - 1)))
