import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce
from itertools import product
from typing import NamedTuple

import numpy as np

from repeaterlab.services.bell_algebra import BellDiagonal, PurifyOutcome, purify_imperfect_exact

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_FLOOR = 1e-10
MAX_QUBITS = 4
MAX_ENUMERATED_QUBITS = 15
VARIANT_MATCH_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PROJECTORS = (np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex))

# phi+, phi-, psi+, psi- over |00>, |01>, |10>, |11>
BELL_VECTORS = np.array([
    [1, 0, 0, 1],
    [1, 0, 0, -1],
    [0, 1, 1, 0],
    [0, 1, -1, 0],
], dtype=complex) / np.sqrt(2)

# Local rotations opening a purification round, side A and side B
ROTATION_A = (I2 + 1j * X) / np.sqrt(2)
ROTATION_B = (I2 - 1j * X) / np.sqrt(2)


class GateErrorVariant(str, Enum):
    """
    Placement of the two-qubit error channel around a CNOT.
    """
    ZZ_BEFORE = "zz_before"
    ZZ_AFTER = "zz_after"
    Z_CONTROL_X_TARGET_BEFORE = "z_control_x_target_before"
    Z_CONTROL_X_TARGET_AFTER = "z_control_x_target_after"

    @property
    def error_paulis(self):
        if self in (GateErrorVariant.ZZ_BEFORE, GateErrorVariant.ZZ_AFTER):
            return Z, Z
        return Z, X

    @property
    def is_before(self):
        return self.value.endswith("_before")


class TwoQubitGate(str, Enum):
    CZ = "cz"
    CNOT = "cnot"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    Dense state on up to four qubits, qubit 0 being the most significant.
    Construction checks Hermiticity, unit trace and the eigenvalue floor.
    """
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"Density matrix must be square, got shape {rho.shape}.")
        dim = rho.shape[0]
        qubits = dim.bit_length() - 1
        if dim != 2**qubits or not 1 <= qubits <= MAX_QUBITS:
            raise ValueError(f"Dimension {dim} is not 2^m with 1 <= m <= {MAX_QUBITS}.")
        if not np.allclose(rho, rho.conj().T, rtol=0, atol=HERMITIAN_TOL):
            raise ValueError("Density matrix is not Hermitian.")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ValueError(f"Density matrix trace {np.trace(rho).real} differs from 1.")
        if np.linalg.eigvalsh(rho).min() < -EIGEN_FLOOR:
            raise ValueError("Density matrix has a negative eigenvalue.")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def num_qubits(self):
        return self.dim.bit_length() - 1


class BellProjection(NamedTuple):
    state: BellDiagonal
    residual_norm: float


@dataclass(frozen=True)
class VariantDeviation:
    variant: GateErrorVariant
    max_deviation: float
    matches: bool


@dataclass(frozen=True)
class GateVariantReport:
    rows: tuple
    tolerance: float = VARIANT_MATCH_TOL

    @property
    def matching(self):
        return tuple(row.variant for row in self.rows if row.matches)

    @property
    def best(self):
        return min(self.rows, key=lambda row: row.max_deviation)


# =========================================
# Operator helpers
# =========================================
def _embed(ops_by_qubit, num_qubits):
    return reduce(np.kron, [ops_by_qubit.get(q, I2) for q in range(num_qubits)])


def _check_qubit(rho, qubit):
    if not 0 <= qubit < rho.num_qubits:
        logger.error(f"Error addressing qubit {qubit} of a {rho.num_qubits}-qubit state")
        raise IndexError(f"Qubit index {qubit} out of range for {rho.num_qubits} qubits.")


def _gate_unitary(gate, control, target, num_qubits):
    flip = X if gate == TwoQubitGate.CNOT else Z
    return (
        _embed({control: PROJECTORS[0]}, num_qubits)
        + _embed({control: PROJECTORS[1], target: flip}, num_qubits)
    )


def partial_trace(entries, keep, num_qubits):
    """
    Traces out every qubit not listed in keep; kept qubits stay in ascending order.
    """
    tensor = np.asarray(entries).reshape([2] * (2 * num_qubits))
    traced = [q for q in range(num_qubits) if q not in keep]
    for removed, qubit in enumerate(sorted(traced, reverse=True)):
        tensor = np.trace(tensor, axis1=qubit, axis2=qubit + num_qubits - removed)
    dim = 2 ** len(keep)
    return tensor.reshape(dim, dim)


def bell_state_density(s):
    coefficients = s.as_array() if isinstance(s, BellDiagonal) else np.asarray(s, dtype=float)
    return np.einsum("k,ki,kj->ij", coefficients, BELL_VECTORS, BELL_VECTORS.conj())


def bell_projection(rho):
    """
    Twirls a two-qubit state onto the Bell-diagonal family.

    Parameters:
    - rho (DensityMatrix): Two-qubit state.
    Returns:
    - BellProjection: Bell-basis diagonal and the Frobenius norm of what the twirl discards.
    """
    if rho.num_qubits != 2:
        raise ValueError("Bell projection needs a two-qubit state.")
    coefficients = np.einsum("ki,ij,kj->k", BELL_VECTORS.conj(), rho.entries, BELL_VECTORS).real
    coefficients = np.clip(coefficients, 0.0, None)
    residual = np.linalg.norm(rho.entries - bell_state_density(coefficients))
    return BellProjection(BellDiagonal.from_array(coefficients), float(residual))


def random_bell_diagonal(rng, count, min_fidelity=0.0):
    """
    Draws Bell-diagonal states uniformly from the simplex, optionally
    restricted to a leading coefficient of at least min_fidelity.
    """
    weights = rng.dirichlet(np.ones(4), size=count)
    leading = min_fidelity + (1.0 - min_fidelity) * weights[:, 0]
    rest = weights[:, 1:] / weights[:, 1:].sum(axis=1, keepdims=True) * (1.0 - leading)[:, None]
    return [BellDiagonal.from_array([a, *r]) for a, r in zip(leading, rest)]


# =========================================
# 1. Noise Channels
# =========================================
def apply_dephasing(rho, qubit, q):
    """
    Parameters:
    - rho (DensityMatrix): Input state.
    - qubit (int): Qubit to dephase.
    - q (float): Z-flip probability.
    Returns:
    - DensityMatrix: (1 - q) rho + q Z rho Z.
    Raises:
    - IndexError: If the qubit index is out of range.
    """
    _check_qubit(rho, qubit)
    if not 0 <= q <= 1:
        raise ValueError(f"Dephasing probability must lie in [0, 1], got {q}.")
    flip = _embed({qubit: Z}, rho.num_qubits)
    return DensityMatrix((1 - q) * rho.entries + q * flip @ rho.entries @ flip)


def apply_noisy_two_qubit_gate(rho, control, target, q_g, gate=TwoQubitGate.CNOT,
                               variant=GateErrorVariant.Z_CONTROL_X_TARGET_BEFORE):
    """
    Ideal gate U combined with the channel
    (1-q)^2 rho + q(1-q)(P_c rho P_c + P_t rho P_t) + q^2 P_c P_t rho P_t P_c.

    For CZ the error Paulis are Z on both qubits. For CNOT they and their
    placement relative to U follow the variant.

    Raises:
    - ValueError: If control equals target.
    - IndexError: If an index is out of range.
    """
    _check_qubit(rho, control)
    _check_qubit(rho, target)
    if control == target:
        raise ValueError("Control and target must be different qubits.")
    if not 0 <= q_g <= 1:
        raise ValueError(f"Gate error probability must lie in [0, 1], got {q_g}.")
    m = rho.num_qubits
    if gate == TwoQubitGate.CZ:
        pauli_c, pauli_t, before = Z, Z, True
    else:
        (pauli_c, pauli_t), before = variant.error_paulis, variant.is_before
    U = _gate_unitary(gate, control, target, m)
    err_c = _embed({control: pauli_c}, m)
    err_t = _embed({target: pauli_t}, m)
    err_ct = err_c @ err_t

    def channel(state):
        return (
            (1 - q_g) ** 2 * state
            + q_g * (1 - q_g) * (err_c @ state @ err_c + err_t @ state @ err_t)
            + q_g**2 * err_ct @ state @ err_ct.conj().T
        )

    if before:
        out = U @ channel(rho.entries) @ U.conj().T
    else:
        out = channel(U @ rho.entries @ U.conj().T)
    return DensityMatrix(out)


# =========================================
# 2. Purification Round
# =========================================
def simulate_purification_round(s, q_g, variant=GateErrorVariant.Z_CONTROL_X_TARGET_BEFORE):
    """
    Runs one purification round on two copies of s with exact postselection.

    Qubits are ordered (A1, B1, A2, B2): pair 1 is kept, pair 2 is measured.

    Parameters:
    - s (BellDiagonal): State of each input pair.
    - q_g (float): Gate error probability of both CNOTs.
    - variant (GateErrorVariant): CNOT error placement.
    Returns:
    - PurifyOutcome: Bell-diagonal projection of the kept pair and the
      probability of coincident target outcomes.
    """
    pair = bell_state_density(s)
    rotation = _embed({0: ROTATION_A, 1: ROTATION_B, 2: ROTATION_A, 3: ROTATION_B}, 4)
    rho = DensityMatrix(rotation @ np.kron(pair, pair) @ rotation.conj().T)
    rho = apply_noisy_two_qubit_gate(rho, 0, 2, q_g, TwoQubitGate.CNOT, variant)
    rho = apply_noisy_two_qubit_gate(rho, 1, 3, q_g, TwoQubitGate.CNOT, variant)

    coincident = sum(_embed({2: p, 3: p}, 4) for p in PROJECTORS)
    kept = coincident @ rho.entries @ coincident
    success = float(np.trace(kept).real)
    if success <= 0:
        logger.error(f"Error simulating purification of {s}: no coincident outcomes")
        raise RuntimeError("Failed to simulate purification round")
    reduced = DensityMatrix(partial_trace(kept / success, keep=(0, 1), num_qubits=4))
    projection = bell_projection(reduced)
    logger.debug(f"Purification residual off-diagonal norm {projection.residual_norm:.3g}")
    return PurifyOutcome(projection.state, success)


# =========================================
# 3. Entanglement Swapping
# =========================================
def _swap_branches(rho_entries):
    # CNOT B -> C, then Hadamard on B so that Z readout of B is an X measurement
    circuit = _embed({1: H}, 4) @ _gate_unitary(TwoQubitGate.CNOT, 1, 2, 4)
    rho = circuit @ rho_entries @ circuit.conj().T
    for m_b, m_c in product((0, 1), (0, 1)):
        proj = _embed({1: PROJECTORS[m_b], 2: PROJECTORS[m_c]}, 4)
        yield (m_b, m_c), partial_trace(proj @ rho @ proj, keep=(0, 3), num_qubits=4)


@lru_cache(maxsize=None)
def _frame_corrections():
    # Correction on D per outcome, read off from the noiseless phi+ x phi+ case
    reference = bell_state_density((1.0, 0.0, 0.0, 0.0))
    phi_plus = BELL_VECTORS[0]
    corrections = {}
    for outcome, branch in _swap_branches(np.kron(reference, reference)):
        branch = branch / np.trace(branch).real
        scores = []
        for pauli in (I2, X, Z, Y):
            fix = _embed({1: pauli}, 2)
            scores.append(np.real(phi_plus.conj() @ fix @ branch @ fix.conj().T @ phi_plus))
        corrections[outcome] = (I2, X, Z, Y)[int(np.argmax(scores))]
    return corrections


def simulate_swapping(s):
    """
    Bell measurement on the middle qubits of two copies of s, qubits ordered
    (A, B, C, D), with Pauli-frame correction on D, averaged over outcomes.

    Returns:
    - BellDiagonal: Bell-diagonal coefficients of the (A, D) pair.
    """
    pair = bell_state_density(s)
    corrections = _frame_corrections()
    joined = np.zeros((4, 4), dtype=complex)
    for outcome, branch in _swap_branches(np.kron(pair, pair)):
        fix = _embed({1: corrections[outcome]}, 2)
        joined += fix @ branch @ fix.conj().T
    return bell_projection(DensityMatrix(joined)).state


# =========================================
# 4. Exhaustive Logical Error Count
# =========================================
def enumerate_logical_error(code, q_eff):
    """
    Sums q^w (1-q)^(n-w) over all 2^n error patterns of weight w > (d-1)/2.

    Raises:
    - ValueError: If n exceeds the enumeration limit.
    """
    n = code.n
    if n > MAX_ENUMERATED_QUBITS:
        logger.warning(f"Refusing to enumerate 2^{n} patterns for {code.label}")
        raise ValueError(f"n={n} too large to enumerate; use the closed form.")
    if not 0 <= q_eff <= 1:
        raise ValueError(f"Qubit error probability must lie in [0, 1], got {q_eff}.")
    weights = np.bitwise_count(np.arange(2**n, dtype=np.uint32)).astype(np.int64)
    probs = q_eff**weights * (1.0 - q_eff) ** (n - weights)
    return float(probs[weights > code.correctable].sum())


# =========================================
# 5. Gate Error Variant Identification
# =========================================
def match_gate_variant(samples, tolerance=VARIANT_MATCH_TOL):
    """
    Compares simulate_purification_round with purify_imperfect_exact for
    every variant.

    Parameters:
    - samples (list[tuple[BellDiagonal, float]]): States with their gate error probability.
    - tolerance (float): Deviation below which a variant counts as matching.
    Returns:
    - GateVariantReport: Max deviation (coefficients and success probability) per variant.
    """
    if not samples:
        raise ValueError("At least one (state, q_g) sample is required.")
    exact = [purify_imperfect_exact(s, q) for s, q in samples]
    rows = []
    for variant in GateErrorVariant:
        worst = 0.0
        for (s, q), reference in zip(samples, exact):
            simulated = simulate_purification_round(s, q, variant)
            worst = max(
                worst,
                float(np.abs(simulated.state.as_array() - reference.state.as_array()).max()),
                abs(simulated.success_prob - reference.success_prob),
            )
        rows.append(VariantDeviation(variant, worst, worst <= tolerance))
    report = GateVariantReport(tuple(rows), tolerance)
    if report.matching:
        logger.info(f"Gate variants matching the exact recursion: {[v.value for v in report.matching]}")
    else:
        logger.warning(f"No gate variant within {tolerance}; best is {report.best.variant.value}")
    return report
