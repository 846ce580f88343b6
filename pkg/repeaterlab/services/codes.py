import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from repeaterlab.services.bell_algebra import BellDiagonal

logger = logging.getLogger(__name__)

_LABEL_PATTERN = re.compile(r"^\[\s*(\d+)\s*,\s*1\s*,\s*(\d+)\s*\]$")


class CodeFamily(str, Enum):
    REPETITION = "repetition"
    CSS = "css"


@dataclass(frozen=True)
class CodeSpec:
    """
    An [n, 1, d] code. Repetition codes only protect against phase flips.
    """
    n: int
    d: int
    family: CodeFamily
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Code length must be at least 1, got {self.n}.")
        if self.d < 1 or self.d % 2 == 0:
            raise ValueError(f"Code distance must be odd and positive, got {self.d}.")
        if self.d > self.n:
            raise ValueError(f"Code distance {self.d} exceeds length {self.n}.")
        if self.family == CodeFamily.REPETITION and self.d != self.n:
            raise ValueError("Repetition codes need d = n.")
        if not self.label:
            object.__setattr__(self, "label", f"[{self.n},1,{self.d}]")

    @property
    def correctable(self):
        return (self.d - 1) // 2


class EffectiveCoefficients(NamedTuple):
    state: BellDiagonal


class EffectiveQubitError(NamedTuple):
    q_eff: float
    clamped: bool


# =========================================
# 1. Code Catalog
# =========================================
def code_catalog():
    """
    Returns:
    - list[CodeSpec]: The six studied codes plus the unencoded pseudo-code [1,1,1].
    """
    return [
        CodeSpec(1, 1, CodeFamily.REPETITION, "[1,1,1]"),
        CodeSpec(3, 3, CodeFamily.REPETITION),
        CodeSpec(7, 7, CodeFamily.REPETITION),
        CodeSpec(51, 51, CodeFamily.REPETITION),
        CodeSpec(7, 3, CodeFamily.CSS),
        CodeSpec(25, 5, CodeFamily.CSS),
        CodeSpec(23, 7, CodeFamily.CSS),
    ]


def code_from_label(label):
    """
    Looks up a catalog code by its label ("[7,1,3]") or the alias "unencoded".

    Raises:
    - ValueError: If the label is malformed or not in the catalog.
    """
    text = label.strip()
    if text.lower() == "unencoded":
        text = "[1,1,1]"
    match = _LABEL_PATTERN.match(text)
    if not match:
        raise ValueError(f"Malformed code label {label!r}; expected [n,1,d].")
    n, d = int(match.group(1)), int(match.group(2))
    for code in code_catalog():
        if (code.n, code.d) == (n, d):
            return code
    raise ValueError(f"Code {label!r} is not in the catalog.")


# =========================================
# 2. Logical Error Probability
# =========================================
def logical_error_prob(code, q_eff):
    """
    Probability that more than (d - 1)/2 of the n qubits flip.

    Terms are summed in log space so n = 51 stays well inside double range.

    Parameters:
    - code (CodeSpec): The block code.
    - q_eff (float): Independent per-qubit error probability in [0, 1].
    Returns:
    - float: Q_n = sum_{j=(d+1)/2}^{n} C(n,j) q^j (1-q)^(n-j).
    """
    if not 0 <= q_eff <= 1:
        raise ValueError(f"Qubit error probability must lie in [0, 1], got {q_eff}.")
    n = code.n
    j = np.arange(code.correctable + 1, n + 1)
    log_terms = (
        gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
        + xlogy(j, q_eff) + xlog1py(n - j, -q_eff)
    )
    return float(min(np.exp(log_terms).sum(), 1.0))


def pair_no_error_prob(Q):
    """
    Probability that the two blocks of a pair end with the same logical
    error parity: (1 - Q)^2 + Q^2.
    """
    if not 0 <= Q <= 1:
        raise ValueError(f"Logical error probability must lie in [0, 1], got {Q}.")
    return (1.0 - Q) ** 2 + Q**2


# =========================================
# 3. Pair State After Correction
# =========================================
def effective_coefficients(F, P_n):
    """
    Bell coefficients of an encoded pair after correction.

    Parameters:
    - F (float): Initial pair fidelity.
    - P_n (float): Pair no-error probability.
    Returns:
    - EffectiveCoefficients: (P_n F, (1 - P_n) F, P_n (1 - F), (1 - P_n)(1 - F)).
    """
    if not 0 <= F <= 1 or not 0 <= P_n <= 1:
        raise ValueError(f"F and P_n must lie in [0, 1], got F={F}, P_n={P_n}.")
    return EffectiveCoefficients(BellDiagonal(
        P_n * F,
        (1.0 - P_n) * F,
        P_n * (1.0 - F),
        (1.0 - P_n) * (1.0 - F),
    ))


# =========================================
# 4. CSS Per-Qubit Error
# =========================================
def css_effective_qubit_error(q_m_half, q_g, F_k):
    """
    Union-bound estimate of a physical qubit's phase-flip probability in the
    CSS protocol: 3 q_m(t'_k / 2) + 2 q_g + (1 - F_k).

    Parameters:
    - q_m_half (float): Memory error already evaluated at t'_k / 2.
    - q_g (float): Gate error probability.
    - F_k (float): Pair fidelity after k purification rounds.
    Returns:
    - EffectiveQubitError: The estimate clamped to [0, 1] and whether clamping happened.
    """
    for name, value in (("q_m_half", q_m_half), ("q_g", q_g), ("F_k", F_k)):
        if not 0 <= value <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {value}.")
    raw = 3.0 * q_m_half + 2.0 * q_g + (1.0 - F_k)
    if raw > 1.0:
        logger.warning(f"Effective qubit error {raw:.4g} exceeds 1; clamping")
        return EffectiveQubitError(1.0, True)
    return EffectiveQubitError(raw, False)
