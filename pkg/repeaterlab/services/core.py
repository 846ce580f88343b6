import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from repeaterlab.config import Config

logger = logging.getLogger(__name__)


# =========================================
# Parameter models
# =========================================
class ChannelParams(BaseModel):
    """
    Fiber segment and qubus settings that determine the initial pair fidelity.
    """
    model_config = ConfigDict(frozen=True)

    segment_length_km: float = Field(gt=0)
    attenuation_length_km: float = Field(default=Config.ATTENUATION_LENGTH_KM, gt=0)
    qubus_strength: float = Field(ge=0)
    interaction_angle_rad: float = Field(gt=0, lt=np.pi)

    def transmittance(self):
        return transmittance(self.segment_length_km, self.attenuation_length_km)

    def initial_fidelity(self):
        return initial_fidelity(self.qubus_strength, self.interaction_angle_rad, self.transmittance())


class HardwareParams(BaseModel):
    """
    Local gate quality and memory lifetime of a repeater station.
    """
    model_config = ConfigDict(frozen=True)

    local_transmission: float = Field(gt=0, le=1)
    memory_coherence_s: float = Field(gt=0)
    fiber_speed_m_per_s: float = Field(default=Config.FIBER_SPEED_M_PER_S, gt=0)

    @computed_field
    @property
    def gate_error(self) -> float:
        return gate_error_prob(self.local_transmission)


# =========================================
# 1. Channel Transmittance
# =========================================
def transmittance(l, l_att):
    """
    Fraction of the qubus amplitude surviving a fiber of length l.

    Parameters:
    - l (float): Fiber length in km.
    - l_att (float): Attenuation length in km.
    Returns:
    - float: eta = exp(-l / l_att), in (0, 1].
    Raises:
    - ValueError: If l is negative or l_att is not positive.
    """
    if l_att <= 0:
        logger.error(f"Error computing transmittance: attenuation length {l_att} km")
        raise ValueError("Attenuation length must be positive.")
    if l < 0:
        logger.error(f"Error computing transmittance: negative length {l} km")
        raise ValueError("Fiber length must be non-negative.")
    return float(np.exp(-l / l_att))


# =========================================
# 2. Initial Pair Fidelity
# =========================================
def initial_fidelity(alpha, theta, eta):
    """
    Fidelity of the spin-spin pair created by one qubus pulse.

    Parameters:
    - alpha (float): Qubus amplitude (real, >= 0).
    - theta (float): Conditional phase rotation in rad.
    - eta (float): Channel transmittance in (0, 1].
    Returns:
    - float: F = [1 + exp(-(1 - eta) alpha^2 (1 - cos theta))] / 2.
    Raises:
    - ValueError: If alpha < 0 or eta is outside (0, 1].
    """
    if alpha < 0:
        raise ValueError("Qubus amplitude alpha must be non-negative.")
    if not 0 < eta <= 1:
        raise ValueError("Transmittance eta must lie in (0, 1].")
    # 1 - cos(theta) written as 2 sin^2(theta/2) to keep precision at small angles
    exponent = (1.0 - eta) * alpha**2 * 2.0 * np.sin(theta / 2.0) ** 2
    return float((1.0 + np.exp(-exponent)) / 2.0)


# =========================================
# 3. Unambiguous Discrimination Success
# =========================================
def success_probability(F, eta):
    """
    Probability that unambiguous state discrimination heralds a pair.

    Parameters:
    - F (float): Initial pair fidelity in (1/2, 1].
    - eta (float): Channel transmittance in (0, 1).
    Returns:
    - float: P0 = 1 - (2F - 1)^(eta / (1 - eta)).
    Raises:
    - ValueError: If eta == 1 (lossless limit) or inputs are out of range.
    """
    if eta == 1:
        logger.error("Error computing success probability: eta = 1")
        raise ValueError("Lossless limit eta = 1: P0 undefined by this formula.")
    if not 0 < eta < 1:
        raise ValueError("Transmittance eta must lie in (0, 1).")
    if not 0.5 < F <= 1:
        raise ValueError(f"Initial fidelity must lie in (1/2, 1], got {F}.")
    return float(1.0 - (2.0 * F - 1.0) ** (eta / (1.0 - eta)))


# =========================================
# 4. Gate Error Probability
# =========================================
def gate_error_prob(T):
    """
    Z-error probability per qubit per two-qubit gate.

    Parameters:
    - T (float): Local transmission in (0, 1].
    Returns:
    - float: q_g = (1 - exp(-x)) / 2 with x = (pi/2)(1 - T^2) / (sqrt(T)(1 + T)).
    Raises:
    - ValueError: If T is outside (0, 1].
    """
    if not 0 < T <= 1:
        logger.error(f"Error computing gate error: local transmission {T}")
        raise ValueError("Local transmission T must lie in (0, 1].")
    x = (np.pi / 2.0) * (1.0 - T**2) / (np.sqrt(T) * (1.0 + T))
    return float(-np.expm1(-x) / 2.0)


# =========================================
# 5. Memory Dephasing Probability
# =========================================
def memory_error_prob(t, tau_c):
    """
    Z-error probability of a memory qubit stored for time t.

    Parameters:
    - t (float): Storage time in s.
    - tau_c (float): Memory coherence time in s (may be inf).
    Returns:
    - float: q_m = (1 - exp(-t / tau_c)) / 2.
    Raises:
    - ValueError: If t < 0 or tau_c <= 0.
    """
    if t < 0:
        logger.error(f"Error computing memory error: negative storage time {t}")
        raise ValueError("Storage time must be non-negative.")
    if tau_c <= 0:
        raise ValueError("Memory coherence time must be positive.")
    return float(-np.expm1(-t / tau_c) / 2.0)
