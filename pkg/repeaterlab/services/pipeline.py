import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq
from tqdm import tqdm

from repeaterlab.config import Config
from repeaterlab.services import bell_algebra, codes, core
from repeaterlab.services.bell_algebra import BellDiagonal
from repeaterlab.services.codes import CodeFamily, CodeSpec
from repeaterlab.services.core import ChannelParams, HardwareParams

logger = logging.getLogger(__name__)

# Search interval margin around the open end at F = 1/2 and the closed end at F = 1
_F_EPS = 1e-9


class ProtocolConfig(BaseModel):
    """
    Full parameter set of one repeater line. N = L / L0 must be a power of two.
    """
    model_config = ConfigDict(frozen=True)

    total_distance_km: float = Field(default=Config.TOTAL_DISTANCE_KM, gt=0)
    segment_km: float = Field(default=Config.SEGMENT_KM, gt=0)
    code: CodeSpec
    rounds: int = Field(default=Config.PURIFICATION_ROUNDS, ge=0)
    hardware: HardwareParams
    attenuation_length_km: float = Field(default=Config.ATTENUATION_LENGTH_KM, gt=0)
    channel: Optional[ChannelParams] = None

    @model_validator(mode="after")
    def _check_segments(self):
        ratio = self.total_distance_km / self.segment_km
        segments = round(ratio)
        if abs(ratio - segments) > 1e-9 * ratio or segments < 2 or segments & (segments - 1):
            raise ValueError(f"N=L/L0={ratio:.2f} is not an integral power of two >= 2")
        if self.channel is not None and not math.isclose(self.channel.segment_length_km, self.segment_km):
            raise ValueError("channel.segment_length_km must equal segment_km")
        return self

    @property
    def segments(self):
        return round(self.total_distance_km / self.segment_km)

    @property
    def swap_levels(self):
        return self.segments.bit_length() - 1

    @property
    def eta(self):
        return core.transmittance(self.segment_km, self.attenuation_length_km)

    def initial_fidelity(self):
        """
        Initial fidelity implied by the qubus settings, if the config carries them.
        """
        if self.channel is None:
            raise ValueError("Config has no channel parameters; pass F directly.")
        return self.channel.initial_fidelity()


class Timing(NamedTuple):
    T0: float
    t_k: float
    t_prime_k: float
    N: int


@dataclass(frozen=True)
class SweepResult:
    code_label: str
    family: str
    k: int
    tau_c_s: float
    one_minus_T: float
    L_km: float
    L0_km: float
    F: float
    F_final: float
    P0: float
    P_k: float
    rate_per_memory_hz: float
    t_wait_s: float
    q_eff: float = math.nan
    clamped: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        if self.error is not None:
            return
        for name in ("F", "F_final", "P0", "P_k"):
            value = getattr(self, name)
            if not -1e-12 <= value <= 1 + 1e-12:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if self.rate_per_memory_hz < 0:
            raise ValueError(f"Negative rate {self.rate_per_memory_hz}")


@dataclass(frozen=True)
class OperatingPoint:
    feasible: bool
    target: float
    max_final_fidelity: float
    F: Optional[float] = None
    result: Optional[SweepResult] = None


# =========================================
# 1. Timing Model
# =========================================
def timing(cfg):
    """
    Parameters:
    - cfg (ProtocolConfig): Repeater configuration.
    Returns:
    - Timing: T0 = 2 L0 / c, t_k = (k/2 + 1) T0, t'_k = (k + 1) T0 / 2, and N = L / L0.
    """
    T0 = 2.0 * cfg.segment_km * 1e3 / cfg.hardware.fiber_speed_m_per_s
    k = cfg.rounds
    return Timing(T0, (k / 2 + 1) * T0, (k + 1) * T0 / 2, cfg.segments)


def gate_loss_exponent(n, N, k):
    return 2 * n * ((N - 1) + 2 * (2**k - 1))


# =========================================
# 2. Final Fidelity
# =========================================
def _repetition_chain(cfg, F):
    t = timing(cfg)
    q_g = cfg.hardware.gate_error
    q_eff = core.memory_error_prob(t.t_k / 2, cfg.hardware.memory_coherence_s)
    P_n = codes.pair_no_error_prob(codes.logical_error_prob(cfg.code, q_eff))
    state = codes.effective_coefficients(F, P_n).state
    purified = state
    for _ in range(cfg.rounds):
        purified = bell_algebra.purify_ideal(purified).state
    joined = purified
    for _ in range(cfg.swap_levels):
        joined = bell_algebra.swap_ideal(joined)
    F_final = joined.a * (1.0 - q_g) ** gate_loss_exponent(cfg.code.n, t.N, cfg.rounds)
    return F_final, state, q_eff


def _css_chain(cfg, F):
    t = timing(cfg)
    q_g = cfg.hardware.gate_error
    state = BellDiagonal.from_fidelity(F)
    round_probs = []
    for _ in range(cfg.rounds):
        outcome = bell_algebra.purify_imperfect_exact(state, q_g)
        state = outcome.state
        round_probs.append(outcome.success_prob)
    q_half = core.memory_error_prob(t.t_prime_k / 2, cfg.hardware.memory_coherence_s)
    q_eff, clamped = codes.css_effective_qubit_error(q_half, q_g, min(state.a, 1.0))
    Q = codes.logical_error_prob(cfg.code, q_eff)
    return (1.0 - Q) ** (2 * t.N), round_probs, q_eff, clamped


def repetition_final_fidelity(cfg, F):
    """
    End-to-end fidelity for repetition codes (and the unencoded [1,1,1]):
    effective pair state, k ideal purifications, log2(N) ideal swaps, and
    the global gate-loss factor (1 - q_g)^(2n((N-1) + 2(2^k - 1))).

    Parameters:
    - cfg (ProtocolConfig): Configuration with a repetition code.
    - F (float): Initial pair fidelity.
    Returns:
    - float: Final fidelity over the full distance.
    Raises:
    - ValueError: If the code is not a repetition code.
    """
    if cfg.code.family != CodeFamily.REPETITION:
        raise ValueError(f"{cfg.code.label} is not a repetition code.")
    return _repetition_chain(cfg, F)[0]


def css_final_fidelity(cfg, F):
    """
    End-to-end fidelity for CSS codes: (1 - Q_n)^(2N) with Q_n evaluated at
    the union-bound qubit error after k exact purification rounds.

    Raises:
    - ValueError: If the code is not a CSS code.
    """
    if cfg.code.family != CodeFamily.CSS:
        raise ValueError(f"{cfg.code.label} is not a CSS code.")
    return _css_chain(cfg, F)[0]


def final_fidelity(cfg, F):
    if cfg.code.family == CodeFamily.CSS:
        return css_final_fidelity(cfg, F)
    return repetition_final_fidelity(cfg, F)


# =========================================
# 3. Rates
# =========================================
def purification_round_probabilities(cfg, F):
    """
    Success probability of each purification round; their product is P_k.

    Repetition codes charge round i with (1 - q_g)^(4n 2^(i-1)) on top of the
    ideal probability, CSS codes use the exact imperfect-gate probability.
    """
    if cfg.code.family == CodeFamily.CSS:
        return _css_chain(cfg, F)[1]
    q_g = cfg.hardware.gate_error
    state = _repetition_chain(cfg, F)[1]
    probs = []
    for i in range(1, cfg.rounds + 1):
        outcome = bell_algebra.purify_ideal(state)
        probs.append(outcome.success_prob * (1.0 - q_g) ** (4 * cfg.code.n * 2 ** (i - 1)))
        state = outcome.state
    return probs


def _purified_chain_probability(cfg, F):
    if cfg.code.family == CodeFamily.CSS:
        return math.prod(_css_chain(cfg, F)[1])
    state = _repetition_chain(cfg, F)[1]
    return bell_algebra.purify_k_rounds_lower(state, cfg.hardware.gate_error, cfg.code.n, cfg.rounds).success_prob


def rate_unpurified(cfg, F):
    """
    Parameters:
    - cfg (ProtocolConfig): Repeater configuration.
    - F (float): Initial pair fidelity.
    Returns:
    - float: R_n = P0 / (n T0) in pairs per second per memory.
    """
    P0 = core.success_probability(F, cfg.eta)
    return P0 / (cfg.code.n * timing(cfg).T0)


def rate_purified(cfg, F):
    """
    Parameters:
    - cfg (ProtocolConfig): Repeater configuration with k >= 1.
    - F (float): Initial pair fidelity.
    Returns:
    - float: R = P0 P_k / (n 2^k (k/2 + 1) T0) in pairs per second per memory.
    Raises:
    - ValueError: If k = 0 (use rate_unpurified).
    """
    k = cfg.rounds
    if k == 0:
        logger.error("Error computing purified rate: k = 0")
        raise ValueError("No purification rounds (k=0); use rate_unpurified instead.")
    P0 = core.success_probability(F, cfg.eta)
    P_k = _purified_chain_probability(cfg, F)
    return P0 * P_k / (cfg.code.n * 2**k * timing(cfg).t_k)


def rate(cfg, F):
    return rate_unpurified(cfg, F) if cfg.rounds == 0 else rate_purified(cfg, F)


def throughput_bits_per_s(rate_per_memory_hz, memories):
    return rate_per_memory_hz * memories


def memories_for_throughput(rate_per_memory_hz, target_bps):
    if rate_per_memory_hz <= 0:
        raise ValueError("Rate per memory must be positive to reach a throughput target.")
    return math.ceil(target_bps / rate_per_memory_hz)


# =========================================
# 4. Single Operating Point
# =========================================
def evaluate_point(cfg, F):
    """
    Evaluates every pipeline quantity for one (config, F) point.

    Returns:
    - SweepResult: Fidelities, probabilities, timing and rate at F.
    """
    t = timing(cfg)
    if cfg.code.family == CodeFamily.CSS:
        F_final, round_probs, q_eff, clamped = _css_chain(cfg, F)
        P_k = math.prod(round_probs)
    else:
        F_final, state, q_eff = _repetition_chain(cfg, F)
        clamped = False
        P_k = bell_algebra.purify_k_rounds_lower(
            state, cfg.hardware.gate_error, cfg.code.n, cfg.rounds
        ).success_prob
    P0 = core.success_probability(F, cfg.eta)
    window = t.T0 if cfg.rounds == 0 else t.t_k
    rate_hz = P0 * P_k / (cfg.code.n * 2**cfg.rounds * window)
    return SweepResult(
        **_echo(cfg, F),
        F_final=F_final,
        P0=P0,
        P_k=P_k,
        rate_per_memory_hz=rate_hz,
        t_wait_s=t.t_k,
        q_eff=q_eff,
        clamped=clamped,
    )


def _echo(cfg, F):
    return dict(
        code_label=cfg.code.label,
        family=cfg.code.family.value,
        k=cfg.rounds,
        tau_c_s=cfg.hardware.memory_coherence_s,
        one_minus_T=1.0 - cfg.hardware.local_transmission,
        L_km=cfg.total_distance_km,
        L0_km=cfg.segment_km,
        F=F,
    )


def operating_point(cfg, F_final_target):
    """
    Finds the initial fidelity F* at which the final fidelity hits the target.

    F_final increases with F, so the root is bracketed on (1/2 + eps, 1 - eps].

    Parameters:
    - cfg (ProtocolConfig): Repeater configuration.
    - F_final_target (float): Target final fidelity in (0, 1].
    Returns:
    - OperatingPoint: Feasible result with F* and its SweepResult, or an
      infeasible one carrying the largest reachable final fidelity.
    """
    if not 0 < F_final_target <= 1:
        raise ValueError(f"Target final fidelity must lie in (0, 1], got {F_final_target}.")
    lo, hi = 0.5 + _F_EPS, 1.0 - _F_EPS
    best = final_fidelity(cfg, hi)
    if best < F_final_target:
        logger.warning(
            f"Target {F_final_target} infeasible for {cfg.code.label} (k={cfg.rounds}); "
            f"max F_final={best:.6f}"
        )
        return OperatingPoint(False, F_final_target, best)

    if final_fidelity(cfg, lo) >= F_final_target:
        F_star = lo
    else:
        F_star = brentq(lambda F: final_fidelity(cfg, F) - F_final_target, lo, hi, xtol=1e-13)
    result = evaluate_point(cfg, F_star)
    logger.info(
        f"Operating point for {cfg.code.label} (k={cfg.rounds}): F*={F_star:.6f}, "
        f"rate={result.rate_per_memory_hz:.4g} Hz/memory"
    )
    return OperatingPoint(True, F_final_target, best, F_star, result)


def best_reachable_point(cfg):
    """
    Row at the top of the F range, where F_final takes the largest value an
    infeasible target could have had.
    """
    return evaluate_point(cfg, 1.0 - _F_EPS)


# =========================================
# 5. Parameter Sweeps
# =========================================
def build_grid(configs, fidelities):
    return [(cfg, F) for cfg in configs for F in fidelities]


def failed_result(cfg, F, message):
    nan = math.nan
    return SweepResult(
        **_echo(cfg, F), F_final=nan, P0=nan, P_k=nan,
        rate_per_memory_hz=nan, t_wait_s=nan, error=message,
    )


def _evaluate_safely(point):
    cfg, F = point
    try:
        return evaluate_point(cfg, F)
    except Exception as e:
        logger.error(f"Error evaluating {cfg.code.label} at F={F}: {e}")
        return failed_result(cfg, F, str(e))


def sweep(grid, max_workers=None):
    """
    Evaluates every (config, F) point of the grid.

    Points run on a thread pool; results keep grid order and failing points
    are reported in-row.

    Parameters:
    - grid (list[tuple[ProtocolConfig, float]]): Points to evaluate.
    - max_workers (int): Thread cap (defaults to Config.THREADS).
    Returns:
    - list[SweepResult]: One row per grid point.
    """
    points = list(grid)
    if not points:
        return []
    workers = max_workers or Config.THREADS
    logger.info(f"Sweeping {len(points)} points on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        rows = list(tqdm(
            executor.map(_evaluate_safely, points),
            total=len(points),
            desc="sweep",
            disable=not Config.SHOW_PROGRESS,
        ))
    failed = sum(row.error is not None for row in rows)
    if failed:
        logger.warning(f"{failed} of {len(rows)} sweep points failed")
    logger.info("Sweep completed")
    return rows
