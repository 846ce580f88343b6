import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import binom
from tqdm import tqdm

from repeaterlab.config import Config
from repeaterlab.services import core, pipeline

logger = logging.getLogger(__name__)

# Trials per RNG stream; fixed so results do not depend on the thread count
CHUNK_TRIALS = 10_000
MAX_BLOCKS = 2**62


class McConfig(BaseModel):
    """
    Monte Carlo settings. s = blocks per half station; p0 may be left out
    when the protocol config determines it.
    """
    model_config = ConfigDict(frozen=True)

    p0: Optional[float] = Field(default=None, ge=0, le=1)
    blocks: int = Field(ge=1)
    rounds: int = Field(default=0, ge=0)
    trials: int = Field(ge=1)
    seed: int = 0


@dataclass(frozen=True)
class WindowStats:
    expected: float
    mean: float
    std: float
    stderr: float
    values: np.ndarray
    counts: np.ndarray
    rng: str

    @property
    def interval(self):
        return self.mean - 3 * self.stderr, self.mean + 3 * self.stderr

    def contains(self, value):
        low, high = self.interval
        return low <= value <= high


@dataclass(frozen=True)
class McRateResult:
    rate_hz: float
    stderr_hz: float
    analytic_hz: float
    trials: int
    blocks: int
    seed: int
    rng: str
    window_s: float

    @property
    def deviation_sigmas(self):
        if self.stderr_hz == 0:
            return 0.0 if self.rate_hz == self.analytic_hz else math.inf
        return abs(self.rate_hz - self.analytic_hz) / self.stderr_hz


def _streams(seed, trials):
    children = np.random.SeedSequence(seed).spawn(math.ceil(trials / CHUNK_TRIALS))
    sizes = [min(CHUNK_TRIALS, trials - i * CHUNK_TRIALS) for i in range(len(children))]
    return [(size, np.random.Generator(np.random.PCG64(child))) for size, child in zip(sizes, children)]


def _run_trials(draw, seed, trials, desc):
    streams = _streams(seed, trials)
    with ThreadPoolExecutor(max_workers=min(Config.THREADS, len(streams))) as executor:
        chunks = list(tqdm(
            executor.map(lambda stream: draw(*stream), streams),
            total=len(streams),
            desc=desc,
            disable=not Config.SHOW_PROGRESS,
        ))
    return np.concatenate(chunks)


def _summary(samples):
    mean = float(samples.mean())
    std = float(samples.std(ddof=1)) if samples.size > 1 else math.inf
    return mean, std, std / math.sqrt(samples.size)


# =========================================
# 1. Single Window Successes
# =========================================
def simulate_window(cfg):
    """
    Samples the number of heralded blocks in one T0 window.

    Parameters:
    - cfg (McConfig): Settings with p0 set.
    Returns:
    - WindowStats: Empirical mean, spread and distribution of successes.
    Raises:
    - ValueError: If p0 is missing.
    """
    if cfg.p0 is None:
        logger.error("Error simulating window: p0 not set")
        raise ValueError("McConfig.p0 is required to simulate a window.")

    def draw(size, rng):
        return rng.binomial(cfg.blocks, cfg.p0, size=size)

    successes = _run_trials(draw, cfg.seed, cfg.trials, "window")
    mean, std, stderr = _summary(successes)
    if cfg.p0 in (0.0, 1.0):
        std, stderr = 0.0, 0.0
    values, counts = np.unique(successes, return_counts=True)
    return WindowStats(cfg.blocks * cfg.p0, mean, std, stderr, values, counts, "PCG64")


# =========================================
# 2. Resource Sufficiency
# =========================================
def required_blocks(p0, k, confidence):
    """
    Smallest s with P[Binomial(s, p0) >= 2^k] >= confidence.

    Parameters:
    - p0 (float): Per-block heralding probability in (0, 1].
    - k (int): Purification rounds (2^k pairs needed).
    - confidence (float): Required probability in (0, 1).
    Returns:
    - int: Number of blocks per half station.
    Raises:
    - ValueError: If p0 is 0 or arguments are out of range.
    """
    if p0 <= 0:
        logger.error("Error sizing blocks: p0 = 0")
        raise ValueError("p0 = 0: no number of blocks is sufficient (infeasible).")
    if p0 > 1 or k < 0 or not 0 < confidence < 1:
        raise ValueError("Need p0 in (0, 1], k >= 0 and confidence in (0, 1).")
    needed = 2**k

    def enough(s):
        return binom.sf(needed - 1, s, p0) >= confidence

    high = needed
    while not enough(high):
        high *= 2
        if high > MAX_BLOCKS:
            raise RuntimeError("Failed to bracket the required number of blocks")
    low = max(needed, high // 2)
    if enough(low):
        return low
    # enough(low) is False and enough(high) is True
    while high - low > 1:
        middle = (low + high) // 2
        if enough(middle):
            high = middle
        else:
            low = middle
    return high


# =========================================
# 3. Rate Replica
# =========================================
def simulate_rate(cfg_protocol, F, mc):
    """
    Replays the rate model window by window: heralded blocks, greedy pairing
    for each purification round with that round's success probability, and
    deterministic swapping. Leftover blocks are discarded per window.

    Parameters:
    - cfg_protocol (ProtocolConfig): Repeater configuration.
    - F (float): Initial pair fidelity.
    - mc (McConfig): Sampling settings; rounds must equal the protocol's k.
    Returns:
    - McRateResult: Empirical pairs per second per memory, its standard error
      and the analytic value under the same assumptions.
    """
    k = cfg_protocol.rounds
    if mc.rounds != k:
        raise ValueError(f"McConfig.rounds={mc.rounds} does not match the protocol's k={k}.")
    p0 = mc.p0 if mc.p0 is not None else core.success_probability(F, cfg_protocol.eta)
    round_probs = pipeline.purification_round_probabilities(cfg_protocol, F)
    t = pipeline.timing(cfg_protocol)
    window = t.T0 if k == 0 else t.t_k
    scale = mc.blocks * cfg_protocol.code.n * window

    def draw(size, rng):
        pairs = rng.binomial(mc.blocks, p0, size=size)
        for p in round_probs:
            pairs = rng.binomial(pairs // 2, p)
        return pairs / scale

    logger.info(
        f"Monte Carlo rate for {cfg_protocol.code.label} (k={k}): {mc.trials} trials, "
        f"{mc.blocks} blocks, seed {mc.seed}"
    )
    rates = _run_trials(draw, mc.seed, mc.trials, "montecarlo")
    mean, _, stderr = _summary(rates)
    analytic = p0 * math.prod(round_probs) / (cfg_protocol.code.n * 2**k * window)
    return McRateResult(mean, stderr, analytic, mc.trials, mc.blocks, mc.seed, "PCG64", window)
