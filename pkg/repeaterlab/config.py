import os
from dotenv import load_dotenv
import logging

# Load environment variables from .env file at the project root
load_dotenv()
logger = logging.getLogger(__name__)


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
        if value < 1:
            raise ValueError(f"{name} must be a positive integer")
    except ValueError as e:
        logger.warning(f"Ignoring {name}={raw!r}: {e}")
        return default
    return value


class Config:
    # Runtime knobs from the environment
    THREADS = _env_int("REPEATERLAB_THREADS", min(os.cpu_count() or 1, 8))
    LOG_LEVEL = os.getenv("REPEATERLAB_LOG_LEVEL", "INFO").upper()
    SHOW_PROGRESS = os.getenv("REPEATERLAB_PROGRESS", "False").lower() == "true"
    logger.info(f"Worker threads capped at {THREADS}")

    # Canonical physical setup (overridable per parameter file)
    ATTENUATION_LENGTH_KM = 25.5
    FIBER_SPEED_M_PER_S = 2e8
    TOTAL_DISTANCE_KM = 1280.0
    SEGMENT_KM = 20.0
    PURIFICATION_ROUNDS = 2

    # Homodyne readout: x = (a + a^dagger)/2, coherent-state variance 1/4
    QUADRATURE_VARIANCE = 0.25

    # Default initial-fidelity grid for sweeps
    F_MIN = 0.55
    F_MAX = 0.99
    F_POINTS = 45
