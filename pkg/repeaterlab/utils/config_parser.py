import io
import logging
import re
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from repeaterlab.config import Config
from repeaterlab.services.codes import code_from_label
from repeaterlab.services.core import ChannelParams, HardwareParams, gate_error_prob
from repeaterlab.services.pipeline import ProtocolConfig

logger = logging.getLogger(__name__)

LIST_KEYS = ("code", "k", "tau_c", "one_minus_T", "F")
_KEY_LINE = re.compile(r"^\s*(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*=")
_CODE_TOKEN = re.compile(r"\[[^\]]*\]|unencoded", re.IGNORECASE)


class ConfigError(ValueError):
    pass


class Subcommand(str, Enum):
    RATE_SWEEP = "rate-sweep"
    FIDELITY = "fidelity"
    OPERATING_POINT = "operating-point"
    ORACLE_VERIFY = "oracle-verify"
    QUBUS_CHECK = "qubus-check"
    MONTECARLO = "montecarlo"


class ExperimentSettings(BaseModel):
    """
    Every key a parameter file may set. List-valued keys span the grid.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    code: list[str] = ["[3,1,3]"]
    L: float = Field(default=Config.TOTAL_DISTANCE_KM, gt=0)
    L0: float = Field(default=Config.SEGMENT_KM, gt=0)
    L_att: float = Field(default=Config.ATTENUATION_LENGTH_KM, gt=0)
    c: float = Field(default=Config.FIBER_SPEED_M_PER_S, gt=0)
    k: list[int] = [Config.PURIFICATION_ROUNDS]
    tau_c: list[float] = [0.1]
    one_minus_T: list[float] = [1e-3]
    F: Optional[list[float]] = None
    F_min: float = Field(default=Config.F_MIN, gt=0.5, le=1)
    F_max: float = Field(default=Config.F_MAX, gt=0.5, le=1)
    F_points: int = Field(default=Config.F_POINTS, ge=1)
    alpha: Optional[float] = Field(default=None, ge=0)
    theta: Optional[float] = Field(default=None, gt=0, lt=np.pi)
    target: float = Field(default=0.95, gt=0, le=1)
    seed: int = 0
    trials: int = Field(default=10_000, ge=1)
    blocks: int = Field(default=1_000, ge=1)
    confidence: float = Field(default=0.99, gt=0, lt=1)
    qubus_n: int = Field(default=3, ge=2)
    qubus_theta: float = Field(default=0.01, gt=0)
    beta: float = Field(default=9e4, gt=0)

    @field_validator("code")
    @classmethod
    def _known_codes(cls, labels):
        if not labels:
            raise ValueError("at least one code is required")
        for label in labels:
            code_from_label(label)
        return labels

    @field_validator("k")
    @classmethod
    def _non_negative_rounds(cls, rounds):
        if not rounds or min(rounds) < 0:
            raise ValueError("purification rounds must be non-negative integers")
        return rounds

    @field_validator("tau_c")
    @classmethod
    def _positive_lifetimes(cls, values):
        if not values or min(values) <= 0:
            raise ValueError("memory coherence times must be positive")
        return values

    @field_validator("one_minus_T")
    @classmethod
    def _gate_losses(cls, values):
        if not values or any(not 0 <= v < 1 for v in values):
            raise ValueError("one_minus_T values must lie in [0, 1)")
        return values

    @field_validator("F")
    @classmethod
    def _fidelities(cls, values):
        if values is not None and any(not 0.5 < v <= 1 for v in values):
            raise ValueError("initial fidelities must lie in (0.5, 1]")
        return values

    @model_validator(mode="after")
    def _consistent(self):
        if self.F_min > self.F_max:
            raise ValueError("F_min must not exceed F_max")
        if (self.alpha is None) != (self.theta is None):
            raise ValueError("alpha and theta must be given together")
        return self

    def channel(self):
        if self.alpha is None:
            return None
        return ChannelParams(
            segment_length_km=self.L0,
            attenuation_length_km=self.L_att,
            qubus_strength=self.alpha,
            interaction_angle_rad=self.theta,
        )

    def fidelity_grid(self):
        if self.F is not None:
            return list(self.F)
        channel = self.channel()
        if channel is not None:
            return [channel.initial_fidelity()]
        return np.linspace(self.F_min, self.F_max, self.F_points).tolist()

    def protocol_configs(self):
        configs = []
        for label, tau_c, one_minus_T, k in product(self.code, self.tau_c, self.one_minus_T, self.k):
            configs.append(ProtocolConfig(
                total_distance_km=self.L,
                segment_km=self.L0,
                code=code_from_label(label),
                rounds=k,
                hardware=HardwareParams(
                    local_transmission=1.0 - one_minus_T,
                    memory_coherence_s=tau_c,
                    fiber_speed_m_per_s=self.c,
                ),
                attenuation_length_km=self.L_att,
                channel=self.channel(),
            ))
        return configs


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand
    config_path: Optional[Path] = None
    output_path: Optional[Path] = None
    overrides: tuple[str, ...] = ()
    settings: ExperimentSettings = ExperimentSettings()


def _key_lines(text):
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        match = _KEY_LINE.match(line)
        if match:
            lines[match.group(1)] = f"line {number}"
    return lines


def _split(key, value):
    if key == "code":
        tokens = _CODE_TOKEN.findall(value)
        leftover = _CODE_TOKEN.sub(" ", value).replace(",", " ").replace(";", " ").strip()
        if leftover:
            raise ValueError(f"unrecognized code text {leftover!r}")
        return tokens
    return [token for token in re.split(r"[,;\s]+", value.strip()) if token]


def _first_error(e):
    error = e.errors()[0]
    field = str(error["loc"][0]) if error["loc"] else "settings"
    return field, error["msg"]


# =========================================
# 1. Parameter Parsing
# =========================================
def parse_config(text, overrides=(), subcommand=Subcommand.RATE_SWEEP, config_path=None, output_path=None):
    """
    Parses key=value parameter text into run settings and the protocol grid.

    Parameters:
    - text (str): Parameter file content (may be empty).
    - overrides (tuple[str]): key=value pairs applied after the file.
    - subcommand (Subcommand): Subcommand the run belongs to.
    Returns:
    - tuple[RunConfig, list[ProtocolConfig]]: Validated run settings and one
      config per (code, tau_c, one_minus_T, k) combination.
    Raises:
    - ConfigError: On unknown keys, bad values or a non power-of-two N, with
      a line or field diagnostic.
    """
    values = dict(dotenv_values(stream=io.StringIO(text)))
    where = _key_lines(text)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r}: expected key=value")
        values[key.strip()] = value.strip()
        where[key.strip()] = f"override {key.strip()}"

    def locate(key):
        return where.get(key, f"field {key}")

    raw = {}
    for key, value in values.items():
        if key not in ExperimentSettings.model_fields:
            logger.error(f"Error parsing config: unknown key '{key}'")
            raise ConfigError(f"{locate(key)}: unknown key '{key}'")
        if value is None or not value.strip():
            raise ConfigError(f"{locate(key)}: missing value for '{key}'")
        try:
            raw[key] = _split(key, value) if key in LIST_KEYS else value.strip()
        except ValueError as e:
            raise ConfigError(f"{locate(key)}: {key}: {e}")

    try:
        settings = ExperimentSettings(**raw)
    except ValidationError as e:
        field, message = _first_error(e)
        logger.error(f"Error validating config field {field}: {message}")
        raise ConfigError(f"{locate(field)}: {field}: {message}")

    try:
        configs = settings.protocol_configs()
    except ValidationError as e:
        _, message = _first_error(e)
        logger.error(f"Error building protocol grid: {message}")
        raise ConfigError(f"{locate('L0')}: {message}")

    for one_minus_T in settings.one_minus_T:
        logger.info(f"1-T={one_minus_T:g}: q_g={gate_error_prob(1.0 - one_minus_T):.4g}")
    logger.info(f"Loaded {len(configs)} protocol configs")
    run = RunConfig(
        subcommand=subcommand,
        config_path=config_path,
        output_path=output_path,
        overrides=tuple(overrides),
        settings=settings,
    )
    return run, configs


def load_config(path, overrides=(), subcommand=Subcommand.RATE_SWEEP, output_path=None):
    """
    Reads a parameter file (or nothing when path is None) and parses it.
    """
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            logger.error(f"Error reading config file {path}: {e}")
            raise ConfigError(f"cannot read config file {path}")
    return parse_config(text, overrides, subcommand, path, output_path)


# =========================================
# 2. Rendering Settings Back To Text
# =========================================
def dump_config(settings):
    """
    Renders settings as key=value text that parse_config reads back unchanged.
    """
    lines = []
    for name in ExperimentSettings.model_fields:
        value = getattr(settings, name)
        if value is None:
            continue
        if name == "code":
            text = " ".join(value)
        elif isinstance(value, list):
            text = ", ".join(repr(v) for v in value)
        else:
            text = repr(value)
        lines.append(f"{name}={text}")
    return "\n".join(lines) + "\n"
