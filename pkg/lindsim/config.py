from __future__ import annotations
from logging import getLogger
from os.path import exists
from typing import Literal

from pydantic import BaseModel, Field, ValidationError
from result import Err, Ok, Result
from toml import TomlDecodeError, load

from lindsim.utils import no_extra

LOGGER = getLogger(__name__)

WeightConvention = Literal["conservative", "simplex", "shifted"]

config: Config | None = None


def get_config() -> Config:
    global config
    if config is None:
        config = Config()
    return config


def load_config(config_path: str) -> Result[None, ValidationError | TomlDecodeError]:
    global config
    if not exists(config_path):
        LOGGER.debug(f"No configuration at {config_path}, using defaults")
        config = Config()
        return Ok(None)
    try:
        raw_config = load(config_path)
    except TomlDecodeError as e:
        return Err(e)
    try:
        config = Config.model_validate(raw_config)
    except ValidationError as e:
        return Err(e)
    LOGGER.debug(f"Loaded configuration from {config_path}")
    return Ok(None)


@no_extra
class Tolerances(BaseModel):
    hermiticity: float = Field(default=1e-12, gt=0)
    norm_slack: float = Field(default=1e-12, ge=0)
    state: float = Field(default=1e-10, gt=0)
    oaa_premise: float = Field(default=1e-6, gt=0)


@no_extra
class Limits(BaseModel):
    max_order: int = Field(default=40, ge=1)
    max_quadrature_order: int = Field(default=64, ge=1, le=64)
    max_terms: int = Field(default=100_000_000, ge=1)
    chunk_entries: int = Field(default=1 << 22, ge=1)
    verify_max_qubits: int = Field(default=3, ge=1)


@no_extra
class Budget(BaseModel):
    weight_convention: WeightConvention = "conservative"
    quadrature_constant: float = Field(default=1.0, gt=0)


@no_extra
class Execution(BaseModel):
    workers: int = Field(default=1, ge=1)
    seed: int = 0


@no_extra
class Config(BaseModel):
    tolerances: Tolerances = Field(default_factory=Tolerances)
    limits: Limits = Field(default_factory=Limits)
    budget: Budget = Field(default_factory=Budget)
    execution: Execution = Field(default_factory=Execution)
