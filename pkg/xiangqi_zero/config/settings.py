"""
Configuration management using Pydantic Settings.
Values come from (highest first) command-line flags, a key=value config file, XQZERO_* environment
variables, and the defaults below. Everything is validated before any work starts.
"""

from collections.abc import Mapping
from pathlib import Path
from typing import Any, Optional, Union

from loguru import logger
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from xiangqi_zero.core.errors import ConfigError
from xiangqi_zero.models.schemas import AdamHyperparameters, NetworkConfig, SearchConfig, SelfPlayConfig


class Settings(BaseSettings):
    """
    Engine and training settings.
    Environment variables use the XQZERO_ prefix, e.g. XQZERO_SIMULATIONS=400.
    """

    model_config = SettingsConfigDict(
        env_prefix="XQZERO_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # System Configuration
    LOG_LEVEL: str = Field(default="INFO", description="Logging level (DEBUG, INFO, WARNING, ERROR)")
    LOG_DIR: Optional[str] = Field(default=None, description="Directory for rotating log files (stderr only if unset)")
    SEED: int = Field(default=0, description="Seed every random stream derives from", ge=0)
    JOBS: int = Field(default=1, description="Self-play games generated concurrently", ge=1)

    # Search Configuration
    SIMULATIONS: int = Field(default=200, description="MCTS simulations per move", gt=0)
    C_PUCT: float = Field(default=1.5, description="Exploration constant c in the PUCT bound", gt=0)
    DIRICHLET_EPSILON: float = Field(default=0.25, description="Root noise weight", ge=0.0, le=1.0)
    DIRICHLET_ALPHA: float = Field(default=0.3, description="Root noise concentration", gt=0)

    # Self-play Configuration
    MOVE_CAP: int = Field(default=200, description="Plies after which a game is drawn", gt=0)
    GREEDY_AFTER: int = Field(default=12, description="Plies sampled at temperature 1 before greedy play", ge=0)
    GAMES_PER_ITERATION: int = Field(default=10, description="Self-play games per learning iteration", ge=0)
    BUFFER_CAPACITY: int = Field(default=50_000, description="Replay buffer capacity in examples", gt=0)

    # Training Configuration
    EPOCHS: int = Field(default=5, description="Epochs per training run or iteration", ge=0)
    BATCH_SIZE: int = Field(default=64, description="Minibatch size", gt=0)
    LEARNING_RATE: float = Field(default=1e-3, description="Adam step size", gt=0)
    ADAM_BETA1: float = Field(default=0.9, description="Adam first-moment decay", ge=0.0, lt=1.0)
    ADAM_BETA2: float = Field(default=0.999, description="Adam second-moment decay", ge=0.0, lt=1.0)
    ADAM_EPSILON: float = Field(default=1e-8, description="Adam denominator floor", gt=0)
    VALIDATION_FRACTION: float = Field(
        default=0.1, description="Share of pretraining examples held out", ge=0.0, lt=1.0
    )

    # Model Configuration
    HIDDEN_SIZES: str = Field(default="256,256", description="Comma-separated backbone widths")
    VALUE_HIDDEN: int = Field(default=64, description="Value head projection width", gt=0)

    # Notation Configuration
    ICCS_RANKS: str = Field(default="0-9", description="Rank numbering of ICCS moves in records: 0-9 or 1-10")

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        """Validate that LOG_LEVEL is a valid logging level."""
        valid_levels = {"TRACE", "DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        upper_value = value.upper()
        if upper_value not in valid_levels:
            raise ValueError(f"LOG_LEVEL must be one of {valid_levels}, got {value}")
        return upper_value

    @field_validator("HIDDEN_SIZES")
    @classmethod
    def validate_hidden_sizes(cls, value: str) -> str:
        parts = [part.strip() for part in value.split(",")]
        if not parts or not all(part.isdigit() and int(part) > 0 for part in parts):
            raise ValueError(f"HIDDEN_SIZES must be comma-separated positive integers, got {value!r}")
        return ",".join(parts)

    @field_validator("ICCS_RANKS")
    @classmethod
    def validate_iccs_ranks(cls, value: str) -> str:
        if value not in {"0-9", "1-10"}:
            raise ValueError(f"ICCS_RANKS must be '0-9' or '1-10', got {value!r}")
        return value

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(int(part) for part in self.HIDDEN_SIZES.split(","))

    @property
    def ranks_one_based(self) -> bool:
        return self.ICCS_RANKS == "1-10"

    def search_config(self, temperature: float = 1.0) -> SearchConfig:
        return SearchConfig(
            simulations=self.SIMULATIONS,
            c_puct=self.C_PUCT,
            dirichlet_epsilon=self.DIRICHLET_EPSILON,
            dirichlet_alpha=self.DIRICHLET_ALPHA,
            temperature=temperature,
            move_cap=self.MOVE_CAP,
            seed=self.SEED,
        )

    def selfplay_config(self, show_progress: bool = False) -> SelfPlayConfig:
        return SelfPlayConfig(
            search=self.search_config(),
            greedy_after=self.GREEDY_AFTER,
            move_cap=self.MOVE_CAP,
            games_per_iteration=self.GAMES_PER_ITERATION,
            buffer_capacity=self.BUFFER_CAPACITY,
            epochs=self.EPOCHS,
            batch_size=self.BATCH_SIZE,
            seed=self.SEED,
            jobs=self.JOBS,
            show_progress=show_progress,
        )

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(hidden_sizes=self.hidden_sizes, value_hidden=self.VALUE_HIDDEN, seed=self.SEED)

    def adam_hyperparameters(self) -> AdamHyperparameters:
        return AdamHyperparameters(
            learning_rate=self.LEARNING_RATE,
            beta1=self.ADAM_BETA1,
            beta2=self.ADAM_BETA2,
            epsilon=self.ADAM_EPSILON,
        )


def normalize_key(key: str) -> str:
    """Config-file and flag keys are case-insensitive and treat '-' like '_'."""
    return key.strip().upper().replace("-", "_")


def load_config_file(path: Union[str, Path]) -> dict[str, str]:
    """
    Read a plain key=value config file.

    Blank lines and lines starting with '#' are ignored.

    Raises:
        ConfigError: Unreadable file, a line without '=', or an unknown key (with its line number).
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            raise ConfigError(f"{path}:{number}: expected key=value, got {raw!r}")
        name = normalize_key(key)
        if name not in Settings.model_fields:
            raise ConfigError(f"{path}:{number}: unknown setting {key.strip()!r}")
        values[name] = value.strip()
    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values


def build_settings(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Settings:
    """
    Settings with precedence flags > config file > environment > defaults.

    Args:
        config_path: Optional key=value file.
        overrides: Flag values by setting name; None values are ignored.

    Raises:
        ConfigError: The file is malformed or a value fails validation.
    """
    values: dict[str, Any] = load_config_file(config_path) if config_path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[normalize_key(key)] = value
    try:
        return Settings(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
        )
        raise ConfigError(f"Invalid settings: {problems}") from exc

