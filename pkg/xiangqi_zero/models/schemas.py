"""
Data models and schemas for xiangqi-zero.
Defines the configurations and reports passed between the engine, the learning loop and the tools.
Array-carrying types (states, tensors, parameters) live next to their code as dataclasses.
"""

from typing import ClassVar, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SearchConfig(BaseModel):
    """PUCT search parameters for one move decision."""

    model_config = ConfigDict(frozen=True)

    simulations: int = Field(default=200, description="Simulations per move (root expansion excluded)", gt=0)
    c_puct: float = Field(default=1.5, description="Exploration constant c in the PUCT bound", gt=0)
    dirichlet_epsilon: float = Field(default=0.25, description="Weight of root Dirichlet noise", ge=0.0, le=1.0)
    dirichlet_alpha: float = Field(default=0.3, description="Dirichlet concentration over root edges", gt=0)
    temperature: float = Field(default=1.0, description="Visit-count temperature; 0 selects the most visited", ge=0)
    move_cap: int = Field(default=200, description="Ply count at which positions inside the tree are drawn", gt=0)
    seed: int = Field(default=0, description="RNG seed used when the caller does not pass a generator", ge=0)


class SelfPlayConfig(BaseModel):
    """Game generation and learning-loop parameters."""

    model_config = ConfigDict(frozen=True)

    search: SearchConfig = Field(default_factory=SearchConfig, description="Per-move search configuration")
    greedy_after: int = Field(default=12, description="Plies sampled at temperature 1 before switching to 0", ge=0)
    move_cap: int = Field(default=200, description="Games stop as draws once this many plies were played", gt=0)
    games_per_iteration: int = Field(default=10, description="Self-play games generated per iteration", ge=0)
    buffer_capacity: int = Field(default=50_000, description="Replay buffer size (FIFO eviction)", gt=0)
    epochs: int = Field(default=5, description="Training epochs over the buffer per iteration", ge=0)
    batch_size: int = Field(default=64, description="Minibatch size", gt=0)
    seed: int = Field(default=0, description="Base seed; game g of iteration i uses a derived stream", ge=0)
    jobs: int = Field(default=1, description="Games generated concurrently", ge=1)
    log_every: int = Field(default=10, description="Log the current FEN every this many plies (0 disables)", ge=0)
    show_progress: bool = Field(default=False, description="Render tqdm progress bars on stderr")

    def tree_config(self, temperature: float) -> SearchConfig:
        """The search configuration for one ply, with this game's cap and the scheduled temperature."""
        return self.search.model_copy(update={"temperature": temperature, "move_cap": self.move_cap})

    def temperature_at(self, ply: int) -> float:
        return 1.0 if ply < self.greedy_after else 0.0


class NetworkConfig(BaseModel):
    """Layer sizes of the dense policy-value model."""

    model_config = ConfigDict(frozen=True)

    input_size: int = Field(default=1350, description="Flattened plane size (10 x 9 x 15)", gt=0)
    hidden_sizes: tuple[int, ...] = Field(default=(256, 256), description="Backbone layer widths (ReLU)")
    policy_size: int = Field(default=8100, description="Policy head outputs (from*90+to)", gt=0)
    value_hidden: int = Field(default=64, description="Value head projection width", gt=0)
    seed: int = Field(default=0, description="Initialization seed", ge=0)

    @field_validator("hidden_sizes")
    @classmethod
    def validate_hidden_sizes(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value or any(size <= 0 for size in value):
            raise ValueError(f"hidden_sizes must be non-empty and positive, got {value}")
        return value

    @property
    def layer_sizes(self) -> list[int]:
        """Sizes as stored in checkpoint headers: [input, hidden..., policy, value_hidden]."""
        return [self.input_size, *self.hidden_sizes, self.policy_size, self.value_hidden]

    @classmethod
    def from_layer_sizes(cls, sizes: list[int], seed: int = 0) -> "NetworkConfig":
        if len(sizes) < 4:
            raise ValueError(f"Need at least 4 layer sizes, got {sizes}")
        return cls(
            input_size=sizes[0],
            hidden_sizes=tuple(sizes[1:-2]),
            policy_size=sizes[-2],
            value_hidden=sizes[-1],
            seed=seed,
        )


class AdamHyperparameters(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(default=1e-3, description="Step size", gt=0)
    beta1: float = Field(default=0.9, description="First-moment decay", ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, description="Second-moment decay", ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, description="Denominator floor", gt=0)


class LossBreakdown(BaseModel):
    """Policy cross-entropy plus value squared error, weighted 1:1."""

    policy_loss: float = Field(..., description="Cross-entropy against the target policy", ge=0)
    value_loss: float = Field(..., description="Squared error against the outcome", ge=0)
    total: float = Field(..., description="policy_loss + value_loss")

    @classmethod
    def of(cls, policy_loss: float, value_loss: float) -> "LossBreakdown":
        return cls(policy_loss=policy_loss, value_loss=value_loss, total=policy_loss + value_loss)


class ExampleMetrics(BaseModel):
    """Loss and accuracy of a model over a set of examples."""

    loss: LossBreakdown
    policy_accuracy: float = Field(..., description="Share of examples whose masked argmax is the target", ge=0, le=1)
    value_mae: float = Field(..., description="Mean absolute value error", ge=0, le=2)
    examples: int = Field(..., description="Examples measured", ge=0)


class EpochMetrics(ExampleMetrics):
    epoch: int = Field(default=1, description="1-based epoch number", ge=1)
    steps: int = Field(default=0, description="Optimizer steps taken this epoch", ge=0)
    held_out: Optional[ExampleMetrics] = Field(None, description="Metrics on the validation split, if any")


class IterationReport(BaseModel):
    """One learning-loop iteration: generation statistics and training losses."""

    iteration: int = Field(default=0, description="0-based iteration index", ge=0)
    games: int = Field(..., description="Self-play games generated", ge=0)
    avg_length: float = Field(..., description="Mean game length in plies", ge=0)
    avg_reward: float = Field(..., description="Red's mean outcome", ge=-1, le=1)
    examples_collected: int = Field(default=0, description="Examples appended to the buffer", ge=0)
    buffer_size: int = Field(default=0, description="Buffer size after appending", ge=0)
    epochs: list[EpochMetrics] = Field(default_factory=list, description="Per-epoch training metrics")

    @property
    def losses(self) -> list[LossBreakdown]:
        return [metrics.loss for metrics in self.epochs]

    def summary_line(self) -> str:
        return (
            f"Iteration {self.iteration + 1}: games {self.games}, "
            f"avg length {self.avg_length:.1f}, avg reward ({self.avg_reward:.2f})"
        )


class MatchReport(BaseModel):
    """Results from player A's perspective."""

    games: int = Field(..., description="Games played", ge=0)
    wins: int = Field(default=0, ge=0)
    losses: int = Field(default=0, ge=0)
    draws: int = Field(default=0, ge=0)
    avg_length: float = Field(default=0.0, description="Mean game length in plies", ge=0)

    @model_validator(mode="after")
    def check_conservation(self) -> "MatchReport":
        if self.wins + self.losses + self.draws != self.games:
            raise ValueError(
                f"wins + losses + draws must equal games ({self.wins}+{self.losses}+{self.draws} != {self.games})"
            )
        return self

    @property
    def score(self) -> float:
        """Fraction of match points for A (win 1, draw 0.5)."""
        if self.games == 0:
            return 0.0
        return (self.wins + 0.5 * self.draws) / self.games


class ParseErrorLocation(BaseModel):
    path: str
    line: int = Field(..., description="1-based line where the failing record starts or fails", ge=1)
    column: Optional[int] = Field(None, ge=1)
    message: str


class CorpusStats(BaseModel):
    """Result tallies over a set of record files."""

    MAX_LOCATIONS: ClassVar[int] = 10

    games: int = Field(default=0, ge=0)
    total_moves: int = Field(default=0, ge=0)
    red_wins: int = Field(default=0, ge=0)
    black_wins: int = Field(default=0, ge=0)
    draws: int = Field(default=0, ge=0)
    unknown_results: int = Field(default=0, ge=0)
    parse_errors: int = Field(default=0, description="Records skipped as unparseable", ge=0)
    error_locations: list[ParseErrorLocation] = Field(
        default_factory=list, description="First few parse error locations"
    )

    @model_validator(mode="after")
    def check_conservation(self) -> "CorpusStats":
        if self.red_wins + self.black_wins + self.draws + self.unknown_results != self.games:
            raise ValueError("Result categories must sum to games")
        return self

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            games=self.games + other.games,
            total_moves=self.total_moves + other.total_moves,
            red_wins=self.red_wins + other.red_wins,
            black_wins=self.black_wins + other.black_wins,
            draws=self.draws + other.draws,
            unknown_results=self.unknown_results + other.unknown_results,
            parse_errors=self.parse_errors + other.parse_errors,
            error_locations=(self.error_locations + other.error_locations)[: self.MAX_LOCATIONS],
        )


class RecordValidation(BaseModel):
    """Replay verdict for one record."""

    path: str
    index: int = Field(..., description="0-based record number within the file", ge=0)
    line: int = Field(..., description="Line on which the record starts", ge=1)
    verdict: Literal["legal", "illegal", "syntax"]
    ply: Optional[int] = Field(None, description="0-based ply of the first illegal move", ge=0)
    move: Optional[str] = Field(None, description="Offending move token")
    message: Optional[str] = None


class ValidationReport(BaseModel):
    records: list[RecordValidation] = Field(default_factory=list)

    @property
    def legal(self) -> int:
        return sum(1 for record in self.records if record.verdict == "legal")

    @property
    def illegal(self) -> int:
        return sum(1 for record in self.records if record.verdict == "illegal")

    @property
    def syntax_errors(self) -> int:
        return sum(1 for record in self.records if record.verdict == "syntax")

    @property
    def legality_rate(self) -> float:
        """Legal records over replayed (legal + illegal) records; syntax failures are excluded."""
        replayed = self.legal + self.illegal
        return 1.0 if replayed == 0 else self.legal / replayed

    def flagged(self) -> list[RecordValidation]:
        return [record for record in self.records if record.verdict != "legal"]


class ExampleLine(BaseModel):
    """
    One dataset row. Behavior-cloning rows carry target/action_index; self-play rows carry a sparse
    policy. Planes are re-derived from fen on load.
    """

    fen: str
    side: Literal["w", "b"]
    target: Optional[str] = Field(None, description="Played move in ICCS")
    action_index: Optional[int] = Field(None, ge=0, lt=8100)
    policy: Optional[dict[int, float]] = Field(None, description="Sparse action_index -> probability")
    z: float = Field(..., ge=-1, le=1)

    @model_validator(mode="after")
    def check_target(self) -> "ExampleLine":
        has_action = self.action_index is not None
        if has_action == (self.policy is not None):
            raise ValueError("Exactly one of action_index or policy must be present")
        if has_action and self.target is None:
            raise ValueError("Cloning rows need the ICCS target")
        if self.policy is not None:
            self.policy = dict(sorted(self.policy.items()))
        return self


class DatasetManifest(BaseModel):
    """Sidecar written next to every exported dataset."""

    format_version: int = 1
    dataset: str = Field(..., description="Dataset file name")
    sources: list[str] = Field(default_factory=list, description="Input files in processing order")
    examples: int = Field(..., ge=0)
    records_exported: int = Field(default=0, ge=0)
    records_skipped: int = Field(default=0, description="Unparseable or illegal records left out", ge=0)
    sha256: str = Field(..., description="Digest of the dataset bytes")
