# Data models
from xiangqi_zero.models.schemas import (
    AdamHyperparameters,
    CorpusStats,
    DatasetManifest,
    EpochMetrics,
    ExampleLine,
    ExampleMetrics,
    IterationReport,
    LossBreakdown,
    MatchReport,
    NetworkConfig,
    ParseErrorLocation,
    RecordValidation,
    SearchConfig,
    SelfPlayConfig,
    ValidationReport,
)

__all__ = [
    "AdamHyperparameters",
    "CorpusStats",
    "DatasetManifest",
    "EpochMetrics",
    "ExampleLine",
    "ExampleMetrics",
    "IterationReport",
    "LossBreakdown",
    "MatchReport",
    "NetworkConfig",
    "ParseErrorLocation",
    "RecordValidation",
    "SearchConfig",
    "SelfPlayConfig",
    "ValidationReport",
]
