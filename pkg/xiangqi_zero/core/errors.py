"""
Exception hierarchy for xiangqi-zero.
Library code raises these; orchestrators (corpus scanning, the CLI) catch them by type.
"""

from typing import Optional


class XiangqiZeroError(Exception):
    """Base class for every error raised by this package."""


class IllegalMove(XiangqiZeroError, ValueError):
    """A move was applied that is not in legal_moves(state)."""


class InvalidPosition(XiangqiZeroError, ValueError):
    """A board violates a GameState invariant (general count, palace, elephant points...)."""


class NotationSyntaxError(XiangqiZeroError, ValueError):
    """Malformed FEN, ICCS move or game record text."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class UnsupportedFormat(XiangqiZeroError, ValueError):
    """A game record declares a move format other than ICCS."""


class DegenerateAction(XiangqiZeroError, ValueError):
    """An action index on the from == to diagonal was decoded."""


class NoLegalAction(XiangqiZeroError, ValueError):
    """A policy was masked with an all-false legal mask."""


class ShapeMismatch(XiangqiZeroError, ValueError):
    """Model inputs or parameters disagree with the network configuration."""


class EmptyDataset(XiangqiZeroError, ValueError):
    """Training was requested on zero examples."""


class NoChildren(XiangqiZeroError):
    """Selection was attempted on a node without edges."""


class NoVisits(XiangqiZeroError):
    """A visit-count policy was requested from a node with no visits."""


class TerminalRoot(XiangqiZeroError):
    """Search was started from a finished game."""


class IllegalRecordMove(XiangqiZeroError):
    """A recorded game contains a move that is illegal at the given ply."""

    def __init__(self, ply: int, move_text: str, reason: str = "not a legal move") -> None:
        self.ply = ply
        self.move_text = move_text
        super().__init__(f"Illegal move {move_text} at ply {ply}: {reason}")


class CorpusReadError(XiangqiZeroError, OSError):
    """A corpus path could not be read."""

    def __init__(self, path: str, cause: OSError) -> None:
        self.path = path
        super().__init__(f"Cannot read {path}: {cause}")


class CheckpointFormatError(XiangqiZeroError, ValueError):
    """A checkpoint file has a bad header or is truncated."""


class ConfigError(XiangqiZeroError, ValueError):
    """A config file line could not be parsed."""


class DatasetFormatError(XiangqiZeroError, ValueError):
    """A dataset line does not decode to a training example."""

    def __init__(self, path: str, line: int, reason: str) -> None:
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {reason}")
