"""
Training-example storage: the JSON-lines dataset format, its manifest sidecar, and the in-memory
replay buffer used by the learning loop.

Each line holds a position as FEN plus its target; planes are re-derived on load so the file stays
valid while the plane layout evolves.
"""

import hashlib
import threading
from collections import deque
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from xiangqi_zero.core.encoding import decode_action, encode_state, legal_action_indices
from xiangqi_zero.core.errors import DatasetFormatError, XiangqiZeroError
from xiangqi_zero.core.network import TrainingExample
from xiangqi_zero.core.notation import emit_iccs_move, parse_fen
from xiangqi_zero.core.rules import Color
from xiangqi_zero.database.files import PathLike, write_bytes, write_text
from xiangqi_zero.models.schemas import DatasetManifest, ExampleLine


def manifest_path(dataset_path: PathLike) -> Path:
    path = Path(dataset_path)
    return path.with_name(path.name + ".manifest.json")


def example_to_line(example: TrainingExample) -> ExampleLine:
    if example.fen is None:
        raise ValueError("Example has no FEN; only examples built from positions can be stored")
    side = example.fen.rsplit(" ", 1)[-1]
    if example.target_action is not None:
        return ExampleLine(
            fen=example.fen,
            side=side,
            target=emit_iccs_move(decode_action(example.target_action)),
            action_index=example.target_action,
            z=example.z,
        )
    return ExampleLine(fen=example.fen, side=side, policy=example.target_policy, z=example.z)


def line_to_example(line: ExampleLine) -> TrainingExample:
    state = parse_fen(line.fen)
    expected_side = "w" if state.side_to_move is Color.RED else "b"
    if line.side != expected_side:
        raise ValueError(f"side {line.side!r} disagrees with FEN side {expected_side!r}")
    return TrainingExample(
        planes=encode_state(state),
        z=line.z,
        target_action=line.action_index,
        target_policy=line.policy,
        legal_actions=legal_action_indices(state),
        fen=line.fen,
    )


def encode_lines(examples: Iterable[TrainingExample]) -> bytes:
    """Serialize examples as JSON lines with a fixed key order."""
    return b"".join(
        example_to_line(example).model_dump_json(exclude_none=True).encode("utf-8") + b"\n"
        for example in examples
    )


def write_examples(
    path: PathLike,
    examples: Sequence[TrainingExample],
    sources: Sequence[str] = (),
    records_exported: int = 0,
    records_skipped: int = 0,
) -> DatasetManifest:
    """
    Write a dataset and its manifest sidecar.

    Returns:
        The manifest that was written next to the dataset.
    """
    return write_dataset_bytes(
        path,
        encode_lines(examples),
        len(examples),
        sources=sources,
        records_exported=records_exported,
        records_skipped=records_skipped,
    )


def write_dataset_bytes(
    path: PathLike,
    data: bytes,
    examples: int,
    sources: Sequence[str] = (),
    records_exported: int = 0,
    records_skipped: int = 0,
) -> DatasetManifest:
    """Write already-encoded JSON lines plus the manifest."""
    target = write_bytes(path, data)
    manifest = DatasetManifest(
        dataset=target.name,
        sources=list(sources),
        examples=examples,
        records_exported=records_exported,
        records_skipped=records_skipped,
        sha256=hashlib.sha256(data).hexdigest(),
    )
    write_text(manifest_path(target), manifest.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote {examples} examples to {target}")
    return manifest


def iter_examples(path: PathLike) -> Iterator[TrainingExample]:
    """
    Stream examples from a JSON-lines dataset.

    Raises:
        DatasetFormatError: A line is not a valid example (with its line number).
    """
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                yield line_to_example(ExampleLine.model_validate_json(raw))
            except (ValidationError, XiangqiZeroError, ValueError) as exc:
                raise DatasetFormatError(str(path), number, str(exc)) from exc


def read_examples(path: PathLike) -> list[TrainingExample]:
    examples = list(iter_examples(path))
    logger.info(f"Loaded {len(examples)} examples from {path}")
    return examples


def read_manifest(dataset_path: PathLike) -> DatasetManifest:
    return DatasetManifest.model_validate_json(manifest_path(dataset_path).read_text(encoding="utf-8"))


class ReplayBuffer:
    """Bounded FIFO of training examples; the oldest are evicted first."""

    def __init__(self, capacity: int) -> None:
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._items: deque[TrainingExample] = deque(maxlen=capacity)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._items)

    def extend(self, examples: Iterable[TrainingExample]) -> int:
        """Append examples; returns how many were evicted."""
        with self._lock:
            before = len(self._items)
            added = 0
            for example in examples:
                self._items.append(example)
                added += 1
            return max(before + added - self.capacity, 0)

    def snapshot(self) -> list[TrainingExample]:
        with self._lock:
            return list(self._items)
