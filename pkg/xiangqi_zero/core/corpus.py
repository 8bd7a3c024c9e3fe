"""
Game-record corpus tools: streaming ingestion, statistics, legality validation and export to the
training-example dataset format.

Files are read line by line; a record ends where a tag line follows movetext or a blank line.
Malformed records are counted and skipped, never fatal. Unreadable paths raise CorpusReadError.
"""

from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path
from typing import Optional, Union

from loguru import logger

from xiangqi_zero.core.errors import (
    CorpusReadError,
    IllegalRecordMove,
    InvalidPosition,
    NotationSyntaxError,
    UnsupportedFormat,
)
from xiangqi_zero.core.notation import GameRecord, RecordResult, parse_game_record
from xiangqi_zero.core.selfplay import cloning_examples, replay_record
from xiangqi_zero.database.example_store import encode_lines, read_examples, write_dataset_bytes
from xiangqi_zero.models.schemas import CorpusStats, ParseErrorLocation, RecordValidation, ValidationReport

PathLike = Union[str, Path]

RECORD_ERRORS = (NotationSyntaxError, UnsupportedFormat)


def iter_record_texts(path: PathLike) -> Iterator[tuple[int, str]]:
    """
    Yield (first line number, record text) for each record in a file without loading it whole.

    Raises:
        CorpusReadError: The file cannot be opened or read.
    """
    try:
        with open(path, encoding="utf-8", errors="replace") as handle:
            buffer: list[str] = []
            first_line = 1
            has_movetext = False
            # a blank line closed the tag block
            tags_closed = False
            for number, line in enumerate(handle, start=1):
                stripped = line.strip()
                if stripped.startswith("[") and (has_movetext or tags_closed):
                    yield first_line, "".join(buffer)
                    buffer, has_movetext, tags_closed = [], False, False
                if not buffer:
                    if not stripped:
                        continue
                    first_line = number
                buffer.append(line)
                if not stripped:
                    tags_closed = True
                elif not stripped.startswith("["):
                    has_movetext = True
            if buffer:
                yield first_line, "".join(buffer)
    except OSError as exc:
        raise CorpusReadError(str(path), exc) from exc


def iter_records(
    path: PathLike, ranks_one_based: bool = False
) -> Iterator[tuple[int, int, Union[GameRecord, Exception]]]:
    """Yield (record index, first line, parsed record or the parse error) for every record in `path`."""
    for index, (first_line, text) in enumerate(iter_record_texts(path)):
        try:
            yield index, first_line, parse_game_record(text, ranks_one_based, first_line)
        except RECORD_ERRORS as exc:
            yield index, first_line, exc


def _error_location(path: PathLike, first_line: int, exc: Exception) -> ParseErrorLocation:
    line = getattr(exc, "line", None) or first_line
    return ParseErrorLocation(path=str(path), line=line, column=getattr(exc, "column", None), message=str(exc))


def _scan_file(path: PathLike, ranks_one_based: bool) -> CorpusStats:
    counts = {result: 0 for result in RecordResult}
    total_moves = 0
    parse_errors = 0
    locations: list[ParseErrorLocation] = []
    for _, first_line, parsed in iter_records(path, ranks_one_based):
        if isinstance(parsed, Exception):
            parse_errors += 1
            if len(locations) < CorpusStats.MAX_LOCATIONS:
                locations.append(_error_location(path, first_line, parsed))
            logger.debug(f"{path}:{first_line}: skipping record: {parsed}")
            continue
        counts[parsed.result] += 1
        total_moves += len(parsed.moves)
    return CorpusStats(
        games=sum(counts.values()),
        total_moves=total_moves,
        red_wins=counts[RecordResult.RED_WIN],
        black_wins=counts[RecordResult.BLACK_WIN],
        draws=counts[RecordResult.DRAW],
        unknown_results=counts[RecordResult.UNKNOWN],
        parse_errors=parse_errors,
        error_locations=locations,
    )


def scan_corpus(paths: Iterable[PathLike], ranks_one_based: bool = False) -> CorpusStats:
    """Tally games, moves and results over all files; unparseable records count as parse errors."""
    stats = CorpusStats()
    for path in paths:
        file_stats = _scan_file(path, ranks_one_based)
        logger.info(f"Scanned {path}: {file_stats.games} games, {file_stats.parse_errors} parse errors")
        stats = stats.merge(file_stats)
    return stats


def _validate_record(
    path: PathLike, index: int, first_line: int, parsed: Union[GameRecord, Exception]
) -> RecordValidation:
    if isinstance(parsed, Exception):
        return RecordValidation(path=str(path), index=index, line=first_line, verdict="syntax", message=str(parsed))
    try:
        replay_record(parsed)
    except IllegalRecordMove as exc:
        line = parsed.tokens[exc.ply].line if exc.ply < len(parsed.tokens) else first_line
        return RecordValidation(
            path=str(path),
            index=index,
            line=line,
            verdict="illegal",
            ply=exc.ply,
            move=exc.move_text,
            message=str(exc),
        )
    except (NotationSyntaxError, InvalidPosition) as exc:
        return RecordValidation(
            path=str(path), index=index, line=first_line, verdict="syntax", message=f"Bad start position: {exc}"
        )
    return RecordValidation(path=str(path), index=index, line=first_line, verdict="legal")


def validate_corpus(paths: Iterable[PathLike], ranks_one_based: bool = False) -> ValidationReport:
    """Replay every record; report the first illegal ply of each bad record and the legality rate."""
    report = ValidationReport()
    for path in paths:
        for index, first_line, parsed in iter_records(path, ranks_one_based):
            verdict = _validate_record(path, index, first_line, parsed)
            if verdict.verdict != "legal":
                logger.warning(f"{path}:{verdict.line}: record {index} {verdict.verdict}: {verdict.message}")
            report.records.append(verdict)
    logger.info(
        f"Validated {len(report.records)} records: {report.legal} legal, {report.illegal} illegal, "
        f"{report.syntax_errors} syntax errors (legality rate {report.legality_rate:.4f})"
    )
    return report


def export_training_set(
    paths: Sequence[PathLike],
    out_path: PathLike,
    limit: Optional[int] = None,
    ranks_one_based: bool = False,
) -> int:
    """
    Write behavior-cloning examples for every legal record, in file order then ply order.

    Records that fail to parse or replay are skipped whole. `limit` keeps a prefix of that order.

    Returns:
        Number of examples written.
    """
    if limit is not None and limit < 0:
        raise ValueError(f"limit must be non-negative, got {limit}")
    chunks: list[bytes] = []
    written = exported = skipped = 0
    for path in paths:
        for index, first_line, parsed in iter_records(path, ranks_one_based):
            if limit is not None and written >= limit:
                break
            if isinstance(parsed, Exception):
                skipped += 1
                continue
            try:
                examples = cloning_examples(parsed)
            except (IllegalRecordMove, NotationSyntaxError, InvalidPosition) as exc:
                logger.warning(f"{path}:{first_line}: skipping record {index}: {exc}")
                skipped += 1
                continue
            if limit is not None:
                examples = examples[: limit - written]
            chunks.append(encode_lines(examples))
            written += len(examples)
            exported += 1
    if skipped:
        logger.warning(f"Skipped {skipped} corrupt records")
    write_dataset_bytes(
        out_path,
        b"".join(chunks),
        written,
        sources=[str(path) for path in paths],
        records_exported=exported,
        records_skipped=skipped,
    )
    return written


load_training_set = read_examples
