"""
Text notations: Xiangqi FEN, ICCS coordinate moves, PGN-style game records and a board renderer.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from loguru import logger

from xiangqi_zero.core.errors import NotationSyntaxError, UnsupportedFormat
from xiangqi_zero.core.rules import (
    FILES,
    NUM_SQUARES,
    RANKS,
    Color,
    GameState,
    Move,
    Piece,
    PieceKind,
    initial_position,
    piece,
    validate_position,
)

START_FEN = "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR w"

FILE_LETTERS = "abcdefghi"

_KIND_LETTERS: dict[PieceKind, str] = {
    PieceKind.GENERAL: "k",
    PieceKind.ADVISOR: "a",
    PieceKind.ELEPHANT: "b",
    PieceKind.HORSE: "n",
    PieceKind.ROOK: "r",
    PieceKind.CANNON: "c",
    PieceKind.SOLDIER: "p",
}
# Input also accepts e (elephant) and h (horse).
_LETTER_KINDS: dict[str, PieceKind] = {letter: kind for kind, letter in _KIND_LETTERS.items()}
_LETTER_KINDS.update({"e": PieceKind.ELEPHANT, "h": PieceKind.HORSE})

_SIDE_FIELDS = {"w": Color.RED, "r": Color.RED, "b": Color.BLACK}


def piece_letter(occupant: Piece) -> str:
    letter = _KIND_LETTERS[occupant.kind]
    return letter.upper() if occupant.color is Color.RED else letter


# ---------------------------------------------------------------------------
# FEN
# ---------------------------------------------------------------------------


def parse_fen(text: str) -> GameState:
    """
    Parse a Xiangqi FEN: ten rank fields from rank 9 down to rank 0, then an optional side field.

    Raises:
        NotationSyntaxError: Wrong field count or an unexpected character.
        InvalidPosition: The placement breaks a GameState invariant.
    """
    fields = text.strip().split()
    if not fields:
        raise NotationSyntaxError("Empty FEN")
    rows = fields[0].split("/")
    if len(rows) != RANKS:
        raise NotationSyntaxError(f"FEN needs {RANKS} rank fields, got {len(rows)}")

    board: list[Optional[Piece]] = [None] * NUM_SQUARES
    column = 1
    for row_number, row in enumerate(rows):
        rank = RANKS - 1 - row_number
        file = 0
        for char in row:
            if char.isdigit():
                file += int(char)
            elif char.lower() in _LETTER_KINDS:
                if file >= FILES:
                    raise NotationSyntaxError(f"Rank {rank} overflows the board", column=column)
                color = Color.RED if char.isupper() else Color.BLACK
                board[rank * FILES + file] = piece(color, _LETTER_KINDS[char.lower()])
                file += 1
            else:
                raise NotationSyntaxError(f"Unexpected character {char!r} in FEN", column=column)
            column += 1
        if file != FILES:
            raise NotationSyntaxError(f"Rank {rank} describes {file} files instead of {FILES}")
        column += 1

    side = Color.RED
    if len(fields) > 1:
        side_field = fields[1].lower()
        if side_field not in _SIDE_FIELDS:
            raise NotationSyntaxError(f"Unknown side-to-move field {fields[1]!r}")
        side = _SIDE_FIELDS[side_field]

    frozen = tuple(board)
    validate_position(frozen, side)
    return GameState(frozen, side)


def emit_fen(state: GameState) -> str:
    """Canonical FEN: maximal digit runs, uppercase Red, side field 'w' or 'b'."""
    rows = []
    for rank in range(RANKS - 1, -1, -1):
        row = ""
        empty = 0
        for file in range(FILES):
            occupant = state.board[rank * FILES + file]
            if occupant is None:
                empty += 1
                continue
            if empty:
                row += str(empty)
                empty = 0
            row += piece_letter(occupant)
        if empty:
            row += str(empty)
        rows.append(row)
    side = "w" if state.side_to_move is Color.RED else "b"
    return f"{'/'.join(rows)} {side}"


# ---------------------------------------------------------------------------
# ICCS moves
# ---------------------------------------------------------------------------

_ICCS_PATTERN = re.compile(r"^([a-iA-I])([0-9])-?([a-iA-I])([0-9])$")
_ICCS_ONE_BASED_PATTERN = re.compile(r"^([a-iA-I])(10|[1-9])-?([a-iA-I])(10|[1-9])$")


def parse_iccs_move(text: str, ranks_one_based: bool = False) -> Move:
    """
    Parse `<file><rank>[-]<file><rank>`.

    Args:
        text: Move text such as "h2-e2" or "b0c2".
        ranks_one_based: Accept ranks 1..10 (shifted down by one) instead of 0..9.

    Raises:
        NotationSyntaxError: Bad letter or digit, or from == to.
    """
    pattern = _ICCS_ONE_BASED_PATTERN if ranks_one_based else _ICCS_PATTERN
    match = pattern.match(text.strip())
    if match is None:
        raise NotationSyntaxError(f"Not an ICCS move: {text!r}")
    offset = 1 if ranks_one_based else 0
    from_file = FILE_LETTERS.index(match.group(1).lower())
    to_file = FILE_LETTERS.index(match.group(3).lower())
    from_rank = int(match.group(2)) - offset
    to_rank = int(match.group(4)) - offset
    src = from_rank * FILES + from_file
    dst = to_rank * FILES + to_file
    if src == dst:
        raise NotationSyntaxError(f"ICCS move does not change square: {text!r}")
    return Move(src, dst)


def square_name(index: int) -> str:
    return f"{FILE_LETTERS[index % FILES]}{index // FILES}"


def emit_iccs_move(move: Move) -> str:
    """Lowercase hyphenated form, e.g. "h2-e2"."""
    return f"{square_name(move.src)}-{square_name(move.dst)}"


# ---------------------------------------------------------------------------
# Game records
# ---------------------------------------------------------------------------


class RecordResult(Enum):
    RED_WIN = "1-0"
    BLACK_WIN = "0-1"
    DRAW = "1/2-1/2"
    UNKNOWN = "*"

    @property
    def red_score(self) -> int:
        return {RecordResult.RED_WIN: 1, RecordResult.BLACK_WIN: -1}.get(self, 0)

    @classmethod
    def from_red_score(cls, score: int) -> "RecordResult":
        if score > 0:
            return cls.RED_WIN
        if score < 0:
            return cls.BLACK_WIN
        return cls.DRAW


_RESULT_TOKENS = {result.value: result for result in RecordResult}


@dataclass(frozen=True)
class MoveToken:
    """Where a move came from in the record text."""

    text: str
    line: int
    column: int


@dataclass
class GameRecord:
    tags: dict[str, str] = field(default_factory=dict)
    moves: list[Move] = field(default_factory=list)
    result: RecordResult = RecordResult.UNKNOWN
    tokens: list[MoveToken] = field(default_factory=list, repr=False, compare=False)

    def start_state(self) -> GameState:
        """The FEN tag position, or the standard start when absent."""
        fen = self.tags.get("FEN")
        return parse_fen(fen) if fen else initial_position()


_TAG_PATTERN = re.compile(r'^\[\s*([A-Za-z0-9_]+)\s+"((?:[^"\\]|\\.)*)"\s*\]\s*$')
_MOVE_NUMBER_PATTERN = re.compile(r"^([0-9]+)\.+(.*)$")


def parse_game_record(text: str, ranks_one_based: bool = False, first_line: int = 1) -> GameRecord:
    """
    Parse one PGN-style record: tag pairs, a blank line, then ICCS movetext.

    Move numbers ("1." / "1...") are skipped, brace comments are skipped, variations are rejected
    and an optional result token ends the movetext.

    Args:
        text: Record text (LF or CRLF).
        ranks_one_based: Read ranks 1..10 instead of 0..9.
        first_line: Line number of the first line, for error locations inside larger files.

    Raises:
        NotationSyntaxError: With line/column of the offending token.
        UnsupportedFormat: A Format tag other than ICCS.
    """
    lines = text.lstrip("\ufeff").splitlines()
    record = GameRecord()
    index = 0
    while index < len(lines) and not lines[index].strip():
        index += 1
    while index < len(lines) and lines[index].lstrip().startswith("["):
        match = _TAG_PATTERN.match(lines[index].strip())
        if match is None:
            raise NotationSyntaxError("Malformed tag pair", line=first_line + index, column=1)
        record.tags[match.group(1)] = match.group(2).replace('\\"', '"')
        index += 1

    declared_format = record.tags.get("Format")
    if declared_format is not None and declared_format.strip().upper() != "ICCS":
        raise UnsupportedFormat(f"Unsupported move format: {declared_format!r}")

    tag_result: Optional[RecordResult] = None
    if "Result" in record.tags:
        value = record.tags["Result"].strip()
        if value not in _RESULT_TOKENS:
            raise NotationSyntaxError(f"Unknown Result tag value {value!r}", line=first_line)
        tag_result = _RESULT_TOKENS[value]

    token_result = _parse_movetext(lines, index, record, ranks_one_based, first_line)
    if tag_result is not None and token_result is not None and tag_result is not token_result:
        logger.warning(
            f"Record at line {first_line}: Result tag {tag_result.value!r} "
            f"overrides movetext result {token_result.value!r}"
        )
    record.result = tag_result or token_result or RecordResult.UNKNOWN
    return record


def _parse_movetext(
    lines: list[str],
    start: int,
    record: GameRecord,
    ranks_one_based: bool,
    first_line: int,
) -> Optional[RecordResult]:
    in_comment = False
    result: Optional[RecordResult] = None
    for offset, line in enumerate(lines[start:]):
        line_number = first_line + start + offset
        position = 0
        while position < len(line):
            char = line[position]
            if in_comment:
                if char == "}":
                    in_comment = False
                position += 1
                continue
            if char.isspace():
                position += 1
                continue
            if char == "{":
                in_comment = True
                position += 1
                continue
            if char == ";":
                break
            column = position + 1
            if char in "()":
                raise NotationSyntaxError("Variations are not supported", line_number, column)
            end = position
            while end < len(line) and not line[end].isspace() and line[end] not in "{}();":
                end += 1
            token = line[position:end]
            position = end
            if result is not None:
                raise NotationSyntaxError(f"Token {token!r} after result", line_number, column)
            if token in _RESULT_TOKENS:
                result = _RESULT_TOKENS[token]
                continue
            number = _MOVE_NUMBER_PATTERN.match(token)
            if number is not None:
                column += len(token) - len(number.group(2))
                token = number.group(2)
                if not token:
                    continue
            try:
                move = parse_iccs_move(token, ranks_one_based)
            except NotationSyntaxError as exc:
                raise NotationSyntaxError(str(exc), line_number, column) from exc
            record.moves.append(move)
            record.tokens.append(MoveToken(token, line_number, column))
    if in_comment:
        raise NotationSyntaxError("Unterminated comment", first_line + len(lines) - 1)
    return result


def _escape_tag(value: str) -> str:
    return value.replace("\"", "\\\"")


def emit_game_record(record: GameRecord) -> str:
    """Serialize a record: tags (Format/Result kept consistent), blank line, numbered moves."""
    tags = dict(record.tags)
    tags["Format"] = "ICCS"
    tags["Result"] = record.result.value
    lines = [f"[{name} \"{_escape_tag(value)}\"]" for name, value in tags.items()]
    lines.append("")
    start = record.start_state()
    red_first = start.side_to_move is Color.RED
    parts: list[str] = []
    number = 1
    for ply, move in enumerate(record.moves):
        text = emit_iccs_move(move)
        if ply == 0 and not red_first:
            parts.append(f"{number}... {text}")
            number += 1
        elif (ply % 2 == 0) == red_first:
            parts.append(f"{number}. {text}")
        else:
            parts.append(text)
            number += 1
    parts.append(record.result.value)
    row: list[str] = []
    for part in parts:
        if row and len(" ".join(row + [part])) > 79:
            lines.append(" ".join(row))
            row = []
        row.append(part)
    if row:
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_board(state: GameState) -> str:
    """Ten rank lines (rank 9 first), a river marker between ranks 5 and 4, and a file footer."""
    lines = []
    for rank in range(RANKS - 1, -1, -1):
        glyphs = []
        for file in range(FILES):
            occupant = state.board[rank * FILES + file]
            glyphs.append("." if occupant is None else piece_letter(occupant))
        lines.append(f"{rank} {' '.join(glyphs)}")
        if rank == 5:
            lines.append("  ~~~~~ river ~~~~~")
    lines.append(f"  {' '.join(FILE_LETTERS)}")
    return "\n".join(lines)
