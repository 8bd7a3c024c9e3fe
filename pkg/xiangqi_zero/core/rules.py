"""
Xiangqi rules kernel.
Board representation, legal-move generation, check detection, terminal adjudication and perft.

Squares are indexed rank-major: index = rank * 9 + file, rank 0 is Red's back rank and file 0 is
ICCS file 'a'. States are immutable; apply_move returns a new GameState.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
from typing import Iterator, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from xiangqi_zero.core.errors import IllegalMove, InvalidPosition

FILES = 9
RANKS = 10
NUM_SQUARES = FILES * RANKS

DEFAULT_MOVE_CAP = 200
HASH_SEED = 0x5851_F42D_4C95_7F2D


class Color(Enum):
    """Side in the game. Red moves first."""

    RED = "red"
    BLACK = "black"

    @property
    def opponent(self) -> "Color":
        return Color.BLACK if self is Color.RED else Color.RED


class PieceKind(IntEnum):
    """Piece kinds in channel order (General, Advisor, Elephant, Horse, Rook, Cannon, Soldier)."""

    GENERAL = 0
    ADVISOR = 1
    ELEPHANT = 2
    HORSE = 3
    ROOK = 4
    CANNON = 5
    SOLDIER = 6


@dataclass(frozen=True, slots=True)
class Piece:
    color: Color
    kind: PieceKind


# Shared instances; board tuples hold these.
PIECES: dict[tuple[Color, PieceKind], Piece] = {
    (color, kind): Piece(color, kind) for color in Color for kind in PieceKind
}


def piece(color: Color, kind: PieceKind) -> Piece:
    """Return the shared Piece instance for (color, kind)."""
    return PIECES[(color, kind)]


class Square(NamedTuple):
    """A board intersection: file 0..8 (a..i), rank 0..9."""

    file: int
    rank: int

    @property
    def index(self) -> int:
        return self.rank * FILES + self.file

    @classmethod
    def from_index(cls, index: int) -> "Square":
        if not 0 <= index < NUM_SQUARES:
            raise ValueError(f"Square index out of range: {index}")
        return cls(index % FILES, index // FILES)

    def is_valid(self) -> bool:
        return 0 <= self.file < FILES and 0 <= self.rank < RANKS


@dataclass(frozen=True, slots=True, order=True)
class Move:
    """A move between two square indices. Captures are implied by destination occupancy."""

    src: int
    dst: int

    def __post_init__(self) -> None:
        if not (0 <= self.src < NUM_SQUARES and 0 <= self.dst < NUM_SQUARES):
            raise ValueError(f"Move squares out of range: {self.src}->{self.dst}")
        if self.src == self.dst:
            raise ValueError(f"Move must change square: {self.src}")

    @classmethod
    def between(cls, from_square: Square, to_square: Square) -> "Move":
        return cls(from_square.index, to_square.index)

    @property
    def from_square(self) -> Square:
        return Square.from_index(self.src)

    @property
    def to_square(self) -> Square:
        return Square.from_index(self.dst)


class Outcome(Enum):
    ONGOING = "ongoing"
    RED_WINS = "red_wins"
    BLACK_WINS = "black_wins"
    DRAW = "draw"


class TerminationReason(Enum):
    CHECKMATE = "checkmate"
    STALEMATE = "stalemate"
    REPETITION = "repetition"
    MOVE_CAP = "move_cap"
    PERPETUAL_CHECK = "perpetual_check"


@dataclass(frozen=True, slots=True)
class GameStatus:
    outcome: Outcome
    reason: Optional[TerminationReason] = None

    @classmethod
    def win_for(cls, winner: Color, reason: TerminationReason) -> "GameStatus":
        outcome = Outcome.RED_WINS if winner is Color.RED else Outcome.BLACK_WINS
        return cls(outcome, reason)

    @property
    def is_terminal(self) -> bool:
        return self.outcome is not Outcome.ONGOING

    @property
    def winner(self) -> Optional[Color]:
        if self.outcome is Outcome.RED_WINS:
            return Color.RED
        if self.outcome is Outcome.BLACK_WINS:
            return Color.BLACK
        return None

    @property
    def red_score(self) -> int:
        """+1 Red win, -1 Black win, 0 otherwise."""
        if self.outcome is Outcome.RED_WINS:
            return 1
        if self.outcome is Outcome.BLACK_WINS:
            return -1
        return 0


ONGOING = GameStatus(Outcome.ONGOING)


# ---------------------------------------------------------------------------
# Geometry tables
# ---------------------------------------------------------------------------


def _on_board(file: int, rank: int) -> bool:
    return 0 <= file < FILES and 0 <= rank < RANKS


def _index(file: int, rank: int) -> int:
    return rank * FILES + file


def _in_palace(color: Color, file: int, rank: int) -> bool:
    if not 3 <= file <= 5:
        return False
    return 0 <= rank <= 2 if color is Color.RED else 7 <= rank <= 9


def _own_side(color: Color, rank: int) -> bool:
    return rank <= 4 if color is Color.RED else rank >= 5


def _mirror(points: Sequence[tuple[int, int]]) -> frozenset[int]:
    return frozenset(_index(f, RANKS - 1 - r) for f, r in points)


_RED_ADVISOR_POINTS = [(3, 0), (5, 0), (4, 1), (3, 2), (5, 2)]
_RED_ELEPHANT_POINTS = [(2, 0), (6, 0), (0, 2), (4, 2), (8, 2), (2, 4), (6, 4)]

ADVISOR_POINTS: dict[Color, frozenset[int]] = {
    Color.RED: frozenset(_index(f, r) for f, r in _RED_ADVISOR_POINTS),
    Color.BLACK: _mirror(_RED_ADVISOR_POINTS),
}
ELEPHANT_POINTS: dict[Color, frozenset[int]] = {
    Color.RED: frozenset(_index(f, r) for f, r in _RED_ELEPHANT_POINTS),
    Color.BLACK: _mirror(_RED_ELEPHANT_POINTS),
}
PALACE: dict[Color, frozenset[int]] = {
    color: frozenset(
        _index(f, r) for f in range(FILES) for r in range(RANKS) if _in_palace(color, f, r)
    )
    for color in Color
}

# Rays ordered north (+rank), south (-rank), east (+file), west (-file); the first two are the file.
_DIRECTIONS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def _build_rays() -> tuple[tuple[tuple[int, ...], ...], ...]:
    rays = []
    for sq in range(NUM_SQUARES):
        file, rank = sq % FILES, sq // FILES
        per_square = []
        for df, dr in _DIRECTIONS:
            ray = []
            f, r = file + df, rank + dr
            while _on_board(f, r):
                ray.append(_index(f, r))
                f, r = f + df, r + dr
            per_square.append(tuple(ray))
        rays.append(tuple(per_square))
    return tuple(rays)


def _build_horse_moves() -> tuple[tuple[tuple[int, int], ...], ...]:
    table = []
    for sq in range(NUM_SQUARES):
        file, rank = sq % FILES, sq // FILES
        moves = []
        for df, dr in ((1, 2), (-1, 2), (1, -2), (-1, -2), (2, 1), (2, -1), (-2, 1), (-2, -1)):
            tf, tr = file + df, rank + dr
            if not _on_board(tf, tr):
                continue
            # Leg is the orthogonal neighbour in the long direction.
            leg = _index(file, rank + dr // 2) if abs(dr) == 2 else _index(file + df // 2, rank)
            moves.append((leg, _index(tf, tr)))
        table.append(tuple(moves))
    return tuple(table)


def _build_horse_attackers(
    horse_moves: tuple[tuple[tuple[int, int], ...], ...],
) -> tuple[tuple[tuple[int, int], ...], ...]:
    reverse: list[list[tuple[int, int]]] = [[] for _ in range(NUM_SQUARES)]
    for origin, moves in enumerate(horse_moves):
        for leg, target in moves:
            reverse[target].append((origin, leg))
    return tuple(tuple(entries) for entries in reverse)


def _build_elephant_moves(color: Color) -> tuple[tuple[tuple[int, int], ...], ...]:
    table = []
    for sq in range(NUM_SQUARES):
        file, rank = sq % FILES, sq // FILES
        moves = []
        for df, dr in ((2, 2), (2, -2), (-2, 2), (-2, -2)):
            tf, tr = file + df, rank + dr
            if _on_board(tf, tr) and _own_side(color, tr):
                moves.append((_index(file + df // 2, rank + dr // 2), _index(tf, tr)))
        table.append(tuple(moves))
    return tuple(table)


def _build_step_moves(
    color: Color, deltas: Sequence[tuple[int, int]]
) -> tuple[tuple[int, ...], ...]:
    table = []
    for sq in range(NUM_SQUARES):
        file, rank = sq % FILES, sq // FILES
        table.append(
            tuple(
                _index(file + df, rank + dr)
                for df, dr in deltas
                if _in_palace(color, file + df, rank + dr)
            )
        )
    return tuple(table)


def _build_soldier_moves(color: Color) -> tuple[tuple[int, ...], ...]:
    forward = 1 if color is Color.RED else -1
    table = []
    for sq in range(NUM_SQUARES):
        file, rank = sq % FILES, sq // FILES
        targets = []
        if _on_board(file, rank + forward):
            targets.append(_index(file, rank + forward))
        if not _own_side(color, rank):
            targets.extend(_index(file + df, rank) for df in (1, -1) if _on_board(file + df, rank))
        table.append(tuple(targets))
    return tuple(table)


def _reverse(table: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
    reverse: list[list[int]] = [[] for _ in range(NUM_SQUARES)]
    for origin, targets in enumerate(table):
        for target in targets:
            reverse[target].append(origin)
    return tuple(tuple(entries) for entries in reverse)


_RAYS = _build_rays()
_HORSE_MOVES = _build_horse_moves()
_HORSE_ATTACKERS = _build_horse_attackers(_HORSE_MOVES)
_ELEPHANT_MOVES = {color: _build_elephant_moves(color) for color in Color}
_ADVISOR_MOVES = {color: _build_step_moves(color, ((1, 1), (1, -1), (-1, 1), (-1, -1))) for color in Color}
_GENERAL_MOVES = {color: _build_step_moves(color, ((1, 0), (-1, 0), (0, 1), (0, -1))) for color in Color}
_SOLDIER_MOVES = {color: _build_soldier_moves(color) for color in Color}
_SOLDIER_ATTACKERS = {color: _reverse(_SOLDIER_MOVES[color]) for color in Color}


# ---------------------------------------------------------------------------
# Hashing
# ---------------------------------------------------------------------------


def _build_hash_keys() -> tuple[dict[Piece, tuple[int, ...]], int]:
    rng = np.random.default_rng(HASH_SEED)
    raw = rng.integers(0, np.iinfo(np.uint64).max, size=(2 * len(PieceKind) + 1, NUM_SQUARES),
                       dtype=np.uint64, endpoint=True)
    keys: dict[Piece, tuple[int, ...]] = {}
    row = 0
    for color in Color:
        for kind in PieceKind:
            keys[piece(color, kind)] = tuple(int(value) for value in raw[row])
            row += 1
    return keys, int(raw[row][0])


_PIECE_KEYS, _SIDE_KEY = _build_hash_keys()

Board = tuple[Optional[Piece], ...]


def _hash_board(board: Board, side_to_move: Color) -> int:
    value = 0
    for sq, occupant in enumerate(board):
        if occupant is not None:
            value ^= _PIECE_KEYS[occupant][sq]
    if side_to_move is Color.BLACK:
        value ^= _SIDE_KEY
    return value


# ---------------------------------------------------------------------------
# Game state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GameState:
    """
    Immutable Xiangqi position.

    Equality compares occupancy and side to move only; ply and history are bookkeeping used for
    adjudication and do not distinguish positions.
    """

    board: Board
    side_to_move: Color
    ply: int = field(default=0, compare=False)
    history: tuple[tuple[int, bool], ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.board) != NUM_SQUARES:
            raise InvalidPosition(f"Board must have {NUM_SQUARES} squares, got {len(self.board)}")
        if not self.history:
            object.__setattr__(self, "history", ((_hash_board(self.board, self.side_to_move), False),))

    @property
    def zobrist(self) -> int:
        """Hash of the current position (maintained incrementally)."""
        return self.history[-1][0]

    def piece_at(self, square: Square | int) -> Optional[Piece]:
        index = square.index if isinstance(square, Square) else square
        return self.board[index]

    def pieces(self, color: Optional[Color] = None) -> Iterator[tuple[int, Piece]]:
        for sq, occupant in enumerate(self.board):
            if occupant is not None and (color is None or occupant.color is color):
                yield sq, occupant

    def general_square(self, color: Color) -> int:
        return self.board.index(piece(color, PieceKind.GENERAL))

    @cached_property
    def legal(self) -> tuple[Move, ...]:
        return tuple(_generate_legal(self.board, self.side_to_move))

    @cached_property
    def legal_set(self) -> frozenset[Move]:
        return frozenset(self.legal)


def build_state(
    placements: Mapping[Square | int, Piece],
    side_to_move: Color = Color.RED,
    validate: bool = True,
) -> GameState:
    """
    Build a GameState from a square -> piece mapping.

    Raises:
        InvalidPosition: If validate is set and the position breaks a GameState invariant.
    """
    board: list[Optional[Piece]] = [None] * NUM_SQUARES
    for square, occupant in placements.items():
        index = square.index if isinstance(square, Square) else square
        if not 0 <= index < NUM_SQUARES:
            raise InvalidPosition(f"Square out of range: {square}")
        board[index] = occupant
    frozen = tuple(board)
    if validate:
        validate_position(frozen, side_to_move)
    return GameState(frozen, side_to_move)


def validate_position(board: Board, side_to_move: Color) -> None:
    """
    Check the GameState invariants.

    Raises:
        InvalidPosition: Describing the first violated invariant.
    """
    generals: dict[Color, list[int]] = {Color.RED: [], Color.BLACK: []}
    for sq, occupant in enumerate(board):
        if occupant is None:
            continue
        color, kind = occupant.color, occupant.kind
        name = f"{color.value} {kind.name.lower()}"
        if kind is PieceKind.GENERAL:
            generals[color].append(sq)
            if sq not in PALACE[color]:
                raise InvalidPosition(f"{name} outside the palace at {_square_name(sq)}")
        elif kind is PieceKind.ADVISOR and sq not in ADVISOR_POINTS[color]:
            raise InvalidPosition(f"{name} off the palace diagonals at {_square_name(sq)}")
        elif kind is PieceKind.ELEPHANT and sq not in ELEPHANT_POINTS[color]:
            raise InvalidPosition(f"{name} on an invalid point at {_square_name(sq)}")
    for color, squares in generals.items():
        if len(squares) != 1:
            raise InvalidPosition(f"Expected exactly one {color.value} general, found {len(squares)}")
    if _generals_facing(board):
        raise InvalidPosition("Generals face each other on an open file")
    waiting = side_to_move.opponent
    if _is_attacked(board, generals[waiting][0], waiting.opponent):
        raise InvalidPosition(f"Side not to move ({waiting.value}) is in check")


def _square_name(sq: int) -> str:
    return f"{'abcdefghi'[sq % FILES]}{sq // FILES}"


_START_RANKS: dict[int, str] = {
    0: "RNBAKABNR",
    2: ".C.....C.",
    3: "P.P.P.P.P",
}
_LETTER_KINDS = {
    "K": PieceKind.GENERAL,
    "A": PieceKind.ADVISOR,
    "B": PieceKind.ELEPHANT,
    "N": PieceKind.HORSE,
    "R": PieceKind.ROOK,
    "C": PieceKind.CANNON,
    "P": PieceKind.SOLDIER,
}


def initial_position() -> GameState:
    """The standard starting array, Red to move, ply 0."""
    placements: dict[int, Piece] = {}
    for rank, row in _START_RANKS.items():
        for file, letter in enumerate(row):
            if letter == ".":
                continue
            kind = _LETTER_KINDS[letter]
            placements[_index(file, rank)] = piece(Color.RED, kind)
            placements[_index(file, RANKS - 1 - rank)] = piece(Color.BLACK, kind)
    return build_state(placements, Color.RED, validate=False)


# ---------------------------------------------------------------------------
# Move generation
# ---------------------------------------------------------------------------


def _pseudo_moves(board: Board, color: Color) -> Iterator[tuple[int, int]]:
    for sq, occupant in enumerate(board):
        if occupant is None or occupant.color is not color:
            continue
        kind = occupant.kind
        if kind is PieceKind.ROOK:
            for ray in _RAYS[sq]:
                for target in ray:
                    other = board[target]
                    if other is None:
                        yield sq, target
                        continue
                    if other.color is not color:
                        yield sq, target
                    break
        elif kind is PieceKind.CANNON:
            for ray in _RAYS[sq]:
                screened = False
                for target in ray:
                    other = board[target]
                    if not screened:
                        if other is None:
                            yield sq, target
                        else:
                            screened = True
                    elif other is not None:
                        if other.color is not color:
                            yield sq, target
                        break
        elif kind is PieceKind.HORSE:
            for leg, target in _HORSE_MOVES[sq]:
                other = board[target]
                if board[leg] is None and (other is None or other.color is not color):
                    yield sq, target
        elif kind is PieceKind.ELEPHANT:
            for eye, target in _ELEPHANT_MOVES[color][sq]:
                other = board[target]
                if board[eye] is None and (other is None or other.color is not color):
                    yield sq, target
        else:
            if kind is PieceKind.ADVISOR:
                targets = _ADVISOR_MOVES[color][sq]
            elif kind is PieceKind.GENERAL:
                targets = _GENERAL_MOVES[color][sq]
            else:
                targets = _SOLDIER_MOVES[color][sq]
            for target in targets:
                other = board[target]
                if other is None or other.color is not color:
                    yield sq, target


def _is_attacked(board: Sequence[Optional[Piece]], sq: int, by: Color) -> bool:
    """True if `by` attacks `sq`, counting an enemy general on an open file as an attack."""
    for direction, ray in enumerate(_RAYS[sq]):
        screened = False
        for target in ray:
            other = board[target]
            if other is None:
                continue
            if not screened:
                if other.color is by and (
                    other.kind is PieceKind.ROOK
                    or (other.kind is PieceKind.GENERAL and direction < 2)
                ):
                    return True
                screened = True
            else:
                if other.color is by and other.kind is PieceKind.CANNON:
                    return True
                break
    for origin, leg in _HORSE_ATTACKERS[sq]:
        other = board[origin]
        if (
            other is not None
            and other.color is by
            and other.kind is PieceKind.HORSE
            and board[leg] is None
        ):
            return True
    for origin in _SOLDIER_ATTACKERS[by][sq]:
        other = board[origin]
        if other is not None and other.color is by and other.kind is PieceKind.SOLDIER:
            return True
    return False


def _generals_facing(board: Board) -> bool:
    red = board.index(piece(Color.RED, PieceKind.GENERAL))
    for target in _RAYS[red][0]:
        other = board[target]
        if other is not None:
            return other.kind is PieceKind.GENERAL and other.color is Color.BLACK
    return False


def _generate_legal(board: Board, color: Color) -> list[Move]:
    general = board.index(piece(color, PieceKind.GENERAL))
    enemy = color.opponent
    moves = []
    scratch = list(board)
    for src, dst in _pseudo_moves(board, color):
        moving, captured = scratch[src], scratch[dst]
        scratch[dst], scratch[src] = moving, None
        king = dst if src == general else general
        if not _is_attacked(scratch, king, enemy):
            moves.append(Move(src, dst))
        scratch[src], scratch[dst] = moving, captured
    return moves


def legal_moves(state: GameState) -> Sequence[Move]:
    """All legal moves for the side to move, in generation order."""
    return state.legal


def pseudo_legal_moves(state: GameState) -> list[Move]:
    """Moves that obey piece movement but may leave the mover's general exposed."""
    return [Move(src, dst) for src, dst in _pseudo_moves(state.board, state.side_to_move)]


def is_in_check(state: GameState, color: Color) -> bool:
    """True iff any enemy piece attacks `color`'s general."""
    return _is_attacked(state.board, state.general_square(color), color.opponent)


def gives_check(state: GameState, move: Move) -> bool:
    """True if playing `move` (assumed legal) checks the opponent."""
    return apply_move(state, move).history[-1][1]


def is_capture(state: GameState, move: Move) -> bool:
    return state.board[move.dst] is not None


def apply_move(state: GameState, move: Move) -> GameState:
    """
    Play a legal move.

    Raises:
        IllegalMove: If the move is not legal in `state`.
    """
    if move not in state.legal_set:
        raise IllegalMove(f"{_square_name(move.src)}-{_square_name(move.dst)} is not legal")
    board = list(state.board)
    moving, captured = board[move.src], board[move.dst]
    assert moving is not None
    board[move.dst], board[move.src] = moving, None
    new_board = tuple(board)
    mover = state.side_to_move
    keys = _PIECE_KEYS[moving]
    zobrist = state.zobrist ^ keys[move.src] ^ keys[move.dst] ^ _SIDE_KEY
    if captured is not None:
        zobrist ^= _PIECE_KEYS[captured][move.dst]
    defender = mover.opponent
    check = _is_attacked(new_board, new_board.index(piece(defender, PieceKind.GENERAL)), mover)
    return GameState(
        board=new_board,
        side_to_move=defender,
        ply=state.ply + 1,
        history=state.history + ((zobrist, check),),
    )


def position_hash(state: GameState) -> int:
    """64-bit tabulation hash over occupancy and side to move."""
    return _hash_board(state.board, state.side_to_move)


# ---------------------------------------------------------------------------
# Adjudication
# ---------------------------------------------------------------------------


def _repetition_status(state: GameState) -> Optional[GameStatus]:
    history = state.history
    current = history[-1][0]
    occurrences = [i for i, (value, _) in enumerate(history) if value == current]
    if len(occurrences) < 3:
        return None
    last = len(history) - 1
    checks: dict[Color, list[bool]] = {Color.RED: [], Color.BLACK: []}
    for j in range(occurrences[0] + 1, last + 1):
        mover = state.side_to_move.opponent if (last - j) % 2 == 0 else state.side_to_move
        checks[mover].append(history[j][1])
    perpetual = {color: bool(flags) and all(flags) for color, flags in checks.items()}
    if perpetual[Color.RED] and not perpetual[Color.BLACK]:
        return GameStatus.win_for(Color.BLACK, TerminationReason.PERPETUAL_CHECK)
    if perpetual[Color.BLACK] and not perpetual[Color.RED]:
        return GameStatus.win_for(Color.RED, TerminationReason.PERPETUAL_CHECK)
    return GameStatus(Outcome.DRAW, TerminationReason.REPETITION)


def status(state: GameState, move_cap: int = DEFAULT_MOVE_CAP) -> GameStatus:
    """
    Adjudicate the position.

    Order: no legal moves (checkmate, or stalemate which also loses), third repetition
    (perpetual checker loses), then the move cap.
    """
    if not state.legal:
        reason = (
            TerminationReason.CHECKMATE
            if is_in_check(state, state.side_to_move)
            else TerminationReason.STALEMATE
        )
        return GameStatus.win_for(state.side_to_move.opponent, reason)
    repeated = _repetition_status(state)
    if repeated is not None:
        return repeated
    if state.ply >= move_cap:
        return GameStatus(Outcome.DRAW, TerminationReason.MOVE_CAP)
    return ONGOING


def perft(state: GameState, depth: int) -> int:
    """Number of legal move sequences of exactly `depth` plies."""
    if depth < 0:
        raise ValueError(f"depth must be non-negative, got {depth}")
    if depth == 0:
        return 1
    moves = state.legal
    if depth == 1:
        return len(moves)
    return sum(perft(apply_move(state, move), depth - 1) for move in moves)


def divide(state: GameState, depth: int) -> list[tuple[Move, int]]:
    """Per-move subtree counts for perft (depth >= 1)."""
    if depth < 1:
        raise ValueError(f"depth must be at least 1, got {depth}")
    return [(move, perft(apply_move(state, move), depth - 1)) for move in state.legal]
