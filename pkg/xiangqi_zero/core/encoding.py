"""
Neural-network input and action-space encodings.

Planes: float array (rank, file, channel) of shape 10x9x15. Channels 0-6 are Red pieces in
PieceKind order, 7-13 Black in the same order, channel 14 is all ones when Red is to move.
Actions: index = from_square * 90 + to_square, a codomain of 8100 entries of which the 90 diagonal
ones are never legal.
"""

import numpy as np

from xiangqi_zero.core.errors import DegenerateAction, NoLegalAction
from xiangqi_zero.core.rules import FILES, NUM_SQUARES, RANKS, Color, GameState, Move, PieceKind

NUM_CHANNELS = 15
SIDE_CHANNEL = 14
PLANE_SHAPE = (RANKS, FILES, NUM_CHANNELS)
NUM_ACTIONS = NUM_SQUARES * NUM_SQUARES
INPUT_SIZE = RANKS * FILES * NUM_CHANNELS


def piece_channel(color: Color, kind: PieceKind) -> int:
    return int(kind) + (0 if color is Color.RED else len(PieceKind))


def encode_state(state: GameState) -> np.ndarray:
    """Binary 10x9x15 planes for `state` (absolute orientation, no flipping)."""
    planes = np.zeros(PLANE_SHAPE, dtype=np.float64)
    for sq, occupant in state.pieces():
        planes[sq // FILES, sq % FILES, piece_channel(occupant.color, occupant.kind)] = 1.0
    if state.side_to_move is Color.RED:
        planes[:, :, SIDE_CHANNEL] = 1.0
    return planes


def side_to_move_of(planes: np.ndarray) -> Color:
    """Read the side to move back from channel 14."""
    return Color.RED if np.asarray(planes).reshape(PLANE_SHAPE)[0, 0, SIDE_CHANNEL] > 0.5 else Color.BLACK


def encode_action(move: Move) -> int:
    return move.src * NUM_SQUARES + move.dst


def decode_action(index: int) -> Move:
    """
    Inverse of encode_action.

    Raises:
        ValueError: Index outside [0, 8099].
        DegenerateAction: Index on the from == to diagonal.
    """
    if not 0 <= index < NUM_ACTIONS:
        raise ValueError(f"Action index out of range: {index}")
    src, dst = divmod(index, NUM_SQUARES)
    if src == dst:
        raise DegenerateAction(f"Action {index} maps square {src} onto itself")
    return Move(src, dst)


def legal_action_indices(state: GameState) -> np.ndarray:
    return np.fromiter((encode_action(move) for move in state.legal), dtype=np.int64)


def legal_mask(state: GameState) -> np.ndarray:
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[legal_action_indices(state)] = True
    return mask


def mask_and_normalize(policy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    Zero the policy off-mask and renormalize; uniform over the mask if no legal mass remains.

    Raises:
        NoLegalAction: The mask is all false.
    """
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise NoLegalAction("Legal mask is empty")
    masked = np.where(mask, np.asarray(policy, dtype=np.float64), 0.0)
    total = masked.sum()
    if not np.isfinite(total) or total <= 0.0:
        return mask.astype(np.float64) / count
    return masked / total
