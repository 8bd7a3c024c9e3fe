"""
Encoding tests: action bijection, plane invariants and legal-mask normalization.
"""

import numpy as np
import pytest

from tests.conftest import random_walk_states
from xiangqi_zero.core.encoding import (
    NUM_ACTIONS,
    PLANE_SHAPE,
    SIDE_CHANNEL,
    decode_action,
    encode_action,
    encode_state,
    legal_action_indices,
    legal_mask,
    mask_and_normalize,
    piece_channel,
    side_to_move_of,
)
from xiangqi_zero.core.errors import DegenerateAction, NoLegalAction
from xiangqi_zero.core.rules import NUM_SQUARES, Color, Move, PieceKind, initial_position


class TestActions:
    def test_bijection_over_all_square_pairs(self):
        seen = set()
        for src in range(NUM_SQUARES):
            for dst in range(NUM_SQUARES):
                if src == dst:
                    continue
                index = encode_action(Move(src, dst))
                assert 0 <= index < NUM_ACTIONS
                assert decode_action(index) == Move(src, dst)
                seen.add(index)
        assert len(seen) == 8010

    def test_layout(self):
        assert encode_action(Move(1, 0)) == 90
        assert encode_action(Move(89, 88)) == 8098

    def test_diagonal_is_degenerate(self):
        with pytest.raises(DegenerateAction):
            decode_action(91)

    @pytest.mark.parametrize("index", [-1, 8100])
    def test_out_of_range(self, index):
        with pytest.raises(ValueError):
            decode_action(index)


class TestPlanes:
    def test_shape_and_dtype(self):
        planes = encode_state(initial_position())
        assert planes.shape == PLANE_SHAPE == (10, 9, 15)
        assert planes.dtype == np.float64

    def test_start_position_channels(self):
        planes = encode_state(initial_position())
        assert planes[0, 4, piece_channel(Color.RED, PieceKind.GENERAL)] == 1.0
        assert planes[9, 4, piece_channel(Color.BLACK, PieceKind.GENERAL)] == 1.0
        assert planes[:, :, piece_channel(Color.RED, PieceKind.SOLDIER)].sum() == 5
        assert np.all(planes[:, :, SIDE_CHANNEL] == 1.0)

    def test_invariants_on_random_states(self):
        for state in random_walk_states(1000, seed=31):
            planes = encode_state(state)
            pieces = planes[:, :, :SIDE_CHANNEL]
            assert set(np.unique(planes)) <= {0.0, 1.0}
            assert pieces.sum() == sum(1 for _ in state.pieces())
            assert pieces.sum(axis=2).max() <= 1.0
            for sq, occupant in state.pieces():
                assert pieces[sq // 9, sq % 9, piece_channel(occupant.color, occupant.kind)] == 1.0
            side = planes[:, :, SIDE_CHANNEL]
            assert np.all(side == (1.0 if state.side_to_move is Color.RED else 0.0))
            assert side_to_move_of(planes) is state.side_to_move


class TestMask:
    def test_mask_matches_legal_moves(self):
        start = initial_position()
        mask = legal_mask(start)
        assert mask.shape == (NUM_ACTIONS,)
        assert mask.sum() == 44
        assert sorted(legal_action_indices(start)) == sorted(encode_action(move) for move in start.legal)

    def test_normalize_keeps_legal_mass(self):
        mask = np.zeros(NUM_ACTIONS, dtype=bool)
        mask[[3, 7]] = True
        policy = np.zeros(NUM_ACTIONS)
        policy[[3, 7, 9]] = [1.0, 3.0, 100.0]
        result = mask_and_normalize(policy, mask)
        assert result[3] == pytest.approx(0.25)
        assert result[7] == pytest.approx(0.75)
        assert result[9] == 0.0

    def test_normalize_falls_back_to_uniform(self):
        mask = np.zeros(NUM_ACTIONS, dtype=bool)
        mask[[1, 2, 5, 8]] = True
        result = mask_and_normalize(np.zeros(NUM_ACTIONS), mask)
        assert np.allclose(result[mask], 0.25)
        assert result.sum() == pytest.approx(1.0)

    def test_normalize_empty_mask(self):
        with pytest.raises(NoLegalAction):
            mask_and_normalize(np.ones(NUM_ACTIONS), np.zeros(NUM_ACTIONS, dtype=bool))
