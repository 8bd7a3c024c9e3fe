"""
Notation tests: FEN, ICCS moves, game records and the board renderer.
"""

import pytest
from loguru import logger

from tests.conftest import random_walk_states
from xiangqi_zero.core.errors import InvalidPosition, NotationSyntaxError, UnsupportedFormat
from xiangqi_zero.core.notation import (
    START_FEN,
    GameRecord,
    RecordResult,
    emit_fen,
    emit_game_record,
    emit_iccs_move,
    parse_fen,
    parse_game_record,
    parse_iccs_move,
    render_board,
)
from xiangqi_zero.core.rules import Color, Move, apply_move, initial_position


class TestFen:
    def test_start_fen_parses_to_initial_position(self):
        assert parse_fen(START_FEN) == initial_position()

    def test_emit_start_fen(self):
        assert emit_fen(initial_position()) == START_FEN

    def test_round_trip_on_random_states(self):
        for state in random_walk_states(1000, seed=21):
            text = emit_fen(state)
            assert parse_fen(text) == state
            assert emit_fen(parse_fen(text)) == text

    def test_emit_after_cannon_move(self):
        state = apply_move(initial_position(), parse_iccs_move("b2-e2"))
        assert emit_fen(state).split("/")[7] == "4C2C1"
        assert emit_fen(state).endswith(" b")

    def test_side_field_optional_and_aliases(self):
        board = START_FEN.split()[0]
        assert parse_fen(board).side_to_move is Color.RED
        assert parse_fen(f"{board} r").side_to_move is Color.RED
        assert parse_fen(f"{board} b").side_to_move is Color.BLACK

    def test_elephant_and_horse_aliases(self):
        aliased = START_FEN.replace("n", "h").replace("b", "e", 2).replace("N", "H").replace("B", "E")
        assert parse_fen(aliased) == initial_position()

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "rnbakabnr/9/1c5c1 w",
            "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNX w",
            "rnbakabnr/10/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR w",
            "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR x",
        ],
    )
    def test_malformed_fen(self, text):
        with pytest.raises(NotationSyntaxError):
            parse_fen(text)

    def test_invalid_position_fen(self):
        with pytest.raises(InvalidPosition):
            parse_fen("4k4/9/9/9/9/9/9/9/9/4K4 w")


class TestIccs:
    def test_parse_with_and_without_hyphen(self):
        assert parse_iccs_move("h2-e2") == parse_iccs_move("h2e2") == Move(2 * 9 + 7, 2 * 9 + 4)

    def test_uppercase_accepted(self):
        assert parse_iccs_move("H2-E2") == parse_iccs_move("h2-e2")

    def test_emit(self):
        assert emit_iccs_move(Move(0, 9)) == "a0-a1"

    def test_one_based_ranks(self):
        assert parse_iccs_move("h3-e3", ranks_one_based=True) == parse_iccs_move("h2-e2")
        assert parse_iccs_move("h10-g8", ranks_one_based=True) == parse_iccs_move("h9-g7")

    def test_round_trip_on_legal_moves(self):
        for state in random_walk_states(300, seed=5):
            for move in state.legal:
                assert parse_iccs_move(emit_iccs_move(move)) == move

    @pytest.mark.parametrize("text", ["e2e2", "j0-a0", "a0-a", "a10-a1", "", "h2=e2", "h\uff12-e2", "h2-e\u0662"])
    def test_malformed_move(self, text):
        with pytest.raises(NotationSyntaxError):
            parse_iccs_move(text)


class TestGameRecord:
    RECORD = '[Event "Test"]\n[Result "1-0"]\n\n1. h2-e2 h9-g7 2. h0-g2 i9-h9 1-0\n'

    def test_parse_tags_moves_result(self):
        record = parse_game_record(self.RECORD)
        assert record.tags["Event"] == "Test"
        assert [emit_iccs_move(move) for move in record.moves] == ["h2-e2", "h9-g7", "h0-g2", "i9-h9"]
        assert record.result is RecordResult.RED_WIN

    def test_tokens_carry_locations(self):
        record = parse_game_record(self.RECORD, first_line=10)
        assert record.tokens[0].line == 13
        assert record.tokens[0].column == 4
        assert record.tokens[2].text == "h0-g2"

    def test_result_token_without_tag(self):
        record = parse_game_record("1. h2e2 h9g7 0-1\n")
        assert record.result is RecordResult.BLACK_WIN

    def test_conflicting_result_tag_wins_with_warning(self):
        messages: list[str] = []
        sink = logger.add(messages.append, level="WARNING", format="{message}")
        try:
            record = parse_game_record('[Result "1-0"]\n\n1. h2e2 h9g7 0-1\n')
        finally:
            logger.remove(sink)
        assert record.result is RecordResult.RED_WIN
        assert len(messages) == 1
        assert "'1-0'" in messages[0] and "'0-1'" in messages[0]

    def test_agreeing_result_is_silent(self):
        messages: list[str] = []
        sink = logger.add(messages.append, level="WARNING", format="{message}")
        try:
            parse_game_record(self.RECORD)
        finally:
            logger.remove(sink)
        assert messages == []

    def test_missing_result_is_unknown(self):
        assert parse_game_record("1. h2e2 h9g7\n").result is RecordResult.UNKNOWN

    def test_comments_and_crlf(self):
        record = parse_game_record("[Event \"x\"]\r\n\r\n1. h2e2 {central cannon} h9g7 ; rest ignored\r\n")
        assert len(record.moves) == 2

    def test_unsupported_format(self):
        with pytest.raises(UnsupportedFormat):
            parse_game_record('[Format "WXF"]\n\n1. C2.5 H8+7\n')

    def test_variations_rejected(self):
        with pytest.raises(NotationSyntaxError):
            parse_game_record("1. h2e2 (1. b2e2) h9g7\n")

    def test_bad_token_location(self):
        with pytest.raises(NotationSyntaxError) as info:
            parse_game_record('[Event "x"]\n\n1. h2e2 zz99\n')
        assert info.value.line == 3
        assert info.value.column == 9

    def test_emit_then_parse(self):
        record = parse_game_record(self.RECORD)
        text = emit_game_record(record)
        again = parse_game_record(text)
        assert again.moves == record.moves
        assert again.result is record.result
        assert again.tags["Format"] == "ICCS"
        assert text.splitlines()[-1] == "1. h2-e2 h9-g7 2. h0-g2 i9-h9 1-0"

    def test_emit_black_first_numbering(self):
        record = GameRecord(
            tags={"FEN": "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR b"},
            moves=[parse_iccs_move("h9-g7"), parse_iccs_move("h2-e2")],
        )
        assert emit_game_record(record).splitlines()[-1] == "1... h9-g7 2. h2-e2 *"

    def test_start_state_from_fen_tag(self):
        record = GameRecord(tags={"FEN": "3k5/9/9/9/9/9/9/9/4K4/9 w"})
        assert record.start_state().ply == 0
        assert emit_fen(record.start_state()) == "3k5/9/9/9/9/9/9/9/4K4/9 w"


class TestRender:
    def test_render_start(self):
        lines = render_board(initial_position()).splitlines()
        assert lines[0] == "9 r n b a k a b n r"
        assert "river" in lines[5]
        assert lines[-2] == "0 R N B A K A B N R"
        assert lines[-1] == "  a b c d e f g h i"
