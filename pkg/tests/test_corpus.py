"""
Corpus tool tests against the fixture record files.
"""

import hashlib

import pytest

from xiangqi_zero.core.corpus import (
    export_training_set,
    iter_record_texts,
    load_training_set,
    scan_corpus,
    validate_corpus,
)
from xiangqi_zero.core.errors import CorpusReadError
from xiangqi_zero.database.example_store import read_manifest, write_examples
from xiangqi_zero.models.schemas import CorpusStats


class TestRecordSplitting:
    def test_records_start_at_tags_after_movetext(self, games_pgn):
        starts = [first_line for first_line, _ in iter_record_texts(games_pgn)]
        assert starts == [1, 9, 15]

    def test_tag_only_record_does_not_swallow_the_next(self, tmp_path):
        path = tmp_path / "tags_only.pgn"
        path.write_text('[Event "a"]\n[Result "1-0"]\n\n[Event "b"]\n[Result "0-1"]\n\n1. h2e2 h9g7 0-1\n')
        starts = [first_line for first_line, _ in iter_record_texts(path)]
        assert starts == [1, 4]
        stats = scan_corpus([path])
        assert (stats.games, stats.parse_errors, stats.total_moves) == (2, 0, 2)
        assert (stats.red_wins, stats.black_wins) == (1, 1)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusReadError):
            list(iter_record_texts(tmp_path / "absent.pgn"))


class TestStats:
    def test_fixture_corpus_counts(self, games_pgn):
        stats = scan_corpus([games_pgn])
        assert stats.games == 3
        assert stats.total_moves == 13
        assert (stats.red_wins, stats.black_wins, stats.draws, stats.unknown_results) == (1, 1, 1, 0)
        assert stats.parse_errors == 0

    def test_corrupt_records_are_counted_not_fatal(self, corrupt_pgn):
        stats = scan_corpus([corrupt_pgn])
        assert stats.games == 2
        assert stats.parse_errors == 1
        assert stats.black_wins == 1
        assert stats.unknown_results == 1
        location = stats.error_locations[0]
        assert (location.line, location.column) == (4, 17)

    def test_stats_merge_across_files(self, games_pgn, corrupt_pgn):
        stats = scan_corpus([games_pgn, corrupt_pgn])
        assert stats.games == 5
        assert stats.total_moves == 17
        assert stats.parse_errors == 1

    def test_one_based_ranks(self, fixtures_dir):
        stats = scan_corpus([fixtures_dir / "one_based.pgn"], ranks_one_based=True)
        assert stats.games == 1 and stats.parse_errors == 0

    def test_conservation_enforced(self):
        with pytest.raises(ValueError):
            CorpusStats(games=2, red_wins=1)


class TestValidate:
    def test_fixture_corpus_is_legal(self, games_pgn):
        report = validate_corpus([games_pgn])
        assert report.legal == 3
        assert report.legality_rate == 1.0
        assert report.flagged() == []

    def test_illegal_and_syntax_records(self, corrupt_pgn):
        report = validate_corpus([corrupt_pgn])
        verdicts = [record.verdict for record in report.records]
        assert verdicts == ["syntax", "illegal", "legal"]
        illegal = report.records[1]
        assert (illegal.ply, illegal.move, illegal.line) == (0, "b0d1", 9)
        assert report.legality_rate == 0.5

    def test_cannon_capture_without_screen_is_flagged(self, tmp_path):
        path = tmp_path / "cannon.pgn"
        path.write_text('[Event "cannon"]\n[Result "1-0"]\n\n1. h2e2 h9g7 2. b2b7 1-0\n')
        report = validate_corpus([path])
        (record,) = report.records
        assert record.verdict == "illegal"
        assert (record.ply, record.move, record.line) == (2, "b2b7", 4)
        assert report.legality_rate == 0.0

    def test_empty_corpus_rate(self, tmp_path):
        empty = tmp_path / "empty.pgn"
        empty.write_text("")
        assert validate_corpus([empty]).legality_rate == 1.0


class TestExport:
    def test_export_counts_and_manifest(self, games_pgn, tmp_path):
        out = tmp_path / "bc.jsonl"
        assert export_training_set([games_pgn], out) == 13
        lines = out.read_text().splitlines()
        assert len(lines) == 13
        assert lines[0].startswith('{"fen":"rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR w"')
        assert '"target":"h2-e2"' in lines[0]
        manifest = read_manifest(out)
        assert manifest.examples == 13
        assert manifest.records_exported == 3
        assert manifest.sha256 == hashlib.sha256(out.read_bytes()).hexdigest()

    def test_corrupt_records_skipped(self, corrupt_pgn, tmp_path):
        out = tmp_path / "bc.jsonl"
        assert export_training_set([corrupt_pgn], out) == 2
        manifest = read_manifest(out)
        assert (manifest.records_exported, manifest.records_skipped) == (1, 2)

    def test_limit_keeps_prefix(self, games_pgn, tmp_path):
        full, limited = tmp_path / "full.jsonl", tmp_path / "limited.jsonl"
        export_training_set([games_pgn], full)
        assert export_training_set([games_pgn], limited, limit=6) == 6
        assert limited.read_text().splitlines() == full.read_text().splitlines()[:6]

    def test_reload_round_trip_is_byte_stable(self, games_pgn, tmp_path):
        out = tmp_path / "bc.jsonl"
        export_training_set([games_pgn], out)
        examples = load_training_set(out)
        assert [example.z for example in examples[:4]] == [1.0, -1.0, 1.0, -1.0]
        again = tmp_path / "again.jsonl"
        write_examples(again, examples)
        assert again.read_bytes() == out.read_bytes()
