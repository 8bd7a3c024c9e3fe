# Core engine modules
from xiangqi_zero.core.evaluator import Evaluator, MaterialEvaluator, ModelEvaluator, UniformEvaluator
from xiangqi_zero.core.mcts import SearchResult, search
from xiangqi_zero.core.network import AdamState, Evaluation, ModelParams, TrainingExample, init_params
from xiangqi_zero.core.notation import emit_fen, emit_game_record, parse_fen, parse_game_record
from xiangqi_zero.core.rules import Color, GameState, Move, apply_move, initial_position, legal_moves, status

__all__ = [
    "AdamState",
    "Color",
    "Evaluation",
    "Evaluator",
    "GameState",
    "MaterialEvaluator",
    "ModelEvaluator",
    "ModelParams",
    "Move",
    "SearchResult",
    "TrainingExample",
    "UniformEvaluator",
    "apply_move",
    "emit_fen",
    "emit_game_record",
    "init_params",
    "initial_position",
    "legal_moves",
    "parse_fen",
    "parse_game_record",
    "search",
    "status",
]
