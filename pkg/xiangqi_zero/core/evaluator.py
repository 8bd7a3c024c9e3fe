"""
Policy-value evaluators consumed by the search.

Every evaluator maps a GameState to an Evaluation: a pre-masking policy over the 8100 action
indices and a value in [-1, 1] from the side to move's perspective.
"""

import math
from typing import Protocol, runtime_checkable

import numpy as np

from xiangqi_zero.core.encoding import NUM_ACTIONS, encode_action, encode_state
from xiangqi_zero.core.network import Evaluation, ModelParams, model_forward
from xiangqi_zero.core.rules import Color, GameState, PieceKind, is_capture

MATERIAL_WEIGHTS = {
    PieceKind.ROOK: 9.0,
    PieceKind.CANNON: 4.5,
    PieceKind.HORSE: 4.0,
    PieceKind.ADVISOR: 2.0,
    PieceKind.ELEPHANT: 2.0,
    PieceKind.SOLDIER: 1.0,
}
CROSSED_SOLDIER_WEIGHT = 2.0
MATERIAL_SCALE = 12.0
CAPTURE_PRIOR_FACTOR = 2.0


@runtime_checkable
class Evaluator(Protocol):
    name: str

    def evaluate(self, state: GameState) -> Evaluation: ...


def evaluate_uniform(state: GameState) -> Evaluation:
    """1/8100 on every action, value 0, whatever the state."""
    return Evaluation(policy=np.full(NUM_ACTIONS, 1.0 / NUM_ACTIONS), value=0.0)


def material_balance(state: GameState) -> float:
    """Red material minus Black material; a soldier counts double once across the river."""
    balance = 0.0
    for sq, occupant in state.pieces():
        if occupant.kind is PieceKind.GENERAL:
            continue
        weight = MATERIAL_WEIGHTS[occupant.kind]
        if occupant.kind is PieceKind.SOLDIER:
            rank = sq // 9
            crossed = rank >= 5 if occupant.color is Color.RED else rank <= 4
            if crossed:
                weight = CROSSED_SOLDIER_WEIGHT
        balance += weight if occupant.color is Color.RED else -weight
    return balance


def evaluate_material(state: GameState) -> Evaluation:
    """tanh(balance / 12) for the side to move; uniform prior over legal moves, captures doubled."""
    value = math.tanh(material_balance(state) / MATERIAL_SCALE)
    if state.side_to_move is Color.BLACK:
        value = -value
    policy = np.zeros(NUM_ACTIONS, dtype=np.float64)
    for move in state.legal:
        policy[encode_action(move)] = CAPTURE_PRIOR_FACTOR if is_capture(state, move) else 1.0
    total = policy.sum()
    if total > 0:
        policy /= total
    else:
        policy[:] = 1.0 / NUM_ACTIONS
    return Evaluation(policy=policy, value=value)


class UniformEvaluator:
    name = "uniform"

    def evaluate(self, state: GameState) -> Evaluation:
        return evaluate_uniform(state)


class MaterialEvaluator:
    name = "material"

    def evaluate(self, state: GameState) -> Evaluation:
        return evaluate_material(state)


class ModelEvaluator:
    """Wraps model parameters; forward passes only read them, so one instance may serve many games."""

    def __init__(self, params: ModelParams, name: str = "model") -> None:
        self.params = params
        self.name = name

    def evaluate(self, state: GameState) -> Evaluation:
        evaluation, _ = model_forward(self.params, encode_state(state))
        return evaluation
