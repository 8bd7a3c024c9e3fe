"""
Shared fixtures: named positions, a fixture record corpus and small model configurations.
"""

from pathlib import Path

import numpy as np
import pytest

from xiangqi_zero.core.rules import GameState, apply_move, initial_position, status
from xiangqi_zero.models.schemas import NetworkConfig, SearchConfig, SelfPlayConfig

FIXTURES = Path(__file__).parent / "fixtures"

# Black to move, mated by the a9 rook with d8 covered by the i8 rook and e9 by the flying general.
CHECKMATE_FEN = "R2k5/8R/9/9/9/9/9/9/9/4K4 b"
# Same cage without the checking rook: Black has no move and is not in check.
STALEMATE_FEN = "3k5/8R/9/9/9/9/9/9/9/4K4 b"
# Red's e1-d1 would open the d file between the generals.
FLYING_GENERAL_FEN = "3k5/9/9/9/9/9/9/9/4K4/9 w"
# Rook shuffles between a8 and a9 checking the general on every move.
PERPETUAL_FEN = "4k4/9/9/9/9/9/9/9/R8/3K5 w"
PERPETUAL_MOVES = ["a1-a9", "e9-e8", "a9-a8", "e8-e9", "a8-a9", "e9-e8", "a9-a8", "e8-e9", "a8-a9"]
# Horses out and back twice from the start: the start position occurs a third time.
REPETITION_MOVES = ["b0-c2", "b9-c7", "c2-b0", "c7-b9", "b0-c2", "b9-c7", "c2-b0", "c7-b9"]


def random_walk_states(count: int, seed: int = 0, max_plies: int = 60) -> list[GameState]:
    """Positions from seeded random legal play, restarting from the start at game end or max_plies."""
    rng = np.random.default_rng(seed)
    states: list[GameState] = []
    state = initial_position()
    while len(states) < count:
        states.append(state)
        if status(state).is_terminal or state.ply >= max_plies:
            state = initial_position()
            continue
        moves = state.legal
        state = apply_move(state, moves[int(rng.integers(len(moves)))])
    return states


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def games_pgn() -> Path:
    return FIXTURES / "games.pgn"


@pytest.fixture
def corrupt_pgn() -> Path:
    return FIXTURES / "corrupt.pgn"


@pytest.fixture
def tiny_network_config() -> NetworkConfig:
    """Reduced model for gradient checks (not wired to the real plane or action sizes)."""
    return NetworkConfig(input_size=30, hidden_sizes=(8,), policy_size=12, value_hidden=4, seed=3)


@pytest.fixture
def small_network_config() -> NetworkConfig:
    """Full input and action sizes with a narrow backbone."""
    return NetworkConfig(hidden_sizes=(16,), value_hidden=8, seed=1)


@pytest.fixture
def fast_selfplay_config() -> SelfPlayConfig:
    search = SearchConfig(simulations=6, dirichlet_epsilon=0.25, seed=5)
    return SelfPlayConfig(
        search=search,
        greedy_after=4,
        move_cap=12,
        games_per_iteration=2,
        epochs=1,
        batch_size=8,
        seed=5,
    )
