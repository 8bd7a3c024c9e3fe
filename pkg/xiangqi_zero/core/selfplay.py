"""
Game generation and the learning loop.

Self-play games run a fresh search at every ply, store (planes, visit policy, placeholder) and
fill in the outcome once the game ends. Recorded games become behavior-cloning examples. An
iteration generates games with the current model, appends them to the replay buffer and trains.
"""

import dataclasses
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from loguru import logger
from tqdm import tqdm

from xiangqi_zero.core.encoding import (
    decode_action,
    encode_action,
    encode_state,
    legal_action_indices,
    side_to_move_of,
)
from xiangqi_zero.core.errors import IllegalRecordMove
from xiangqi_zero.core.evaluator import Evaluator, ModelEvaluator
from xiangqi_zero.core.mcts import SearchResult, search
from xiangqi_zero.core.network import AdamState, ModelParams, TrainingExample, train
from xiangqi_zero.core.notation import GameRecord, RecordResult, emit_fen, emit_iccs_move, parse_fen
from xiangqi_zero.core.rules import Color, GameState, GameStatus, Move, apply_move, initial_position, status
from xiangqi_zero.database.example_store import ReplayBuffer
from xiangqi_zero.models.schemas import IterationReport, MatchReport, SelfPlayConfig

# Seeds of different iterations never overlap for fewer than this many games per iteration.
ITERATION_SEED_STRIDE = 1_000_003


def game_seed(base_seed: int, iteration: int, game_index: int) -> int:
    return base_seed + iteration * ITERATION_SEED_STRIDE + game_index


def make_example(
    state: GameState,
    z: float = 0.0,
    move: Optional[Move] = None,
    policy: Optional[dict[int, float]] = None,
    outcome_known: bool = True,
) -> TrainingExample:
    """A TrainingExample for `state` targeting either a played move or a search policy."""
    return TrainingExample(
        planes=encode_state(state),
        z=z,
        target_action=encode_action(move) if move is not None else None,
        target_policy=policy,
        legal_actions=legal_action_indices(state),
        outcome_known=outcome_known,
        fen=emit_fen(state),
    )


def _choose_action(result: SearchResult, temperature: float, rng: np.random.Generator) -> int:
    if temperature == 0.0:
        return result.best_action
    actions = sorted(result.pi)
    probabilities = np.array([result.pi[action] for action in actions])
    return actions[int(rng.choice(len(actions), p=probabilities / probabilities.sum()))]


def _visit_policy(result: SearchResult) -> dict[int, float]:
    total = sum(result.visits.values())
    return {action: count / total for action, count in sorted(result.visits.items()) if count > 0}


def assign_outcomes(examples: Sequence[TrainingExample], final_status: GameStatus) -> list[TrainingExample]:
    """z = Red's result for positions with Red to move, its negation otherwise; draws are all zero."""
    z_red = float(final_status.red_score)
    return [
        dataclasses.replace(example, z=z_red if side_to_move_of(example.planes) is Color.RED else 0.0 - z_red)
        for example in examples
    ]


def play_game(
    evaluator: Evaluator,
    config: SelfPlayConfig,
    rng: np.random.Generator,
    start_fen: Optional[str] = None,
) -> tuple[GameRecord, list[TrainingExample]]:
    """
    Play one self-play game.

    Plies before `greedy_after` sample from the temperature-1 policy, later plies take the most
    visited move. Stored targets are the visit distribution of each search.
    """
    state = parse_fen(start_fen) if start_fen else initial_position()
    record = GameRecord(tags={"Event": "self-play", "Red": evaluator.name, "Black": evaluator.name})
    if start_fen:
        record.tags["FEN"] = start_fen
    examples: list[TrainingExample] = []
    game_status = status(state, config.move_cap)
    while not game_status.is_terminal:
        temperature = config.temperature_at(len(record.moves))
        result = search(state, evaluator, config.tree_config(temperature), rng)
        examples.append(make_example(state, policy=_visit_policy(result)))
        move = decode_action(_choose_action(result, temperature, rng))
        state = apply_move(state, move)
        record.moves.append(move)
        if config.log_every and len(record.moves) % config.log_every == 0:
            logger.info(f"Move {len(record.moves)}, State: {emit_fen(state)}")
        game_status = status(state, config.move_cap)

    record.result = RecordResult.from_red_score(game_status.red_score)
    if game_status.reason is not None:
        record.tags["Termination"] = game_status.reason.value
    logger.info(f"Game finished with outcome: {game_status.red_score}")
    return record, assign_outcomes(examples, game_status)


def replay_record(record: GameRecord) -> list[GameState]:
    """
    Positions before each recorded move.

    Raises:
        IllegalRecordMove: A move is not legal at its ply (0-based).
    """
    state = record.start_state()
    positions: list[GameState] = []
    for ply, move in enumerate(record.moves):
        if move not in state.legal_set:
            text = record.tokens[ply].text if ply < len(record.tokens) else emit_iccs_move(move)
            raise IllegalRecordMove(ply, text)
        positions.append(state)
        state = apply_move(state, move)
    return positions


def cloning_examples(record: GameRecord) -> list[TrainingExample]:
    """
    One example per ply targeting the played move, z from the recorded result.

    Records without a result yield z = 0 examples marked outcome_known=False.

    Raises:
        IllegalRecordMove: The record does not replay legally.
    """
    positions = replay_record(record)
    known = record.result is not RecordResult.UNKNOWN
    if not known and positions:
        logger.warning(f"Record without a result ({len(positions)} plies): outcome set to 0")
    z_red = float(record.result.red_score)
    return [
        make_example(
            state,
            z=z_red if state.side_to_move is Color.RED else 0.0 - z_red,
            move=move,
            outcome_known=known,
        )
        for state, move in zip(positions, record.moves)
    ]


def generate_games(
    evaluator: Evaluator,
    config: SelfPlayConfig,
    iteration: int = 0,
    games: Optional[int] = None,
) -> list[tuple[GameRecord, list[TrainingExample]]]:
    """
    Play `games` (default: games_per_iteration) independent games, each on its own RNG stream.

    With jobs > 1 games run on a thread pool over the shared read-only evaluator; results keep game order.
    """
    count = config.games_per_iteration if games is None else games

    def play(index: int) -> tuple[GameRecord, list[TrainingExample]]:
        logger.info(f"Starting self-play game {index + 1}/{count}")
        rng = np.random.default_rng(game_seed(config.seed, iteration, index))
        record, examples = play_game(evaluator, config, rng)
        record.tags["Round"] = str(index + 1)
        return record, examples

    progress = dict(total=count, desc="self-play", disable=not config.show_progress, leave=False)
    if config.jobs > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            return list(tqdm(pool.map(play, range(count)), **progress))
    return [play(index) for index in tqdm(range(count), **progress)]


def run_iteration(
    params: ModelParams,
    opt_state: AdamState,
    config: SelfPlayConfig,
    buffer: Optional[ReplayBuffer] = None,
    iteration: int = 0,
) -> tuple[ModelParams, AdamState, IterationReport]:
    """
    Generate games with the current model, add their examples to the replay buffer and train.

    A configuration with zero games returns the inputs unchanged.
    """
    if buffer is None:
        buffer = ReplayBuffer(config.buffer_capacity)
    if config.games_per_iteration == 0:
        logger.warning("No games configured for this iteration; skipping")
        report = IterationReport(iteration=iteration, games=0, avg_length=0.0, avg_reward=0.0, buffer_size=len(buffer))
        return params, opt_state, report

    results = generate_games(ModelEvaluator(params), config, iteration)
    lengths = [len(record.moves) for record, _ in results]
    rewards = [record.result.red_score for record, _ in results]
    collected = sum(len(examples) for _, examples in results)
    evicted = buffer.extend(example for _, examples in results for example in examples)
    if evicted:
        logger.debug(f"Replay buffer evicted {evicted} examples")
    logger.info(f"Collected {len(buffer)} training examples so far")

    epochs = []
    if config.epochs > 0 and len(buffer) > 0:
        rng = np.random.default_rng(game_seed(config.seed, iteration, config.games_per_iteration))
        params, opt_state, epochs = train(
            params,
            opt_state,
            buffer.snapshot(),
            config.epochs,
            config.batch_size,
            rng,
            show_progress=config.show_progress,
        )

    report = IterationReport(
        iteration=iteration,
        games=len(results),
        avg_length=sum(lengths) / len(lengths),
        avg_reward=sum(rewards) / len(rewards),
        examples_collected=collected,
        buffer_size=len(buffer),
        epochs=epochs,
    )
    logger.info(report.summary_line())
    logger.info(f"Completed iteration {iteration + 1}")
    return params, opt_state, report


def play_match_game(
    red: Evaluator,
    black: Evaluator,
    config: SelfPlayConfig,
    rng: np.random.Generator,
) -> tuple[GameStatus, int]:
    """One game between two evaluators with greedy move selection; returns the final status and length."""
    state = initial_position()
    tree_config = config.tree_config(0.0)
    game_status = status(state, config.move_cap)
    plies = 0
    while not game_status.is_terminal:
        evaluator = red if state.side_to_move is Color.RED else black
        result = search(state, evaluator, tree_config, rng)
        state = apply_move(state, decode_action(result.best_action))
        plies += 1
        game_status = status(state, config.move_cap)
    return game_status, plies


def evaluate_match(
    evaluator_a: Evaluator,
    evaluator_b: Evaluator,
    games: int,
    config: SelfPlayConfig,
) -> MatchReport:
    """
    Play `games` games, A taking Red in even-indexed games. Results are from A's perspective.
    """
    if games < 1:
        raise ValueError(f"games must be at least 1, got {games}")
    wins = losses = draws = 0
    lengths: list[int] = []
    for index in tqdm(range(games), desc="match", disable=not config.show_progress, leave=False):
        a_is_red = index % 2 == 0
        red, black = (evaluator_a, evaluator_b) if a_is_red else (evaluator_b, evaluator_a)
        logger.info(f"Match game {index + 1}/{games}: {red.name} (Red) vs {black.name} (Black)")
        game_status, plies = play_match_game(red, black, config, np.random.default_rng(config.seed + index))
        score = game_status.red_score if a_is_red else -game_status.red_score
        if score > 0:
            wins += 1
        elif score < 0:
            losses += 1
        else:
            draws += 1
        lengths.append(plies)
        logger.info(f"Game finished with outcome: {game_status.red_score} after {plies} plies")
    return MatchReport(games=games, wins=wins, losses=losses, draws=draws, avg_length=sum(lengths) / games)
