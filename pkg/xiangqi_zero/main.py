"""
xiangqi-zero command-line entry point.

Subcommands bind the pipeline together for batch use: move-generator checks (perft), self-play,
behavior-cloning pretraining, training, the iterated learning loop, evaluation matches, corpus
tools and board display. Progress goes to stderr; results are JSON lines on stdout.

Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.
"""

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from xiangqi_zero.config import Settings, build_settings
from xiangqi_zero.core.corpus import export_training_set, load_training_set, scan_corpus, validate_corpus
from xiangqi_zero.core.errors import (
    ConfigError,
    InvalidPosition,
    NotationSyntaxError,
    UnsupportedFormat,
    XiangqiZeroError,
)
from xiangqi_zero.core.evaluator import Evaluator, MaterialEvaluator, ModelEvaluator, UniformEvaluator
from xiangqi_zero.core.network import AdamState, ModelParams, init_params, split_examples, train
from xiangqi_zero.core.notation import emit_game_record, emit_iccs_move, parse_fen, render_board
from xiangqi_zero.core.rules import GameState, divide, initial_position
from xiangqi_zero.core.selfplay import evaluate_match, generate_games, run_iteration
from xiangqi_zero.database import ReplayBuffer, load_checkpoint, save_checkpoint, write_examples, write_text
from xiangqi_zero.utils import get_logger, setup_logger

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

USAGE_ERRORS = (ConfigError, NotationSyntaxError, InvalidPosition, UnsupportedFormat)

Handler = Callable[[argparse.Namespace, Settings], int]

# argparse destination -> Settings field
FLAG_SETTINGS = {
    "seed": "SEED",
    "jobs": "JOBS",
    "log_level": "LOG_LEVEL",
    "log_dir": "LOG_DIR",
    "iccs_ranks": "ICCS_RANKS",
    "move_cap": "MOVE_CAP",
    "sims": "SIMULATIONS",
    "c_puct": "C_PUCT",
    "games": "GAMES_PER_ITERATION",
    "epochs": "EPOCHS",
    "batch_size": "BATCH_SIZE",
    "lr": "LEARNING_RATE",
    "hidden": "HIDDEN_SIZES",
    "buffer": "BUFFER_CAPACITY",
    "validation_fraction": "VALIDATION_FRACTION",
}

cli_logger = get_logger("xiangqi_zero.cli")


class UsageError(XiangqiZeroError, ValueError):
    """A flag combination was rejected after parsing."""


def emit(line: str) -> None:
    """Write one result line to stdout."""
    sys.stdout.write(line + "\n")
    sys.stdout.flush()


def resolve_evaluator(name: Optional[str]) -> Evaluator:
    """'uniform' (also the default), 'material', or a checkpoint path."""
    if name is None or name == "uniform":
        return UniformEvaluator()
    if name == "material":
        return MaterialEvaluator()
    return ModelEvaluator(load_checkpoint(name), name=Path(name).stem)


def _start_state(fen: Optional[str]) -> GameState:
    return parse_fen(fen) if fen else initial_position()


def _initial_params(settings: Settings, model: Optional[str]) -> ModelParams:
    return load_checkpoint(model) if model else init_params(settings.network_config())


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_perft(args: argparse.Namespace, settings: Settings) -> int:
    if args.depth < 1:
        raise UsageError(f"--depth must be at least 1, got {args.depth}")
    state = _start_state(args.fen)
    total = 0
    for move, count in divide(state, args.depth):
        emit(json.dumps({"move": emit_iccs_move(move), "nodes": count}))
        total += count
    emit(json.dumps({"depth": args.depth, "total": total}))
    return EXIT_OK


def cmd_show(args: argparse.Namespace, settings: Settings) -> int:
    emit(render_board(_start_state(args.fen)))
    return EXIT_OK


def cmd_selfplay(args: argparse.Namespace, settings: Settings) -> int:
    evaluator = resolve_evaluator(args.model)
    config = settings.selfplay_config(show_progress=args.progress)
    results = generate_games(evaluator, config)
    out_dir = Path(args.out)
    examples = []
    for index, (record, game_examples) in enumerate(results, start=1):
        write_text(out_dir / f"game_{index:04d}.pgn", emit_game_record(record))
        examples.extend(game_examples)
    write_examples(out_dir / "examples.jsonl", examples, sources=[f"self-play seed {settings.SEED}"])
    lengths = [len(record.moves) for record, _ in results]
    rewards = [record.result.red_score for record, _ in results]
    games = len(results)
    avg_length = sum(lengths) / games if games else 0.0
    avg_reward = sum(rewards) / games if games else 0.0
    logger.info(f"Self-play: {games} games, avg length {avg_length:.1f}, avg reward ({avg_reward:.2f})")
    emit(json.dumps({"games": games, "avg_length": avg_length, "avg_reward": avg_reward, "examples": len(examples)}))
    return EXIT_OK


def _train_and_save(settings: Settings, args: argparse.Namespace, examples: list, held_out: list) -> int:
    params = _initial_params(settings, args.model)
    state = AdamState.fresh(params, settings.adam_hyperparameters())
    rng = np.random.default_rng(settings.SEED)
    params, state, history = train(
        params,
        state,
        examples,
        settings.EPOCHS,
        settings.BATCH_SIZE,
        rng,
        held_out=held_out,
        show_progress=args.progress,
    )
    save_checkpoint(params, args.out)
    for metrics in history:
        emit(metrics.model_dump_json())
    return EXIT_OK


def cmd_pretrain(args: argparse.Namespace, settings: Settings) -> int:
    dataset = Path(args.dataset) if args.dataset else Path(args.out).with_suffix(".examples.jsonl")
    written = export_training_set(args.paths, dataset, limit=args.limit, ranks_one_based=settings.ranks_one_based)
    logger.info(f"Exported {written} behavior-cloning examples to {dataset}")
    examples = load_training_set(dataset)
    train_set, held_out = split_examples(examples, settings.VALIDATION_FRACTION, settings.SEED)
    logger.info(f"Training on {len(train_set)} examples, holding out {len(held_out)}")
    return _train_and_save(settings, args, train_set, held_out)


def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    examples = [example for path in args.data for example in load_training_set(path)]
    return _train_and_save(settings, args, examples, [])


def cmd_iterate(args: argparse.Namespace, settings: Settings) -> int:
    if args.iterations < 1:
        raise UsageError(f"--iterations must be at least 1, got {args.iterations}")
    config = settings.selfplay_config(show_progress=args.progress)
    params = _initial_params(settings, args.model)
    opt_state = AdamState.fresh(params, settings.adam_hyperparameters())
    buffer = ReplayBuffer(config.buffer_capacity)
    for iteration in range(args.iterations):
        logger.info(f"Starting iteration {iteration + 1}/{args.iterations}")
        params, opt_state, report = run_iteration(params, opt_state, config, buffer, iteration)
        save_checkpoint(params, args.out)
        emit(report.model_dump_json())
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    if args.match_games < 1:
        raise UsageError(f"--games must be at least 1, got {args.match_games}")
    evaluator_a = resolve_evaluator(args.a)
    evaluator_b = resolve_evaluator(args.b)
    report = evaluate_match(evaluator_a, evaluator_b, args.match_games, settings.selfplay_config(args.progress))
    logger.info(
        f"{evaluator_a.name} vs {evaluator_b.name}: {report.wins} wins, {report.losses} losses, "
        f"{report.draws} draws (score {report.score:.2f})"
    )
    emit(report.model_dump_json())
    return EXIT_OK


def cmd_stats(args: argparse.Namespace, settings: Settings) -> int:
    stats = scan_corpus(args.paths, ranks_one_based=settings.ranks_one_based)
    if args.table:
        for field in ("games", "total_moves", "red_wins", "black_wins", "draws", "unknown_results", "parse_errors"):
            emit(f"{field:<16}{getattr(stats, field):>12}")
        for location in stats.error_locations:
            emit(f"  {location.path}:{location.line}: {location.message}")
    else:
        emit(stats.model_dump_json())
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, settings: Settings) -> int:
    report = validate_corpus(args.paths, ranks_one_based=settings.ranks_one_based)
    for record in report.flagged():
        emit(record.model_dump_json(exclude_none=True))
    summary = {
        "records": len(report.records),
        "legal": report.legal,
        "illegal": report.illegal,
        "syntax_errors": report.syntax_errors,
        "legality_rate": report.legality_rate,
    }
    emit(json.dumps(summary))
    return EXIT_OK


def cmd_export(args: argparse.Namespace, settings: Settings) -> int:
    written = export_training_set(args.paths, args.out, limit=args.limit, ranks_one_based=settings.ranks_one_based)
    emit(json.dumps({"examples": written, "dataset": Path(args.out).as_posix()}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def common_flags() -> argparse.ArgumentParser:
    """Flags accepted both before and after the subcommand."""
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key=value settings file (flags override it)")
    common.add_argument("--seed", type=int, help="Seed for every random stream")
    common.add_argument("--jobs", type=int, help="Self-play games in flight")
    common.add_argument("--log-level", help="TRACE, DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-dir", help="Also write rotating log files here")
    common.add_argument("--iccs-ranks", choices=["0-9", "1-10"], help="Rank numbering used in record files")
    common.add_argument("--move-cap", type=int, help="Plies after which games are drawn")
    common.add_argument("--progress", action="store_true", help="Show progress bars on stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = common_flags()
    parser = argparse.ArgumentParser(
        prog="xiangqi-zero",
        description="Self-play Xiangqi engine and training tools",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str, handler: Handler) -> argparse.ArgumentParser:
        child = sub.add_parser(name, help=help_text, parents=[common])
        child.set_defaults(handler=handler)
        return child

    def search_flags(child: argparse.ArgumentParser) -> None:
        child.add_argument("--sims", type=int, help="MCTS simulations per move")
        child.add_argument("--c-puct", type=float, help="Exploration constant")

    def training_flags(child: argparse.ArgumentParser) -> None:
        child.add_argument("--model", help="Checkpoint to start from (fresh model if omitted)")
        child.add_argument("--epochs", type=int)
        child.add_argument("--batch-size", type=int)
        child.add_argument("--lr", type=float, help="Adam learning rate")
        child.add_argument("--hidden", help="Backbone widths for a fresh model, e.g. 256,256")

    perft = command("perft", "Count legal move sequences per root move", cmd_perft)
    perft.add_argument("--fen", help="Start position (initial position if omitted)")
    perft.add_argument("--depth", type=int, required=True)

    show = command("show", "Render a position", cmd_show)
    show.add_argument("--fen")

    selfplay = command("selfplay", "Generate self-play games and examples", cmd_selfplay)
    selfplay.add_argument("--model", help="Checkpoint, 'material' or 'uniform' (default)")
    selfplay.add_argument("--games", type=int, help="Games to play")
    selfplay.add_argument("--out", required=True, help="Output directory")
    search_flags(selfplay)

    pretrain = command("pretrain", "Export records and train by behavior cloning", cmd_pretrain)
    pretrain.add_argument("paths", nargs="+", help="Game-record files")
    pretrain.add_argument("--out", required=True, help="Checkpoint to write")
    pretrain.add_argument("--dataset", help="Where to write the exported examples")
    pretrain.add_argument("--limit", type=int, help="Export at most this many examples")
    pretrain.add_argument("--validation-fraction", type=float)
    training_flags(pretrain)

    train_cmd = command("train", "Train on exported datasets", cmd_train)
    train_cmd.add_argument("--data", nargs="+", required=True, help="JSON-lines datasets")
    train_cmd.add_argument("--out", required=True, help="Checkpoint to write")
    training_flags(train_cmd)

    iterate = command("iterate", "Run self-play and training iterations", cmd_iterate)
    iterate.add_argument("--iterations", type=int, default=1)
    iterate.add_argument("--games", type=int, help="Games per iteration")
    iterate.add_argument("--buffer", type=int, help="Replay buffer capacity")
    iterate.add_argument("--out", required=True, help="Checkpoint written after every iteration")
    search_flags(iterate)
    training_flags(iterate)

    evaluate = command("eval", "Play a match between two evaluators", cmd_eval)
    evaluate.add_argument("--a", default="material", help="Player A: uniform, material or a checkpoint")
    evaluate.add_argument("--b", default="uniform", help="Player B: uniform, material or a checkpoint")
    evaluate.add_argument("--games", dest="match_games", type=int, default=2)
    search_flags(evaluate)

    stats = command("stats", "Corpus statistics", cmd_stats)
    stats.add_argument("paths", nargs="+")
    stats.add_argument("--table", action="store_true", help="Aligned text instead of JSON")

    validate = command("validate", "Replay records and report illegal moves", cmd_validate)
    validate.add_argument("paths", nargs="+")

    export = command("export", "Write behavior-cloning examples", cmd_export)
    export.add_argument("paths", nargs="+")
    export.add_argument("--out", required=True)
    export.add_argument("--limit", type=int)

    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    overrides = {setting: getattr(args, dest, None) for dest, setting in FLAG_SETTINGS.items()}
    return build_settings(getattr(args, "config", None), overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for xiangqi-zero.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    # common flags are suppressed when absent
    args.progress = getattr(args, "progress", False)

    handler: Handler = args.handler
    try:
        settings = settings_from_args(args)
        setup_logger(settings.LOG_LEVEL, Path(settings.LOG_DIR) if settings.LOG_DIR else None)
        cli_logger.debug(f"Running {args.command} with seed {settings.SEED}")
        return handler(args, settings)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        logger.error(str(exc))
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_RUNTIME
    except (XiangqiZeroError, OSError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    except Exception as exc:
        logger.exception(f"Unexpected error: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
