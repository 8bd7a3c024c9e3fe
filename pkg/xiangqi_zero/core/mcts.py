"""
PUCT Monte Carlo Tree Search.

Each simulation walks from the root by maximal upper confidence bound, expands and evaluates one
leaf (or reads the exact value of a finished game), then backs the value up the path with the sign
flipped at every ply. Edge statistics are kept from the perspective of the player choosing the edge.
A fresh tree is built for every search; there is no transposition table.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from loguru import logger

from xiangqi_zero.core.encoding import encode_action, legal_mask, mask_and_normalize
from xiangqi_zero.core.errors import NoChildren, NoVisits, TerminalRoot
from xiangqi_zero.core.evaluator import Evaluator
from xiangqi_zero.core.rules import DEFAULT_MOVE_CAP, GameState, GameStatus, Move, apply_move, status
from xiangqi_zero.models.schemas import SearchConfig


@dataclass(slots=True)
class Edge:
    move: Move
    action: int
    prior: float
    visits: int = 0
    value_sum: float = 0.0
    child: Optional["SearchNode"] = None

    @property
    def q(self) -> float:
        return self.value_sum / self.visits if self.visits > 0 else 0.0


@dataclass(slots=True)
class SearchNode:
    state: GameState
    edges: list[Edge] = field(default_factory=list)
    expanded: bool = False
    terminal: bool = False
    terminal_value: float = 0.0

    @property
    def visit_count(self) -> int:
        return sum(edge.visits for edge in self.edges)


@dataclass(frozen=True)
class SearchResult:
    pi: dict[int, float]
    root_value: float
    visits: dict[int, int]
    principal_variation: list[Move]

    @property
    def best_action(self) -> int:
        """Most probable action, lowest index on ties."""
        return min(self.pi, key=lambda action: (-self.pi[action], action))


def ucb(edge: Edge, parent_visits: int, c: float) -> float:
    """Q(s,a) + c * P(s,a) * sqrt(N(s)) / (1 + N(s,a))."""
    return edge.q + c * edge.prior * math.sqrt(parent_visits) / (1 + edge.visits)


def select_child(node: SearchNode, c: float) -> Edge:
    """
    Edge with the highest bound; ties go to the higher prior, then the lower action index.

    Raises:
        NoChildren: The node has no edges.
    """
    if not node.edges:
        raise NoChildren("Cannot select from a node without edges")
    parent_visits = node.visit_count
    return max(node.edges, key=lambda edge: (ucb(edge, parent_visits, c), edge.prior, -edge.action))


def terminal_value(state: GameState, game_status: GameStatus) -> float:
    """+1 if the side to move has won, -1 if it has lost, 0 for a draw."""
    winner = game_status.winner
    if winner is None:
        return 0.0
    return 1.0 if winner is state.side_to_move else -1.0


def expand_and_evaluate(node: SearchNode, evaluator: Evaluator, move_cap: int = DEFAULT_MOVE_CAP) -> float:
    """
    Expand `node` with one edge per legal move and return its value for the side to move.

    Finished games are marked terminal and valued by the rules instead of the evaluator.
    """
    if node.terminal:
        return node.terminal_value
    game_status = status(node.state, move_cap)
    if game_status.is_terminal:
        node.terminal = True
        node.terminal_value = terminal_value(node.state, game_status)
        return node.terminal_value
    evaluation = evaluator.evaluate(node.state)
    priors = mask_and_normalize(evaluation.policy, legal_mask(node.state))
    node.edges = []
    for move in node.state.legal:
        action = encode_action(move)
        node.edges.append(Edge(move=move, action=action, prior=float(priors[action])))
    node.expanded = True
    return float(np.clip(evaluation.value, -1.0, 1.0))


def backpropagate(path: Sequence[tuple[SearchNode, Edge]], v: float) -> None:
    """Walk leaf to root adding v, -v, v, ... to the path edges; v is for the leafmost edge's chooser."""
    for _, edge in reversed(path):
        edge.visits += 1
        edge.value_sum += v
        v = -v


def add_root_noise(node: SearchNode, epsilon: float, alpha: float, rng: np.random.Generator) -> None:
    """P' = (1 - epsilon) * P + epsilon * Dirichlet(alpha)."""
    if not node.edges or epsilon == 0.0:
        return
    noise = rng.dirichlet([alpha] * len(node.edges))
    for edge, sample in zip(node.edges, noise):
        edge.prior = (1.0 - epsilon) * edge.prior + epsilon * float(sample)


def policy_from_visits(node: SearchNode, tau: float) -> np.ndarray:
    """
    Visit-count policy aligned with node.edges: N^(1/tau) normalized, or one-hot on the most
    visited edge (lowest action index on ties) when tau is 0.

    Raises:
        NoVisits: No edge has been visited.
    """
    counts = np.array([edge.visits for edge in node.edges], dtype=np.float64)
    if counts.size == 0 or counts.sum() <= 0:
        raise NoVisits("Node has no visits")
    if tau == 0.0:
        best = max(range(len(node.edges)), key=lambda i: (counts[i], -node.edges[i].action))
        pi = np.zeros_like(counts)
        pi[best] = 1.0
        return pi
    scaled = np.power(counts / counts.max(), 1.0 / tau)
    return scaled / scaled.sum()


def principal_variation(node: SearchNode) -> list[Move]:
    line: list[Move] = []
    current: Optional[SearchNode] = node
    while current is not None and current.edges:
        edge = max(current.edges, key=lambda e: (e.visits, -e.action))
        if edge.visits == 0:
            break
        line.append(edge.move)
        current = edge.child
    return line


def search(
    state: GameState,
    evaluator: Evaluator,
    config: SearchConfig,
    rng: Optional[np.random.Generator] = None,
) -> SearchResult:
    """
    Run `config.simulations` simulations from `state`.

    The root is expanded and noised before the loop; its evaluation is not a simulation.

    Raises:
        TerminalRoot: The game at `state` is already over.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if status(state, config.move_cap).is_terminal:
        raise TerminalRoot("Cannot search a finished game")

    root = SearchNode(state)
    expand_and_evaluate(root, evaluator, config.move_cap)
    add_root_noise(root, config.dirichlet_epsilon, config.dirichlet_alpha, rng)

    for _ in range(config.simulations):
        node = root
        path: list[tuple[SearchNode, Edge]] = []
        while node.expanded:
            edge = select_child(node, config.c_puct)
            path.append((node, edge))
            if edge.child is None:
                edge.child = SearchNode(apply_move(node.state, edge.move))
            node = edge.child
        value = expand_and_evaluate(node, evaluator, config.move_cap)
        backpropagate(path, -value)

    pi_vector = policy_from_visits(root, config.temperature)
    total_visits = root.visit_count
    root_value = sum(edge.visits * edge.q for edge in root.edges) / total_visits
    result = SearchResult(
        pi={edge.action: float(p) for edge, p in zip(root.edges, pi_vector) if p > 0.0},
        root_value=float(root_value),
        visits={edge.action: edge.visits for edge in root.edges},
        principal_variation=principal_variation(root),
    )
    logger.trace(f"Search: {total_visits} visits, root value {result.root_value:.3f}")
    return result
