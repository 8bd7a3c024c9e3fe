"""
Dense dual-head policy-value model in numpy.

Forward: flatten planes -> dense ReLU backbone -> policy head (softmax over actions) and value head
(dense ReLU projection -> tanh scalar). Backward is the exact analytic gradient of the 1:1
cross-entropy + squared-error loss, averaged over the batch. Adam with bias correction updates the
parameters. Everything runs in float64.

Weights are stored with shape (fan_in, fan_out) so that activations are `x @ W + b`.
"""

import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from loguru import logger
from tqdm import tqdm

from xiangqi_zero.core.errors import EmptyDataset, ShapeMismatch
from xiangqi_zero.models.schemas import (
    AdamHyperparameters,
    EpochMetrics,
    ExampleMetrics,
    LossBreakdown,
    NetworkConfig,
)

LOG_CLAMP = 1e-12

Gradients = dict[str, np.ndarray]


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def parameter_shapes(config: NetworkConfig) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes in declaration (checkpoint) order."""
    shapes: dict[str, tuple[int, ...]] = {}
    fan_in = config.input_size
    for i, width in enumerate(config.hidden_sizes):
        shapes[f"backbone.{i}.weight"] = (fan_in, width)
        shapes[f"backbone.{i}.bias"] = (width,)
        fan_in = width
    shapes["policy.weight"] = (fan_in, config.policy_size)
    shapes["policy.bias"] = (config.policy_size,)
    shapes["value.hidden.weight"] = (fan_in, config.value_hidden)
    shapes["value.hidden.bias"] = (config.value_hidden,)
    shapes["value.out.weight"] = (config.value_hidden, 1)
    shapes["value.out.bias"] = (1,)
    return shapes


@dataclass
class ModelParams:
    """Named parameter arrays plus the configuration they were built for."""

    config: NetworkConfig
    arrays: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        expected = parameter_shapes(self.config)
        if list(self.arrays) != list(expected):
            raise ShapeMismatch(f"Parameter names {list(self.arrays)} do not match {list(expected)}")
        for name, shape in expected.items():
            if self.arrays[name].shape != shape:
                raise ShapeMismatch(f"{name}: expected shape {shape}, got {self.arrays[name].shape}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self.arrays.items())

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {name: array.copy() for name, array in self.arrays.items()})

    def zeros_like(self) -> Gradients:
        return {name: np.zeros_like(array) for name, array in self.arrays.items()}

    def is_finite(self) -> bool:
        return all(bool(np.isfinite(array).all()) for array in self.arrays.values())


def init_params(config: NetworkConfig) -> ModelParams:
    """Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) for weights and biases, seeded by config.seed."""
    rng = np.random.default_rng(config.seed)
    arrays: dict[str, np.ndarray] = {}
    fan_in = config.input_size
    for name, shape in parameter_shapes(config).items():
        # every bias follows its weight
        if len(shape) == 2:
            fan_in = shape[0]
        bound = math.sqrt(1.0 / fan_in)
        arrays[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(config, arrays)


# ---------------------------------------------------------------------------
# Forward
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Evaluation:
    policy: np.ndarray
    value: float


@dataclass
class ActivationCache:
    """Everything the backward pass needs from one forward pass over a batch."""

    inputs: np.ndarray
    backbone_pre: list[np.ndarray]
    backbone_out: list[np.ndarray]
    value_pre: np.ndarray
    value_hidden: np.ndarray
    policy: np.ndarray
    value: np.ndarray

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[0]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _as_batch(config: NetworkConfig, planes: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(planes, dtype=np.float64)
    size = config.input_size
    if x.ndim in (1, 3) and x.size == size:
        return x.reshape(1, size), True
    if x.ndim == 2 and x.shape[1] == size:
        return x, False
    if x.ndim == 4 and int(np.prod(x.shape[1:])) == size:
        return x.reshape(x.shape[0], size), False
    raise ShapeMismatch(f"Input of shape {x.shape} does not flatten to {size} features")


def forward_batch(params: ModelParams, inputs: np.ndarray) -> ActivationCache:
    """Forward pass over a batch; inputs are (B, input_size) or (B, 10, 9, 15)."""
    x, _ = _as_batch(params.config, inputs)
    return _forward(params, x)


def _forward(params: ModelParams, x: np.ndarray) -> ActivationCache:
    pre_list: list[np.ndarray] = []
    out_list: list[np.ndarray] = [x]
    h = x
    for i in range(len(params.config.hidden_sizes)):
        pre = h @ params[f"backbone.{i}.weight"] + params[f"backbone.{i}.bias"]
        h = np.maximum(pre, 0.0)
        pre_list.append(pre)
        out_list.append(h)
    policy = softmax(h @ params["policy.weight"] + params["policy.bias"])
    value_pre = h @ params["value.hidden.weight"] + params["value.hidden.bias"]
    value_hidden = np.maximum(value_pre, 0.0)
    value = np.tanh(value_hidden @ params["value.out.weight"] + params["value.out.bias"])[:, 0]
    return ActivationCache(
        inputs=x,
        backbone_pre=pre_list,
        backbone_out=out_list,
        value_pre=value_pre,
        value_hidden=value_hidden,
        policy=policy,
        value=value,
    )


def model_forward(params: ModelParams, planes: np.ndarray) -> tuple[Evaluation, ActivationCache]:
    """
    Evaluate one position.

    Raises:
        ShapeMismatch: The planes do not flatten to the configured input size.
    """
    x, single = _as_batch(params.config, planes)
    if not single:
        raise ShapeMismatch(f"model_forward takes one position, got a batch of {x.shape[0]}")
    cache = _forward(params, x)
    return Evaluation(policy=cache.policy[0], value=float(cache.value[0])), cache


# ---------------------------------------------------------------------------
# Examples and loss
# ---------------------------------------------------------------------------


@dataclass
class TrainingExample:
    """
    One (state, target, outcome) triple.

    Exactly one of target_action (behavior cloning) or target_policy (search visits, sparse
    action -> probability) is set. legal_actions, when present, restricts the accuracy argmax.
    fen is kept for writing datasets; planes are what the model sees.
    """

    planes: np.ndarray
    z: float
    target_action: Optional[int] = None
    target_policy: Optional[dict[int, float]] = None
    legal_actions: Optional[np.ndarray] = field(default=None, repr=False)
    outcome_known: bool = True
    fen: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.target_action is None) == (self.target_policy is None):
            raise ValueError("Exactly one of target_action or target_policy must be set")
        if not -1.0 <= self.z <= 1.0:
            raise ValueError(f"z must lie in [-1, 1], got {self.z}")

    def policy_target_vector(self, size: int) -> np.ndarray:
        target = np.zeros(size, dtype=np.float64)
        if self.target_action is not None:
            target[self.target_action] = 1.0
        else:
            assert self.target_policy is not None
            for action, probability in self.target_policy.items():
                target[action] = probability
        return target

    @property
    def best_action(self) -> int:
        """The target action, or the highest-probability action of a soft target (lowest index on ties)."""
        if self.target_action is not None:
            return self.target_action
        assert self.target_policy is not None
        policy = self.target_policy
        return min(policy, key=lambda action: (-policy[action], action))


ExampleLike = Union[TrainingExample, Sequence[TrainingExample]]


def loss(evaluation: Evaluation, example: TrainingExample) -> LossBreakdown:
    """Cross-entropy (log clamped at 1e-12) plus squared value error."""
    policy = np.asarray(evaluation.policy, dtype=np.float64)
    if example.target_action is not None:
        policy_loss = -math.log(max(float(policy[example.target_action]), LOG_CLAMP))
    else:
        target = example.policy_target_vector(policy.shape[0])
        policy_loss = float(-(target * np.log(np.maximum(policy, LOG_CLAMP))).sum())
    value_loss = (evaluation.value - example.z) ** 2
    return LossBreakdown.of(max(policy_loss, 0.0), value_loss)


def _targets(examples: Sequence[TrainingExample], policy_size: int) -> tuple[np.ndarray, np.ndarray]:
    targets = np.zeros((len(examples), policy_size), dtype=np.float64)
    for row, example in enumerate(examples):
        if example.target_action is not None:
            targets[row, example.target_action] = 1.0
        else:
            assert example.target_policy is not None
            for action, probability in example.target_policy.items():
                targets[row, action] = probability
    z = np.array([example.z for example in examples], dtype=np.float64)
    return targets, z


def _stack_planes(examples: Sequence[TrainingExample], input_size: int) -> np.ndarray:
    try:
        return np.stack([np.asarray(example.planes, dtype=np.float64).reshape(input_size) for example in examples])
    except ValueError as exc:
        raise ShapeMismatch(f"Example planes do not flatten to {input_size} features: {exc}") from exc


# ---------------------------------------------------------------------------
# Backward
# ---------------------------------------------------------------------------


def model_backward(params: ModelParams, cache: ActivationCache, example: ExampleLike) -> Gradients:
    """
    Gradient of the batch-mean loss with respect to every parameter.

    Raises:
        ShapeMismatch: The cache and the examples disagree on batch size.
    """
    examples = [example] if isinstance(example, TrainingExample) else list(example)
    batch = cache.batch_size
    if len(examples) != batch:
        raise ShapeMismatch(f"Cache holds {batch} positions but {len(examples)} examples were given")
    targets, z = _targets(examples, params.config.policy_size)
    grads: Gradients = {}

    # d(-sum t log softmax)/dlogits = p * sum(t) - t
    dlogits = (cache.policy * targets.sum(axis=1, keepdims=True) - targets) / batch
    dvalue = 2.0 * (cache.value - z) / batch
    dvalue_out = (dvalue * (1.0 - cache.value**2))[:, None]

    h = cache.backbone_out[-1]
    grads["value.out.weight"] = cache.value_hidden.T @ dvalue_out
    grads["value.out.bias"] = dvalue_out.sum(axis=0)
    dvalue_pre = (dvalue_out @ params["value.out.weight"].T) * (cache.value_pre > 0)
    grads["value.hidden.weight"] = h.T @ dvalue_pre
    grads["value.hidden.bias"] = dvalue_pre.sum(axis=0)
    grads["policy.weight"] = h.T @ dlogits
    grads["policy.bias"] = dlogits.sum(axis=0)

    dh = dlogits @ params["policy.weight"].T + dvalue_pre @ params["value.hidden.weight"].T
    for i in reversed(range(len(params.config.hidden_sizes))):
        dpre = dh * (cache.backbone_pre[i] > 0)
        grads[f"backbone.{i}.weight"] = cache.backbone_out[i].T @ dpre
        grads[f"backbone.{i}.bias"] = dpre.sum(axis=0)
        if i > 0:
            dh = dpre @ params[f"backbone.{i}.weight"].T

    return {name: grads[name] for name in params}


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    hyperparameters: AdamHyperparameters = field(default_factory=AdamHyperparameters)

    @classmethod
    def fresh(cls, params: ModelParams, hyperparameters: Optional[AdamHyperparameters] = None) -> "AdamState":
        return cls(
            step=0,
            m=params.zeros_like(),
            v=params.zeros_like(),
            hyperparameters=hyperparameters or AdamHyperparameters(),
        )


def adam_step(params: ModelParams, grads: Mapping[str, np.ndarray], state: AdamState) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update. Returns new params and state; the inputs are left untouched."""
    hp = state.hyperparameters
    t = state.step + 1
    correction1 = 1.0 - hp.beta1**t
    correction2 = 1.0 - hp.beta2**t
    new_arrays: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape:
            raise ShapeMismatch(f"Gradient {name} has shape {g.shape}, parameter has {value.shape}")
        m = hp.beta1 * state.m[name] + (1.0 - hp.beta1) * g
        v = hp.beta2 * state.v[name] + (1.0 - hp.beta2) * g * g
        new_arrays[name] = value - hp.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + hp.epsilon)
        new_m[name] = m
        new_v[name] = v
    return ModelParams(params.config, new_arrays), AdamState(t, new_m, new_v, hp)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


class _MetricAccumulator:
    def __init__(self) -> None:
        self.policy_loss = 0.0
        self.value_loss = 0.0
        self.correct = 0
        self.abs_error = 0.0
        self.count = 0

    def add(self, cache: ActivationCache, examples: Sequence[TrainingExample]) -> None:
        for row, example in enumerate(examples):
            breakdown = loss(Evaluation(cache.policy[row], float(cache.value[row])), example)
            self.policy_loss += breakdown.policy_loss
            self.value_loss += breakdown.value_loss
            self.abs_error += abs(float(cache.value[row]) - example.z)
            self.correct += int(_predicted_action(cache.policy[row], example) == example.best_action)
            self.count += 1

    def metrics(self) -> ExampleMetrics:
        n = max(self.count, 1)
        return ExampleMetrics(
            loss=LossBreakdown.of(self.policy_loss / n, self.value_loss / n),
            policy_accuracy=self.correct / n,
            value_mae=self.abs_error / n,
            examples=self.count,
        )


def _predicted_action(policy: np.ndarray, example: TrainingExample) -> int:
    if example.legal_actions is None or len(example.legal_actions) == 0:
        return int(np.argmax(policy))
    legal = np.sort(np.asarray(example.legal_actions))
    return int(legal[np.argmax(policy[legal])])


def _batches(count: int, batch_size: int, rng: Optional[np.random.Generator]) -> Iterator[np.ndarray]:
    order = rng.permutation(count) if rng is not None else np.arange(count)
    for start in range(0, count, batch_size):
        yield order[start : start + batch_size]


def train_epoch(
    params: ModelParams,
    state: AdamState,
    examples: Sequence[TrainingExample],
    batch_size: int,
    rng: Optional[np.random.Generator] = None,
    epoch: int = 1,
) -> tuple[ModelParams, AdamState, EpochMetrics]:
    """
    One pass over `examples` in minibatches (shuffled when `rng` is given).

    Metrics are measured on each batch before its update.

    Raises:
        EmptyDataset: No examples.
    """
    if not examples:
        raise EmptyDataset("Cannot train on zero examples")
    if batch_size <= 0:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    accumulator = _MetricAccumulator()
    steps = 0
    for indices in _batches(len(examples), batch_size, rng):
        batch = [examples[i] for i in indices]
        cache = _forward(params, _stack_planes(batch, params.config.input_size))
        accumulator.add(cache, batch)
        grads = model_backward(params, cache, batch)
        params, state = adam_step(params, grads, state)
        steps += 1
    measured = accumulator.metrics()
    return params, state, EpochMetrics(**measured.model_dump(), epoch=epoch, steps=steps)


def evaluate_examples(
    params: ModelParams, examples: Sequence[TrainingExample], batch_size: int = 256
) -> ExampleMetrics:
    """Loss, policy accuracy and value MAE without updating anything."""
    if not examples:
        raise EmptyDataset("Cannot evaluate zero examples")
    accumulator = _MetricAccumulator()
    for start in range(0, len(examples), batch_size):
        batch = list(examples[start : start + batch_size])
        accumulator.add(_forward(params, _stack_planes(batch, params.config.input_size)), batch)
    return accumulator.metrics()


def split_examples(
    examples: Sequence[TrainingExample], fraction: float, seed: int = 0
) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Seeded shuffle split into (train, held_out); the training side is never left empty."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must be in [0, 1), got {fraction}")
    order = np.random.default_rng(seed).permutation(len(examples))
    held = min(int(len(examples) * fraction), max(len(examples) - 1, 0))
    held_out = [examples[i] for i in sorted(order[:held])]
    train = [examples[i] for i in sorted(order[held:])]
    return train, held_out


def format_epoch_line(metrics: EpochMetrics, epochs: int) -> str:
    return (
        f"Epoch {metrics.epoch}/{epochs}, Loss: {metrics.loss.total:.4f}, "
        f"Policy Loss: {metrics.loss.policy_loss:.4f}, Value Loss: {metrics.loss.value_loss:.4f}"
    )


def train(
    params: ModelParams,
    state: AdamState,
    examples: Sequence[TrainingExample],
    epochs: int,
    batch_size: int,
    rng: Optional[np.random.Generator] = None,
    held_out: Sequence[TrainingExample] = (),
    show_progress: bool = False,
) -> tuple[ModelParams, AdamState, list[EpochMetrics]]:
    """Run `epochs` epochs, logging one line per epoch (plus held-out metrics when given)."""
    history: list[EpochMetrics] = []
    for epoch in tqdm(range(1, epochs + 1), desc="epochs", disable=not show_progress, leave=False):
        params, state, metrics = train_epoch(params, state, examples, batch_size, rng, epoch=epoch)
        if held_out:
            metrics = metrics.model_copy(update={"held_out": evaluate_examples(params, held_out)})
        logger.info(format_epoch_line(metrics, epochs))
        if metrics.held_out is not None:
            logger.info(
                f"Held-out policy accuracy: {metrics.held_out.policy_accuracy:.4f}, "
                f"value MAE: {metrics.held_out.value_mae:.4f}"
            )
        history.append(metrics)
    return params, state, history
