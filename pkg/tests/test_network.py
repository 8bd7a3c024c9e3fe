"""
Policy-value model tests: forward shapes, loss anchors, gradient check, Adam and training.
"""

import math

import numpy as np
import pytest

from tests.conftest import random_walk_states
from xiangqi_zero.core.encoding import NUM_ACTIONS, PLANE_SHAPE, encode_state
from xiangqi_zero.core.errors import EmptyDataset, ShapeMismatch
from xiangqi_zero.core.network import (
    AdamState,
    Evaluation,
    ModelParams,
    TrainingExample,
    adam_step,
    evaluate_examples,
    forward_batch,
    init_params,
    loss,
    model_backward,
    model_forward,
    parameter_shapes,
    softmax,
    split_examples,
    train,
    train_epoch,
)
from xiangqi_zero.core.notation import emit_fen
from xiangqi_zero.core.rules import initial_position
from xiangqi_zero.core.selfplay import make_example
from xiangqi_zero.models.schemas import AdamHyperparameters, NetworkConfig


def tiny_examples(config: NetworkConfig, count: int, seed: int = 0) -> list[TrainingExample]:
    """Random inputs with a mix of one-hot and soft targets."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(count):
        planes = rng.normal(size=config.input_size)
        z = float(rng.uniform(-1.0, 1.0))
        if i % 2 == 0:
            examples.append(TrainingExample(planes=planes, z=z, target_action=int(rng.integers(config.policy_size))))
        else:
            weights = rng.uniform(size=3)
            actions = rng.choice(config.policy_size, size=3, replace=False)
            policy = {int(a): float(w / weights.sum()) for a, w in zip(actions, weights)}
            examples.append(TrainingExample(planes=planes, z=z, target_policy=policy))
    return examples


def batch_loss(params: ModelParams, examples: list[TrainingExample]) -> float:
    cache = forward_batch(params, np.stack([example.planes for example in examples]))
    total = 0.0
    for row, example in enumerate(examples):
        total += loss(Evaluation(cache.policy[row], float(cache.value[row])), example).total
    return total / len(examples)


class TestParameters:
    def test_shapes_in_declaration_order(self):
        shapes = parameter_shapes(NetworkConfig(hidden_sizes=(32, 16), value_hidden=8))
        assert list(shapes) == [
            "backbone.0.weight",
            "backbone.0.bias",
            "backbone.1.weight",
            "backbone.1.bias",
            "policy.weight",
            "policy.bias",
            "value.hidden.weight",
            "value.hidden.bias",
            "value.out.weight",
            "value.out.bias",
        ]
        assert shapes["backbone.0.weight"] == (1350, 32)
        assert shapes["policy.weight"] == (16, 8100)
        assert shapes["value.out.weight"] == (8, 1)

    def test_init_is_seeded_and_bounded(self, tiny_network_config):
        first = init_params(tiny_network_config)
        second = init_params(tiny_network_config)
        for name, array in first.items():
            assert np.array_equal(array, second[name])
        bound = math.sqrt(1.0 / tiny_network_config.input_size)
        assert np.abs(first["backbone.0.weight"]).max() <= bound
        assert np.abs(first["backbone.0.bias"]).max() <= bound

    def test_wrong_shape_rejected(self, tiny_network_config):
        params = init_params(tiny_network_config)
        arrays = dict(params.arrays)
        arrays["policy.bias"] = np.zeros(5)
        with pytest.raises(ShapeMismatch):
            ModelParams(tiny_network_config, arrays)


class TestForward:
    def test_policy_is_distribution_and_value_bounded(self, small_network_config):
        params = init_params(small_network_config)
        for state in random_walk_states(5, seed=2):
            evaluation, _ = model_forward(params, encode_state(state))
            assert evaluation.policy.shape == (NUM_ACTIONS,)
            assert evaluation.policy.sum() == pytest.approx(1.0)
            assert np.all(evaluation.policy >= 0)
            assert -1.0 <= evaluation.value <= 1.0

    def test_softmax_ignores_constant_shift(self):
        logits = np.random.default_rng(4).normal(size=(3, NUM_ACTIONS)) * 5.0
        base = softmax(logits)
        for shift in (-37.0, 1000.0):
            assert np.allclose(softmax(logits + shift), base, rtol=0.0, atol=1e-10)
        assert np.allclose(base.sum(axis=-1), 1.0, atol=1e-9)

    def test_zero_weights_give_uniform_policy_and_zero_value(self, small_network_config):
        params = init_params(small_network_config)
        params = ModelParams(small_network_config, params.zeros_like())
        evaluation, _ = model_forward(params, encode_state(random_walk_states(1, seed=6)[0]))
        assert np.allclose(evaluation.policy, 1.0 / NUM_ACTIONS, rtol=0.0, atol=1e-15)
        assert evaluation.value == 0.0

    def test_wrong_input_size(self, small_network_config):
        params = init_params(small_network_config)
        with pytest.raises(ShapeMismatch):
            model_forward(params, np.zeros(100))

    def test_batch_rejected_by_single_forward(self, tiny_network_config):
        params = init_params(tiny_network_config)
        with pytest.raises(ShapeMismatch):
            model_forward(params, np.zeros((2, 30)))


class TestLoss:
    def test_uniform_policy_one_hot_target(self):
        evaluation = Evaluation(policy=np.full(NUM_ACTIONS, 1.0 / NUM_ACTIONS), value=0.0)
        example = TrainingExample(planes=np.zeros(PLANE_SHAPE), z=0.0, target_action=5)
        breakdown = loss(evaluation, example)
        assert abs(breakdown.policy_loss - math.log(8100)) < 1e-9
        assert breakdown.value_loss == 0.0

    def test_perfect_prediction_is_zero(self):
        policy = np.zeros(NUM_ACTIONS)
        policy[17] = 1.0
        example = TrainingExample(planes=np.zeros(PLANE_SHAPE), z=1.0, target_action=17)
        assert abs(loss(Evaluation(policy, 1.0), example).total) < 1e-12

    def test_log_is_clamped(self):
        example = TrainingExample(planes=np.zeros(PLANE_SHAPE), z=0.0, target_action=3)
        breakdown = loss(Evaluation(np.zeros(NUM_ACTIONS), 0.0), example)
        assert breakdown.policy_loss == pytest.approx(-math.log(1e-12))

    def test_value_weighted_equally(self):
        policy = np.zeros(NUM_ACTIONS)
        policy[0] = 1.0
        example = TrainingExample(planes=np.zeros(PLANE_SHAPE), z=-1.0, target_action=0)
        breakdown = loss(Evaluation(policy, 0.5), example)
        assert breakdown.total == pytest.approx(breakdown.policy_loss + 2.25)

    def test_example_needs_exactly_one_target(self):
        with pytest.raises(ValueError):
            TrainingExample(planes=np.zeros(PLANE_SHAPE), z=0.0)
        with pytest.raises(ValueError):
            TrainingExample(planes=np.zeros(PLANE_SHAPE), z=0.0, target_action=1, target_policy={1: 1.0})


class TestBackward:
    def test_gradient_matches_finite_differences(self, tiny_network_config):
        params = init_params(tiny_network_config)
        examples = tiny_examples(tiny_network_config, 4, seed=8)
        cache = forward_batch(params, np.stack([example.planes for example in examples]))
        grads = model_backward(params, cache, examples)
        h = 1e-5
        for name, array in params.items():
            numeric = np.zeros_like(array)
            for index in np.ndindex(array.shape):
                plus, minus = params.copy(), params.copy()
                plus.arrays[name][index] += h
                minus.arrays[name][index] -= h
                numeric[index] = (batch_loss(plus, examples) - batch_loss(minus, examples)) / (2 * h)
            scale = np.linalg.norm(numeric) + np.linalg.norm(grads[name])
            error = np.linalg.norm(numeric - grads[name]) / max(scale, 1e-12)
            assert error < 1e-4, name

    def test_zero_gradient_at_optimum(self, tiny_network_config):
        params = init_params(tiny_network_config)
        arrays = {name: np.zeros_like(array) for name, array in params.items()}
        arrays["policy.bias"][7] = 50.0
        params = ModelParams(tiny_network_config, arrays)
        example = TrainingExample(planes=np.ones(30), z=0.0, target_action=7)
        evaluation, cache = model_forward(params, example.planes)
        assert loss(evaluation, example).total < 1e-12
        grads = model_backward(params, cache, example)
        for name, grad in grads.items():
            assert np.abs(grad).max() < 1e-12, name

    def test_value_error_leaves_policy_head_gradient_unchanged(self, tiny_network_config):
        params = init_params(tiny_network_config)
        planes = np.random.default_rng(11).normal(size=30)
        grads = {}
        for z in (-1.0, 1.0):
            example = TrainingExample(planes=planes, z=z, target_action=4)
            _, cache = model_forward(params, planes)
            grads[z] = model_backward(params, cache, example)
        for name in ("policy.weight", "policy.bias"):
            assert np.array_equal(grads[-1.0][name], grads[1.0][name]), name
        assert not np.array_equal(grads[-1.0]["value.out.bias"], grads[1.0]["value.out.bias"])

    def test_batch_size_mismatch(self, tiny_network_config):
        params = init_params(tiny_network_config)
        examples = tiny_examples(tiny_network_config, 3)
        cache = forward_batch(params, np.stack([example.planes for example in examples]))
        with pytest.raises(ShapeMismatch):
            model_backward(params, cache, examples[:2])


class TestAdam:
    def test_first_step_moves_by_learning_rate(self, tiny_network_config):
        params = init_params(tiny_network_config)
        state = AdamState.fresh(params, AdamHyperparameters(learning_rate=0.01))
        grads = {name: np.full_like(array, 3.0) for name, array in params.items()}
        updated, new_state = adam_step(params, grads, state)
        assert new_state.step == 1
        for name, array in params.items():
            assert np.allclose(array - updated[name], 0.01, atol=1e-8)
        assert state.step == 0

    def test_zero_gradient_leaves_params_unchanged(self, tiny_network_config):
        params = init_params(tiny_network_config)
        updated, state = adam_step(params, params.zeros_like(), AdamState.fresh(params))
        assert state.step == 1
        for name, array in params.items():
            assert np.array_equal(updated[name], array), name

    def test_single_example_loss_falls_every_step(self, tiny_network_config):
        params = init_params(tiny_network_config)
        example = tiny_examples(tiny_network_config, 1, seed=12)
        state = AdamState.fresh(params)
        losses = [batch_loss(params, example)]
        for _ in range(10):
            params, state, _ = train_epoch(params, state, example, batch_size=1)
            losses.append(batch_loss(params, example))
        assert all(after < before for before, after in zip(losses, losses[1:]))

    def test_descends_loss(self, tiny_network_config):
        params = init_params(tiny_network_config)
        examples = tiny_examples(tiny_network_config, 8, seed=2)
        state = AdamState.fresh(params)
        before = batch_loss(params, examples)
        for _ in range(50):
            params, state, _ = train_epoch(params, state, examples, batch_size=8)
        assert batch_loss(params, examples) < before


class TestTraining:
    def test_empty_dataset(self, tiny_network_config):
        params = init_params(tiny_network_config)
        with pytest.raises(EmptyDataset):
            train_epoch(params, AdamState.fresh(params), [], batch_size=4)

    def test_epoch_metrics(self, tiny_network_config):
        params = init_params(tiny_network_config)
        examples = tiny_examples(tiny_network_config, 10)
        _, state, metrics = train_epoch(params, AdamState.fresh(params), examples, batch_size=4)
        assert metrics.steps == 3
        assert state.step == 3
        assert metrics.examples == 10
        assert metrics.loss.total == pytest.approx(metrics.loss.policy_loss + metrics.loss.value_loss)

    def test_train_reports_held_out(self, tiny_network_config):
        params = init_params(tiny_network_config)
        examples = tiny_examples(tiny_network_config, 12)
        train_set, held_out = split_examples(examples, 0.25, seed=1)
        assert len(train_set) == 9 and len(held_out) == 3
        _, _, history = train(params, AdamState.fresh(params), train_set, 2, 4, np.random.default_rng(0), held_out)
        assert [metrics.epoch for metrics in history] == [1, 2]
        assert history[-1].held_out is not None
        assert history[-1].held_out.examples == 3

    def test_same_seed_trains_bit_identically(self, tiny_network_config):
        examples = tiny_examples(tiny_network_config, 10, seed=13)
        runs = []
        for _ in range(2):
            params = init_params(tiny_network_config)
            params, state, _ = train(params, AdamState.fresh(params), examples, 3, 4, np.random.default_rng(7))
            runs.append((params, state))
        (first, first_state), (second, second_state) = runs
        assert first_state.step == second_state.step == 9
        for name, array in first.items():
            assert np.array_equal(array, second[name]), name

    def test_value_mae_is_exact_mean(self, small_network_config):
        params = ModelParams(small_network_config, init_params(small_network_config).zeros_like())
        state = initial_position()
        examples = [make_example(state, z=z, move=state.legal[0]) for z in (1.0, -1.0, 0.5, 0.0)]
        metrics = evaluate_examples(params, examples)
        assert metrics.value_mae == pytest.approx(2.5 / 4)
        assert metrics.loss.value_loss == pytest.approx((1.0 + 1.0 + 0.25) / 4)

    def test_split_never_empties_training_side(self, tiny_network_config):
        examples = tiny_examples(tiny_network_config, 1)
        train_set, held_out = split_examples(examples, 0.9)
        assert len(train_set) == 1 and held_out == []

    @pytest.mark.slow
    def test_overfits_one_batch(self):
        config = NetworkConfig(seed=0)
        assert config.hidden_sizes == (256, 256)
        rng = np.random.default_rng(0)
        examples, seen = [], set()
        for state in random_walk_states(400, seed=9, max_plies=80):
            fen = emit_fen(state)
            if fen in seen or not state.legal:
                continue
            seen.add(fen)
            move = state.legal[int(rng.integers(len(state.legal)))]
            z = float(rng.choice([-1.0, 0.0, 1.0]))
            examples.append(make_example(state, z=z, move=move))
            if len(examples) == 64:
                break
        assert len(examples) == 64

        params = init_params(config)
        opt_state = AdamState.fresh(params, AdamHyperparameters(learning_rate=1e-3))
        for _ in range(2000):
            params, opt_state, _ = train_epoch(params, opt_state, examples, batch_size=64)
            if opt_state.step % 50 == 0:
                metrics = evaluate_examples(params, examples)
                if metrics.policy_accuracy == 1.0 and metrics.value_mae < 0.1:
                    break
        metrics = evaluate_examples(params, examples)
        assert metrics.policy_accuracy == 1.0
        assert metrics.value_mae < 0.1
