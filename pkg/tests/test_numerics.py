"""Tests for the tensor tape, primitives, losses and the optimiser."""

from __future__ import annotations

import io
import threading

import numpy as np
import pytest

from distilkit.errors import ConfigError, ContractError, DimensionError, DomainError, FormatError
from distilkit.numerics import (
    AdamW,
    LinearSchedule,
    Tensor,
    activation,
    backward,
    binary_cross_entropy,
    binary_cross_entropy_with_logits,
    clip_grad_norm,
    compute_loss,
    cosine_similarity,
    cross_entropy,
    current_tape,
    dropout,
    gelu,
    layer_norm,
    leaky_relu,
    log_softmax_with_temperature,
    mse,
    no_grad,
    read_tensor,
    softmax_np,
    softmax_with_temperature,
    write_tensor,
)


def numeric_grad(fn, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        plus, minus = x.copy(), x.copy()
        plus[idx] += eps
        minus[idx] -= eps
        grad[idx] = (fn(plus) - fn(minus)) / (2 * eps)
    return grad


def analytic_grad(build, x: np.ndarray) -> np.ndarray:
    leaf = Tensor(x, requires_grad=True)
    backward(build(leaf))
    return leaf.grad


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------


class TestTape:
    def test_backward_accumulates_and_clears(self):
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        backward((x * x).sum())
        np.testing.assert_allclose(x.grad, [2.0, 4.0, 6.0])
        assert len(current_tape()) == 0
        backward((x * 3.0).sum())
        np.testing.assert_allclose(x.grad, [5.0, 7.0, 9.0])

    def test_shared_input_sums_contributions(self):
        x = Tensor(2.0, requires_grad=True)
        backward(x * x + x)
        assert x.grad == pytest.approx(5.0)

    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = (x * 2.0).sum()
        assert len(current_tape()) == 0
        assert not y.requires_grad

    def test_backward_needs_scalar(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ContractError):
            backward(x * 2.0)

    def test_backward_needs_recorded_loss(self):
        with pytest.raises(ContractError):
            backward(Tensor(1.0))

    def test_tapes_are_per_thread(self):
        x = Tensor([1.0], requires_grad=True)
        _ = (x * 2.0).sum()
        seen = []
        thread = threading.Thread(target=lambda: seen.append(len(current_tape())))
        thread.start()
        thread.join()
        assert seen == [0]
        assert len(current_tape()) > 0

    def test_item_needs_single_element(self):
        with pytest.raises(ContractError):
            Tensor([1.0, 2.0]).item()


# ---------------------------------------------------------------------------
# Gradients of primitives
# ---------------------------------------------------------------------------


class TestGradients:
    def test_activation_values(self):
        assert activation(Tensor(0.0), "sigmoid").item() == 0.5
        assert leaky_relu(Tensor(-2.0)).item() == pytest.approx(-0.02)
        assert gelu(Tensor(1.0)).item() == pytest.approx(0.8412, abs=1e-3)

    def test_square_derivative(self):
        assert analytic_grad(lambda t: t * t, np.array(3.0)) == pytest.approx(6.0)

    def test_softmax_cross_entropy_gradient(self):
        x = np.array([[0.3, -0.8, 1.1]])
        target = np.array([2])
        got = analytic_grad(lambda t: cross_entropy(t, target, temperature=1.5), x)
        want = numeric_grad(
            lambda v: cross_entropy(Tensor(v), target, temperature=1.5).item(), x, eps=1e-5
        )
        np.testing.assert_allclose(got, want, rtol=1e-4)

    @pytest.mark.parametrize(
        "op",
        [gelu, leaky_relu, lambda t: activation(t, "tanh"), lambda t: activation(t, "sigmoid")],
        ids=["gelu", "leaky_relu", "tanh", "sigmoid"],
    )
    def test_activation_gradients(self, op):
        x = np.array([-1.5, -0.3, 0.2, 1.7])
        weights = np.array([0.3, -1.0, 2.0, 0.5])
        got = analytic_grad(lambda t: (op(t) * weights).sum(), x)
        want = numeric_grad(lambda v: float((op(Tensor(v)).data * weights).sum()), x)
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)

    def test_matmul_gradient(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 4))
        got = analytic_grad(lambda t: (t @ Tensor(b)).sum(), a)
        np.testing.assert_allclose(got, np.tile(b.sum(axis=1), (2, 1)))

    def test_matmul_shape_mismatch(self):
        with pytest.raises(DimensionError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

    def test_softmax_gradient(self):
        x = np.array([[0.5, -1.0, 2.0]])
        weights = np.array([[1.0, 2.0, -1.0]])
        got = analytic_grad(lambda t: (softmax_with_temperature(t, 2.0) * weights).sum(), x)
        want = numeric_grad(lambda v: float((softmax_np(v, 2.0) * weights).sum()), x)
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-8)

    def test_layer_norm_gradient(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2, 5))
        gamma, beta = Tensor(rng.normal(size=5)), Tensor(rng.normal(size=5))
        weights = rng.normal(size=(2, 5))

        def value(v):
            return float((layer_norm(Tensor(v), gamma, beta).data * weights).sum())

        got = analytic_grad(lambda t: (layer_norm(t, gamma, beta) * weights).sum(), x)
        np.testing.assert_allclose(got, numeric_grad(value, x), rtol=1e-4, atol=1e-7)


# ---------------------------------------------------------------------------
# Softmax family
# ---------------------------------------------------------------------------


class TestSoftmax:
    def test_tempered_two_class_values(self):
        np.testing.assert_allclose(softmax_np(np.array([1.0, 2.0]), 2.0), [0.37754, 0.62246],
                                   atol=1e-4)

    def test_huge_temperature_is_near_uniform(self):
        np.testing.assert_allclose(softmax_np(np.array([5.0, -5.0]), 1000.0), 0.5, atol=0.01)

    def test_rows_sum_to_one_for_large_logits(self):
        probs = softmax_np(np.array([[1000.0, 1001.0, 999.0]]))
        assert probs.sum() == pytest.approx(1.0)
        assert np.all(np.isfinite(probs))

    def test_temperature_flattens(self):
        z = np.array([2.0, 0.0])
        assert softmax_np(z, 4.0)[0] < softmax_np(z, 1.0)[0]

    @pytest.mark.parametrize("temperature", [0.0, -1.0])
    def test_temperature_must_be_positive(self, temperature):
        with pytest.raises(DomainError):
            softmax_np(np.zeros(3), temperature)

    def test_log_softmax_matches_log_of_softmax(self):
        z = np.array([[0.1, 0.7, -2.0]])
        np.testing.assert_allclose(
            log_softmax_with_temperature(Tensor(z), 2.0).data, np.log(softmax_np(z, 2.0))
        )


# ---------------------------------------------------------------------------
# Losses and other primitives
# ---------------------------------------------------------------------------


class TestLosses:
    def test_cross_entropy_with_indices(self):
        logits = Tensor(np.log([[0.25, 0.75]]))
        assert cross_entropy(logits, np.array([1])).item() == pytest.approx(-np.log(0.75))

    def test_cross_entropy_soft_targets(self):
        logits = Tensor(np.zeros((1, 2)))
        assert cross_entropy(logits, np.array([[0.5, 0.5]])).item() == pytest.approx(np.log(2))

    def test_cross_entropy_weights_select_positions(self):
        logits = Tensor(np.log([[0.5, 0.5], [0.1, 0.9]]))
        loss = cross_entropy(logits, np.array([0, 1]), weights=np.array([0.0, 1.0]))
        assert loss.item() == pytest.approx(-np.log(0.9))

    def test_cross_entropy_zero_weights_give_zero(self):
        loss = cross_entropy(Tensor(np.zeros((2, 3))), np.array([0, 1]), weights=np.zeros(2))
        assert loss.item() == 0.0

    def test_cross_entropy_index_out_of_range(self):
        with pytest.raises(DomainError):
            cross_entropy(Tensor(np.zeros((1, 2))), np.array([2]))

    def test_bce_needs_open_interval(self):
        with pytest.raises(DomainError):
            binary_cross_entropy(Tensor([1.0]), np.array([1.0]))

    def test_bce_with_logits_matches_bce(self):
        logits = np.array([-2.0, 0.5, 3.0])
        target = np.array([0.0, 1.0, 1.0])
        probs = 1.0 / (1.0 + np.exp(-logits))
        assert binary_cross_entropy_with_logits(Tensor(logits), target).item() == pytest.approx(
            binary_cross_entropy(Tensor(probs), target).item()
        )

    def test_bce_with_logits_is_finite_for_extreme_logits(self):
        loss = binary_cross_entropy_with_logits(Tensor([800.0, -800.0]), np.array([0.0, 1.0]))
        assert np.isfinite(loss.item())

    def test_mse(self):
        assert mse(Tensor([1.0, 3.0]), np.array([0.0, 1.0])).item() == pytest.approx(2.5)

    def test_mse_shape_mismatch(self):
        with pytest.raises(DimensionError):
            mse(Tensor([1.0, 3.0]), np.array([0.0]))

    def test_compute_loss_unknown_kind(self):
        with pytest.raises(ConfigError):
            compute_loss(Tensor([0.5]), np.array([1.0]), "hinge")

    def test_activation_unknown_kind(self):
        with pytest.raises(ConfigError):
            activation(Tensor([0.5]), "relu6")


class TestPrimitives:
    def test_cosine_of_zero_vector_is_zero_and_flagged(self):
        a = Tensor(np.array([[0.0, 0.0], [1.0, 0.0]]), requires_grad=True)
        b = Tensor(np.array([[1.0, 1.0], [2.0, 0.0]]))
        cos, degenerate = cosine_similarity(a, b)
        np.testing.assert_allclose(cos.data, [0.0, 1.0])
        assert degenerate.tolist() == [True, False]
        backward(cos.sum())
        np.testing.assert_allclose(a.grad[0], [0.0, 0.0])

    def test_dropout_identity_when_not_training(self):
        x = Tensor(np.ones(10))
        assert dropout(x, 0.5, np.random.default_rng(0), training=False) is x

    def test_dropout_keeps_expectation(self):
        x = Tensor(np.ones(20000))
        out = dropout(x, 0.25, np.random.default_rng(0), training=True)
        assert out.data.mean() == pytest.approx(1.0, abs=0.03)
        assert set(np.unique(out.data)) <= {0.0, 1.0 / 0.75}


# ---------------------------------------------------------------------------
# Optimiser, schedule, clipping
# ---------------------------------------------------------------------------


class TestOptim:
    def test_schedule_warmup_then_decay(self):
        schedule = LinearSchedule(1e-3, total_steps=100, warmup_steps=10)
        assert schedule.lr_at(0) == 0.0
        assert schedule.lr_at(5) == pytest.approx(5e-4)
        assert schedule.lr_at(10) == pytest.approx(1e-3)
        assert schedule.lr_at(55) == pytest.approx(5e-4)
        assert schedule.lr_at(100) == 0.0

    def test_schedule_from_fraction(self):
        assert LinearSchedule.from_fraction(1.0, 200, 0.05).warmup_steps == 10

    def test_adamw_minimises_quadratic(self):
        w = Tensor(np.array([5.0, -3.0]), requires_grad=True, name="w.weight")
        optimizer = AdamW({"w.weight": w}, lr=0.1)
        schedule = LinearSchedule(0.1, total_steps=400)
        for step in range(400):
            optimizer.zero_grad()
            backward((w * w).sum())
            optimizer.step(schedule.lr_at(step))
        np.testing.assert_allclose(w.data, [0.0, 0.0], atol=5e-2)

    def test_weight_decay_skips_bias_and_norm(self):
        weight = Tensor(np.ones(2), requires_grad=True)
        bias = Tensor(np.ones(2), requires_grad=True)
        optimizer = AdamW({"l.weight": weight, "l.bias": bias}, lr=0.1, weight_decay=0.5)
        weight.grad = np.zeros(2)
        bias.grad = np.zeros(2)
        optimizer.step()
        np.testing.assert_allclose(weight.data, [0.95, 0.95])
        np.testing.assert_allclose(bias.data, [1.0, 1.0])

    def test_step_skips_params_without_grad(self):
        p = Tensor(np.ones(2), requires_grad=True)
        AdamW({"p.weight": p}, lr=0.1, weight_decay=0.5).step()
        np.testing.assert_allclose(p.data, [1.0, 1.0])

    def test_clip_grad_norm(self):
        a, b = Tensor(np.zeros(1), requires_grad=True), Tensor(np.zeros(1), requires_grad=True)
        a.grad, b.grad = np.array([3.0]), np.array([4.0])
        assert clip_grad_norm([a, b], 1.0) == pytest.approx(5.0)
        assert np.hypot(a.grad[0], b.grad[0]) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        ("grad", "norm", "after"),
        [([3.0, 4.0], 5.0, [3.0, 4.0]), ([6.0, 8.0], 10.0, [3.0, 4.0]), ([0.0, 0.0], 0.0, [0, 0])],
    )
    def test_clip_grad_norm_cases(self, grad, norm, after):
        p = Tensor(np.zeros(2), requires_grad=True)
        p.grad = np.array(grad)
        assert clip_grad_norm([p], 5.0) == pytest.approx(norm)
        np.testing.assert_allclose(p.grad, after)

    def test_clip_grad_norm_needs_grads(self):
        with pytest.raises(ContractError):
            clip_grad_norm([Tensor(np.zeros(1), requires_grad=True)], 1.0)


# ---------------------------------------------------------------------------
# Tensor serialisation
# ---------------------------------------------------------------------------


class TestSerialize:
    def test_roundtrip(self):
        array = np.arange(6, dtype=np.float64).reshape(2, 3)
        buf = io.BytesIO()
        write_tensor(buf, array)
        buf.seek(0)
        np.testing.assert_array_equal(read_tensor(buf), array)

    def test_truncated(self):
        buf = io.BytesIO()
        write_tensor(buf, np.ones(4))
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(buf.getvalue()[:-3]))

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            read_tensor(io.BytesIO(b"XXXX" + b"\x00" * 16))
