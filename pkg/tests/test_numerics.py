import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapplan.errors import GradientError, MapPlanError, ShapeError
from mapplan.numerics import (
    AdamState,
    SeededRng,
    Tape,
    Tensor,
    adam_step,
    backward,
    finite_diff_check,
    glorot_uniform,
    linear,
    ops,
    parameter,
    scaled_dot_attention,
)


def loop_matmul(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return out


def loop_attention(Q, K, V):
    """Scalar-loop reference for softmax(QK^T/sqrt(d))V."""
    d = len(Q[0])
    out = []
    for q in Q:
        logits = [sum(q[t] * k[t] for t in range(d)) / math.sqrt(d) for k in K]
        top = max(logits)
        w = [math.exp(l - top) for l in logits]
        z = sum(w)
        w = [x / z for x in w]
        out.append([sum(w[r] * V[r][c] for r in range(len(V))) for c in range(len(V[0]))])
    return out


class TestLinear:
    def test_identity(self):
        y = linear(Tensor([[1.0, 2.0]]), Tensor(np.eye(2)), Tensor([0.0, 0.0]))
        np.testing.assert_array_equal(y.value, [[1.0, 2.0]])

    def test_zero_input_passes_bias(self):
        W = Tensor(np.random.default_rng(0).normal(size=(4, 2)))
        y = linear(Tensor(np.zeros((3, 4))), W, Tensor([1.0, 1.0]))
        np.testing.assert_array_equal(y.value, np.ones((3, 2)))

    def test_matches_loop_matmul(self):
        rng = np.random.default_rng(7)
        x, W, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 2)), rng.normal(size=2)
        expected = [[v + b[j] for j, v in enumerate(row)] for row in loop_matmul(x.tolist(), W.tolist())]
        np.testing.assert_allclose(linear(Tensor(x), Tensor(W), Tensor(b)).value, expected, rtol=0, atol=1e-14)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError) as err:
            linear(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))), Tensor(np.zeros(2)))
        assert "(2, 3)" in str(err.value) and "(4, 2)" in str(err.value)

    def test_records_only_under_a_tape_with_grad_inputs(self):
        W = parameter(np.eye(2))
        with Tape() as tape:
            linear(Tensor([[1.0, 2.0]]), W, Tensor([0.0, 0.0]))
            linear(Tensor([[1.0, 2.0]]), Tensor(np.eye(2)), Tensor([0.0, 0.0]))
        assert len(tape) == 1
        linear(Tensor([[1.0, 2.0]]), W, Tensor([0.0, 0.0]))
        assert len(tape) == 1


class TestAttention:
    def test_single_key_returns_its_value(self):
        rng = np.random.default_rng(1)
        V = rng.normal(size=(1, 3))
        out = scaled_dot_attention(Tensor(rng.normal(size=(4, 2))), Tensor(rng.normal(size=(1, 2))), Tensor(V))
        np.testing.assert_allclose(out.value, np.repeat(V, 4, axis=0), rtol=0, atol=1e-15)

    def test_identical_keys_average_values(self):
        K = Tensor([[0.3, -1.2], [0.3, -1.2]])
        V = Tensor([[1.0, 2.0], [3.0, -4.0]])
        out = scaled_dot_attention(Tensor([[2.0, 5.0]]), K, V)
        np.testing.assert_allclose(out.value, [[2.0, -1.0]], atol=1e-15)

    def test_matches_scalar_loop(self):
        Q = [[0.5, -1.0], [2.0, 0.25]]
        K = [[1.0, 0.0], [-0.5, 1.5]]
        V = [[3.0, 1.0], [-2.0, 4.0]]
        out = scaled_dot_attention(Tensor(Q), Tensor(K), Tensor(V))
        np.testing.assert_allclose(out.value, loop_attention(Q, K, V), rtol=0, atol=1e-14)

    def test_empty_memory_rejected(self):
        with pytest.raises(MapPlanError):
            scaled_dot_attention(Tensor(np.zeros((1, 2))), Tensor(np.zeros((0, 2))), Tensor(np.zeros((0, 3))))

    def test_mismatched_rows_rejected(self):
        with pytest.raises(ShapeError):
            scaled_dot_attention(Tensor(np.zeros((1, 2))), Tensor(np.zeros((3, 2))), Tensor(np.zeros((2, 3))))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**31))
    def test_rows_are_convex_combinations(self, nq, nk, d, seed):
        rng = np.random.default_rng(seed)
        Q, K, V = rng.normal(size=(nq, d)) * 3, rng.normal(size=(nk, d)) * 3, rng.normal(size=(nk, 2))
        out, w = scaled_dot_attention(Tensor(Q), Tensor(K), Tensor(V), return_weights=True)
        assert np.all(w.value >= 0)
        np.testing.assert_allclose(w.value.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(out.value <= V.max(axis=0) + 1e-12) and np.all(out.value >= V.min(axis=0) - 1e-12)


class TestBackward:
    def test_sum(self):
        x = parameter([1.0, -2.0, 3.0])
        with Tape() as tape:
            loss = ops.total(x)
        np.testing.assert_array_equal(backward(tape, loss)[x], np.ones(3))

    def test_sum_of_squares(self):
        x = parameter([1.0, -2.0, 3.0])
        with Tape() as tape:
            loss = ops.total(ops.square(x))
        np.testing.assert_array_equal(backward(tape, loss)[x], 2 * x.value)

    def test_non_scalar_loss_rejected(self):
        x = parameter([1.0, 2.0])
        with Tape() as tape:
            y = ops.square(x)
        with pytest.raises(GradientError):
            backward(tape, y)

    def test_unused_leaf_gets_zeros(self):
        x, unused = parameter([1.0, 2.0]), parameter(np.ones((2, 2)))
        with Tape() as tape:
            loss = ops.total(x)
        grads = backward(tape, loss, wrt=[x, unused])
        np.testing.assert_array_equal(grads[unused], np.zeros((2, 2)))

    def test_shared_subexpression_accumulates(self):
        x = parameter([3.0])
        with Tape() as tape:
            y = x * x
            loss = ops.total(y + y)
        np.testing.assert_allclose(backward(tape, loss)[x], [12.0])

    def test_gradient_shapes_match_leaves(self):
        rng = np.random.default_rng(0)
        W, b = parameter(rng.normal(size=(3, 4))), parameter(rng.normal(size=4))
        with Tape() as tape:
            loss = ops.total(ops.tanh(linear(Tensor(rng.normal(size=(5, 3))), W, b)))
        grads = backward(tape, loss)
        assert grads[W].shape == W.shape and grads[b].shape == b.shape


PRIMITIVE_CASES = {
    "tanh": lambda p: ops.total(ops.tanh(p[0])),
    "sigmoid": lambda p: ops.total(ops.sigmoid(p[0])),
    "softplus": lambda p: ops.total(ops.softplus(p[0])),
    "log_sigmoid": lambda p: ops.total(ops.log_sigmoid(p[0])),
    "exp": lambda p: ops.total(ops.exp(p[0])),
    "softmax": lambda p: ops.total(ops.mul(ops.softmax_rows(p[0]), ops.square(p[0]))),
    "cumsum": lambda p: ops.total(ops.square(ops.cumsum(p[0], axis=0))),
    "row_norm": lambda p: ops.total(ops.row_norm(p[0])),
    "matmul": lambda p: ops.total(ops.tanh(ops.matmul(p[0], ops.transpose(p[0])))),
    "index": lambda p: ops.total(ops.square(p[0][1:, ::2])),
    "concat": lambda p: ops.total(ops.square(ops.concat([p[0], ops.tanh(p[0])], axis=1))),
    "sum_axis": lambda p: ops.total(ops.square(ops.sum_axis(p[0], 0))),
    "mul_scalar": lambda p: ops.total(ops.square(ops.mul_scalar(p[0], ops.total(p[0])))),
    "attention": lambda p: ops.total(ops.square(scaled_dot_attention(p[0], p[0], ops.tanh(p[0])))),
    "power": lambda p: ops.total(ops.power(ops.square(p[0]), 1.5)),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVE_CASES))
def test_primitive_gradients(name):
    x = Tensor(np.random.default_rng(3).normal(size=(3, 4)))
    assert finite_diff_check(PRIMITIVE_CASES[name], [x], eps=1e-6) < 1e-7


class TestFiniteDiffCheck:
    def test_quadratic(self):
        f = lambda p: ops.total(ops.square(p[0]))
        assert finite_diff_check(f, [Tensor([1.0, 2.0, 3.0])], eps=1e-5) < 1e-8

    def test_sigmoid_chain(self):
        f = lambda p: ops.total(ops.sigmoid(ops.scale(ops.sigmoid(ops.scale(ops.sigmoid(p[0]), 3.0)), -2.0)))
        assert finite_diff_check(f, [Tensor([0.3, -1.1, 2.0])], eps=1e-5) < 1e-5

    def test_constant_function(self):
        f = lambda p: Tensor(4.0)
        assert finite_diff_check(f, [Tensor([1.0, 2.0])]) == 0.0

    def test_eps_bounds(self):
        f = lambda p: ops.total(p[0])
        with pytest.raises(GradientError):
            finite_diff_check(f, [Tensor([1.0])], eps=0.1)
        with pytest.raises(GradientError):
            finite_diff_check(f, [Tensor([1.0])], eps=0.0)

    def test_non_finite_rejected(self):
        def f(p):
            v = p[0].value[0]
            return ops.total(p[0]) if v == 1.0 else Tensor(float("nan"))

        with pytest.raises(GradientError):
            finite_diff_check(f, [Tensor([1.0])], eps=1e-6)

    def test_detects_a_wrong_gradient(self):
        def f(p):
            x = p[0]
            wrong = ops.custom(np.sum(x.value**2), [x], lambda g: (g * 3.0 * x.value,), "wrong")
            return wrong

        assert finite_diff_check(f, [Tensor([1.0, 2.0])]) > 0.1


class TestAdam:
    def test_zero_grads_leave_params(self):
        params = {"w": Tensor([1.0, -2.0])}
        new, state = adam_step(params, {"w": np.zeros(2)}, AdamState(), lr=0.1)
        np.testing.assert_array_equal(new["w"].value, params["w"].value)
        assert state.step == 1

    def test_first_step_value(self):
        # m_hat = 1, v_hat = 1 after bias correction, so the step is lr / (1 + eps)
        new, _ = adam_step({"p": Tensor(1.0)}, {"p": np.array(1.0)}, AdamState(), 0.1, 0.9, 0.999, 1e-8)
        assert new["p"].item() == pytest.approx(1.0 - 0.1 / (1.0 + 1e-8), abs=1e-15)
        assert new["p"].item() == pytest.approx(0.9, abs=1e-8)

    def test_deterministic_and_pure(self):
        params = {"w": Tensor([0.5, 0.25])}
        grads = {"w": np.array([0.1, -0.3])}
        state = AdamState()
        a, sa = adam_step(params, grads, state.copy(), lr=0.01)
        b, sb = adam_step(params, grads, state.copy(), lr=0.01)
        np.testing.assert_array_equal(a["w"].value, b["w"].value)
        assert state.step == 0 and sa.step == sb.step == 1

    def test_rejects_nonpositive_lr(self):
        with pytest.raises(MapPlanError):
            adam_step({"w": Tensor([1.0])}, {}, AdamState(), lr=0.0)

    def test_minimizes_a_quadratic(self):
        params, state = {"w": Tensor([3.0, -2.0])}, AdamState()
        for _ in range(500):
            params, state = adam_step(params, {"w": 2 * params["w"].value}, state, lr=0.05)
        assert np.abs(params["w"].value).max() < 1e-2


class TestRng:
    def test_same_seed_same_draws(self):
        a, b = SeededRng(42), SeededRng(42)
        np.testing.assert_array_equal(a.uniform(size=5), b.uniform(size=5))

    def test_named_streams_are_independent_of_order(self):
        r1 = SeededRng(9)
        first = r1.stream("init").uniform(size=3)
        r2 = SeededRng(9)
        r2.stream("scenario").uniform(size=100)
        np.testing.assert_array_equal(r2.stream("init").uniform(size=3), first)
        assert not np.array_equal(SeededRng(9).stream("other").uniform(size=3), first)

    def test_glorot_bounds(self):
        w = glorot_uniform(SeededRng(0), 30, 10)
        assert w.shape == (30, 10) and np.abs(w).max() <= math.sqrt(6 / 40)


def test_tensors_are_read_only():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.value[0] = 5.0


def test_forward_is_bitwise_deterministic():
    def run():
        rng = SeededRng(5)
        x = Tensor(rng.normal(size=(6, 4)))
        W = Tensor(glorot_uniform(rng, 4, 4))
        return scaled_dot_attention(ops.tanh(x @ W), x, x).value

    assert run().tobytes() == run().tobytes()
