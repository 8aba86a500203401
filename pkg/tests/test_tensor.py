import numpy as np
import pytest

from moe_profiler import tensor as T
from moe_profiler.errors import ContractError, NumericError, ShapeError
from moe_profiler.tensor import Tensor

from .helpers import check_op_grads


def t64(arr, grad=True):
    return Tensor(np.asarray(arr, dtype=np.float64), requires_grad=grad)


class TestMatmul:
    def test_identity(self):
        a = Tensor(np.eye(2))
        b = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(T.matmul(a, b).data, [[1.0, 2.0], [3.0, 4.0]])

    def test_hand_product(self):
        # [[1,2],[3,4]] @ [[5,6],[7,8]] worked out by hand
        c = T.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0, 6.0], [7.0, 8.0]]))
        assert np.array_equal(c.data, [[19.0, 22.0], [43.0, 50.0]])

    def test_zero_annihilates(self):
        z = Tensor(np.zeros((3, 4)))
        b = Tensor(np.arange(20.0).reshape(4, 5))
        assert np.all(T.matmul(z, b).data == 0.0)

    def test_shape_mismatch_names_both(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
            T.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 2))))


class TestSoftmax:
    def test_uniform_row(self):
        s = T.softmax_rows(Tensor([[0.0, 0.0, 0.0, 0.0]]))
        assert np.allclose(s.data, 0.25)

    def test_shift_invariance(self, rng):
        x = rng.normal(size=(4, 6))
        a = T.softmax_rows(Tensor(x)).data
        b = T.softmax_rows(Tensor(x + 3.7)).data
        assert np.allclose(a, b, atol=1e-7)

    def test_log_123(self):
        s = T.softmax_rows(Tensor([[np.log(1.0), np.log(2.0), np.log(3.0)]]))
        assert np.allclose(s.data, [[1 / 6, 2 / 6, 3 / 6]], atol=1e-7)

    def test_rows_sum_to_one(self, rng):
        x = rng.normal(scale=5.0, size=(20, 13))
        s = T.softmax_rows(Tensor(x)).data
        assert np.abs(s.sum(axis=-1) - 1.0).max() < 1e-6
        assert (s >= 0).all()

    def test_nan_rejected(self):
        with pytest.raises(NumericError):
            T.softmax_rows(Tensor([[np.nan, 0.0]]))


class TestLayerNorm:
    def unit_affine(self, d):
        return Tensor(np.ones(d)), Tensor(np.zeros(d))

    def test_constant_frame_is_zero(self):
        g, b = self.unit_affine(5)
        out = T.layer_norm(Tensor(np.full((3, 5), 2.5)), g, b)
        assert np.allclose(out.data, 0.0)

    def test_two_point_frame(self):
        g, b = self.unit_affine(2)
        out = T.layer_norm(Tensor([[1.0, 3.0]]), g, b)
        assert np.allclose(out.data, [[-1.0, 1.0]], atol=1e-4)

    def test_mean_equals_bias_mean(self, rng):
        x = rng.normal(size=(6, 8))
        bias = rng.normal(size=8)
        out = T.layer_norm(Tensor(x), Tensor(np.ones(8)), Tensor(bias))
        assert np.allclose(out.data.mean(axis=-1), bias.mean(), atol=1e-6)

    def test_unit_variance_pre_affine(self, rng):
        x = rng.normal(scale=3.0, size=(10, 16))
        out = T.layer_norm(Tensor(x), Tensor(np.ones(16)), Tensor(np.zeros(16))).data
        assert np.abs(out.var(axis=-1) - 1.0).max() < 1e-4


class TestBackward:
    def test_sum_gives_ones(self, rng):
        p = t64(rng.normal(size=(3, 4)))
        T.sum_(p).backward()
        assert np.array_equal(p.grad, np.ones((3, 4)))

    def test_sum_of_squares(self):
        p = t64([1.0, 2.0])
        T.sum_(T.mul(p, p)).backward()
        assert np.allclose(p.grad, [2.0, 4.0])

    def test_non_scalar_rejected(self):
        with pytest.raises(ContractError):
            t64([1.0, 2.0]).backward()

    def test_repeated_backward_accumulates(self):
        p = t64([1.0, 2.0])
        loss = T.sum_(p)
        loss.backward()
        loss.backward()
        assert np.array_equal(p.grad, [2.0, 2.0])

    def test_zero_grad_resets(self):
        p = t64([1.0])
        T.sum_(p).backward()
        p.zero_grad()
        assert p.grad is None


# gradient checks: every differentiable op against central differences
OP_CASES = {}


def op_case(name):
    def deco(fn):
        OP_CASES[name] = fn
        return fn

    return deco


@op_case("add")
def _add(rng):
    a, b = t64(rng.normal(size=(3, 4))), t64(rng.normal(size=(3, 4)))
    return {"a": a, "b": b}, lambda: T.sum_(T.mul(T.add(a, b), T.add(a, b)))


@op_case("add_broadcast")
def _add_b(rng):
    a, b = t64(rng.normal(size=(3, 4))), t64(rng.normal(size=(4,)))
    return {"a": a, "b": b}, lambda: T.sum_(T.mul(T.add(a, b), T.add(a, b)))


@op_case("sub")
def _sub(rng):
    a, b = t64(rng.normal(size=(2, 5))), t64(rng.normal(size=(2, 5)))
    return {"a": a, "b": b}, lambda: T.sum_(T.mul(T.sub(a, b), T.sub(a, b)))


@op_case("mul_broadcast")
def _mul(rng):
    a, b = t64(rng.normal(size=(2, 3, 4))), t64(rng.normal(size=(3, 4)))
    return {"a": a, "b": b}, lambda: T.sum_(T.mul(a, b))


@op_case("div")
def _div(rng):
    a = t64(rng.normal(size=(3, 3)))
    b = t64(rng.uniform(0.5, 2.0, size=(3, 3)))
    return {"a": a, "b": b}, lambda: T.sum_(T.div(a, b))


@op_case("neg")
def _neg(rng):
    a = t64(rng.normal(size=(4,)))
    return {"a": a}, lambda: T.sum_(T.mul(T.neg(a), a))


@op_case("power")
def _pow(rng):
    a = t64(rng.uniform(0.5, 2.0, size=(3, 4)))
    return {"a": a}, lambda: T.sum_(T.power(a, 3.0))


@op_case("exp")
def _exp(rng):
    a = t64(rng.normal(size=(3, 4)))
    return {"a": a}, lambda: T.sum_(T.exp(a))


@op_case("log")
def _log(rng):
    a = t64(rng.uniform(0.5, 3.0, size=(3, 4)))
    return {"a": a}, lambda: T.sum_(T.log(a))


@op_case("sqrt")
def _sqrt(rng):
    a = t64(rng.uniform(0.5, 3.0, size=(3, 4)))
    return {"a": a}, lambda: T.sum_(T.sqrt(a))


@op_case("relu")
def _relu(rng):
    a = t64(rng.normal(size=(4, 4)) + 2.0)  # keep away from the kink
    return {"a": a}, lambda: T.sum_(T.mul(T.relu(a), a))


@op_case("gelu")
def _gelu(rng):
    a = t64(rng.normal(size=(4, 4)))
    return {"a": a}, lambda: T.sum_(T.gelu(a))


@op_case("sigmoid")
def _sigmoid(rng):
    a = t64(rng.normal(size=(3, 5)))
    return {"a": a}, lambda: T.sum_(T.sigmoid(a))


@op_case("clip")
def _clip(rng):
    a = t64(rng.uniform(0.2, 0.8, size=(6,)))
    return {"a": a}, lambda: T.sum_(T.mul(T.clip(a, 0.05, 0.95), a))


@op_case("sum_axis")
def _sum_axis(rng):
    a = t64(rng.normal(size=(3, 4, 2)))
    return {"a": a}, lambda: T.sum_(T.mul(T.sum_(a, axis=1), T.sum_(a, axis=1)))


@op_case("mean_axis")
def _mean_axis(rng):
    a = t64(rng.normal(size=(3, 4)))
    return {"a": a}, lambda: T.sum_(T.mul(T.mean_(a, axis=0), T.mean_(a, axis=0)))


@op_case("reshape_transpose")
def _resh(rng):
    a = t64(rng.normal(size=(2, 3, 4)))

    def build():
        r = T.transpose(T.reshape(a, (2, 12, 1)), (1, 0, 2))
        return T.sum_(T.mul(r, r))

    return {"a": a}, build


@op_case("concat")
def _concat(rng):
    a, b = t64(rng.normal(size=(2, 3))), t64(rng.normal(size=(2, 2)))

    def build():
        c = T.concat([a, b], axis=1)
        return T.sum_(T.mul(c, c))

    return {"a": a, "b": b}, build


@op_case("matmul")
def _matmul(rng):
    a, b = t64(rng.normal(size=(3, 4))), t64(rng.normal(size=(4, 2)))
    return {"a": a, "b": b}, lambda: T.sum_(T.mul(T.matmul(a, b), T.matmul(a, b)))


@op_case("matmul_batched")
def _matmul_b(rng):
    a, b = t64(rng.normal(size=(2, 3, 4))), t64(rng.normal(size=(4, 5)))
    return {"a": a, "b": b}, lambda: T.sum_(T.matmul(a, b))


@op_case("softmax")
def _softmax(rng):
    a = t64(rng.normal(size=(3, 5)))
    w = rng.normal(size=(3, 5))
    return {"a": a}, lambda: T.sum_(T.mul(T.softmax_rows(a), Tensor(w)))


@op_case("layer_norm")
def _layer_norm(rng):
    x = t64(rng.normal(size=(4, 6)))
    g = t64(rng.uniform(0.5, 1.5, size=6))
    b = t64(rng.normal(size=6))
    w = rng.normal(size=(4, 6))
    return {"x": x, "g": g, "b": b}, lambda: T.sum_(T.mul(T.layer_norm(x, g, b), Tensor(w)))


@op_case("conv1d")
def _conv1d(rng):
    x = t64(rng.normal(size=(2, 11, 3)))
    w = t64(rng.normal(size=(4, 3, 5)) * 0.3)
    b = t64(rng.normal(size=5))
    return {"x": x, "w": w, "b": b}, lambda: T.sum_(T.mul(T.conv1d(x, w, b, 2), T.conv1d(x, w, b, 2)))


@op_case("dropout")
def _dropout(rng):
    a = t64(rng.normal(size=(5, 5)))

    def build():
        # fresh but identical rng per call so finite differences see a fixed mask
        return T.sum_(T.dropout(a, 0.4, np.random.default_rng(99)))

    return {"a": a}, build


@pytest.mark.parametrize("name", sorted(OP_CASES))
def test_op_gradients_match_finite_differences(name):
    rng = np.random.default_rng(hash(name) % 2**32)
    params, build = OP_CASES[name](rng)
    check_op_grads(build, params, tol=1e-4)


def run_all_op_gradchecks():
    """Used by the acceptance suite; returns the worst relative error."""
    worst = 0.0
    for name, case in sorted(OP_CASES.items()):
        rng = np.random.default_rng(hash(name) % 2**32)
        params, build = case(rng)
        worst = max(worst, check_op_grads(build, params, tol=1e-4))
    return worst


def test_float32_default_and_float64_kept():
    assert Tensor([1, 2]).data.dtype == np.float32
    assert Tensor(np.zeros(2, dtype=np.float64)).data.dtype == np.float64
