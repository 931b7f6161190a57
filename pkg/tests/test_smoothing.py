import math

import numpy as np
import pytest

from stlddp.errors import DimensionMismatch, EmptyArgumentList
from stlddp.smoothing import (SmoothParams, SmoothValue, predicate_smooth,
                              smooth_max, smooth_min, smooth_state_robustness)
from stlddp.stl import (AffinePredicate, And, BallPredicate, BoxPredicate, NegPred,
                        Or, Pred, eval_predicate, exact_robustness)

from oracles import (central_gradient, central_hessian, random_state_formula,
                     rel_err, smax_naive, smin_naive)


def coords(a):
    """Arguments carrying derivatives with respect to themselves."""
    a = np.asarray(a, dtype=float)
    m = a.size
    return [SmoothValue(a[i], np.eye(m)[i], np.zeros((m, m))) for i in range(m)]


def op_value(op, k):
    return lambda a: float(op(coords(a), k).value)


def op_grad(op, k):
    return lambda a: op(coords(a), k).grad


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        SmoothParams(0.0, 1.0)
    with pytest.raises(ValueError):
        SmoothParams(1.0, -1.0)
    assert SmoothParams(2, 3).scaled(10) == SmoothParams(20, 30)


@pytest.mark.parametrize("op", [smooth_min, smooth_max])
def test_single_argument_unchanged(op):
    a = SmoothValue(np.array(1.5), np.array([1.0, 2.0]), np.array([[1.0, 0.5], [0.5, 3.0]]))
    assert op([a], 10.0) is a


@pytest.mark.parametrize("op", [smooth_min, smooth_max])
def test_empty_argument_list(op):
    with pytest.raises(EmptyArgumentList):
        op([], 10.0)


def test_smooth_min_of_equal_values():
    for m in (2, 3, 7):
        v = smooth_min(coords([0.3] * m), 10.0).value
        assert v == pytest.approx(0.3 - math.log(m) / 10, abs=1e-14)


def test_smooth_max_of_equal_values_is_exact():
    for m in (2, 5):
        assert smooth_max(coords([-1.25] * m), 10.0).value == -1.25


def test_smooth_min_worked_example():
    v = smooth_min(coords([0.0, 1.0]), 10.0).value
    assert v == pytest.approx(-math.log1p(math.exp(-10)) / 10, rel=1e-12)
    assert v == pytest.approx(-4.54e-6, rel=1e-3)


def test_smooth_max_worked_example():
    v = smooth_max(coords([0.0, 1.0]), 10.0).value
    assert v == pytest.approx(math.exp(10) / (1 + math.exp(10)), rel=1e-14)
    assert v == pytest.approx(0.9999546, abs=1e-7)


@pytest.mark.parametrize("op, naive", [(smooth_min, smin_naive), (smooth_max, smax_naive)])
def test_matches_unshifted_formula(op, naive):
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.uniform(-5, 5, int(rng.integers(2, 9)))
        k = float(rng.choice([1.0, 10.0]))
        assert op(coords(a), k).value == pytest.approx(naive(a, k), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("op", [smooth_min, smooth_max])
@pytest.mark.parametrize("point", [[0.0, 1.0], [0.3, -0.2, 0.1], [1.0, 1.0, 1.0]])
def test_derivatives_against_finite_differences(op, point):
    k = 10.0
    res = op(coords(point), k)
    assert rel_err(res.grad, central_gradient(op_value(op, k), point)) < 1e-6
    assert rel_err(res.hess, central_hessian(op_grad(op, k), point)) < 1e-5
    assert np.allclose(res.hess, res.hess.T, atol=1e-12)


def test_bounds_and_error_bound():
    rng = np.random.default_rng(1)
    for _ in range(500):
        a = rng.uniform(-5, 5, int(rng.integers(2, 9)))
        for k in (1.0, 10.0, 100.0, 1000.0):
            lo = smooth_min(coords(a), k).value
            hi = smooth_max(coords(a), k).value
            assert lo <= a.min()
            assert a.min() - lo <= math.log(a.size) / k + 1e-12
            assert hi <= a.max()


def test_smooth_max_converges_monotonically():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a = rng.uniform(-5, 5, 4)
        vals = [smooth_max(coords(a), k).value for k in (1.0, 10.0, 100.0, 1000.0)]
        assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
        assert abs(vals[-1] - a.max()) < 1e-2


def test_strict_for_distinct_arguments():
    a = [0.1, 0.2, -0.3]
    assert smooth_max(coords(a), 10.0).value < max(a)
    assert smooth_min(coords(a), 10.0).value < min(a)


def test_no_overflow_for_large_inputs():
    a = np.array([1e4, -1e4, 9999.0, -3.0])
    for k in (1.0, 100.0):
        for op in (smooth_min, smooth_max):
            r = op(coords(a), k)
            assert np.isfinite(r.value) and np.all(np.isfinite(r.grad))
            assert np.all(np.isfinite(r.hess))
    assert smooth_min(coords(a), 100.0).value == pytest.approx(-1e4)
    assert smooth_max(coords(a), 100.0).value == pytest.approx(1e4)


def test_batched_evaluation():
    rng = np.random.default_rng(3)
    A = rng.uniform(-2, 2, (3, 5, 4))  # 3 arguments, batch (5, 4)
    args = [SmoothValue(A[i]) for i in range(3)]
    batch = smooth_min(args, 10.0).value
    assert batch.shape == (5, 4)
    assert batch[2, 1] == pytest.approx(smin_naive(A[:, 2, 1], 10.0))


# -- state formulas -------------------------------------------------------------

def test_single_predicate_is_exact():
    y = np.array([0.3, -0.7])
    for pred in (AffinePredicate("a", [2.0, -1.0], 0.5), BallPredicate("b", [0.1, 0.2], 0.4)):
        r = smooth_state_robustness(Pred(pred), y, SmoothParams())
        assert r.value == eval_predicate(pred, y)
        assert rel_err(r.grad, central_gradient(lambda v: eval_predicate(pred, v), y)) < 1e-7
        neg = smooth_state_robustness(NegPred(pred), y, SmoothParams())
        assert neg.value == -r.value


def test_conjunction_worked_example():
    a, b = AffinePredicate("a", [1, 0], 0), AffinePredicate("b", [0, 1], 0)
    r = smooth_state_robustness(And((Pred(a), Pred(b))), [2.0, 2.0], SmoothParams(10, 10))
    assert r.value == pytest.approx(2 - math.log(2) / 10)
    assert r.value == pytest.approx(1.9307, abs=1e-4)


def test_box_goes_through_smooth_min():
    box = BoxPredicate("g", [0, 0], [1, 1])
    r = predicate_smooth(box, [0.5, 0.5], SmoothParams(10, 10))
    assert r.value == pytest.approx(0.5 - math.log(4) / 10)
    neg = predicate_smooth(box, [0.5, 0.5], SmoothParams(10, 10), negated=True)
    assert neg.value == pytest.approx(-0.5)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        smooth_state_robustness(Pred(BoxPredicate("g", [0, 0], [1, 1])), [1.0, 2.0, 3.0])


def _preds():
    return [BoxPredicate("b1", [0, 0], [1, 1]), BoxPredicate("b2", [-1, 0.5], [0.5, 2]),
            BallPredicate("c", [0.2, -0.3], 0.8), AffinePredicate("h", [1.0, 1.0], 0.2)]


def test_underapproximates_exact_robustness():
    rng = np.random.default_rng(4)
    preds = _preds()
    params = SmoothParams(10, 10)
    Y = rng.uniform(-2, 2, (500, 2))
    for _ in range(20):
        psi = random_state_formula(rng, preds, depth=3)
        smooth = smooth_state_robustness(psi, Y, params, derivatives=False).value
        exact = exact_robustness(psi, Y[:, None, :])
        assert np.all(smooth <= exact + 1e-12)


def test_formula_derivatives_against_finite_differences():
    rng = np.random.default_rng(5)
    preds = _preds()
    params = SmoothParams(10, 10)
    for _ in range(30):
        psi = random_state_formula(rng, preds, depth=3)
        y = rng.uniform(-2, 2, 2)
        r = smooth_state_robustness(psi, y, params)
        f = lambda v: float(smooth_state_robustness(psi, v, params, False).value)
        g = lambda v: smooth_state_robustness(psi, v, params).grad
        assert rel_err(r.grad, central_gradient(f, y)) < 1e-5
        assert rel_err(r.hess, central_hessian(g, y), floor=1e-3) < 1e-4


def test_or_of_two_targets():
    t1, t2 = BoxPredicate("t1", [0, 0], [1, 1]), BoxPredicate("t2", [3, 3], [4, 4])
    psi = Or((Pred(t1), Pred(t2)))
    inside = smooth_state_robustness(psi, [0.5, 0.5], SmoothParams()).value
    assert 0 < inside <= 0.5
