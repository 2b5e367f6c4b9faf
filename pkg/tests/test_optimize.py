import math

import numpy as np
import pytest
from scipy.optimize import minimize, rosen, rosen_der

from ifqaoa.diagonals import Method, build_tables
from ifqaoa.engine import QaoaParams, evolve, expectation
from ifqaoa.instances import generate_real, to_integer, to_problem
from ifqaoa.optimize import (
    DepthSchedule,
    LinearSchedule,
    build_linear,
    interp_params,
    lbfgs_minimize,
    linear_objective,
    optimize_linear_then_finetune,
    optimize_sequential,
    training_objective,
)


def quadratic(A, b):
    return lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b)


def test_convex_quadratic():
    rng = np.random.default_rng(0)
    Q = rng.normal(size=(4, 4))
    A = Q @ Q.T + 4 * np.eye(4)
    b = rng.normal(size=4)
    res = lbfgs_minimize(quadratic(A, b), np.zeros(4), gtol=1e-12)
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-8)
    assert res.iterations <= 10


def test_rosenbrock():
    res = lbfgs_minimize(lambda x: (rosen(x), rosen_der(x)), np.array([-1.2, 1.0]), max_iters=100)
    assert res.value < 1e-8
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)


def test_agrees_with_scipy():
    rng = np.random.default_rng(1)
    x0 = rng.normal(size=6)
    ours = lbfgs_minimize(lambda x: (rosen(x), rosen_der(x)), x0, max_iters=500, gtol=1e-10)
    ref = minimize(rosen, x0, jac=rosen_der, method="L-BFGS-B", options={"gtol": 1e-10, "maxiter": 500})
    assert ours.value == pytest.approx(ref.fun, abs=1e-8)


def test_stationary_start_returns_immediately():
    res = lbfgs_minimize(quadratic(np.eye(3), np.zeros(3)), np.zeros(3))
    assert res.iterations == 0
    assert res.message == "gradient tolerance"


def test_trace_non_increasing():
    res = lbfgs_minimize(lambda x: (rosen(x), rosen_der(x)), np.array([-1.5, 2.0, 0.5]), max_iters=60)
    assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))
    assert len(res.trace) == res.iterations + 1


def test_nan_objective_raises():
    with pytest.raises(FloatingPointError):
        lbfgs_minimize(lambda x: (math.nan, np.zeros_like(x)), np.zeros(2))
    with pytest.raises(FloatingPointError):
        lbfgs_minimize(lambda x: (0.0, np.zeros_like(x)), np.array([np.inf]))


def test_infinite_trial_shrinks_step():
    # a wall at x = 1.5 that the first trial steps over
    def fun(x):
        if x[0] > 1.5:
            return math.inf, np.full(1, np.nan)
        return float((x[0] - 1.0) ** 2), np.array([2 * (x[0] - 1.0)])

    res = lbfgs_minimize(fun, np.array([-3.0]))
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)


def test_interp_single_to_two():
    out = interp_params(QaoaParams([0.3], [0.7]), 2)
    np.testing.assert_array_equal(out.betas, [0.3, 0.3])
    np.testing.assert_array_equal(out.gammas, [0.7, 0.7])


def test_interp_endpoint_clamping():
    out = interp_params(QaoaParams([0.0, 1.0], [0.0, 1.0]), 4)
    np.testing.assert_allclose(out.gammas, [0.0, 0.25, 0.75, 1.0])


@pytest.mark.parametrize("p, p_new", [(2, 3), (3, 8), (5, 16)])
def test_interp_preserves_ramps(p, p_new):
    ramp = (np.arange(p) + 0.5) / p
    out = interp_params(QaoaParams(ramp[::-1], ramp), p_new)
    t = (np.arange(p_new) + 0.5) / p_new
    inside = (t >= ramp[0]) & (t <= ramp[-1])
    np.testing.assert_allclose(out.gammas[inside], t[inside], atol=1e-15)


def test_interp_requires_larger_depth():
    with pytest.raises(ValueError):
        interp_params(QaoaParams([0.1, 0.2], [0.1, 0.2]), 2)


def test_linear_schedule():
    params = build_linear(LinearSchedule(1.0, 1.0, 2))
    np.testing.assert_allclose(params.gammas, [0.25, 0.75])
    np.testing.assert_allclose(params.betas, [0.75, 0.25])
    zero = build_linear(LinearSchedule(0.0, 0.0, 5))
    assert not np.any(zero.to_vector())


def test_depth_schedule_validation():
    with pytest.raises(ValueError):
        DepthSchedule(depths=(2, 1))
    with pytest.raises(ValueError):
        DepthSchedule(depths=(0, 1))


@pytest.fixture(scope="module")
def tables():
    return build_tables(to_problem(to_integer(generate_real(6, 21))), Method.IF_EXACT)


def test_training_objective_matches_engine(tables):
    v = np.array([-0.2, 0.3, 0.1, 0.4])
    value, grad = training_objective(tables)(v)
    assert value == pytest.approx(expectation(evolve(tables, QaoaParams.from_vector(v)), tables.train_cost))
    assert grad.shape == (4,)


def test_linear_gradient_chain_rule(tables):
    fun = linear_objective(tables, 4)
    v = np.array([0.6, -0.4])
    _, grad = fun(v)
    h = 1e-5
    numeric = [(fun(v + h * e)[0] - fun(v - h * e)[0]) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(grad, numeric, rtol=1e-6)


def test_sequential_ladder(tables):
    records = optimize_sequential(tables, DepthSchedule(depths=(1, 2, 4, 8, 16)), instance_id="t")
    assert [r.p for r in records] == [1, 2, 4, 8, 16]
    assert records[-1].raar > records[0].raar
    for r in records:
        assert r.status == "ok"
        assert all(b <= a + 1e-12 for a, b in zip(r.trace, r.trace[1:]))
        # the optimizer never ends above its interpolated start
        assert r.objective <= r.trace[0] + 1e-12


def test_sequential_resume_continues_ladder(tables):
    sched = DepthSchedule(depths=(1, 2, 4))
    first = optimize_sequential(tables, sched)
    start = QaoaParams(first[1].betas, first[1].gammas)
    resumed = optimize_sequential(tables, sched, start_params=start)
    assert [r.p for r in resumed] == [4]
    assert resumed[0].objective == pytest.approx(first[2].objective, abs=1e-12)


def test_sequential_streams_records(tables):
    seen = []
    optimize_sequential(tables, DepthSchedule(depths=(1, 2)), on_record=seen.append)
    assert [r.p for r in seen] == [1, 2]


def test_linear_then_finetune(tables):
    linear, fine = optimize_linear_then_finetune(tables, 6, max_iters=40)
    assert (linear.stage, fine.stage) == ("linear", "finetune")
    assert fine.objective <= linear.objective + 1e-12
    assert linear.p == fine.p == 6


def test_approximate_ladder_records_success():
    t = build_tables(to_problem(generate_real(6, 5)), Method.IF_APPROX, qpe_bits=6)
    records = optimize_sequential(t, DepthSchedule(depths=(1, 2, 4), max_iters=30))
    for r in records:
        assert len(r.q_list) == r.p
        assert r.q_total == pytest.approx(np.prod(r.q_list))
        assert 0 < r.q_total <= 1
