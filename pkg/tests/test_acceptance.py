"""End-to-end acceptance checks; each test is tagged with the criterion it decides.

A summary line per criterion is printed at the end of the session.
"""

import math
import time

import numpy as np
import pytest

from conftest import integer_instances, small_integer_instance
from ifqaoa import oracle
from ifqaoa.cli import main
from ifqaoa.diagonals import Method, auto_penalty, build_tables, qpe_register_size
from ifqaoa.engine import QaoaParams, evolve, value_and_gradient
from ifqaoa.instances import generate_real, knapsack_from_lists, to_problem
from ifqaoa.metrics import (
    ResourceKind,
    ResourceModel,
    RunRecord,
    clops_cost_layer,
    clops_total,
    gate_count,
    tts,
    tts_approx,
    tts_star,
)
from ifqaoa.optimize import DepthSchedule, optimize_sequential
from ifqaoa.theta import build_theta_table, projection_factor, theta_direct, theta_lookup


def _random_params(rng, p, scale=1.0):
    return QaoaParams(rng.uniform(-scale, scale, p), rng.uniform(-scale, scale, p))


@pytest.mark.criterion(1, "exact-mode engine equals the explicit-register circuit")
def test_oracle_equivalence_exact(detail):
    rng = np.random.default_rng(11)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        if n == 1:
            inst = knapsack_from_lists([3], [int(rng.integers(1, 10))], int(rng.integers(1, 3)))
        else:
            inst = small_integer_instance(rng, n)
        tables = build_tables(to_problem(inst), Method.IF_EXACT, normalized=False)
        g = tables.g[0]
        M = qpe_register_size(g.min(), g.max())
        assert M <= 4
        params = _random_params(rng, int(rng.integers(1, 4)), scale=2.0)
        state = evolve(tables, params)
        main_state, probs = oracle.full_layer_oracle(tables.f, g, params, M)
        worst = max(worst, float(np.max(np.abs(state.amplitudes - main_state))))
        np.testing.assert_allclose(probs, 1.0, atol=1e-12)
    elapsed = time.perf_counter() - start
    detail(f"max |diff| = {worst:.1e}, {elapsed:.2f} s")
    assert worst <= 1e-9
    assert elapsed < 5.0


def _branch_factor(gamma_f, g, M):
    """Amplitude left on |x>|0> after QPE, controlled phase and inverse QPE on a single state."""
    state = oracle.full_state(np.array([1.0 + 0j]), M)
    oracle.qpe_forward(state, [g])
    oracle.controlled_cost(state, [gamma_f], 1.0)
    oracle.qpe_inverse(state, [g])
    return complex(state.amplitudes[(0, 0)])


@pytest.mark.criterion(2, "projection factor law matches the measured branch")
def test_projection_law(detail):
    rng = np.random.default_rng(22)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        M = int(rng.integers(2, 7))
        half = 1 << (M - 1)
        g = float(rng.uniform(-half, half - 1))
        gamma_f = float(rng.uniform(-2 * np.pi, 2 * np.pi))
        predicted = projection_factor(gamma_f, theta_direct(g, M))
        worst = max(worst, abs(predicted - _branch_factor(gamma_f, g, M)))
    elapsed = time.perf_counter() - start
    detail(f"max |diff| = {worst:.1e}, {elapsed:.2f} s")
    assert worst <= 1e-9
    assert elapsed < 5.0


@pytest.mark.criterion(3, "sign function exact on integers; table matches direct sum")
def test_theta_exactness(detail):
    start = time.perf_counter()
    worst_int = 0.0
    for M in range(2, 11):
        half = 1 << (M - 1)
        ells = np.arange(-half, half)
        table = build_theta_table(M)
        expected = np.where(ells >= 0, 1.0, -1.0)
        worst_int = max(worst_int, float(np.max(np.abs(theta_lookup(table, ells) - expected))))
        worst_int = max(worst_int, float(np.max(np.abs(theta_direct(ells, M) - expected))))
    worst_fft = 0.0
    for M in range(2, 9):
        table = build_theta_table(M)
        S = 1 << table.supersample
        grid = np.arange(table.values.size) / S
        worst_fft = max(worst_fft, float(np.max(np.abs(table.values - theta_direct(grid, M)))))
    elapsed = time.perf_counter() - start
    detail(f"integers {worst_int:.1e}, table {worst_fft:.1e}, {elapsed:.2f} s")
    assert worst_int <= 1e-9
    assert worst_fft <= 1e-9
    assert elapsed < 10.0


def _fd_gradient(tables, params, h=1e-5):
    v = params.to_vector()
    out = np.empty_like(v)
    for i in range(v.size):
        up, down = v.copy(), v.copy()
        up[i] += h
        down[i] -= h
        cu = value_and_gradient(tables, QaoaParams.from_vector(up))[0]
        cd = value_and_gradient(tables, QaoaParams.from_vector(down))[0]
        out[i] = (cu - cd) / (2 * h)
    return out


def _rel_error(tables, params):
    _, db, dg, _ = value_and_gradient(tables, params)
    analytic = np.concatenate([db, dg])
    numeric = _fd_gradient(tables, params)
    return float(np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-12))


@pytest.mark.criterion(4, "adjoint gradients match central finite differences")
def test_gradients(detail):
    rng = np.random.default_rng(44)
    start = time.perf_counter()
    exact, approx = 0.0, 0.0
    for i in range(10):
        inst = to_problem(generate_real(4, 1000 + i))
        params = _random_params(rng, 3)
        exact = max(exact, _rel_error(build_tables(inst, Method.IF_EXACT), params))
        approx = max(approx, _rel_error(build_tables(inst, Method.IF_APPROX, qpe_bits=4), params))
    elapsed = time.perf_counter() - start
    detail(f"exact {exact:.1e}, approximate {approx:.1e}, {elapsed:.2f} s")
    assert exact <= 1e-6
    assert approx <= 1e-4
    assert elapsed < 30.0


@pytest.mark.criterion(5, "gate and layer counts of the worked resource example")
def test_resource_formulas(detail):
    assert gate_count(20, 8, ResourceKind.QUBO_PENALTY) == 398
    assert gate_count(20, 9, ResourceKind.INDICATOR_FAST) == 470
    assert clops_cost_layer(20, 9, ResourceKind.INDICATOR_SEQUENTIAL) == 94
    assert clops_cost_layer(20, 9, ResourceKind.INDICATOR_FAST) == 85
    detail("398 / 470 / 94 / 85")


@pytest.mark.criterion(6, "auto penalty lifts the best infeasible state to the second-best feasible one")
def test_auto_penalty(detail):
    rng = np.random.default_rng(66)
    checked = 0
    worst = 0.0
    seed = 6000
    for _ in range(50):
        while True:
            n = int(rng.integers(2, 11))
            inst = integer_instances(n, 1, seed=seed)[0]
            seed += 1
            tables = build_tables(to_problem(inst), Method.IF_EXACT, normalized=False)
            # the rule needs a second-best feasible state
            if tables.feasible.sum() >= 2:
                break
        f, g, feasible = tables.f, tables.g[0], tables.feasible
        lam = auto_penalty(f, g, feasible)
        f2 = np.partition(f[feasible], 1)[1]
        unclamped = np.max((f2 - f[~feasible]) / g[~feasible] ** 2)
        if unclamped <= 0:
            assert lam == pytest.approx(1e-9)
            continue
        lifted = np.min(f[~feasible] + lam * g[~feasible] ** 2)
        worst = max(worst, abs(lifted - f2) / max(abs(f2), 1.0))
        checked += 1
    detail(f"{checked} instances with positive lambda, max rel {worst:.1e}")
    assert worst <= 1e-9


@pytest.mark.criterion(7, "indicator beats virtual penalty in median RAAR at depth 16")
def test_depth16_trend(detail):
    start = time.perf_counter()
    schedule = DepthSchedule(depths=(1, 2, 3, 4, 6, 8, 12, 16))
    medians = {}
    for n in (8, 10, 12):
        raar = {Method.IF_EXACT: [], Method.VIRTUAL_PENALTY: []}
        for inst in integer_instances(n, 32, seed=7):
            problem = to_problem(inst)
            for method in raar:
                recs = optimize_sequential(build_tables(problem, method), schedule, instance_id=inst.id)
                final = recs[-1]
                assert final.p == 16 and final.status == "ok"
                raar[method].append(final.raar)
        medians[n] = tuple(float(np.median(raar[m])) for m in raar)
    elapsed = time.perf_counter() - start
    detail(", ".join(f"N={n}: {a:.3f} vs {b:.3f}" for n, (a, b) in medians.items()) + f", {elapsed / 60:.1f} min")
    for n, (if_med, vp_med) in medians.items():
        assert if_med > vp_med, f"N={n}"
    assert elapsed < 30 * 60


@pytest.mark.criterion(8, "post-selection probability decays along the schedule and grows with register size")
def test_success_probability(detail):
    inst = to_problem(generate_real(10, 808))
    fine = build_tables(inst, Method.IF_APPROX, qpe_bits=8)
    coarse = build_tables(inst, Method.IF_APPROX, qpe_bits=4)
    recs = optimize_sequential(fine, DepthSchedule(depths=(1, 2, 4, 8, 16), max_iters=50))
    assert recs[-1].status == "ok" and recs[-1].p == 16
    params = QaoaParams(recs[-1].betas, recs[-1].gammas)
    totals = {}
    for name, tables in (("M=8", fine), ("M=4", coarse)):
        q_prev = 1.0
        for p in range(1, 17):
            prefix = QaoaParams(params.betas[:p], params.gammas[:p])
            q = evolve(tables, prefix).q_total
            assert q <= q_prev
            q_prev = q
        totals[name] = q_prev
    detail(f"q_total(16): M=8 {totals['M=8']:.4f}, M=4 {totals['M=4']:.4f}")
    assert totals["M=8"] >= totals["M=4"]


def _record(p, tts_value):
    return RunRecord("x", "if-exact", p, 4, [0.0] * p, [0.0] * p, 0.0, 0.0, 0.5, [1.0] * p, 1.0, 1, tts_value, 1)


@pytest.mark.criterion(9, "approximate time to solution reduces to the exact one; best depth is deterministic")
def test_tts_consistency(detail):
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n, m, p = (int(v) for v in rng.integers(1, 20, size=3))
        resource = ResourceModel(n, m, ResourceKind.INDICATOR_FAST)
        ps = float(rng.uniform(0.001, 1.0))
        a = tts_approx([1.0] * p, ps, resource, p)
        b = tts(ps, clops_total(resource, p))
        worst = max(worst, abs(a - b) / b)
    assert worst <= 1e-12
    recs = [_record(1, 500.0), _record(2, 300.0), _record(4, 300.0)]
    assert tts_star(recs) == (2, 300.0)
    assert tts_star(list(reversed(recs))) == (2, 300.0)
    detail(f"max rel {worst:.1e}")


@pytest.mark.criterion(10, "dataset generation and single runs are byte-identical across invocations")
def test_determinism(tmp_path, detail):
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["gen", "--n", "6,8", "--count", "4", "--seed", "5", "--out", str(out)]) == 0
        run = out / "run.jsonl"
        args = ["run", "--dataset", str(out / "integer.jsonl"), "--method", "if-exact",
                "--depths", "1,2,4", "--out", str(run)]
        assert main(args) == 0
        args = ["run", "--dataset", str(out / "real.jsonl"), "--method", "if-approx",
                "--qpe-bits", "6", "--depths", "1,2", "--out", str(run)]
        assert main(args) == 0
        outputs.append([(out / name).read_bytes() for name in ("real.jsonl", "integer.jsonl", "run.jsonl")])
    assert outputs[0] == outputs[1]
    detail(f"{sum(len(b) for b in outputs[0])} bytes compared")
