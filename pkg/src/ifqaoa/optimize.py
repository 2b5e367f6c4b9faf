"""Classical outer loop: L-BFGS, depth ladders with interpolation, linear schedules."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import engine
from .diagonals import DiagonalTables
from .engine import QaoaParams, VanishingSuccessError
from .metrics import (
    ResourceModel,
    RunRecord,
    clops_total,
    feasibility_rate,
    p_star,
    raar,
    resource_model,
    tts_approx,
)

__all__ = [
    "LbfgsResult",
    "DepthSchedule",
    "LinearSchedule",
    "DEFAULT_DEPTHS",
    "lbfgs_minimize",
    "interp_params",
    "build_linear",
    "training_objective",
    "linear_objective",
    "make_record",
    "optimize_params",
    "optimize_sequential",
    "optimize_linear_then_finetune",
]

log = logging.getLogger(__name__)

DEFAULT_DEPTHS = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64)


@dataclass
class LbfgsResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    trace: list          # accepted objective values, starting with the initial point
    grad_norms: list
    iterations: int
    message: str


def _two_loop(g, s_hist, y_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * s.dot(q)
        alphas.append(a)
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= s.dot(y) / y.dot(y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * y.dot(q)
        q += (a - b) * s
    return -q


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through two points with slopes, or None."""
    if a == b:
        return None
    d1 = da + db - 3 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if rad < 0:
        return None
    d2 = math.copysign(math.sqrt(rad), b - a)
    denom = db - da + 2 * d2
    if denom == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / denom


def _strong_wolfe(fun, x, f0, g0, d, step, c1, c2, max_evals=40):
    """Find a step satisfying the strong Wolfe conditions along ``d``.

    Returns ``(alpha, f, g)`` or ``None``; an infinite trial value means the step is too long.
    """
    dphi0 = float(g0.dot(d))
    best = None
    evals = 0

    def trial(a):
        nonlocal evals, best
        evals += 1
        fa, ga = fun(x + a * d)
        if math.isnan(fa) or (math.isfinite(fa) and not np.all(np.isfinite(ga))):
            raise FloatingPointError(f"non-finite objective or gradient at x={x + a * d!r}")
        if math.isfinite(fa) and fa <= f0 + c1 * a * dphi0 and (best is None or fa < best[1]):
            best = (a, fa, ga)
        da = float(ga.dot(d)) if math.isfinite(fa) else math.inf
        return fa, ga, da

    def zoom(lo, flo, dlo, hi, fhi, dhi):
        while evals < max_evals:
            # a collapsed bracket cannot improve the step any further
            if abs(hi - lo) <= 1e-12 * max(1.0, abs(lo)):
                return None
            a = None
            if math.isfinite(fhi) and math.isfinite(dhi):
                a = _cubic_min(lo, flo, dlo, hi, fhi, dhi)
            span = hi - lo
            if a is None or not (min(lo, hi) + 0.1 * abs(span) <= a <= max(lo, hi) - 0.1 * abs(span)):
                a = lo + 0.5 * span
            fa, ga, da = trial(a)
            if not math.isfinite(fa) or fa > f0 + c1 * a * dphi0 or fa >= flo:
                hi, fhi, dhi = a, fa, da
            else:
                if abs(da) <= -c2 * dphi0:
                    return a, fa, ga
                if da * (hi - lo) >= 0:
                    hi, fhi, dhi = lo, flo, dlo
                lo, flo, dlo = a, fa, da
        return None

    prev, fprev, dprev = 0.0, f0, dphi0
    a = step
    found = None
    for i in range(max_evals):
        fa, ga, da = trial(a)
        if not math.isfinite(fa) or fa > f0 + c1 * a * dphi0 or (i > 0 and fa >= fprev):
            found = zoom(prev, fprev, dprev, a, fa, da)
            break
        if abs(da) <= -c2 * dphi0:
            found = (a, fa, ga)
            break
        if da >= 0:
            found = zoom(a, fa, da, prev, fprev, dprev)
            break
        prev, fprev, dprev = a, fa, da
        a *= 2.0
        if evals >= max_evals:
            break
    return found if found is not None else best


def lbfgs_minimize(
    fun: Callable,
    x0,
    max_iters: int = 100,
    memory: int = 10,
    gtol: float = 1e-8,
    ftol: float = 1e-12,
    c1: float = 1e-4,
    c2: float = 0.9,
    callback: Callable | None = None,
) -> LbfgsResult:
    """Minimize ``fun(x) -> (value, gradient)`` with limited-memory BFGS.

    Stops when the gradient 2-norm drops to ``gtol``, the relative change of
    an accepted value is at most ``ftol``, the line search fails, or after
    ``max_iters`` iterations.  Accepted values never increase.
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"non-finite initial point x={x!r}")
    f, g = fun(x)
    g = np.asarray(g, dtype=float)
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise FloatingPointError(f"non-finite objective or gradient at x={x!r}")
    s_hist, y_hist, rho_hist = [], [], []
    trace = [float(f)]
    gnorms = [float(np.linalg.norm(g))]
    message = "iteration limit"
    it = 0
    while it < max_iters:
        if gnorms[-1] <= gtol:
            message = "gradient tolerance"
            break
        d = _two_loop(g, s_hist, y_hist, rho_hist)
        if d.dot(g) >= 0:
            s_hist.clear(), y_hist.clear(), rho_hist.clear()
            d = -g
        step = 1.0 if s_hist else min(1.0, 1.0 / gnorms[-1])
        found = _strong_wolfe(fun, x, f, g, d, step, c1, c2)
        if found is None:
            message = "line search failed"
            break
        a, f_new, g_new = found
        g_new = np.asarray(g_new, dtype=float)
        s = a * d
        y = g_new - g
        sy = s.dot(y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s), y_hist.append(y), rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0), y_hist.pop(0), rho_hist.pop(0)
        x = x + s
        f_old, f, g = f, float(f_new), g_new
        it += 1
        trace.append(f)
        gnorms.append(float(np.linalg.norm(g)))
        if callback is not None:
            callback(it, x, f, gnorms[-1])
        scale = max(abs(f_old), abs(f))
        if abs(f_old - f) <= ftol * scale:
            message = "relative value tolerance"
            break
    return LbfgsResult(x, f, g, trace, gnorms, it, message)


# -- parameter schedules --------------------------------------------------------------


@dataclass
class DepthSchedule:
    depths: Sequence[int] = DEFAULT_DEPTHS
    max_iters: int = 100
    # exp(-i beta sum X) after exp(-i gamma f): the descent quadrant has beta < 0 < gamma
    init_beta: float = -0.1
    init_gamma: float = 0.1

    def __post_init__(self):
        self.depths = tuple(int(p) for p in self.depths)
        if not self.depths or self.depths[0] < 1 or any(b <= a for a, b in zip(self.depths, self.depths[1:])):
            raise ValueError("depths must be a strictly increasing list of positive integers")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class LinearSchedule:
    delta_gamma: float
    delta_beta: float
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")


def _midpoints(p: int) -> np.ndarray:
    return (np.arange(p) + 0.5) / p


def build_linear(sched: LinearSchedule) -> QaoaParams:
    t = _midpoints(sched.p)
    return QaoaParams(betas=sched.delta_beta * t[::-1], gammas=sched.delta_gamma * t)


def interp_params(params: QaoaParams, p_new: int) -> QaoaParams:
    """Resample both angle sequences at a larger depth.

    Old angles sit at abscissae ``(i + 1/2)/p``; the piecewise-linear
    interpolant (constant beyond the end points) is read at ``(j + 1/2)/p_new``.
    """
    if p_new <= params.p:
        raise ValueError("target depth must exceed the current depth")
    old, new = _midpoints(params.p), _midpoints(p_new)
    return QaoaParams(np.interp(new, old, params.betas), np.interp(new, old, params.gammas))


# -- objectives -------------------------------------------------------------------------


def training_objective(tables: DiagonalTables, guard: bool = True):
    """``v -> (C, grad)`` over ``[betas..., gammas...]``.

    With ``guard`` a vanishing post-selection probability reads as an infinite
    value, so the line search backs off instead of aborting.
    """

    def fun(v):
        params = QaoaParams.from_vector(v)
        try:
            value, db, dg, _ = engine.value_and_gradient(tables, params)
        except VanishingSuccessError:
            if not guard:
                raise
            return math.inf, np.full(v.size, np.nan)
        return value, np.concatenate([db, dg])

    return fun


def linear_objective(tables: DiagonalTables, p: int, guard: bool = True):
    """``(delta_gamma, delta_beta) -> (C, grad)`` for the linear ramp at depth ``p``."""
    t = _midpoints(p)
    full = training_objective(tables, guard)

    def fun(v):
        params = build_linear(LinearSchedule(v[0], v[1], p))
        value, grad = full(params.to_vector())
        if not math.isfinite(value):
            return value, np.full(2, np.nan)
        d_beta, d_gamma = grad[:p], grad[p:]
        return value, np.array([d_gamma.dot(t), d_beta.dot(t[::-1])])

    return fun


# -- protocols --------------------------------------------------------------------------


def make_record(
    tables: DiagonalTables,
    params: QaoaParams,
    *,
    instance_id: str = "",
    resource: ResourceModel | None = None,
    state: engine.QaoaState | None = None,
    iterations: int = 0,
    trace=(),
    stage: str = "sequential",
) -> RunRecord:
    if resource is None:
        resource = resource_model(tables)
    if state is None:
        state = engine.evolve(tables, params)
    probs = state.probabilities()
    train = tables.problem_train_cost()
    feasible = tables.problem_feasible()
    ps = p_star(probs, train, feasible)
    q_list = [float(q) for q in state.layer_success]
    return RunRecord(
        instance_id=instance_id,
        method=tables.method.value,
        p=params.p,
        n=tables.n,
        betas=[float(b) for b in params.betas],
        gammas=[float(g) for g in params.gammas],
        objective=engine.expectation(state, tables.train_cost),
        raar=raar(probs, train, feasible),
        p_star=ps,
        q_list=q_list,
        q_total=float(np.prod(q_list)),
        clops=clops_total(resource, params.p),
        tts=tts_approx(q_list, ps, resource, params.p),
        gates=resource.gates,
        qpe_bits=tables.qpe_bits,
        feasibility=feasibility_rate(probs, feasible),
        iterations=iterations,
        trace=[float(v) for v in trace],
        stage=stage,
    )


def _failed_record(tables, params, instance_id, resource, stage, exc) -> RunRecord:
    nan = math.nan
    return RunRecord(
        instance_id=instance_id,
        method=tables.method.value,
        p=params.p,
        n=tables.n,
        betas=[float(b) for b in params.betas],
        gammas=[float(g) for g in params.gammas],
        objective=nan,
        raar=nan,
        p_star=0.0,
        q_list=[],
        q_total=0.0,
        clops=clops_total(resource, params.p),
        tts=math.inf,
        gates=resource.gates,
        qpe_bits=tables.qpe_bits,
        stage=stage,
        status=f"aborted: {exc}",
    )


def optimize_params(tables: DiagonalTables, params: QaoaParams, max_iters: int = 100, depth_tag=None):
    """Run L-BFGS on all angles from ``params``; returns ``(params, LbfgsResult)``."""
    tag = params.p if depth_tag is None else depth_tag

    def trace_row(it, x, f, gnorm):
        log.debug("depth=%s iteration=%d objective=%.12g grad_norm=%.3e", tag, it, f, gnorm)

    # the starting point itself must be evaluable
    fun = training_objective(tables)
    training_objective(tables, guard=False)(params.to_vector())
    res = lbfgs_minimize(fun, params.to_vector(), max_iters=max_iters, callback=trace_row)
    return QaoaParams.from_vector(res.x), res


def optimize_sequential(
    tables: DiagonalTables,
    schedule: DepthSchedule | None = None,
    *,
    instance_id: str = "",
    on_record: Callable[[RunRecord], None] | None = None,
    start_params: QaoaParams | None = None,
) -> list[RunRecord]:
    """Optimize depth after depth, seeding each depth with the interpolated previous optimum.

    ``start_params`` resumes an interrupted ladder from the optimum of the last
    finished depth; only schedule depths above it are run.
    """
    schedule = schedule or DepthSchedule()
    resource = resource_model(tables)
    records = []
    depths = schedule.depths
    if start_params is None:
        params = QaoaParams([schedule.init_beta], [schedule.init_gamma])
    else:
        params = start_params
        depths = tuple(p for p in depths if p > params.p)
    for p in depths:
        if params.p != p:
            params = interp_params(params, p)
        try:
            params, res = optimize_params(tables, params, schedule.max_iters)
            rec = make_record(
                tables, params, instance_id=instance_id, resource=resource,
                iterations=res.iterations, trace=res.trace,
            )
        except VanishingSuccessError as exc:
            rec = _failed_record(tables, params, instance_id, resource, "sequential", exc)
            records.append(rec)
            if on_record:
                on_record(rec)
            break
        records.append(rec)
        if on_record:
            on_record(rec)
    return records


def optimize_linear_then_finetune(
    tables: DiagonalTables,
    p: int,
    max_iters: int = 100,
    *,
    init_delta: tuple = (0.5, -0.5),
    instance_id: str = "",
):
    """Fit a linear ramp ``(delta_gamma, delta_beta)``, then free all ``2p`` angles.

    ``init_delta`` is ``(delta_gamma, delta_beta)``.

    Each stage gets its own iteration budget.  Returns the two records.
    """
    resource = resource_model(tables)
    fun = linear_objective(tables, p)
    linear_objective(tables, p, guard=False)(np.asarray(init_delta, dtype=float))
    res = lbfgs_minimize(fun, np.asarray(init_delta, dtype=float), max_iters=max_iters)
    lin_params = build_linear(LinearSchedule(res.x[0], res.x[1], p))
    linear = make_record(
        tables, lin_params, instance_id=instance_id, resource=resource,
        iterations=res.iterations, trace=res.trace, stage="linear",
    )
    fine_params, res2 = optimize_params(tables, lin_params, max_iters)
    fine = make_record(
        tables, fine_params, instance_id=instance_id, resource=resource,
        iterations=res2.iterations, trace=res2.trace, stage="finetune",
    )
    return linear, fine
