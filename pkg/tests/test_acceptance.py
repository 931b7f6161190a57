"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are also
collected in an "acceptance criteria" section of the terminal summary.
"""

import math
import statistics
import time

import numpy as np
import pytest

from stlddp.costgen import check_soundness, compile, eval_running_cost
from stlddp.ddp import QuadraticCost, SolverConfig, solve
from stlddp.dynamics import LinearSystem, double_integrator, single_integrator
from stlddp.runner import SOLVERS, run_scenario
from stlddp.scenario import bundled_scenarios, initial_controls, load_scenario
from stlddp.smoothing import (SmoothParams, SmoothValue, smooth_max, smooth_min,
                              smooth_state_robustness)
from stlddp.stl import (AffinePredicate, BallPredicate, BoxPredicate, Specification,
                        exact_robustness, parse_spec)

from oracles import (all_signals, central_gradient, random_lq_instance,
                     random_path_formula, random_state_formula, rel_err, rho)

SEEDS = range(20)


# -- 1 ---------------------------------------------------------------------------

def test_criterion_1_smooth_operator_bounds(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    sizes = rng.integers(2, 9, 10_000)
    violations = 0
    for m in range(2, 9):
        A = rng.uniform(-5, 5, (m, int(np.sum(sizes == m))))
        args = [SmoothValue(row) for row in A]
        lo, hi = A.min(axis=0), A.max(axis=0)
        for k in (1.0, 10.0, 100.0):
            smin = smooth_min(args, k).value
            smax = smooth_max(args, k).value
            violations += int(np.sum(smin > lo))
            violations += int(np.sum(smax > hi))
            violations += int(np.sum(lo - smin > math.log(m) / k))
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 5.0
    criterion(1, ok, f"{violations} violations over 10^4 vectors x 3 k, {elapsed:.2f} s")
    assert ok


# -- 2 ---------------------------------------------------------------------------

def _coords(a):
    m = a.size
    return [SmoothValue(a[i], np.eye(m)[i], np.zeros((m, m))) for i in range(m)]


def test_criterion_2_gradient_checks(criterion):
    rng = np.random.default_rng(102)
    params = SmoothParams(10, 10)
    preds = [BoxPredicate("b1", [0, 0], [1, 1]), BoxPredicate("b2", [-1, 0.5], [0.5, 2]),
             BallPredicate("c", [0.2, -0.3], 0.8), AffinePredicate("h", [1.0, 1.0], 0.2)]
    named = {"obs": BoxPredicate("obs", [1, 1], [2, 2]),
             "goal": BoxPredicate("goal", [2.5, 2.5], [3.5, 3.5]),
             "t1": BoxPredicate("t1", [0, 2], [1, 3]), "c": BallPredicate("c", [2, 1], 0.5)}
    table = compile(parse_spec("G[0,4] (not obs) & F[0,4] (t1 | goal) & G[2,4] (not c)",
                               4, named))
    start = time.perf_counter()
    worst = {"smooth_min": 0.0, "smooth_max": 0.0, "state": 0.0, "running": 0.0}
    for _ in range(1000):
        a = rng.uniform(-2, 2, int(rng.integers(2, 9)))
        for name, op in (("smooth_min", smooth_min), ("smooth_max", smooth_max)):
            g = op(_coords(a), 10.0).grad
            fd = central_gradient(lambda v: float(op(_coords(v), 10.0).value), a)
            worst[name] = max(worst[name], rel_err(g, fd))
        psi = random_state_formula(rng, preds, depth=2)
        y = rng.uniform(-2, 2, 2)
        g = smooth_state_robustness(psi, y, params).grad
        fd = central_gradient(
            lambda v: float(smooth_state_robustness(psi, v, params, False).value), y)
        worst["state"] = max(worst["state"], rel_err(g, fd))
        t = int(rng.integers(0, 5))
        y = rng.uniform(-0.5, 4, 2)
        g = eval_running_cost(table, t, y, params).grad
        fd = central_gradient(lambda v: float(eval_running_cost(table, t, v, params, False).value), y)
        worst["running"] = max(worst["running"], rel_err(g, fd))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-5 and elapsed < 10.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    criterion(2, ok, f"max relative error: {detail}; {elapsed:.2f} s")
    assert ok


# -- 3 ---------------------------------------------------------------------------

def test_criterion_3_exact_semantics_oracle(criterion):
    rng = np.random.default_rng(103)
    preds = [AffinePredicate("p", [1.0], 0.5), AffinePredicate("q", [-1.0], 0.0),
             AffinePredicate("r", [1.0], -0.5), AffinePredicate("s", [2.0], 1.0)]
    mismatches = checked = 0
    for i in range(50):
        length = 2 + i % 7  # lengths 2..8, horizon = length - 1
        phi = random_path_formula(rng, preds, length - 1)
        Ys = all_signals(length)
        got = exact_robustness(phi, Ys)
        want = np.array([rho(phi, Y) for Y in Ys])
        mismatches += int(np.sum(got != want))
        checked += len(Ys)
    ok = mismatches == 0
    criterion(3, ok, f"{mismatches} mismatches over {checked} (formula, signal) pairs")
    assert ok


# -- 4 ---------------------------------------------------------------------------

def riccati_optimal_cost(A, B, Q, R, Qf, x0, T):
    P = Qf
    for _ in range(T):
        K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        P = Q + A.T @ P @ (A - B @ K)
    return 0.5 * x0 @ P @ x0


def test_criterion_4_lqr_exactness(criterion):
    rng = np.random.default_rng(104)
    cfg = SolverConfig(max_iterations=10, cost_tolerance=1e-12, derivative_mode="analytic")
    worst_err, worst_iters = 0.0, 0
    for _ in range(25):
        A, B, Q, R, Qf, x0, T = random_lq_instance(rng)
        res = solve(LinearSystem(A, B), QuadraticCost(Q, R, T, Qf), x0,
                    np.zeros((T + 1, B.shape[1])), cfg)
        ref = riccati_optimal_cost(A, B, Q, R, Qf, x0, T)
        worst_err = max(worst_err, abs(res.trajectory.cost - ref) / abs(ref))
        worst_iters = max(worst_iters, res.iterations)
    ok = worst_err <= 1e-6 and worst_iters <= 3
    criterion(4, ok, f"25 instances: max relative cost error {worst_err:.1e}, "
                     f"max iterations {worst_iters}")
    assert ok


# -- 5, 6, 9: seed sweeps with both optimizers (single solves, no retries) -------

@pytest.fixture(scope="module")
def sweeps():
    out = {}
    for name in ("reach_avoid", "either_or"):
        base = load_scenario(bundled_scenarios()[name])
        for solver in ("ddp", "first_order"):
            runs = []
            for seed in SEEDS:
                sc = base.with_overrides(seed=seed)
                config = sc.solver if solver == "ddp" else sc.baseline
                res = SOLVERS[solver](sc.model, sc.table(), sc.x0, initial_controls(sc),
                                      config, sc.params)
                runs.append(res)
            out[name, solver] = (base, runs)
    return out


def _sweep_summary(runs):
    sat = [r for r in runs if r.certificate.satisfied]
    sound = all(r.certificate.exact_robustness > 0 for r in sat)
    return sat, sound, max(r.wall_time for r in runs)


def test_criterion_5_reach_avoid(criterion, sweeps):
    sc, runs = sweeps["reach_avoid", "ddp"]
    assert (sc.horizon, sc.model.dt, sc.params.k1, sc.params.k2) == (100, 0.01, 10.0, 10.0)
    assert (sc.init.kind, sc.init.lo, sc.init.hi) == ("random_uniform", -1.0, 1.0)
    sat, sound, slowest = _sweep_summary(runs)
    ok = len(sat) >= 16 and sound and slowest < 30.0
    criterion(5, ok, f"{len(sat)}/20 seeds Satisfied (all with rho > 0: {sound}); "
                     f"slowest solve {slowest:.2f} s")
    assert ok


def _inside(box, y):
    return bool(np.all(y >= box.lower) and np.all(y <= box.upper))


def test_criterion_6_either_or(criterion, sweeps):
    sc, runs = sweeps["either_or", "ddp"]
    t1, t2, goal = (sc.predicates[n] for n in ("target1", "target2", "goal"))
    sat, sound, slowest = _sweep_summary(runs)
    geometry_ok = True
    for r in sat:
        Y = r.trajectory.Y
        geometry_ok &= (_inside(t1, Y[33]) + _inside(t2, Y[33])) == 1
        geometry_ok &= _inside(goal, Y[50])
    ok = len(sat) >= 14 and sound and geometry_ok and slowest < 30.0
    criterion(6, ok, f"{len(sat)}/20 seeds Satisfied; exactly one target at t=33 and goal "
                     f"at t=50: {geometry_ok}; slowest solve {slowest:.2f} s")
    assert ok


def test_criterion_9_baseline_direction(criterion, sweeps):
    parts, ok = [], True
    for name in ("reach_avoid", "either_or"):
        ddp = statistics.median(r.wall_time for r in sweeps[name, "ddp"][1])
        fo = statistics.median(r.wall_time for r in sweeps[name, "first_order"][1])
        ok &= ddp < fo
        parts.append(f"{name} median DDP {ddp:.2f} s vs first-order {fo:.2f} s")
    criterion(9, ok, "; ".join(parts))
    assert ok


# -- 7 ---------------------------------------------------------------------------

def test_criterion_7_planar_arm(criterion):
    source = bundled_scenarios()["arm_reach"]
    sc = load_scenario(source)
    assert sc.init.kind == "gravity_compensation" and len(sc.initial_states) == 2
    centers = [p.center for p in sc.predicates.values()]
    ok, parts = True, []
    for i in range(2):
        start = time.perf_counter()
        outcome = run_scenario(source, x0_index=i, write=False)
        elapsed = time.perf_counter() - start
        Y = outcome.result.trajectory.Y[40:51]
        dists = [float(np.max(np.linalg.norm(Y - c, axis=1))) for c in centers]
        held = min(dists) <= 0.01
        run_ok = outcome.report.satisfied and held and elapsed < 120.0
        ok &= run_ok
        parts.append(f"x0[{i}] {outcome.report.verdict}, max |y_t - q_nom| over t=40..50 "
                     f"{min(dists):.4f}, {elapsed:.1f} s")
    criterion(7, ok, "; ".join(parts))
    assert ok


# -- 8 ---------------------------------------------------------------------------

def _random_predicate(rng, name):
    if rng.random() < 0.5:
        lo = rng.uniform(-1, 2.5, 2)
        return BoxPredicate(name, lo, lo + rng.uniform(0.3, 1.5, 2))
    return BallPredicate(name, rng.uniform(-1, 3, 2), float(rng.uniform(0.2, 1.0)))


def test_criterion_8_soundness_fuzzing(criterion):
    rng = np.random.default_rng(108)
    counterexamples = satisfied = oracle_mismatch = 0
    for i in range(200):
        if rng.random() < 0.5:
            model, x0 = single_integrator(0.1), rng.uniform(-1, 1, 2)
        else:
            model, x0 = double_integrator(0.2), np.concatenate([rng.uniform(-1, 1, 2), [0, 0]])
        T = int(rng.integers(4, 16))
        preds = [_random_predicate(rng, f"p{j}") for j in range(int(rng.integers(1, 4)))]
        spec = Specification(tuple(random_path_formula(rng, preds, T, depth=1)
                                   for _ in range(int(rng.integers(1, 3)))), T)
        cfg = SolverConfig(max_iterations=40, control_weight=0.01)
        params = SmoothParams(*rng.choice([1.0, 10.0, 100.0], 2))
        try:
            res = solve(model, compile(spec), x0, rng.uniform(-1, 1, (T + 1, 2)), cfg, params)
        except ArithmeticError:
            continue
        cert = res.certificate
        Y = res.trajectory.Y
        oracle_mismatch += not math.isclose(cert.exact_robustness, rho(spec, Y),
                                            rel_tol=1e-12, abs_tol=1e-12)
        if cert.satisfied:
            satisfied += 1
            counterexamples += not rho(spec, Y) > 0
        # perturbed neighbours of the solution exercise the certificate near its boundary
        for _ in range(5):
            Yp = Y + rng.normal(scale=0.2, size=Y.shape)
            c = check_soundness(compile(spec), Yp, params)
            if c.satisfied:
                counterexamples += not rho(spec, Yp) > 0
    ok = counterexamples == 0 and oracle_mismatch == 0
    criterion(8, ok, f"200 random scenarios, {satisfied} Satisfied solves; "
                     f"{counterexamples} counterexamples, {oracle_mismatch} oracle mismatches")
    assert ok


# -- 10 --------------------------------------------------------------------------

def _per_iteration_time(T):
    preds = {"obstacle": BoxPredicate("obstacle", [1, 1], [2, 2]),
             "goal": BoxPredicate("goal", [2.5, 2.5], [3.5, 3.5])}
    table = compile(parse_spec(f"G[0,{T}] (not obstacle) & F[0,{T}] goal", T, preds))
    cfg = SolverConfig(max_iterations=10, cost_tolerance=0.0, control_weight=0.05)
    U = np.random.default_rng(0).uniform(-1, 1, (T + 1, 2))
    res = solve(single_integrator(1.0 / T), table, np.zeros(2), U, cfg, SmoothParams(10, 10))
    return res.wall_time / res.iterations, res.iterations


def test_criterion_10_complexity_scaling(criterion):
    _per_iteration_time(50)  # warm-up
    ratios = []
    for _ in range(3):
        (t100, n100), (t200, n200) = _per_iteration_time(100), _per_iteration_time(200)
        assert n100 == n200 == 10
        ratios.append(t200 / t100)
    ratio = statistics.median(ratios)
    ok = 1.5 <= ratio <= 3.0
    criterion(10, ok, f"per-iteration time T=200 / T=100 = {ratio:.2f} "
                      f"(median of 3 runs of 10 iterations)")
    assert ok
