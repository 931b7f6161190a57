"""End-to-end runs: compile, solve, certify, retry, and write artifacts.

Artifacts of a run named ``stem`` in the output directory:

* ``stem.trajectory.csv``: ``t, x_*, u_*, y_*, margin`` (``margin`` is the
  smooth running cost ``l_t``; ``nan`` where no term is active)
* ``stem.report.json``: verdict, exact robustness, margins, iterations,
  retries, timings, cost history and the parameters used
* ``stem.plot.csv``: output trajectory plus region geometry, one row each
* ``stem.diagnostics.json``: per-timestep (term source, smooth robustness,
  weighted cost) listing
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .costgen import check_soundness, compile as compile_spec, diagnostic_report
from .ddp import (QuadraticCost, SolveResult, SolverConfig, first_order_baseline,
                  riccati, solve)
from .dynamics import double_integrator
from .errors import LengthMismatch, ParseError, SoundnessViolation
from .scenario import Scenario, bundled_scenarios, initial_controls, load_scenario
from .smoothing import SmoothParams
from .stl import BallPredicate, BoxPredicate, parse_spec, predicate_from_dict

log = logging.getLogger(__name__)

OUT_ENV = "STLDDP_OUT"
SOLVERS = {"ddp": solve, "first_order": first_order_baseline}


def output_dir(out: Optional[Union[str, Path]] = None) -> Path:
    """``out`` if given, else ``$STLDDP_OUT``, else ``./stlddp-out``."""
    if out is None:
        out = os.environ.get(OUT_ENV) or "stlddp-out"
    return Path(out)


def _num(v) -> Optional[float]:
    v = float(v)
    return v if math.isfinite(v) else None


@dataclass
class RunReport:
    scenario: str
    verdict: str
    exact_robustness: float
    exact_verdict: str
    margins: list
    offending_timesteps: list
    iterations: int
    total_iterations: int
    retries_used: int
    wall_ms: float
    cost_history: list
    solver: str
    k1: float
    k2: float
    control_weight: float
    stop_reason: str
    converged: bool
    seed: Optional[int]
    x0: list
    switching_times: dict
    attempts: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.verdict == "Satisfied"

    def to_dict(self) -> dict:
        """JSON-ready form; refuses to emit an unsound ``Satisfied`` claim."""
        if self.satisfied and not self.exact_robustness > 0:
            raise SoundnessViolation(
                f"{self.scenario}: certificate Satisfied but exact robustness "
                f"{self.exact_robustness}")
        d = asdict(self)
        d["exact_robustness"] = _num(self.exact_robustness)
        return d


@dataclass(eq=False)
class RunOutcome:
    report: RunReport
    result: SolveResult
    scenario: Scenario
    paths: dict = field(default_factory=dict)


def _attempt_record(action: str, res: SolveResult, params: SmoothParams, seed) -> dict:
    return {"action": action, "verdict": str(res.certificate.verdict),
            "exact_robustness": _num(res.certificate.exact_robustness),
            "iterations": res.iterations, "stop_reason": res.stop_reason,
            "k1": params.k1, "k2": params.k2, "seed": seed,
            "wall_ms": 1e3 * res.wall_time}


def solve_scenario(scenario: Scenario, x0=None, solver: str = "ddp",
                   retries: Optional[int] = None) -> tuple:
    """Solve with the retry policy; returns ``(result, params, attempts)``.

    On ``NotCertified`` the retries alternate between escalating ``k1, k2``
    (warm-started from the failed controls) and reseeding the random initial
    guess, as long as budget remains.
    """
    x0 = scenario.x0 if x0 is None else np.asarray(x0, dtype=float)
    budget = scenario.retry.budget if retries is None else retries
    optimizer = SOLVERS[solver]
    config = scenario.solver if solver == "ddp" else scenario.baseline
    table = scenario.table()
    params = scenario.params
    seed = scenario.init.seed if scenario.init.kind == "random_uniform" else None
    U = initial_controls(scenario, x0)
    res = optimizer(scenario.model, table, x0, U, config, params)
    attempts = [_attempt_record("initial", res, params, seed)]
    reseedable = scenario.retry.reseed and seed is not None
    for i in range(1, budget + 1):
        if res.certificate.satisfied:
            break
        if i % 2 == 1 or not reseedable:
            action = "escalate_k"
            params = params.scaled(scenario.retry.k_factor)
            U = res.trajectory.U
        else:
            action = "reseed"
            seed = scenario.init.seed + 1000 * i
            U = initial_controls(scenario, x0, seed=seed)
        log.info("%s: retry %d (%s)", scenario.name, i, action)
        res = optimizer(scenario.model, table, x0, U, config, params)
        attempts.append(_attempt_record(action, res, params, seed))
    return res, params, attempts


def _notes(scenario: Scenario) -> list:
    notes = []
    for i, phi in enumerate(scenario.specification.conjuncts):
        if phi.__class__.__name__ != "Always" and phi.t2 - phi.t1 < 1:
            notes.append(f"conjunct {i} has a zero-length interval; its incentive "
                         f"weight was floored at 1")
    if scenario.solver.control_weight:
        notes.append(f"optimized cost includes 0.5*{scenario.solver.control_weight}*|u|^2; "
                     "certificate margins exclude it")
    return notes


def build_report(scenario: Scenario, res: SolveResult, params: SmoothParams, attempts: list,
                 x0, solver: str, wall: float) -> RunReport:
    cert = res.certificate
    config = scenario.solver if solver == "ddp" else scenario.baseline
    return RunReport(
        scenario=scenario.name, verdict=str(cert.verdict),
        exact_robustness=cert.exact_robustness, exact_verdict=cert.exact_verdict,
        margins=[None if np.isnan(v) else float(v) for v in cert.margins],
        offending_timesteps=list(cert.offending), iterations=res.iterations,
        total_iterations=sum(a["iterations"] for a in attempts),
        retries_used=len(attempts) - 1, wall_ms=1e3 * wall,
        cost_history=[float(c) for c in res.cost_history], solver=solver,
        k1=params.k1, k2=params.k2, control_weight=config.control_weight,
        stop_reason=res.stop_reason, converged=res.converged,
        seed=attempts[-1]["seed"], x0=[float(v) for v in x0],
        switching_times={str(i): t for i, t in scenario.table().switching_times},
        attempts=attempts, notes=_notes(scenario))


def _fmt(v) -> str:
    return repr(float(v))


def write_trajectory_csv(path: Path, res: SolveResult, margins) -> None:
    traj = res.trajectory
    n, m, p = traj.X.shape[1], traj.U.shape[1], traj.Y.shape[1]
    header = (["t"] + [f"x_{i}" for i in range(n)] + [f"u_{i}" for i in range(m)]
              + [f"y_{i}" for i in range(p)] + ["margin"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(traj.X.shape[0]):
            w.writerow([t] + [_fmt(v) for v in traj.X[t]] + [_fmt(v) for v in traj.U[t]]
                       + [_fmt(v) for v in traj.Y[t]] + [_fmt(margins[t])])


def write_plot_csv(path: Path, scenario: Scenario, Y: np.ndarray) -> None:
    """Rows ``record, name, index, c_0..c_{p-1}``.

    ``record`` is ``trajectory`` (index = t), ``box_lower``/``box_upper``
    (empty coordinate = unbounded), ``ball_center`` or ``ball_radius``
    (radius in ``c_0``).
    """
    p = Y.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record", "name", "index"] + [f"c_{i}" for i in range(p)])
        for t, y in enumerate(Y):
            w.writerow(["trajectory", "Y", t] + [_fmt(v) for v in y])
        for name, pred in scenario.predicates.items():
            if isinstance(pred, BoxPredicate):
                for rec, vals in (("box_lower", pred.lower), ("box_upper", pred.upper)):
                    w.writerow([rec, name, ""] + ["" if math.isinf(v) else _fmt(v) for v in vals])
            elif isinstance(pred, BallPredicate):
                w.writerow(["ball_center", name, ""] + [_fmt(v) for v in pred.center])
                w.writerow(["ball_radius", name, "", _fmt(pred.radius)] + [""] * (p - 1))


def run_scenario(source: Union[str, Path, Scenario], out: Optional[Union[str, Path]] = None, *,
                 x0_index: int = 0, solver: str = "ddp", seed=None, k1=None, k2=None,
                 max_iterations=None, retries=None, write: bool = True) -> RunOutcome:
    """Compile, solve (with retries) and certify one scenario; write artifacts.

    Raises:
        ConfigError: bad scenario file.
        SoundnessViolation: a Satisfied certificate with non-positive exact
            robustness (never expected; guarded at report emission).
    """
    scenario = source if isinstance(source, Scenario) else load_scenario(source)
    scenario = scenario.with_overrides(seed=seed, k1=k1, k2=k2,
                                       max_iterations=max_iterations, retries=retries)
    states = scenario.initial_states
    if not 0 <= x0_index < len(states):
        raise IndexError(f"scenario {scenario.name} has {len(states)} initial states")
    x0 = states[x0_index]
    start = time.perf_counter()
    res, params, attempts = solve_scenario(scenario, x0, solver)
    wall = time.perf_counter() - start
    report = build_report(scenario, res, params, attempts, x0, solver, wall)
    outcome = RunOutcome(report, res, scenario)
    if write:
        d = output_dir(out)
        d.mkdir(parents=True, exist_ok=True)
        stem = scenario.name + (f"-x{x0_index}" if x0_index else "")
        if solver != "ddp":
            stem += f"-{solver}"
        paths = {"trajectory": d / f"{stem}.trajectory.csv",
                 "report": d / f"{stem}.report.json",
                 "plot": d / f"{stem}.plot.csv",
                 "diagnostics": d / f"{stem}.diagnostics.json"}
        write_trajectory_csv(paths["trajectory"], res, res.certificate.margins)
        paths["report"].write_text(json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n",
                                   encoding="utf-8")
        write_plot_csv(paths["plot"], scenario, res.trajectory.Y)
        rows = diagnostic_report(scenario.table(), res.trajectory.Y, params)
        paths["diagnostics"].write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")
        outcome.paths = paths
    else:
        report.to_dict()
    return outcome


# --------------------------------------------------------------------------
# offline monitoring

@dataclass(eq=False)
class MonitorResult:
    exact_robustness: float
    verdict: str
    margins: np.ndarray  # smooth running cost l_t, nan where no term
    certified: bool
    specification: str

    def to_dict(self) -> dict:
        return {"exact_robustness": _num(self.exact_robustness), "verdict": self.verdict,
                "certified": self.certified, "specification": self.specification,
                "margins": [None if np.isnan(v) else float(v) for v in self.margins]}


def read_signal_csv(path: Union[str, Path], p: int) -> np.ndarray:
    """Rows of ``p`` numbers; a non-numeric first row is taken as a header.

    Raises:
        ParseError: wrong column count or a non-numeric cell (1-based row).
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if row_no == 1 and not rows:
                    continue
                raise ParseError(f"non-numeric value in {row}", row_no) from None
            if len(values) != p:
                raise ParseError(f"expected {p} columns, got {len(values)}", row_no)
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite value", row_no)
            rows.append(values)
    if not rows:
        raise ParseError("signal has no samples", 1)
    return np.array(rows)


def _load_spec_file(path: Union[str, Path]) -> tuple:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read specification file: {exc}", 0) from None
    preds = {name: predicate_from_dict(name, entry) for name, entry in raw["predicates"].items()}
    return raw["specification"], preds, raw.get("horizon")


def monitor(signal_csv: Union[str, Path], spec: Union[str, Path],
            predicates: Optional[dict] = None, params: SmoothParams = SmoothParams()) -> MonitorResult:
    """Exact robustness and smooth running-cost margins of a recorded signal.

    ``spec`` is either a JSON file with ``predicates``, ``specification`` and
    optionally ``horizon`` (a scenario file qualifies), or formula text when
    ``predicates`` is given. The horizon defaults to the signal length - 1.
    """
    horizon = None
    if predicates is None:
        text, predicates, horizon = _load_spec_file(spec)
    else:
        text = str(spec)
    dims = {pred.dim for pred in predicates.values()}
    if len(dims) != 1:
        raise ValueError("predicates disagree on the output dimension")
    Y = read_signal_csv(signal_csv, dims.pop())
    if horizon is None:
        horizon = len(Y) - 1
    if len(Y) != horizon + 1:
        raise LengthMismatch(f"signal has {len(Y)} samples, specification horizon needs {horizon + 1}")
    specification = parse_spec(text, horizon, predicates)
    table = compile_spec(specification)
    cert = check_soundness(table, Y, params)
    return MonitorResult(cert.exact_robustness, cert.exact_verdict, cert.margins,
                         cert.satisfied, str(specification))


# --------------------------------------------------------------------------
# benchmark suite

@dataclass
class BenchCell:
    scenario: str
    solver: str
    case: str  # seed or initial-state label
    satisfied: bool
    exact_robustness: Optional[float]
    wall_ms: Optional[float]
    iterations: Optional[int]
    error: Optional[str] = None


@dataclass
class BenchRow:
    scenario: str
    solver: str
    runs: int
    successes: int
    success_rate: float
    median_wall_ms: Optional[float]
    median_iterations: Optional[float]
    errors: int


def _bench_cell(scenario: Scenario, solver: str, case: str, x0, seed) -> BenchCell:
    try:
        sc = scenario.with_overrides(seed=seed)
        config = sc.solver if solver == "ddp" else sc.baseline
        U = initial_controls(sc, x0)
        res = SOLVERS[solver](sc.model, sc.table(), x0, U, config, sc.params)
        return BenchCell(sc.name, solver, case, res.certificate.satisfied,
                         _num(res.certificate.exact_robustness), 1e3 * res.wall_time,
                         res.iterations)
    except Exception as exc:  # recorded per cell; the suite goes on
        return BenchCell(scenario.name, solver, case, False, None, None, None,
                         f"{type(exc).__name__}: {exc}")


def lqr_cells(seed: int = 0, horizon: int = 30) -> list:
    """Both optimizers on a double-integrator LQ problem against Riccati."""
    rng = np.random.default_rng(seed)
    model = double_integrator(0.1)
    Q, R = np.eye(4), 0.1 * np.eye(2)
    x0 = rng.uniform(-1, 1, 4)
    ref = riccati(model.A, model.B, Q, R, Q, x0, horizon)
    cost = QuadraticCost(Q, R, horizon)
    configs = {"ddp": SolverConfig(),
               "first_order": SolverConfig(max_iterations=5000, cost_tolerance=1e-12)}
    cells = []
    for solver, config in configs.items():
        try:
            res = SOLVERS[solver](model, cost, x0, np.zeros((horizon + 1, 2)), config)
            rel = abs(res.trajectory.cost - ref.cost) / abs(ref.cost)
            cells.append(BenchCell("lqr", solver, f"seed={seed}", rel <= 1e-4, None,
                                   1e3 * res.wall_time, res.iterations))
        except Exception as exc:
            cells.append(BenchCell("lqr", solver, f"seed={seed}", False, None, None, None,
                                   f"{type(exc).__name__}: {exc}"))
    return cells


def summarize(cells: Sequence[BenchCell]) -> list:
    groups: dict = {}
    for c in cells:
        groups.setdefault((c.scenario, c.solver), []).append(c)
    rows = []
    for (name, solver), cs in groups.items():
        ok = [c for c in cs if c.error is None]
        walls = [c.wall_ms for c in ok]
        iters = [c.iterations for c in ok]
        succ = sum(c.satisfied for c in cs)
        rows.append(BenchRow(name, solver, len(cs), succ, succ / len(cs),
                             statistics.median(walls) if walls else None,
                             statistics.median(iters) if iters else None,
                             len(cs) - len(ok)))
    return rows


def format_table(rows: Sequence[BenchRow]) -> str:
    lines = [f"{'scenario':<14}{'solver':<13}{'runs':>5}{'success':>9}"
             f"{'median ms':>12}{'median it':>11}{'errors':>8}"]
    for r in rows:
        wall = "-" if r.median_wall_ms is None else f"{r.median_wall_ms:.1f}"
        it = "-" if r.median_iterations is None else f"{r.median_iterations:g}"
        lines.append(f"{r.scenario:<14}{r.solver:<13}{r.runs:>5}{r.success_rate:>9.2f}"
                     f"{wall:>12}{it:>11}{r.errors:>8}")
    return "\n".join(lines)


def run_benchmark_suite(out: Optional[Union[str, Path]] = None,
                        seeds: Iterable[int] = range(20),
                        scenarios: Optional[Sequence[str]] = None,
                        solvers: Sequence[str] = ("ddp", "first_order"),
                        workers: int = 1, include_lqr: bool = True) -> list:
    """Run bundled scenarios with both optimizers and write a comparison table.

    Random-init scenarios run once per seed; deterministic-init scenarios once
    per initial state. Retries are disabled so the table reflects single
    solves. Writes ``bench_cells.csv``, ``bench_summary.csv`` and
    ``bench_summary.json`` to the output directory and returns the rows.
    """
    seeds = list(seeds)
    available = bundled_scenarios()
    names = list(available) if scenarios is None else list(scenarios)
    jobs = []
    for name in names:
        sc = load_scenario(available[name]) if name in available else load_scenario(name)
        for solver in solvers:
            if sc.init.kind == "random_uniform":
                jobs += [(sc, solver, f"seed={s}", sc.x0, s) for s in seeds]
            else:
                jobs += [(sc, solver, f"x0={i}", x0, None)
                         for i, x0 in enumerate(sc.initial_states)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            cells = list(pool.map(_bench_cell, *zip(*jobs)))
    else:
        cells = [_bench_cell(*job) for job in jobs]
    if include_lqr:
        cells += lqr_cells()
    rows = summarize(cells)

    d = output_dir(out)
    d.mkdir(parents=True, exist_ok=True)
    for fname, records in (("bench_cells.csv", cells), ("bench_summary.csv", rows)):
        dicts = [asdict(r) for r in records]
        with open(d / fname, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(dicts[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(dicts)
    (d / "bench_summary.json").write_text(
        json.dumps([asdict(r) for r in rows], indent=2) + "\n", encoding="utf-8")
    return rows
