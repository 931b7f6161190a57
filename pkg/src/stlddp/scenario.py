"""Scenario files: everything needed to pose one trajectory-synthesis problem.

A scenario is a JSON object::

    {
      "name": "reach_avoid",
      "model": {"name": "single_integrator", "dt": 0.01},
      "predicates": {
        "obstacle": {"kind": "box", "lower": [1, 1], "upper": [2, 2]},
        "goal": {"kind": "box", "lower": [2.5, 2.5], "upper": [3.5, 3.5]}
      },
      "specification": "G[0,100] (not obstacle) & F[0,100] goal",
      "horizon": 100,
      "x0": [0, 0],
      "smoothing": {"k1": 10, "k2": 10},
      "solver": {"max_iterations": 300, "control_weight": 0.05},
      "init": {"policy": "random_uniform", "lo": -1, "hi": 1, "seed": 0},
      "retry": {"budget": 2, "k_factor": 10, "reseed": true}
    }

Optional keys: ``description``, ``x0_alternatives`` (further initial
states), ``baseline`` (solver overrides for the first-order baseline) and
``switching_times``. Models are ``single_integrator`` / ``double_integrator``
(``dt``, ``dim``) or ``planar_arm`` (``dt``, ``params``). For the arm, a ball
predicate may give ``ik_target`` (end-effector position) and ``ik_seed``
instead of ``center``; the center is then solved by inverse kinematics.

Init policies are ``random_uniform`` (``lo``, ``hi``, ``seed``),
``gravity_compensation`` (arm only), ``zeros`` and ``file`` (``path`` to a
trajectory CSV, relative to the scenario file).
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .costgen import RunningCostTable, compile as compile_spec
from .ddp import SolverConfig
from .dynamics import (DynamicsModel, PlanarArm, PlanarArmParams,
                       double_integrator, inverse_kinematics, single_integrator)
from .errors import ConfigError, StlDdpError
from .smoothing import SmoothParams
from .stl import Specification, parse_spec, predicate_from_dict

INIT_POLICIES = ("random_uniform", "gravity_compensation", "zeros", "file")
_TOP_KEYS = {"name", "description", "model", "predicates", "specification", "horizon",
             "x0", "x0_alternatives", "smoothing", "solver", "baseline", "init", "retry",
             "switching_times"}


@dataclass(frozen=True)
class InitPolicy:
    kind: str = "random_uniform"
    lo: float = -1.0
    hi: float = 1.0
    seed: int = 0
    path: Optional[Path] = None


@dataclass(frozen=True)
class RetryPolicy:
    """How to react to a ``NotCertified`` result.

    Retries alternate between raising ``k1, k2`` by ``k_factor`` (warm
    started from the failed controls) and, when ``reseed`` is set and the
    init policy is random, starting over from a fresh random guess.
    """

    budget: int = 2
    k_factor: float = 10.0
    reseed: bool = True


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    model: DynamicsModel
    predicates: dict
    specification: Specification
    x0: np.ndarray
    x0_alternatives: tuple = ()
    params: SmoothParams = SmoothParams()
    solver: SolverConfig = SolverConfig()
    baseline: SolverConfig = SolverConfig()
    init: InitPolicy = InitPolicy()
    retry: RetryPolicy = RetryPolicy()
    switching_times: dict = field(default_factory=dict)
    description: str = ""
    source: Optional[Path] = None
    raw: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.specification.horizon

    @property
    def initial_states(self) -> list:
        return [self.x0, *self.x0_alternatives]

    def table(self) -> RunningCostTable:
        return compile_spec(self.specification, self.switching_times or None)

    def with_overrides(self, *, seed=None, k1=None, k2=None, max_iterations=None,
                       retries=None) -> "Scenario":
        """Copy with command-line style overrides applied."""
        changes = {}
        if seed is not None:
            changes["init"] = dataclasses.replace(self.init, seed=int(seed))
        if k1 is not None or k2 is not None:
            changes["params"] = SmoothParams(self.params.k1 if k1 is None else k1,
                                             self.params.k2 if k2 is None else k2)
        if max_iterations is not None:
            changes["solver"] = dataclasses.replace(self.solver, max_iterations=int(max_iterations))
        if retries is not None:
            changes["retry"] = dataclasses.replace(self.retry, budget=int(retries))
        return dataclasses.replace(self, **changes)


def bundled_scenarios() -> dict:
    """``{name: path}`` of the scenario files shipped with the package."""
    root = resources.files("stlddp") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".json")}


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError("missing required key", f"{path}.{key}" if path else key)
    return d[key]


def _vector(value, path: str, length: Optional[int] = None) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("expected a list of numbers", path) from None
    if v.ndim != 1 or not np.all(np.isfinite(v)):
        raise ConfigError("expected a list of finite numbers", path)
    if length is not None and v.shape[0] != length:
        raise ConfigError(f"expected {length} entries, got {v.shape[0]}", path)
    return v


def _build_model(entry) -> DynamicsModel:
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", "model")
    name = _require(entry, "name", "model")
    try:
        if name in ("single_integrator", "double_integrator"):
            factory = single_integrator if name == "single_integrator" else double_integrator
            return factory(float(_require(entry, "dt", "model")), int(entry.get("dim", 2)))
        if name == "planar_arm":
            raw = dict(entry.get("params", {}))
            unknown = set(raw) - {f.name for f in dataclasses.fields(PlanarArmParams)}
            if unknown:
                raise ConfigError("unknown parameter", f"model.params.{sorted(unknown)[0]}")
            for key in ("lengths", "masses", "com", "inertias"):
                if raw.get(key) is not None:
                    raw[key] = tuple(raw[key])
            return PlanarArm(PlanarArmParams(**raw), float(entry.get("dt", 0.005)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "model") from None
    raise ConfigError(f"unknown model {name!r}", "model.name")


def _build_predicates(entries, model: DynamicsModel) -> dict:
    if not isinstance(entries, dict) or not entries:
        raise ConfigError("expected a non-empty object of named predicates", "predicates")
    preds = {}
    for name, entry in entries.items():
        path = f"predicates.{name}"
        if not isinstance(entry, dict):
            raise ConfigError("expected an object", path)
        entry = dict(entry)
        if entry.get("kind") == "ball" and "ik_target" in entry:
            if not isinstance(model, PlanarArm):
                raise ConfigError("ik_target needs the planar_arm model", f"{path}.ik_target")
            target = _vector(entry["ik_target"], f"{path}.ik_target", 2)
            seed = _vector(entry.get("ik_seed", np.zeros(model.m)), f"{path}.ik_seed", model.m)
            try:
                entry["center"] = inverse_kinematics(model, target, seed).tolist()
            except ValueError as exc:
                raise ConfigError(str(exc), f"{path}.ik_target") from None
        try:
            pred = predicate_from_dict(name, entry)
        except KeyError as exc:
            raise ConfigError("missing required key", f"{path}.{exc.args[0]}") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), path) from None
        if pred.dim != model.p:
            raise ConfigError(
                f"predicate has dimension {pred.dim}, model output has {model.p}", path)
        preds[name] = pred
    return preds


def _dataclass_overrides(cls, base, entry, path: str):
    if entry is None:
        return base
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", path)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in entry:
        if key not in names:
            raise ConfigError("unknown key", f"{path}.{key}")
    try:
        return dataclasses.replace(base, **entry)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path) from None


def _build_init(entry, model: DynamicsModel, base_dir: Optional[Path]) -> InitPolicy:
    if entry is None:
        return InitPolicy()
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", "init")
    kind = entry.get("policy", "random_uniform")
    if kind not in INIT_POLICIES:
        raise ConfigError(f"unknown policy {kind!r}; expected one of {INIT_POLICIES}",
                          "init.policy")
    if kind == "gravity_compensation" and not isinstance(model, PlanarArm):
        raise ConfigError("gravity_compensation needs the planar_arm model", "init.policy")
    path = None
    if kind == "file":
        path = Path(_require(entry, "path", "init"))
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
    lo, hi = float(entry.get("lo", -1.0)), float(entry.get("hi", 1.0))
    if not lo <= hi:
        raise ConfigError("need lo <= hi", "init")
    return InitPolicy(kind, lo, hi, int(entry.get("seed", 0)), path)


def load_scenario(source: Union[str, Path, dict], base_dir: Optional[Path] = None) -> Scenario:
    """Read and validate a scenario from a path (or an already parsed dict).

    Raises:
        ConfigError: schema violation; ``.path`` locates the offending entry.
    """
    path = None
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc.strerror}", str(path)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", str(path)) from None
        base_dir = base_dir or path.parent
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError("unknown key", key)

    model = _build_model(_require(raw, "model", ""))
    preds = _build_predicates(_require(raw, "predicates", ""), model)
    horizon = _require(raw, "horizon", "")
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        raise ConfigError("expected a positive integer", "horizon")
    try:
        spec = parse_spec(str(_require(raw, "specification", "")), horizon, preds)
    except StlDdpError as exc:
        where = "horizon" if "horizon" in str(exc) else "specification"
        raise ConfigError(str(exc), where) from None

    x0 = _vector(_require(raw, "x0", ""), "x0", model.n)
    alts = tuple(_vector(v, f"x0_alternatives.{i}", model.n)
                 for i, v in enumerate(raw.get("x0_alternatives", [])))
    smoothing = raw.get("smoothing", {})
    try:
        params = SmoothParams(float(smoothing.get("k1", 10.0)), float(smoothing.get("k2", 10.0)))
    except (AttributeError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "smoothing") from None
    solver_entry = raw.get("solver")
    if isinstance(solver_entry, dict) and "line_search_alphas" in solver_entry:
        solver_entry = dict(solver_entry, line_search_alphas=tuple(solver_entry["line_search_alphas"]))
    solver = _dataclass_overrides(SolverConfig, SolverConfig(), solver_entry, "solver")
    baseline = _dataclass_overrides(SolverConfig, solver, raw.get("baseline"), "baseline")
    retry = _dataclass_overrides(RetryPolicy, RetryPolicy(), raw.get("retry"), "retry")
    if retry.budget < 0 or retry.k_factor < 1:
        raise ConfigError("need budget >= 0 and k_factor >= 1", "retry")
    switching = {}
    for key, value in (raw.get("switching_times") or {}).items():
        try:
            switching[int(key)] = int(value)
        except (TypeError, ValueError):
            raise ConfigError("expected integer conjunct index and time",
                              f"switching_times.{key}") from None

    scenario = Scenario(
        name=str(raw.get("name", path.stem if path else "scenario")),
        model=model, predicates=preds, specification=spec, x0=x0, x0_alternatives=alts,
        params=params, solver=solver, baseline=baseline,
        init=_build_init(raw.get("init"), model, base_dir), retry=retry,
        switching_times=switching, description=str(raw.get("description", "")),
        source=path, raw=raw)
    try:
        scenario.table()
    except ValueError as exc:
        raise ConfigError(str(exc), "switching_times") from None
    return scenario


def read_controls(path: Path, m: int) -> np.ndarray:
    """Control columns ``u_0..u_{m-1}`` of a trajectory CSV."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read initial controls: {exc.strerror}", "init.path") from None
    if not rows:
        raise ConfigError("empty trajectory file", "init.path")
    header = rows[0]
    try:
        cols = [header.index(f"u_{j}") for j in range(m)]
    except ValueError:
        raise ConfigError(f"trajectory file lacks columns u_0..u_{m - 1}", "init.path") from None
    return np.array([[float(r[c]) for c in cols] for r in rows[1:]])


def initial_controls(scenario: Scenario, x0=None, seed: Optional[int] = None) -> np.ndarray:
    """Initial guess ``U`` of shape ``(T+1, m)`` following the init policy."""
    init = scenario.init
    shape = (scenario.horizon + 1, scenario.model.m)
    if init.kind == "random_uniform":
        rng = np.random.default_rng(init.seed if seed is None else seed)
        return rng.uniform(init.lo, init.hi, shape)
    if init.kind == "zeros":
        return np.zeros(shape)
    if init.kind == "gravity_compensation":
        x0 = scenario.x0 if x0 is None else np.asarray(x0, dtype=float)
        tau = scenario.model.gravity_torque(x0[:scenario.model.m])
        return np.tile(tau, (shape[0], 1))
    U = read_controls(init.path, scenario.model.m)
    if U.shape != shape:
        raise ConfigError(f"initial controls have shape {U.shape}, expected {shape}", "init.path")
    return U
