"""Declarative parameter sweeps and the preconfigured figure runs.

An :class:`ExperimentSpec` names one swept parameter, a grid, the fixed
scenario fields and the schemes to evaluate.  :func:`run_experiment` turns it
into a :class:`ResultTable` with the fixed column layout :data:`COLUMNS`,
one row per (grid point, scheme, method).  Per-row failures such as an
infinite delay land in the ``error`` column and the run carries on.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .distributions import ConvergenceError, approx_grabner, approx_improved, approx_lln
from .montecarlo import SimulationPlan, simulate
from .optimize import optimize_ns
from .schemes import (
    InfiniteDelayError,
    Scenario,
    Scheme,
    decode_prob_within_budget,
    expected_delay,
)

__all__ = [
    "COLUMNS",
    "FIGURES",
    "ConfigError",
    "ExperimentSpec",
    "ResultTable",
    "load_spec",
    "reproduce_figure",
    "run_experiment",
]

COLUMNS = (
    "experiment", "sweep_variable", "sweep_value", "scheme",
    "k_p", "k_s", "n_s", "eps_s", "users",
    "mean_slots", "normalized", "method", "std_err", "trials", "seed",
    "decode_prob", "expected_users", "error",
)

SWEEP_VARIABLES = ("eps_s", "n_s", "u", "budget")
MODES = ("analytic", "simulate", "both")
OPTIMIZED = "opt"
_FIXED_KEYS = {"k_p", "k_s", "n_s", "eps_s", "u", "ns_max", "budget"}

FIG_USER_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)
FIG6_USER_GRID = (10, 30, 100, 300, 1000)
FIG6_KS = (1, 2, 4)
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")


class ConfigError(ValueError):
    """An experiment specification failed validation."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    sweep_variable: str
    sweep_grid: tuple
    fixed: dict = field(default_factory=dict)
    schemes: tuple = (Scheme.IIR,)
    mode: str = "analytic"
    trials: int = 100_000
    seed: int = 0
    normalize: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sweep_grid", tuple(self.sweep_grid))
        object.__setattr__(self, "fixed", dict(self.fixed))
        try:
            schemes = tuple(sorted({Scheme(str(s).upper()) for s in self.schemes}, key=str))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "schemes", schemes)
        self._validate()

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise ConfigError("experiment config must be a mapping")
        sweep = data.get("sweep") or {}
        known = {"name", "sweep", "fixed", "schemes", "mode", "trials", "seed", "normalize"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(
                name=str(data.get("name", "experiment")),
                sweep_variable=sweep["variable"],
                sweep_grid=sweep["grid"],
                fixed=data.get("fixed") or {},
                schemes=data.get("schemes", ["IIR"]),
                mode=data.get("mode", "analytic"),
                trials=int(data.get("trials", 100_000)),
                seed=int(data.get("seed", 0)),
                normalize=bool(data.get("normalize", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed experiment config: {exc}") from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schemes"] = [str(s) for s in self.schemes]
        out["sweep_grid"] = list(self.sweep_grid)
        return out

    def _validate(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        grid = self.sweep_grid
        if not grid:
            raise ConfigError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.mode != "analytic" and self.trials < 1:
            raise ConfigError("simulation modes need trials >= 1")
        unknown = set(self.fixed) - _FIXED_KEYS
        if unknown:
            raise ConfigError(f"unknown fixed fields: {sorted(unknown)}")
        if self.sweep_variable in self.fixed:
            raise ConfigError(f"{self.sweep_variable} is both swept and fixed")
        if self.sweep_variable == "budget" and Scheme.FIR in self.schemes:
            raise ConfigError("budget sweeps support IIR and FR only")
        if self.sweep_variable == "n_s" and self.fixed.get("n_s") is not None:
            raise ConfigError("n_s is both swept and fixed")
        for value in grid:
            for scheme in self.schemes:
                try:
                    self.scenario(scheme, value)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{scheme} at {self.sweep_variable}={value}: {exc}") from None

    def point(self, value) -> dict:
        params = dict(self.fixed)
        if self.sweep_variable != "budget":
            params[self.sweep_variable] = value
        return params

    def optimizes_ns(self, scheme) -> bool:
        return Scheme(scheme) is not Scheme.IIR and self.fixed.get("n_s") == OPTIMIZED

    def scenario(self, scheme, value) -> Scenario:
        """Scenario at a grid point; ``n_s: opt`` yields a ``k_s``
        placeholder that :func:`run_experiment` replaces by the optimum."""
        params = self.point(value)
        for key in ("k_p", "k_s", "eps_s"):
            if key not in params:
                raise ConfigError(f"missing fixed field {key!r}")
        scheme = Scheme(scheme)
        n_s = params.get("n_s")
        if scheme is Scheme.IIR:
            n_s = None
        elif n_s == OPTIMIZED:
            n_s = int(params["k_s"])
        elif n_s is None:
            raise ConfigError(f"{scheme} needs n_s (an integer or '{OPTIMIZED}')")
        return Scenario.build(
            scheme,
            k_s=int(params["k_s"]),
            k_p=int(params["k_p"]),
            eps_s=float(params["eps_s"]),
            users=int(params.get("u", 1)),
            n_s=None if n_s is None else int(n_s),
        )


def load_spec(path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    return ExperimentSpec.from_mapping(data)


@dataclass
class ResultTable:
    rows: list
    metadata: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            text = json.dumps(self.metadata[key], sort_keys=True)
            buf.write(f"# {key}: {text}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(row.get(col)) for col in COLUMNS])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    def column(self, name, **where) -> list:
        return [r.get(name) for r in self.select(**where)]

    def select(self, **where) -> list:
        return [r for r in self.rows if all(r.get(k) == v for k, v in where.items())]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _base_row(spec: ExperimentSpec, value, scenario: Scenario) -> dict:
    return {
        "experiment": spec.name,
        "sweep_variable": spec.sweep_variable,
        "sweep_value": value,
        "scheme": str(scenario.scheme),
        "k_p": scenario.code.k_p,
        "k_s": scenario.code.k_s,
        "n_s": scenario.code.n_s,
        "eps_s": float(scenario.eps_s),
        "users": scenario.users,
    }


def _resolve_ns(spec: ExperimentSpec, scenario: Scenario) -> Scenario:
    if not spec.optimizes_ns(scenario.scheme):
        return scenario
    opt = optimize_ns(
        scenario.scheme, scenario.code.k_s, scenario.code.k_p, scenario.eps_s,
        u=scenario.users, ns_max=spec.fixed.get("ns_max"),
    )
    return scenario.with_ns(opt.best_ns)


def _grid_rows(spec: ExperimentSpec, value, scheme) -> list:
    scenario = spec.scenario(scheme, value)
    rows = []
    try:
        scenario = _resolve_ns(spec, scenario)
    except (InfiniteDelayError, ConvergenceError) as exc:
        row = _base_row(spec, value, scenario)
        row.update(method="analytic", error=str(exc))
        return [row]
    budget = value if spec.sweep_variable == "budget" else spec.fixed.get("budget")
    floor = scenario.code.data_symbols

    if spec.mode in ("analytic", "both"):
        row = _base_row(spec, value, scenario)
        try:
            est = expected_delay(scenario)
            row.update(mean_slots=est.mean_slots, method=str(est.method))
            if spec.normalize:
                row["normalized"] = est.mean_slots / floor
            if budget is not None:
                outcome = decode_prob_within_budget(scenario, int(budget))
                row.update(decode_prob=outcome.probability, expected_users=outcome.expected_users)
        except (InfiniteDelayError, ConvergenceError, ValueError) as exc:
            row.update(method="analytic", error=str(exc))
        rows.append(row)

    if spec.mode in ("simulate", "both"):
        row = _base_row(spec, value, scenario)
        row.update(method="monte_carlo", trials=spec.trials, seed=spec.seed)
        try:
            res = simulate(SimulationPlan(scenario, spec.trials, spec.seed))
            row.update(mean_slots=res.mean_slots, std_err=res.std_err)
            if spec.normalize:
                row["normalized"] = res.mean_slots / floor
            if budget is not None:
                if scenario.users != 1:
                    raise ValueError("simulated decode probability needs u = 1")
                prob = float(np.count_nonzero(res.samples <= int(budget))) / res.trials
                row.update(decode_prob=prob, expected_users=prob)
        except (InfiniteDelayError, ValueError) as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def _metadata(**extra) -> dict:
    return {"tool": f"layerdelay {__version__}", **extra}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Evaluate every (grid point, scheme) pair of ``spec``.

    Rows come out in grid order, then scheme name, then analytic before
    Monte Carlo.
    """
    rows = []
    for value in spec.sweep_grid:
        for scheme in spec.schemes:
            rows.extend(_grid_rows(spec, value, scheme))
    return ResultTable(rows, _metadata(spec=spec.to_dict(), seed=spec.seed))


def _concat(tables, **meta) -> ResultTable:
    rows = [r for t in tables for r in t.rows]
    return ResultTable(rows, _metadata(**meta))


def _figure_specs(figure_id: str, mode: str, trials: int, seed: int) -> list:
    common = dict(mode=mode, trials=trials, seed=seed, normalize=True)
    eps_grid = tuple(round(0.05 * i, 2) for i in range(11))
    if figure_id == "fig2":
        return [ExperimentSpec(
            "fig2", "eps_s", eps_grid,
            fixed=dict(k_p=100, k_s=100, n_s=OPTIMIZED, ns_max=300, u=1),
            schemes=("IIR", "FR"), **common,
        )]
    if figure_id == "fig3":
        return [ExperimentSpec(
            "fig3", "n_s", tuple(range(100, 501)),
            fixed=dict(k_p=100, k_s=100, eps_s=0.1, u=1),
            schemes=("IIR", "FR", "FIR"), **common,
        )]
    if figure_id in ("fig4", "fig5"):
        k_s = 100 if figure_id == "fig4" else 1000
        return [ExperimentSpec(
            f"{figure_id}_eps{eps}", "u", FIG_USER_GRID,
            fixed=dict(k_p=100, k_s=k_s, eps_s=eps, n_s=OPTIMIZED, ns_max=3 * k_s),
            schemes=("IIR", "FR"), **common,
        ) for eps in (0.1, 0.2, 0.3, 0.4, 0.5)]
    raise ConfigError(f"unknown figure {figure_id!r}; choose from {FIGURES}")


def _fig6(mode: str, trials: int, seed: int, eps: float = 0.1) -> ResultTable:
    # a single IIR packet multicast to u users lasts max of u NB(k, 1-eps)
    rows = []
    specs = []
    for k in FIG6_KS:
        spec = ExperimentSpec(
            f"fig6_k{k}", "u", FIG6_USER_GRID,
            fixed=dict(k_p=1, k_s=k, eps_s=eps),
            schemes=("IIR",), mode=mode, trials=trials, seed=seed,
        )
        specs.append(spec.to_dict())
        for u in FIG6_USER_GRID:
            rows.extend(_grid_rows(spec, u, Scheme.IIR))
            scenario = spec.scenario(Scheme.IIR, u)
            for name, fn in (
                ("approx_grabner", lambda: approx_grabner(k, eps, u)),
                ("approx_improved", lambda: approx_improved(k, eps, u)),
                ("approx_lln", lambda: approx_lln(k, eps)),
            ):
                row = _base_row(spec, u, scenario)
                row["method"] = name
                try:
                    row["mean_slots"] = fn()
                except ValueError as exc:
                    row["error"] = str(exc)
                rows.append(row)
    return ResultTable(rows, _metadata(figure="fig6", specs=specs, seed=seed))


def reproduce_figure(figure_id: str, mode: Optional[str] = None,
                     trials: Optional[int] = None, seed: int = 0) -> ResultTable:
    """Run the preconfigured sweep behind one of :data:`FIGURES`.

    Figures 2-5 default to the analytic/exact curves; ``fig6`` defaults to
    exact, simulated (10**6 trials) and approximate order statistics.
    """
    if figure_id == "fig6":
        return _fig6(mode or "both", trials or 1_000_000, seed)
    specs = _figure_specs(figure_id, mode or "analytic", trials or 100_000, seed)
    tables = [run_experiment(s) for s in specs]
    return _concat(tables, figure=figure_id, specs=[s.to_dict() for s in specs], seed=seed)

