"""Benchmark harness: avg / wrc / pop ratios against the exact optimum over
seeded trial batches, with CSV / markdown / JSON emission.

Synthetic families draw a fresh instance per trial; data-center families
perturb one fixed base instance per trial. Per-trial algorithm seeds are
derived by hashing (master seed, family, D, trial, algorithm) so adding an
algorithm never shifts the random streams of the others, and a fixed master
seed reproduces every number byte for byte (timing excluded: pass
timing=False to zero the time column when byte-identical output is required).
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import generators
from .errors import ToolkitError
from .exact import ENUM_GUARD, branch_and_bound, enumerate_exact
from .heuristics import H1, H2, GaParams, genetic_algorithm, run_heuristic, simple_rounding
from .lp import solve_relaxation
from .model import DEFAULT_TOL, ProblemInstance, Solution, is_feasible

ALGORITHMS = ("SR", "GA", "H1", "H2", "BnB", "Enum", "LP")
POP_TOL = 1e-6            # "reached the optimum" ratio tolerance
SYNTHETIC_FAMILIES = ("case1", "case2", "case3", "lemma1", "lemma2")
DC_FAMILIES = ("dc25", "dc50", "dc75")


def derive_seed(master: int, family: str, demand: int, trial: int, algorithm: str) -> int:
    """Stable 63-bit seed from the trial coordinates (never Python's hash())."""
    key = f"{master}|{family}|{demand}|{trial}|{algorithm}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    instance_seed: int
    cost: float
    exact_cost: float
    ratio: float
    wall_time: float
    feasible: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class AlgoStats:
    algorithm: str
    avg: float
    wrc: float
    pop: float
    mean_time_s: float
    errors: int


@dataclass(frozen=True)
class BenchReport:
    family: str
    demand: int
    trials: int
    seed: int
    rows: tuple
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "demand": self.demand,
            "trials": self.trials,
            "seed": self.seed,
            "rows": [vars(r) for r in self.rows],
            "config": self.config,
        }


def run_algorithm(algorithm: str, instance: ProblemInstance, seed: int,
                  tol: float = DEFAULT_TOL) -> Solution:
    """Dispatch one algorithm run; returns a Solution (fractional for LP)."""
    if algorithm == "SR":
        return simple_rounding(instance, tol)
    if algorithm == "GA":
        return genetic_algorithm(instance, GaParams(seed=seed), tol)
    if algorithm == "H1":
        return run_heuristic(instance, H1, seed=seed, tol=tol)
    if algorithm == "H2":
        return run_heuristic(instance, H2, seed=seed, tol=tol)
    if algorithm == "BnB":
        return branch_and_bound(instance, tol=tol)
    if algorithm == "Enum":
        return enumerate_exact(instance, tol)
    if algorithm == "LP":
        rho, v, cost = solve_relaxation(instance)
        return Solution(rho=rho, v=v, cost=cost,
                        feasible=is_feasible(instance, v, rho, tol),
                        max_violation=0.0)
    raise ToolkitError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}")


def make_trial_instance(family: str, demand: int, master_seed: int, trial: int,
                        base: Optional[ProblemInstance] = None,
                        family_params: Optional[dict] = None) -> ProblemInstance:
    params = dict(family_params or {})
    if family in DC_FAMILIES:
        if base is None:
            raise ToolkitError("dc families need the prebuilt base instance")
        seed = derive_seed(master_seed, family, demand, trial, "instance")
        return generators.perturb(base, seed=seed).with_demand(demand)
    params.setdefault("seed", derive_seed(master_seed, family, demand, trial, "instance"))
    if family == "lemma2":
        params.pop("seed", None)       # deterministic family, no RNG input
        return generators.generate(family, **params)
    if family == "lemma1":
        params.pop("seed", None)
        params.setdefault("demand", demand)
        return generators.generate(family, **params)
    params.setdefault("demand", demand)
    return generators.generate(family, **params)


def _exact_for(instance: ProblemInstance, tol: float) -> tuple[str, Solution]:
    if math.comb(instance.n, instance.demand) <= ENUM_GUARD:
        return "Enum", enumerate_exact(instance, tol)
    return "BnB", branch_and_bound(instance, tol=tol)


def aggregate_trials(algorithm: str, results: Sequence[TrialResult],
                     timing: bool = True) -> AlgoStats:
    """avg = mean ratio, wrc = max ratio, pop = share of trials at the optimum."""
    good = [r for r in results if r.error is None]
    errors = len(results) - len(good)
    if good:
        ratios = np.array([r.ratio for r in good])
        avg = float(ratios.mean())
        wrc = float(ratios.max())
        pop = float(np.mean(ratios <= 1.0 + POP_TOL))
        mean_time = float(np.mean([r.wall_time for r in good])) if timing else 0.0
    else:
        avg = wrc = pop = math.nan
        mean_time = 0.0
    return AlgoStats(algorithm, avg, wrc, pop, mean_time, errors)


def run_benchmark(family: str, demands: Sequence[int], algorithms: Sequence[str],
                  trials: int = 100, seed: int = 0, timing: bool = True,
                  family_params: Optional[dict] = None,
                  tol: float = DEFAULT_TOL) -> list[BenchReport]:
    """Run the full protocol for one family over a demand list.

    Per trial: build the instance (fresh for synthetic families, perturbed
    base for dc families), solve it exactly, run every requested algorithm
    with its derived seed and record cost ratios; aggregate avg/wrc/pop and
    mean wall time per algorithm. Per-trial errors are recorded, not fatal.
    """
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise ToolkitError(f"unknown algorithm {alg!r}; known: {ALGORITHMS}")
    base = None
    if family in DC_FAMILIES:
        base = generators.generate(family, seed=seed, **(family_params or {}))
    elif family not in SYNTHETIC_FAMILIES:
        raise ToolkitError(f"unknown family {family!r}")

    reports = []
    for demand in demands:
        per_alg: dict[str, list[TrialResult]] = {alg: [] for alg in algorithms}
        for trial in range(trials):
            inst_seed = derive_seed(seed, family, demand, trial, "instance")
            try:
                instance = make_trial_instance(family, demand, seed, trial, base, family_params)
                exact_method, exact_sol = _exact_for(instance, tol)
            except Exception as exc:  # noqa: BLE001 - recorded per trial
                for alg in algorithms:
                    per_alg[alg].append(TrialResult(alg, inst_seed, math.nan, math.nan,
                                                    math.nan, 0.0, False, repr(exc)))
                continue
            exact_cost = exact_sol.cost
            for alg in algorithms:
                alg_seed = derive_seed(seed, family, demand, trial, alg)
                t0 = time.perf_counter()
                try:
                    if alg == exact_method:
                        sol = exact_sol
                    else:
                        sol = run_algorithm(alg, instance, alg_seed, tol)
                    wall = time.perf_counter() - t0
                    if exact_cost != 0.0:
                        ratio = sol.cost / exact_cost
                    else:
                        ratio = 1.0 if abs(sol.cost) <= POP_TOL else math.inf
                    per_alg[alg].append(TrialResult(alg, inst_seed, sol.cost, exact_cost,
                                                    ratio, wall, sol.feasible))
                except Exception as exc:  # noqa: BLE001
                    wall = time.perf_counter() - t0
                    per_alg[alg].append(TrialResult(alg, inst_seed, math.nan, exact_cost,
                                                    math.nan, wall, False, repr(exc)))
        rows = [aggregate_trials(alg, per_alg[alg], timing) for alg in algorithms]
        reports.append(BenchReport(family=family, demand=int(demand), trials=trials,
                                   seed=seed, rows=tuple(rows),
                                   config={"family_params": family_params or {},
                                           "timing": timing}))
    return reports


CSV_HEADER = "family,D,algorithm,avg,wrc,pop,mean_time_s,trials,errors"


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def emit_report(reports: Sequence[BenchReport], fmt: str = "csv") -> str:
    """Render reports; output is bit-stable for a fixed input."""
    if fmt == "csv":
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for rep in reports:
            for row in rep.rows:
                out.write(
                    f"{rep.family},{rep.demand},{row.algorithm},{_fmt(row.avg)},"
                    f"{_fmt(row.wrc)},{_fmt(row.pop)},{row.mean_time_s:.6f},"
                    f"{rep.trials},{row.errors}\n"
                )
        return out.getvalue()
    if fmt == "markdown":
        lines = ["| family | D | algorithm | avg | wrc | pop | mean_time_s | trials | errors |",
                 "| --- | --- | --- | --- | --- | --- | --- | --- | --- |"]
        for rep in reports:
            for row in rep.rows:
                lines.append(
                    f"| {rep.family} | {rep.demand} | {row.algorithm} | {_fmt(row.avg)} "
                    f"| {_fmt(row.wrc)} | {_fmt(row.pop)} | {row.mean_time_s:.6f} "
                    f"| {rep.trials} | {row.errors} |"
                )
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps({"reports": [rep.to_dict() for rep in reports]}, indent=2) + "\n"
    raise ToolkitError(f"unknown report format {fmt!r}")
