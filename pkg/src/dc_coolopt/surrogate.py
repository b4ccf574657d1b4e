"""The nonlinear side: a synthetic stand-in for the physical data-center model,
uniform sampling, least-squares linearization, evaluation of linear-model
solutions on the nonlinear oracle, and the continuous single-red-line
comparison.

The synthetic model is a documented closed form honoring the structural
assumptions: cooling power strictly increasing in every cooling input (cubic
fan power plus an airflow-times-coldness chiller term), inlet temperatures
non-increasing in cooling and non-decreasing in load (nonnegative
recirculation kernel, saturating square-root fan response). The chilled-water
input is expressed as a coldness setpoint so monotonicity holds without sign
flips.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import Infeasible, PreconditionViolated, RankDeficient, ToolkitError
from .lp import LE, EQ, LinearProgram, solve_lp
from .model import (DEFAULT_TOL, ProblemInstance, Solution, denormalize_cooling,
                    normalize)


@dataclass(frozen=True)
class NonlinearModel:
    """Black-box cooling power F(v) and thermal map M(v, rho) with their input
    ranges. ``params`` carries the serializable description when one exists."""

    n: int
    m: int
    v_lb: np.ndarray
    v_ub: np.ndarray
    cooling_power: Callable[[np.ndarray], float]
    temperatures: Callable[[np.ndarray, np.ndarray], np.ndarray]
    params: Optional[dict] = None

    def to_dict(self) -> dict:
        if self.params is None:
            raise ToolkitError("this model has no serializable parameter set")
        return self.params

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# Calibrated constants of the default synthetic model. Baseline inlet level and
# cooling responses are chosen so that minimum cooling keeps idle servers below
# 35 degrees, maximum cooling keeps a fully busy room below 27 degrees with
# slack, and any busy server at minimum cooling exceeds 27 (so placement and
# cooling genuinely trade off).
_BASE_TEMP = 45.0
_SIGMA_FAN = 0.5
_BETA_CHILL = 0.35
_KERNEL_SCALE = 0.25
_KERNEL_DECAY = 2.5
_KERNEL_DIAG = 0.9
_FAN_RANGE = (650.0, 1150.0)
_CHILL_RANGE = (10.0, 22.0)


def _synthetic_from_params(params: dict) -> NonlinearModel:
    n = int(params["n"])
    base = np.asarray(params["base_temp"], dtype=float)
    kernel = np.asarray(params["kernel"], dtype=float)
    w_left = np.asarray(params["w_left"], dtype=float)
    w_right = 1.0 - w_left
    v_lb = np.asarray(params["v_lb"], dtype=float)
    v_ub = np.asarray(params["v_ub"], dtype=float)
    sigma, beta = float(params["sigma_fan"]), float(params["beta_chill"])

    def temperatures(v, rho):
        v = np.asarray(v, dtype=float)
        rho = np.asarray(rho, dtype=float)
        cool = sigma * (w_left * math.sqrt(v[0]) + w_right * math.sqrt(v[1])) + beta * v[2]
        return base + kernel @ rho - cool

    def cooling_power(v):
        v = np.asarray(v, dtype=float)
        fan = 0.9 * ((v[0] / 650.0) ** 3 + (v[1] / 650.0) ** 3)
        chiller = 0.0005 * (v[0] + v[1]) * v[2]
        return float(fan + chiller + 3.0)

    return NonlinearModel(n=n, m=3, v_lb=v_lb, v_ub=v_ub,
                          cooling_power=cooling_power, temperatures=temperatures,
                          params=params)


def default_synthetic_model(n: int = 25, seed: int = 0) -> NonlinearModel:
    """Seeded synthetic data-center oracle: two fans (left/right airflow, each
    650..1150) and a chiller coldness setpoint (10..22); 35/27 red-lines."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    racks = (5 * np.arange(n)) // n
    w_left = 0.9 - 0.2 * racks
    idx = np.arange(n)
    dist = np.abs(idx[:, np.newaxis] - idx[np.newaxis, :])
    kernel = _KERNEL_SCALE * np.exp(-dist / _KERNEL_DECAY)
    kernel *= rng.uniform(0.85, 1.15, size=(n, n))
    kernel[idx, idx] += _KERNEL_DIAG * rng.uniform(0.9, 1.1, size=n)
    base = _BASE_TEMP + rng.uniform(-0.5, 0.5, size=n)
    params = {
        "kind": "synthetic-v1",
        "n": n,
        "seed": seed,
        "base_temp": base.tolist(),
        "kernel": kernel.tolist(),
        "w_left": w_left.tolist(),
        "sigma_fan": _SIGMA_FAN,
        "beta_chill": _BETA_CHILL,
        "v_lb": [_FAN_RANGE[0], _FAN_RANGE[0], _CHILL_RANGE[0]],
        "v_ub": [_FAN_RANGE[1], _FAN_RANGE[1], _CHILL_RANGE[1]],
    }
    return _synthetic_from_params(params)


def linear_model_from_instance(instance: ProblemInstance, f_intercept: float = 0.0) -> NonlinearModel:
    """Wrap an instance's exact linear forms as a NonlinearModel (round-trip
    testing and consistency checks)."""

    def temperatures(v, rho):
        return -instance.A @ np.asarray(v, float) + instance.B @ np.asarray(rho, float) + instance.E

    def cooling_power(v):
        return float(instance.cost_coeffs @ np.asarray(v, float) + f_intercept)

    params = {"kind": "linear", "instance": instance.to_dict(), "f_intercept": f_intercept}
    return NonlinearModel(n=instance.n, m=instance.m, v_lb=instance.v_lb.copy(),
                          v_ub=instance.v_ub.copy(), cooling_power=cooling_power,
                          temperatures=temperatures, params=params)


def model_from_dict(data: dict) -> NonlinearModel:
    kind = data.get("kind")
    if kind == "synthetic-v1":
        return _synthetic_from_params(data)
    if kind == "linear":
        inst = ProblemInstance.from_dict(data["instance"])
        return linear_model_from_instance(inst, float(data.get("f_intercept", 0.0)))
    raise ToolkitError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class SampleSet:
    """Uniform (v, rho) draws with their oracle values and the sampled box."""

    v: np.ndarray        # count x m
    rho: np.ndarray      # count x n (continuous utilizations)
    f_values: np.ndarray  # count
    m_values: np.ndarray  # count x n
    v_lb: np.ndarray     # the model's cooling box, carried for the fit
    v_ub: np.ndarray
    seed: int
    count: int


def sample_model(model: NonlinearModel, count: int, seed: int = 0) -> SampleSet:
    """i.i.d. uniform draws over the cooling box and [0,1]^n utilizations."""
    if count < model.m + model.n + 1:
        raise PreconditionViolated(
            f"need at least m+n+1 = {model.m + model.n + 1} samples, got {count}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    v = rng.uniform(model.v_lb, model.v_ub, size=(count, model.m))
    rho = rng.uniform(0.0, 1.0, size=(count, model.n))
    f_values = np.array([model.cooling_power(v[i]) for i in range(count)])
    m_values = np.stack([model.temperatures(v[i], rho[i]) for i in range(count)])
    return SampleSet(v=v, rho=rho, f_values=f_values, m_values=m_values,
                     v_lb=np.asarray(model.v_lb, float).copy(),
                     v_ub=np.asarray(model.v_ub, float).copy(),
                     seed=seed, count=count)


@dataclass(frozen=True)
class FitReport:
    """Regression quality and bookkeeping for one linearization."""

    r2_rows: np.ndarray
    max_residual_rows: np.ndarray
    f_r2: float
    f_intercept: float
    cost_coeffs: np.ndarray
    clamped_entries: int
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "r2_rows": self.r2_rows.tolist(),
            "max_residual_rows": self.max_residual_rows.tolist(),
            "f_r2": self.f_r2,
            "f_intercept": self.f_intercept,
            "cost_coeffs": self.cost_coeffs.tolist(),
            "clamped_entries": self.clamped_entries,
            "sample_count": self.sample_count,
        }

    def to_text(self) -> str:
        lines = [
            f"samples: {self.sample_count}",
            f"F: R2={self.f_r2:.6f} intercept={self.f_intercept:.6f} "
            f"coeffs={np.array2string(self.cost_coeffs, precision=6)}",
            f"M rows: R2 min={self.r2_rows.min():.6f} mean={self.r2_rows.mean():.6f}",
            f"max |residual|: {self.max_residual_rows.max():.6f}",
            f"clamped entries: {self.clamped_entries}",
        ]
        return "\n".join(lines)


def _r2(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-18 else 0.0
    return 1.0 - ss_res / ss_tot


def fit_linear(samples: SampleSet, t_idle: float, t_busy: float,
               demand: int) -> tuple[ProblemInstance, FitReport]:
    """Ordinary least squares: F ~ c.v + const, M_l ~ -A_l v + B_l rho + E_l.

    Negative fitted A/B entries are clamped to zero (the sign assumptions are
    structural) and counted. The instance keeps the fitted cost coefficients
    in raw units; solvers normalize internally.
    """
    count, m = samples.v.shape
    n = samples.rho.shape[1]
    if count < m + n + 1:
        raise RankDeficient(f"need at least {m + n + 1} samples, got {count}")

    Xf = np.column_stack([np.ones(count), samples.v])
    coef_f, _, rank_f, _ = np.linalg.lstsq(Xf, samples.f_values, rcond=None)
    if rank_f < m + 1:
        raise RankDeficient("cooling-power regression is rank deficient")
    f_intercept = float(coef_f[0])
    c = coef_f[1:]
    if np.any(c <= 0):
        raise RankDeficient("cooling-power regression produced a non-increasing coefficient")
    f_fitted = Xf @ coef_f

    Xm = np.column_stack([np.ones(count), samples.v, samples.rho])
    coef_m, _, rank_m, _ = np.linalg.lstsq(Xm, samples.m_values, rcond=None)
    if rank_m < 1 + m + n:
        raise RankDeficient("thermal regression is rank deficient")
    E = coef_m[0].copy()
    A_fit = -coef_m[1:1 + m].T          # n x m
    B_fit = coef_m[1 + m:].T            # n x n
    clamped = int(np.count_nonzero(A_fit < 0)) + int(np.count_nonzero(B_fit < 0))
    A = np.maximum(A_fit, 0.0)
    B = np.maximum(B_fit, 0.0)
    fitted_m = Xm @ coef_m
    r2_rows = np.array([_r2(samples.m_values[:, l], fitted_m[:, l]) for l in range(n)])
    max_res = np.max(np.abs(samples.m_values - fitted_m), axis=0)

    instance = ProblemInstance(
        n=n, m=m, A=A, B=B, E=E, t_idle=t_idle, t_busy=t_busy,
        v_lb=samples.v_lb.copy(), v_ub=samples.v_ub.copy(),
        demand=demand, cost_coeffs=c,
    )
    report = FitReport(r2_rows=r2_rows, max_residual_rows=max_res,
                       f_r2=_r2(samples.f_values, f_fitted), f_intercept=f_intercept,
                       cost_coeffs=c.copy(), clamped_entries=clamped, sample_count=count)
    return instance, report


@dataclass(frozen=True)
class ModelEvaluation:
    true_power: float
    temp_margin: float
    feasible: bool

    def to_dict(self) -> dict:
        return {"true_power": self.true_power, "temp_margin": self.temp_margin,
                "feasible": self.feasible}


def evaluate_on_model(model: NonlinearModel, solution: Solution, t_idle: float,
                      t_busy: float, demand: int, tol: float = DEFAULT_TOL) -> ModelEvaluation:
    """Score a solution on the nonlinear oracle: true power, worst inlet excess
    over the utilization-dependent red-line, and feasibility."""
    rho = np.asarray(solution.rho, dtype=float)
    v = np.asarray(solution.v, dtype=float)
    inlet = model.temperatures(v, rho)
    redline = t_idle - (t_idle - t_busy) * rho
    margin = float(np.max(inlet - redline))
    feasible = margin <= tol and float(rho.sum()) >= demand - tol
    return ModelEvaluation(true_power=float(model.cooling_power(v)),
                           temp_margin=margin, feasible=feasible)


def with_safety_margin(instance: ProblemInstance, delta: float) -> ProblemInstance:
    """Tighten both red-lines by delta before solving on the linear model, to
    absorb regression error ahead of nonlinear evaluation."""
    return dataclasses.replace(instance, t_idle=instance.t_idle - delta,
                               t_busy=instance.t_busy - delta)


def solve_continuous_single_redline(instance: ProblemInstance):
    """Continuous-utilization comparator with one red-line at t_busy: the
    utilization-dependent a rho term disappears. Returns (rho, v_raw, cost)."""
    norm = normalize(instance)
    n, m = norm.n, norm.m
    rows = []
    for l in range(n):
        rows.append((np.concatenate([norm.B[l], -norm.A[l]]), LE, norm.t_busy - norm.E[l]))
    rows.append((np.concatenate([np.ones(n), np.zeros(m)]), EQ, float(norm.demand)))
    upper_v = norm.v_ub.copy()
    upper_v[upper_v >= 1e15] = np.inf
    lp = LinearProgram(
        objective=np.concatenate([np.zeros(n), np.ones(m)]),
        constraints=rows,
        lower=np.concatenate([np.zeros(n), norm.v_lb]),
        upper=np.concatenate([np.ones(n), upper_v]),
    )
    result = solve_lp(lp)
    if result.status != "optimal":
        raise Infeasible("single-red-line continuous problem is infeasible")
    rho = np.clip(result.x[:n], 0.0, 1.0)
    v = denormalize_cooling(result.x[n:], instance.cost_coeffs)
    return rho, v, float(result.objective_value)


def compare_redlines(model: NonlinearModel, instance: ProblemInstance,
                     demands, seed: int = 0, safety_margin: float = 0.0,
                     tol: float = DEFAULT_TOL) -> list[dict]:
    """Per demand level: binary two-red-line H2 versus continuous single-red-line,
    both solved on the fitted linear instance and evaluated on the nonlinear
    oracle. Returns one complete row per D."""
    from .heuristics import H2, run_heuristic

    rows = []
    for d in demands:
        work = with_safety_margin(instance.with_demand(int(d)), safety_margin)
        row = {"D": int(d)}
        sol = run_heuristic(work, H2, seed=seed)
        ev = evaluate_on_model(model, sol, instance.t_idle, instance.t_busy, int(d), tol)
        row.update(two_redline_cost=sol.cost, two_redline_true_power=ev.true_power,
                   two_redline_margin=ev.temp_margin, two_redline_feasible=ev.feasible)
        rho_c, v_c, cost_c = solve_continuous_single_redline(work)
        sol_c = Solution(rho=rho_c, v=v_c, cost=cost_c, feasible=True, max_violation=0.0)
        ev_c = evaluate_on_model(model, sol_c, instance.t_busy, instance.t_busy, int(d), tol)
        row.update(single_redline_cost=cost_c, single_redline_true_power=ev_c.true_power,
                   single_redline_margin=ev_c.temp_margin,
                   single_redline_feasible=ev_c.feasible)
        rows.append(row)
    return rows
