"""Core problem data: the linearized thermal/power model and feasibility checks.

The linear model is

    inlet(v, rho) = -A v + B rho + E        (degrees)

with red-line temperatures t_idle for idle servers and t_busy for busy ones.
Writing a = t_idle - t_busy and b = t_idle, the temperature constraints of the
placement problem collapse to  B' rho - A v <= b 1 - E  with B' = B + a I.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveCoefficient, ToolkitError

JSON_FORMAT = "dc-coolopt/1"

#: Default feasibility tolerance on temperatures and variable bounds
#: (double-precision LP residual scale).
DEFAULT_TOL = 1e-7

#: Cooling upper bounds at or above this value are treated as unbounded.
BIG_UB = 1e15


def _vec(x, length: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (length,):
        raise DimensionMismatch(f"{name} must have shape ({length},), got {arr.shape}")
    return arr


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable data of one linearized placement/cooling problem.

    Fields mirror the canonical JSON schema; arrays are row-major float64 and
    validated eagerly on construction.
    """

    n: int
    m: int
    A: np.ndarray          # n x m cooling sensitivity, entries >= 0
    B: np.ndarray          # n x n heat recirculation, entries >= 0
    E: np.ndarray          # length-n constant temperature offset
    t_idle: float
    t_busy: float
    v_lb: np.ndarray       # length-m cooling lower bounds
    v_ub: np.ndarray       # length-m cooling upper bounds
    demand: int
    cost_coeffs: np.ndarray  # length-m, strictly positive

    def __post_init__(self):
        n, m = int(self.n), int(self.m)
        if n <= 0 or m <= 0:
            raise DimensionMismatch(f"n and m must be positive, got n={n}, m={m}")
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.shape != (n, m):
            raise DimensionMismatch(f"A must be {n}x{m}, got {A.shape}")
        if B.shape != (n, n):
            raise DimensionMismatch(f"B must be {n}x{n}, got {B.shape}")
        E = _vec(self.E, n, "E")
        v_lb = _vec(self.v_lb, m, "v_lb")
        v_ub = _vec(self.v_ub, m, "v_ub")
        c = _vec(self.cost_coeffs, m, "cost_coeffs")
        if np.any(A < 0):
            raise ToolkitError("A must be elementwise nonnegative")
        if np.any(B < 0):
            raise ToolkitError("B must be elementwise nonnegative")
        # a = t_idle - t_busy; a == 0 is the degenerate single-red-line case.
        if float(self.t_idle) < float(self.t_busy):
            raise ToolkitError(
                f"t_idle must be >= t_busy, got {self.t_idle} < {self.t_busy}"
            )
        if np.any(v_lb > v_ub):
            raise ToolkitError("v_lb must be <= v_ub elementwise")
        if not (0 <= int(self.demand) <= n):
            raise ToolkitError(f"demand must lie in [0, {n}], got {self.demand}")
        if np.any(c <= 0):
            raise NonPositiveCoefficient("cost coefficients must be strictly positive")
        for arr in (A, B, E, v_lb, v_ub, c):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "t_idle", float(self.t_idle))
        object.__setattr__(self, "t_busy", float(self.t_busy))
        object.__setattr__(self, "v_lb", v_lb)
        object.__setattr__(self, "v_ub", v_ub)
        object.__setattr__(self, "demand", int(self.demand))
        object.__setattr__(self, "cost_coeffs", c)

    @property
    def a(self) -> float:
        """Red-line spread t_idle - t_busy."""
        return self.t_idle - self.t_busy

    @property
    def b(self) -> float:
        """Idle red-line temperature."""
        return self.t_idle

    @property
    def b_prime(self) -> np.ndarray:
        """B + a I, the effective recirculation matrix of the scalar form."""
        return self.B + self.a * np.eye(self.n)

    @property
    def is_normalized(self) -> bool:
        return bool(np.all(self.cost_coeffs == 1.0))

    def with_demand(self, demand: int) -> "ProblemInstance":
        return dataclasses.replace(self, demand=int(demand))

    def to_dict(self) -> dict:
        return {
            "format": JSON_FORMAT,
            "n": self.n,
            "m": self.m,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "E": self.E.tolist(),
            "t_idle": self.t_idle,
            "t_busy": self.t_busy,
            "v_lb": self.v_lb.tolist(),
            "v_ub": self.v_ub.tolist(),
            "demand": self.demand,
            "cost_coeffs": self.cost_coeffs.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemInstance":
        fmt = data.get("format", JSON_FORMAT)
        if fmt != JSON_FORMAT:
            raise ToolkitError(f"unsupported instance format {fmt!r}")
        return cls(
            n=data["n"],
            m=data["m"],
            A=np.asarray(data["A"], dtype=float),
            B=np.asarray(data["B"], dtype=float),
            E=np.asarray(data["E"], dtype=float),
            t_idle=data["t_idle"],
            t_busy=data["t_busy"],
            v_lb=np.asarray(data["v_lb"], dtype=float),
            v_ub=np.asarray(data["v_ub"], dtype=float),
            demand=data["demand"],
            cost_coeffs=np.asarray(data["cost_coeffs"], dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Solution:
    """A solver's answer: binary placement, cooling vector, cost and feasibility record."""

    rho: np.ndarray
    v: np.ndarray
    cost: float
    feasible: bool
    max_violation: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        v = np.asarray(self.v, dtype=float)
        rho.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "cost", float(self.cost))
        object.__setattr__(self, "feasible", bool(self.feasible))
        object.__setattr__(self, "max_violation", float(self.max_violation))

    def to_dict(self) -> dict:
        return {
            "rho": self.rho.tolist(),
            "v": self.v.tolist(),
            "cost": self.cost,
            "feasible": self.feasible,
            "max_violation": self.max_violation,
        }


def load(rho) -> float:
    """Total load sum(rho_i)."""
    return float(np.sum(np.asarray(rho, dtype=float)))


def as_binary_assignment(rho, n: int) -> np.ndarray:
    """Validate a 0/1 utilization vector of length n."""
    arr = np.asarray(rho, dtype=float)
    if arr.shape != (n,):
        raise DimensionMismatch(f"assignment must have shape ({n},), got {arr.shape}")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ToolkitError("assignment entries must be exactly 0 or 1")
    return arr


def normalize(instance: ProblemInstance) -> ProblemInstance:
    """Rescale cooling variables by their cost coefficients (v'_j = c_j v_j).

    Column j of A is divided by c_j, bounds are multiplied by c_j and
    cost_coeffs become all-ones; the objective value of any feasible point is
    preserved. Idempotent once cost_coeffs are all-ones.
    """
    c = instance.cost_coeffs
    if np.any(c <= 0):
        raise NonPositiveCoefficient("cost coefficients must be strictly positive")
    if instance.is_normalized:
        return instance
    return dataclasses.replace(
        instance,
        A=instance.A / c[np.newaxis, :],
        v_lb=instance.v_lb * c,
        v_ub=instance.v_ub * c,
        cost_coeffs=np.ones(instance.m),
    )


def denormalize_cooling(v_normalized, cost_coeffs) -> np.ndarray:
    """Map a cooling vector from normalized units back to raw units (v = v'/c)."""
    return np.asarray(v_normalized, dtype=float) / np.asarray(cost_coeffs, dtype=float)


def inlet_temperatures(instance: ProblemInstance, v, rho) -> np.ndarray:
    """-A v + B rho + E for a cooling vector and (possibly fractional) utilization."""
    v = _vec(v, instance.m, "v")
    rho = _vec(rho, instance.n, "rho")
    return -instance.A @ v + instance.B @ rho + instance.E


def violations(instance: ProblemInstance, v, rho) -> np.ndarray:
    """Positive parts of the temperature-constraint residuals at (v, rho).

    Per server l this is ( sum_i B'_{l,i} rho_i - (sum_j A_{l,j} v_j + b - E_l) )^+
    which equals (inlet(v, rho) + a rho - b)^+ componentwise.
    """
    rho_arr = _vec(rho, instance.n, "rho")
    residual = inlet_temperatures(instance, v, rho_arr) + instance.a * rho_arr - instance.b
    return np.maximum(residual, 0.0)


def is_feasible(instance: ProblemInstance, v, rho, tol: float = DEFAULT_TOL) -> bool:
    """True iff load covers demand, v respects its bounds and no temperature row is violated."""
    if tol < 0:
        raise ToolkitError("tol must be >= 0")
    v = _vec(v, instance.m, "v")
    rho_arr = _vec(rho, instance.n, "rho")
    if load(rho_arr) < instance.demand - tol:
        return False
    if np.any(v < instance.v_lb - tol) or np.any(v > instance.v_ub + tol):
        return False
    return float(np.max(violations(instance, v, rho_arr))) <= tol


def cooling_cost(instance: ProblemInstance, v) -> float:
    """Total cooling power sum_j c_j v_j (equals sum v_j once normalized)."""
    v = _vec(v, instance.m, "v")
    return float(instance.cost_coeffs @ v)


def make_solution(instance: ProblemInstance, rho, v, tol: float = DEFAULT_TOL) -> Solution:
    """Assemble a Solution with its feasibility record computed from the instance."""
    rho_arr = _vec(rho, instance.n, "rho")
    v_arr = _vec(v, instance.m, "v")
    max_viol = float(np.max(violations(instance, v_arr, rho_arr)))
    return Solution(
        rho=rho_arr,
        v=v_arr,
        cost=cooling_cost(instance, v_arr),
        feasible=is_feasible(instance, v_arr, rho_arr, tol),
        max_violation=max_viol,
    )
