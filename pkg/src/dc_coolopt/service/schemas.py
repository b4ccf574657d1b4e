"""Pydantic request/response models for the HTTP service (and the CLI, which
drives the same handlers)."""

from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from ..model import JSON_FORMAT, ProblemInstance, Solution


class InstancePayload(BaseModel):
    format: str = JSON_FORMAT
    n: int
    m: int
    A: list[list[float]]
    B: list[list[float]]
    E: list[float]
    t_idle: float
    t_busy: float
    v_lb: list[float]
    v_ub: list[float]
    demand: int
    cost_coeffs: list[float]

    @classmethod
    def from_instance(cls, instance: ProblemInstance) -> "InstancePayload":
        return cls(**instance.to_dict())

    def to_instance(self) -> ProblemInstance:
        return ProblemInstance.from_dict(self.model_dump())


class SolutionPayload(BaseModel):
    rho: list[float]
    v: list[float]
    cost: float
    feasible: bool
    max_violation: float
    wall_time: Optional[float] = None

    @classmethod
    def from_solution(cls, solution: Solution, wall_time: Optional[float] = None) -> "SolutionPayload":
        return cls(wall_time=wall_time, **solution.to_dict())

    def to_solution(self) -> Solution:
        return Solution(rho=np.asarray(self.rho, float), v=np.asarray(self.v, float),
                        cost=self.cost, feasible=self.feasible,
                        max_violation=self.max_violation)


class GenerateRequest(BaseModel):
    family: str
    params: dict = Field(default_factory=dict)


class SolveRequest(BaseModel):
    instance: InstancePayload
    algorithm: str
    seed: int = 0
    demand: Optional[int] = None
    tol: float = 1e-7


class BenchRequest(BaseModel):
    family: str
    demands: list[int]
    algorithms: list[str]
    trials: int = 100
    seed: int = 0
    timing: bool = True
    family_params: dict = Field(default_factory=dict)
    format: str = "csv"


class BenchResponse(BaseModel):
    reports: list[dict]
    rendered: str
    format: str


class ModelRequest(BaseModel):
    n: int = 25
    seed: int = 0


class FitRequest(BaseModel):
    model: dict
    samples: int = 5000
    seed: int = 0
    t_idle: float = 35.0
    t_busy: float = 27.0
    demand: int = 10


class FitResponse(BaseModel):
    instance: InstancePayload
    report: dict


class EvalRequest(BaseModel):
    model: dict
    solution: SolutionPayload
    t_idle: float = 35.0
    t_busy: float = 27.0
    demand: int = 0
    tol: float = 1e-7


class EvalResponse(BaseModel):
    true_power: float
    temp_margin: float
    feasible: bool


class CompareRequest(BaseModel):
    model: Optional[dict] = None
    n: int = 25
    seed: int = 0
    samples: int = 5000
    demands: Optional[list[int]] = None
    safety_margin: float = 0.0
    t_idle: float = 35.0
    t_busy: float = 27.0


class CompareResponse(BaseModel):
    rows: list[dict]


class HealthResponse(BaseModel):
    status: str
    version: str
