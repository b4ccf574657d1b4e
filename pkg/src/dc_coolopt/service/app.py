"""FastAPI service wrapping the toolkit. The handler functions are plain
callables over the pydantic models so the CLI can invoke them in-process."""

from __future__ import annotations

import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import emit_report, run_benchmark
from ..errors import ToolkitError
from ..generators import generate
from ..model import is_feasible
from ..surrogate import (compare_redlines, default_synthetic_model, evaluate_on_model,
                         fit_linear, model_from_dict, sample_model,
                         solve_continuous_single_redline)
from . import schemas


def handle_generate(req: schemas.GenerateRequest) -> schemas.InstancePayload:
    instance = generate(req.family, **req.params)
    return schemas.InstancePayload.from_instance(instance)


def handle_solve(req: schemas.SolveRequest) -> schemas.SolutionPayload:
    from ..bench import run_algorithm

    instance = req.instance.to_instance()
    if req.demand is not None:
        instance = instance.with_demand(req.demand)
    alg = req.algorithm.lower()
    start = time.perf_counter()
    if alg == "single-redline":
        rho, v, cost = solve_continuous_single_redline(instance)
        wall = time.perf_counter() - start
        from ..model import Solution
        sol = Solution(rho=rho, v=v, cost=cost,
                       feasible=is_feasible(instance, v, rho, req.tol),
                       max_violation=0.0)
        return schemas.SolutionPayload.from_solution(sol, wall_time=wall)
    mapping = {"sr": "SR", "ga": "GA", "h1": "H1", "h2": "H2",
               "bnb": "BnB", "enum": "Enum", "lp": "LP"}
    if alg not in mapping:
        raise ToolkitError(f"unknown algorithm {req.algorithm!r}; "
                           f"known: {sorted(mapping)} or single-redline")
    sol = run_algorithm(mapping[alg], instance, req.seed, req.tol)
    wall = time.perf_counter() - start
    return schemas.SolutionPayload.from_solution(sol, wall_time=wall)


def handle_bench(req: schemas.BenchRequest) -> schemas.BenchResponse:
    reports = run_benchmark(req.family, req.demands, req.algorithms,
                            trials=req.trials, seed=req.seed, timing=req.timing,
                            family_params=req.family_params or None)
    rendered = emit_report(reports, req.format)
    return schemas.BenchResponse(reports=[r.to_dict() for r in reports],
                                 rendered=rendered, format=req.format)


def handle_model(req: schemas.ModelRequest) -> dict:
    return default_synthetic_model(n=req.n, seed=req.seed).to_dict()


def handle_fit(req: schemas.FitRequest) -> schemas.FitResponse:
    model = model_from_dict(req.model)
    samples = sample_model(model, req.samples, seed=req.seed)
    instance, report = fit_linear(samples, req.t_idle, req.t_busy, req.demand)
    return schemas.FitResponse(instance=schemas.InstancePayload.from_instance(instance),
                               report=report.to_dict())


def handle_eval(req: schemas.EvalRequest) -> schemas.EvalResponse:
    model = model_from_dict(req.model)
    ev = evaluate_on_model(model, req.solution.to_solution(), req.t_idle,
                           req.t_busy, req.demand, req.tol)
    return schemas.EvalResponse(**ev.to_dict())


def handle_compare(req: schemas.CompareRequest) -> schemas.CompareResponse:
    model = model_from_dict(req.model) if req.model else default_synthetic_model(req.n, req.seed)
    samples = sample_model(model, req.samples, seed=req.seed)
    instance, _ = fit_linear(samples, req.t_idle, req.t_busy, demand=1)
    demands = req.demands if req.demands else list(range(1, model.n))
    rows = compare_redlines(model, instance, demands, seed=req.seed,
                            safety_margin=req.safety_margin)
    return schemas.CompareResponse(rows=rows)


def create_app() -> FastAPI:
    app = FastAPI(title="dc-coolopt", version=__version__)

    @app.exception_handler(ToolkitError)
    async def toolkit_error_handler(request: Request, exc: ToolkitError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/instances/generate", response_model=schemas.InstancePayload)
    def generate_endpoint(req: schemas.GenerateRequest):
        return handle_generate(req)

    @app.post("/solve", response_model=schemas.SolutionPayload)
    def solve_endpoint(req: schemas.SolveRequest):
        return handle_solve(req)

    @app.post("/benchmark", response_model=schemas.BenchResponse)
    def bench_endpoint(req: schemas.BenchRequest):
        return handle_bench(req)

    @app.post("/surrogate/model")
    def model_endpoint(req: schemas.ModelRequest):
        return handle_model(req)

    @app.post("/surrogate/fit", response_model=schemas.FitResponse)
    def fit_endpoint(req: schemas.FitRequest):
        return handle_fit(req)

    @app.post("/surrogate/evaluate", response_model=schemas.EvalResponse)
    def eval_endpoint(req: schemas.EvalRequest):
        return handle_eval(req)

    @app.post("/surrogate/compare", response_model=schemas.CompareResponse)
    def compare_endpoint(req: schemas.CompareRequest):
        return handle_compare(req)

    return app


app = create_app()
