"""Command-line interface. A thin client over the service handlers: every
subcommand builds the same request models the HTTP service accepts and either
dispatches them in-process (default) or POSTs them to a running service
(--server URL). Exit codes: 0 success, 1 usage error, 2 solver error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ToolkitError
from .service import schemas
from .service.app import (handle_bench, handle_compare, handle_eval, handle_fit,
                          handle_generate, handle_model, handle_solve)

GEN_PARAM_FLAGS = {
    "seed": int, "demand": int, "n": int, "m": int, "p": int,
    "a": float, "b": float, "q": float, "v_L": float,
    "regression_samples": int,
}

COMPARE_CSV_HEADER = ("D,two_redline_cost,two_redline_true_power,two_redline_margin,"
                      "two_redline_feasible,single_redline_cost,single_redline_true_power,"
                      "single_redline_margin,single_redline_feasible")


class _Parser(argparse.ArgumentParser):
    """argparse that exits with code 1 on usage errors (default is 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_json(path: str) -> dict:
    if path == "-":
        return json.load(sys.stdin)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_output(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _post(server: str, path: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
    if resp.status_code >= 400:
        raise ToolkitError(f"service error {resp.status_code}: {resp.text}")
    return resp.json()


def _compare_rows_csv(rows: list[dict]) -> str:
    lines = [COMPARE_CSV_HEADER]
    for row in rows:
        lines.append(
            f"{row['D']},{row['two_redline_cost']!r},{row['two_redline_true_power']!r},"
            f"{row['two_redline_margin']!r},{row['two_redline_feasible']},"
            f"{row['single_redline_cost']!r},{row['single_redline_true_power']!r},"
            f"{row['single_redline_margin']!r},{row['single_redline_feasible']}"
        )
    return "\n".join(lines) + "\n"


def build_parser() -> _Parser:
    parser = _Parser(prog="dc-coolopt",
                     description="Thermal-aware placement and cooling optimization")
    parser.add_argument("--server", help="POST requests to a running service instead "
                                         "of solving in-process")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate an instance")
    gen.add_argument("--family", required=True)
    for flag, typ in GEN_PARAM_FLAGS.items():
        gen.add_argument(f"--{flag.replace('_', '-')}", type=typ, default=None, dest=flag)
    gen.add_argument("-o", "--output")

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("--alg", required=True,
                       choices=["sr", "ga", "h1", "h2", "bnb", "enum", "lp", "single-redline"])
    solve.add_argument("-i", "--input", default="-")
    solve.add_argument("--demand", type=int, default=None)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--tol", type=float, default=1e-7)
    solve.add_argument("-o", "--output")

    bench = sub.add_parser("bench", help="run the benchmark harness")
    bench.add_argument("--family", required=True)
    bench.add_argument("--demands", required=True, help="comma-separated, e.g. 6,7,8")
    bench.add_argument("--algs", required=True, help="comma-separated, e.g. sr,h2")
    env_trials = os.environ.get("DC_COOLOPT_TRIALS")
    bench.add_argument("--trials", type=int, default=int(env_trials) if env_trials else 100)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--format", default="csv", choices=["csv", "markdown", "json"])
    bench.add_argument("--no-timing", action="store_true")
    bench.add_argument("-o", "--output")

    surr = sub.add_parser("surrogate", help="nonlinear-surrogate pipeline")
    ssub = surr.add_subparsers(dest="surrogate_command", parser_class=_Parser)

    smodel = ssub.add_parser("model", help="emit a synthetic nonlinear model")
    smodel.add_argument("--n", type=int, default=25)
    smodel.add_argument("--seed", type=int, default=0)
    smodel.add_argument("-o", "--output")

    sfit = ssub.add_parser("fit", help="regress a linear instance from a model")
    sfit.add_argument("--model", required=True, help="model JSON file")
    sfit.add_argument("--samples", type=int, default=5000)
    sfit.add_argument("--seed", type=int, default=0)
    sfit.add_argument("--t-idle", type=float, default=35.0)
    sfit.add_argument("--t-busy", type=float, default=27.0)
    sfit.add_argument("--demand", type=int, default=10)
    sfit.add_argument("-o", "--output")

    seval = ssub.add_parser("eval", help="score a solution on a model")
    seval.add_argument("--model", required=True)
    seval.add_argument("--solution", required=True)
    seval.add_argument("--t-idle", type=float, default=35.0)
    seval.add_argument("--t-busy", type=float, default=27.0)
    seval.add_argument("--demand", type=int, default=0)
    seval.add_argument("--tol", type=float, default=1e-7)
    seval.add_argument("-o", "--output")

    scomp = ssub.add_parser("compare", help="two-red-line binary vs single-red-line continuous")
    scomp.add_argument("--model", default=None, help="model JSON file (default: synthetic)")
    scomp.add_argument("--n", type=int, default=25)
    scomp.add_argument("--seed", type=int, default=0)
    scomp.add_argument("--samples", type=int, default=5000)
    scomp.add_argument("--demands", default=None, help="comma-separated; default 1..n-1")
    scomp.add_argument("--safety-margin", type=float, default=0.0)
    scomp.add_argument("--format", default="json", choices=["json", "csv"])
    scomp.add_argument("-o", "--output")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    return parser


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ToolkitError(f"expected a comma-separated integer list, got {text!r}") from exc


def _cmd_gen(args) -> int:
    params = {k: getattr(args, k) for k in GEN_PARAM_FLAGS if getattr(args, k) is not None}
    req = schemas.GenerateRequest(family=args.family, params=params)
    if args.server:
        payload = _post(args.server, "/instances/generate", req.model_dump())
    else:
        try:
            payload = handle_generate(req).model_dump()
        except TypeError as exc:
            sys.stderr.write(f"dc-coolopt gen: bad parameters for family "
                             f"{args.family!r}: {exc}\n")
            return 1
    _write_output(json.dumps(payload, indent=2), args.output)
    return 0


def _cmd_solve(args) -> int:
    instance = _read_json(args.input)
    req = schemas.SolveRequest(instance=schemas.InstancePayload(**instance),
                               algorithm=args.alg, seed=args.seed,
                               demand=args.demand, tol=args.tol)
    if args.server:
        payload = _post(args.server, "/solve", req.model_dump())
    else:
        payload = handle_solve(req).model_dump()
    _write_output(json.dumps(payload, indent=2), args.output)
    return 0


def _cmd_bench(args) -> int:
    req = schemas.BenchRequest(
        family=args.family,
        demands=_parse_int_list(args.demands),
        algorithms=[_map_alg(a) for a in args.algs.split(",") if a.strip()],
        trials=args.trials, seed=args.seed, timing=not args.no_timing,
        format=args.format,
    )
    if args.server:
        payload = _post(args.server, "/benchmark", req.model_dump())
        rendered = payload["rendered"]
    else:
        rendered = handle_bench(req).rendered
    _write_output(rendered, args.output)
    return 0


def _map_alg(name: str) -> str:
    mapping = {"sr": "SR", "ga": "GA", "h1": "H1", "h2": "H2",
               "bnb": "BnB", "enum": "Enum", "lp": "LP"}
    key = name.strip().lower()
    if key not in mapping:
        raise ToolkitError(f"unknown algorithm {name!r}; known: {sorted(mapping)}")
    return mapping[key]


def _cmd_surrogate(args) -> int:
    cmd = args.surrogate_command
    if cmd == "model":
        req = schemas.ModelRequest(n=args.n, seed=args.seed)
        payload = _post(args.server, "/surrogate/model", req.model_dump()) \
            if args.server else handle_model(req)
        _write_output(json.dumps(payload, indent=2), args.output)
        return 0
    if cmd == "fit":
        req = schemas.FitRequest(model=_read_json(args.model), samples=args.samples,
                                 seed=args.seed, t_idle=args.t_idle, t_busy=args.t_busy,
                                 demand=args.demand)
        payload = _post(args.server, "/surrogate/fit", req.model_dump()) \
            if args.server else handle_fit(req).model_dump()
        _write_output(json.dumps(payload, indent=2), args.output)
        return 0
    if cmd == "eval":
        req = schemas.EvalRequest(model=_read_json(args.model),
                                  solution=schemas.SolutionPayload(**_read_json(args.solution)),
                                  t_idle=args.t_idle, t_busy=args.t_busy,
                                  demand=args.demand, tol=args.tol)
        payload = _post(args.server, "/surrogate/evaluate", req.model_dump()) \
            if args.server else handle_eval(req).model_dump()
        _write_output(json.dumps(payload, indent=2), args.output)
        return 0
    if cmd == "compare":
        demands = _parse_int_list(args.demands) if args.demands else None
        req = schemas.CompareRequest(model=_read_json(args.model) if args.model else None,
                                     n=args.n, seed=args.seed, samples=args.samples,
                                     demands=demands, safety_margin=args.safety_margin)
        payload = _post(args.server, "/surrogate/compare", req.model_dump()) \
            if args.server else handle_compare(req).model_dump()
        rows = payload["rows"]
        if args.format == "csv":
            _write_output(_compare_rows_csv(rows), args.output)
        else:
            _write_output(json.dumps({"rows": rows}, indent=2), args.output)
        return 0
    sys.stderr.write("dc-coolopt surrogate: choose one of model, fit, eval, compare\n")
    return 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:       # argparse reports usage errors by exiting
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "surrogate":
            return _cmd_surrogate(args)
        if args.command == "serve":
            import uvicorn

            from .service import app
            uvicorn.run(app, host=args.host, port=args.port)
            return 0
    except ToolkitError as exc:
        sys.stderr.write(f"dc-coolopt {args.command}: {exc}\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"dc-coolopt {args.command}: {exc}\n")
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
