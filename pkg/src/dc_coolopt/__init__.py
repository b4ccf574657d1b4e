"""dc-coolopt: thermal-aware data-center workload placement and cooling-power
optimization (linearized model, LP-relaxation rounding heuristics, exact
solvers, instance generators, nonlinear-surrogate pipeline and a benchmark
harness)."""

__version__ = "0.1.0"

from .model import (DEFAULT_TOL, ProblemInstance, Solution, cooling_cost,
                    inlet_temperatures, is_feasible, load, make_solution,
                    normalize, violations)
from .lp import (LinearProgram, LpResult, optimal_cooling_for, solve_lp,
                 solve_relaxation)
from .heuristics import (H1, H2, DominantGroups, GaParams, dominant_groups,
                         genetic_algorithm, gradual_rounding, h1_cost, h2_cost,
                         run_heuristic, simple_rounding, swap_refinement)
from .exact import (MaxMinResult, branch_and_bound, enumerate_exact,
                    exact_reference, exact_special_maxmin)
from .generators import (gen_case1, gen_case2, gen_case3, gen_datacenter,
                         gen_lemma1, gen_lemma2, gen_reduction, generate, perturb)
from .surrogate import (FitReport, NonlinearModel, SampleSet,
                        default_synthetic_model, evaluate_on_model, fit_linear,
                        sample_model, solve_continuous_single_redline)
from .bench import BenchReport, TrialResult, emit_report, run_benchmark

__all__ = [
    "DEFAULT_TOL", "ProblemInstance", "Solution", "cooling_cost",
    "inlet_temperatures", "is_feasible", "load", "make_solution", "normalize",
    "violations", "LinearProgram", "LpResult", "optimal_cooling_for",
    "solve_lp", "solve_relaxation", "H1", "H2", "DominantGroups", "GaParams",
    "dominant_groups", "genetic_algorithm", "gradual_rounding", "h1_cost",
    "h2_cost", "run_heuristic", "simple_rounding", "swap_refinement",
    "MaxMinResult", "branch_and_bound", "enumerate_exact", "exact_reference",
    "exact_special_maxmin", "gen_case1", "gen_case2", "gen_case3",
    "gen_datacenter", "gen_lemma1", "gen_lemma2", "gen_reduction", "generate",
    "perturb", "FitReport", "NonlinearModel", "SampleSet",
    "default_synthetic_model", "evaluate_on_model", "fit_linear",
    "sample_model", "solve_continuous_single_redline", "BenchReport",
    "TrialResult", "emit_report", "run_benchmark", "__version__",
]
