"""Approximation algorithms for the placement problem.

Simple rounding (SR) rounds the D largest fractional utilizations up. The
intelligent-rounding schemes H1/H2 gradually idle servers while scoring
candidate distributions by weighted constraint violations (H1: worst single
violation, H2: total violation over dominant-cooling-variable groups), refine
with a busy/idle swap pass and retry under small model perturbations. The
genetic algorithm is a standard binary-encoded baseline intensified around
the SR solution.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import Infeasible, MassLoss, ToolkitError, ZeroRow
from .lp import optimal_cooling_for, solve_relaxation
from .model import DEFAULT_TOL, ProblemInstance, Solution, make_solution

H1 = "H1"
H2 = "H2"

#: Fractional utilizations within this distance are treated as tied when the
#: D largest values are selected (float noise on symmetric optima).
TIE_SNAP = 1e-9

#: Magnitude of the phase-3 model perturbations, mirroring the benchmark
#: protocol's interval [0.98, 1.02].
PERTURB_LO = 0.98
PERTURB_HI = 1.02


@dataclass(frozen=True)
class DominantGroups:
    """Per-server dominant cooling variable: row maxima of A, their column
    indices, and the induced partition of servers."""

    w: np.ndarray               # length-n row maxima of A
    dominant_index: np.ndarray  # length-n argmax columns (ties to lowest index)
    groups: tuple               # ((column, server-index array), ...) nonempty only


def dominant_groups(instance: ProblemInstance) -> DominantGroups:
    w = instance.A.max(axis=1)
    if np.any(w <= 0.0):
        bad = int(np.argmax(w <= 0.0))
        raise ZeroRow(f"row {bad} of A is all zeros; server {bad} cannot be cooled")
    dominant = np.argmax(instance.A, axis=1)
    groups = []
    for k in range(instance.m):
        members = np.nonzero(dominant == k)[0]
        if members.size:
            groups.append((k, members))
    return DominantGroups(w=w, dominant_index=dominant, groups=tuple(groups))


def _brackets(instance: ProblemInstance, rho: np.ndarray, v_star: np.ndarray) -> np.ndarray:
    """B' rho - (A v* + b - E), the signed temperature-constraint residuals."""
    return instance.b_prime @ rho - (instance.A @ v_star + instance.b - instance.E)


def h1_cost(instance: ProblemInstance, rho, v_star,
            groups: Optional[DominantGroups] = None) -> float:
    """Worst weighted residual max_l bracket_l / w_l (deliberately unclamped)."""
    groups = groups if groups is not None else dominant_groups(instance)
    res = _brackets(instance, np.asarray(rho, float), np.asarray(v_star, float))
    return float(np.max(res / groups.w))


def h2_cost(instance: ProblemInstance, rho, v_star,
            groups: Optional[DominantGroups] = None) -> float:
    """Sum over dominant-variable groups of the worst clamped weighted violation."""
    groups = groups if groups is not None else dominant_groups(instance)
    res = np.maximum(_brackets(instance, np.asarray(rho, float), np.asarray(v_star, float)), 0.0)
    weighted = res / groups.w
    return float(sum(np.max(weighted[members]) for _, members in groups.groups))


def weighted_violation_sum(instance: ProblemInstance, rho, v_star,
                           groups: Optional[DominantGroups] = None) -> float:
    """sum_l (bracket_l)^+ / w_l, the H1 swap tie-breaker."""
    groups = groups if groups is not None else dominant_groups(instance)
    res = np.maximum(_brackets(instance, np.asarray(rho, float), np.asarray(v_star, float)), 0.0)
    return float(np.sum(res / groups.w))


def select_largest(rho_star: np.ndarray, d: int) -> np.ndarray:
    """Indices of the D largest utilizations; values within TIE_SNAP are tied
    and resolved by ascending server index."""
    snapped = np.round(np.asarray(rho_star, float) / TIE_SNAP)
    order = np.lexsort((np.arange(snapped.size), -snapped))
    return np.sort(order[:d])


def simple_rounding(instance: ProblemInstance, tol: float = DEFAULT_TOL) -> Solution:
    """Solve the relaxation, round the D largest utilizations to one, cool optimally."""
    rho_star, _, _ = solve_relaxation(instance)
    chosen = select_largest(rho_star, instance.demand)
    rho_hat = np.zeros(instance.n)
    rho_hat[chosen] = 1.0
    v, _ = optimal_cooling_for(instance, rho_hat, tol)
    return make_solution(instance, rho_hat, v, tol)


def redistribute(rho, support, i: int) -> np.ndarray:
    """One idling step of the gradual rounding: zero server i and spread its
    load over the remaining support proportionally to current loads; entries
    pushed past 1 are clamped and their excess spread again."""
    out = np.asarray(rho, dtype=float).copy()
    r = out[i]
    out[i] = 0.0
    active = np.asarray(support, dtype=bool).copy()
    active[i] = False
    while r > 0.0:
        idx = np.nonzero(active)[0]
        total = out[idx].sum()
        if total <= 0.0:
            if r <= 1e-9:
                break  # sub-tolerance dust from LP arithmetic; every slot is full
            raise MassLoss("no remaining support to absorb redistributed load")
        out[idx] += out[idx] / total * r
        r = 0.0
        over = idx[out[idx] > 1.0 + 1e-12]
        if over.size:
            k = int(over[0])
            r = out[k] - 1.0
            out[k] = 1.0
            active[k] = False
    return out


def gradual_rounding(instance: ProblemInstance, rho_star,
                     cost_fn: Callable[[np.ndarray], float]) -> np.ndarray:
    """Round a fractional load-D distribution to a binary one (Algorithm-style
    greedy idling): repeatedly idle the support server whose proportional
    redistribution minimizes cost_fn, until exactly D servers remain.

    Total load is conserved to 1e-9 at every step (MassLoss otherwise).
    """
    d = instance.demand
    rho = np.asarray(rho_star, dtype=float).copy()
    if abs(rho.sum() - d) > 1e-9:
        raise MassLoss(f"starting load {rho.sum()} != demand {d}")
    support = rho > 0.0
    remaining = int(np.count_nonzero(support)) - d
    if remaining < 0:
        raise ToolkitError("support smaller than demand; load vector malformed")
    while remaining > 0:
        best_i = -1
        best_cost = math.inf
        best_rho = None
        for i in np.nonzero(support)[0]:
            candidate = redistribute(rho, support, int(i))
            if abs(candidate.sum() - d) > 1e-9:
                raise MassLoss(f"load drifted to {candidate.sum()} while idling {i}")
            c = cost_fn(candidate)
            if c < best_cost:
                best_cost = c
                best_i = int(i)
                best_rho = candidate
        support[best_i] = False
        rho = best_rho
        remaining -= 1
    out = np.zeros(instance.n)
    on = np.nonzero(support)[0]
    if on.size != d or np.any(np.abs(rho[on] - 1.0) > 1e-6):
        raise MassLoss("rounding finished without a clean binary distribution")
    out[on] = 1.0
    return out


def swap_refinement(instance: ProblemInstance, rho_hat, v_star, variant: str,
                    groups: Optional[DominantGroups] = None) -> np.ndarray:
    """One best-improvement pass over all (busy, idle) pairs.

    The strictly best improving swap is adopted; H1 breaks cost ties by the
    smaller weighted violation sum, remaining ties by lowest (busy, idle)
    index pair. Load is preserved.
    """
    if variant not in (H1, H2):
        raise ToolkitError(f"unknown variant {variant!r}")
    groups = groups if groups is not None else dominant_groups(instance)
    rho = np.asarray(rho_hat, dtype=float).copy()
    v_star = np.asarray(v_star, dtype=float)

    def cost_key(r):
        if variant == H1:
            return (h1_cost(instance, r, v_star, groups),
                    weighted_violation_sum(instance, r, v_star, groups))
        return (h2_cost(instance, r, v_star, groups),)

    base_key = cost_key(rho)
    busy = np.nonzero(rho == 1.0)[0]
    idle = np.nonzero(rho == 0.0)[0]
    best_key = base_key
    best_pair = None
    for i in busy:
        for j in idle:
            rho[i], rho[j] = 0.0, 1.0
            key = cost_key(rho)
            if key < best_key:
                best_key = key
                best_pair = (int(i), int(j))
            rho[i], rho[j] = 1.0, 0.0
    if best_pair is not None and best_key[0] < base_key[0]:
        i, j = best_pair
        rho[i], rho[j] = 0.0, 1.0
    return rho


def _perturbed(instance: ProblemInstance, rng: np.random.Generator) -> ProblemInstance:
    fa = rng.uniform(PERTURB_LO, PERTURB_HI, size=instance.A.shape)
    fb = rng.uniform(PERTURB_LO, PERTURB_HI, size=instance.B.shape)
    fe = rng.uniform(PERTURB_LO, PERTURB_HI, size=instance.E.shape)
    return dataclasses.replace(instance, A=instance.A * fa, B=instance.B * fb,
                               E=instance.E * fe)


def _forced_solution(instance: ProblemInstance, tol: float) -> Solution:
    rho = np.zeros(instance.n) if instance.demand == 0 else np.ones(instance.n)
    v, _ = optimal_cooling_for(instance, rho, tol)
    return make_solution(instance, rho, v, tol)


def run_heuristic(instance: ProblemInstance, variant: str = H2, seed: int = 0,
                  tol: float = DEFAULT_TOL) -> Solution:
    """Full H1/H2 pipeline: relax -> gradual rounding -> swap pass, repeated for
    min(5, D, n-D) rounds under small perturbations of A, B, E (round one uses
    the unperturbed instance); every candidate is re-scored on the original
    instance and the cheapest wins. Deterministic given the seed.
    """
    if variant not in (H1, H2):
        raise ToolkitError(f"unknown variant {variant!r}")
    d, n = instance.demand, instance.n
    if d == 0 or d == n:
        return _forced_solution(instance, tol)

    rounds = min(5, d, n - d)
    seeds = np.random.SeedSequence(seed).spawn(rounds)
    best_cost = math.inf
    best_rho = None
    best_v = None
    for ridx in range(rounds):
        work = instance if ridx == 0 else _perturbed(instance, np.random.default_rng(seeds[ridx]))
        try:
            rho_rel, v_rel, _ = solve_relaxation(work)
        except Infeasible:
            continue
        groups = dominant_groups(work)
        if variant == H1:
            cost_fn = lambda r: h1_cost(work, r, v_rel, groups)
        else:
            cost_fn = lambda r: h2_cost(work, r, v_rel, groups)
        rho_hat = gradual_rounding(work, rho_rel, cost_fn)
        rho_ref = swap_refinement(work, rho_hat, v_rel, variant, groups)
        try:
            v, cost = optimal_cooling_for(instance, rho_ref, tol)
        except Infeasible:
            continue
        if cost < best_cost:
            best_cost, best_rho, best_v = cost, rho_ref, v
    if best_rho is None:
        raise Infeasible("every perturbation round produced an uncoolable assignment")
    return make_solution(instance, best_rho, best_v, tol)


@dataclass(frozen=True)
class GaParams:
    """Genetic-algorithm knobs; defaults follow the benchmark protocol
    (population 5 min(D, n-D), iterations 10 min(D, n-D))."""

    population_size: Optional[int] = None
    iterations: Optional[int] = None
    seed: int = 0

    def resolve(self, d: int, n: int) -> tuple[int, int]:
        mind = min(d, n - d)
        pop = self.population_size if self.population_size is not None else 5 * mind
        iters = self.iterations if self.iterations is not None else 10 * mind
        if pop < 2:
            raise ToolkitError(f"population_size must be >= 2, got {pop}")
        if iters < 0:
            raise ToolkitError(f"iterations must be >= 0, got {iters}")
        return pop, iters


def crossover_child(parent1: np.ndarray, parent2: np.ndarray, f1: float, f2: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Positions where the parents agree are copied; of the remaining ones, a
    share f2/(f1+f2) (rounded to nearest) comes from parent 1 and the rest
    from parent 2, preserving the load."""
    child = np.where(parent1 == parent2, parent1, 0.0)
    only1 = np.nonzero((parent1 == 1.0) & (parent2 == 0.0))[0]
    only2 = np.nonzero((parent2 == 1.0) & (parent1 == 0.0))[0]
    r = only1.size
    if r == 0:
        return child
    if math.isinf(f1) and math.isinf(f2):
        share = 0.5
    elif math.isinf(f1):
        share = 0.0
    elif math.isinf(f2):
        share = 1.0
    elif f1 + f2 == 0.0:
        share = 0.5
    else:
        share = f2 / (f1 + f2)
    s = int(round(r * share))
    take1 = rng.choice(only1, size=s, replace=False) if s else np.empty(0, dtype=int)
    take2 = rng.choice(only2, size=r - s, replace=False) if r - s else np.empty(0, dtype=int)
    child[take1] = 1.0
    child[take2] = 1.0
    return child


def mutate_swap(child: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Switch one random busy position with one random idle position."""
    ones = np.nonzero(child == 1.0)[0]
    zeros = np.nonzero(child == 0.0)[0]
    out = child.copy()
    out[rng.choice(ones)] = 0.0
    out[rng.choice(zeros)] = 1.0
    return out


def genetic_algorithm(instance: ProblemInstance, params: GaParams = GaParams(),
                      tol: float = DEFAULT_TOL) -> Solution:
    """Binary-encoded GA over load-D placements; fitness is the optimal cooling
    cost (infeasible placements score +inf and never enter the population)."""
    d, n = instance.demand, instance.n
    if d == 0 or d == n:
        return _forced_solution(instance, tol)
    pop_size, iterations = params.resolve(d, n)
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))

    cache: dict[bytes, tuple[float, Optional[np.ndarray]]] = {}

    def fitness(rho: np.ndarray) -> float:
        key = rho.tobytes()
        if key not in cache:
            try:
                v, cost = optimal_cooling_for(instance, rho, tol)
                cache[key] = (cost, v)
            except Infeasible:
                cache[key] = (math.inf, None)
        return cache[key][0]

    sr = simple_rounding(instance)
    base = sr.rho.copy()
    flips = math.ceil(0.1 * min(d, n - d))
    population = [base]
    for _ in range(pop_size - 1):
        member = base.copy()
        ones = np.nonzero(member == 1.0)[0]
        zeros = np.nonzero(member == 0.0)[0]
        k = min(flips, ones.size, zeros.size)
        off = rng.choice(ones, size=k, replace=False)
        on = rng.choice(zeros, size=k, replace=False)
        member[off] = 0.0
        member[on] = 1.0
        population.append(member)
    costs = [fitness(member) for member in population]

    def better(i, j):
        return i if costs[i] <= costs[j] else j

    best_cost = math.inf
    best_rho = None
    for member, cost in zip(population, costs):
        if cost < best_cost:
            best_cost, best_rho = cost, member

    for _ in range(iterations):
        s1 = rng.choice(pop_size, size=2, replace=False)
        s2 = rng.choice(pop_size, size=2, replace=False)
        p1 = better(int(s1[0]), int(s1[1]))
        p2 = better(int(s2[0]), int(s2[1]))
        child = crossover_child(population[p1], population[p2],
                                costs[p1], costs[p2], rng)
        child = mutate_swap(child, rng)
        child_cost = fitness(child)
        if child_cost < best_cost:
            best_cost, best_rho = child_cost, child
        order = sorted(range(pop_size), key=lambda idx: (costs[idx], idx))
        worse_half = order[(pop_size + 1) // 2:]
        if worse_half:
            pick = worse_half[int(rng.integers(len(worse_half)))]
            if child_cost < costs[pick]:
                population[pick] = child
                costs[pick] = child_cost

    if best_rho is None or math.isinf(best_cost):
        raise Infeasible("no feasible placement found by the genetic algorithm")
    v = cache[best_rho.tobytes()][1]
    return make_solution(instance, best_rho, v, tol)
