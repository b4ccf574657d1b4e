"""Ground-truth solvers: exhaustive enumeration (vectorized over assignments),
LP-bound branch-and-bound, and the closed special case min max(B'rho).

Enumeration evaluates the fixed-assignment cooling cost in bulk: a closed form
when every cooling-matrix row touches at most one cooling variable, otherwise
a max over the dual vertices of the cooling LP (the dual feasible region does
not depend on the assignment, so its vertices are enumerated once and each
assignment's cost is a maximum of affine functions of B'rho). Both routes are
cross-checked against the LP path in the test suite.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import BudgetExceeded, Infeasible, TooLarge, ToolkitError
from .heuristics import simple_rounding
from .lp import optimal_cooling_for, relaxation_bound
from .model import BIG_UB, DEFAULT_TOL, ProblemInstance, make_solution, normalize

ENUM_GUARD = 2_000_000
MAXMIN_GUARD_N = 25
DUAL_BASIS_GUARD = 100_000


def _combination_chunks(n: int, d: int, chunk_size: int = 131072) -> Iterator[np.ndarray]:
    it = itertools.combinations(range(n), d)
    while True:
        block = list(itertools.islice(it, chunk_size))
        if not block:
            return
        yield np.asarray(block, dtype=np.intp)


def _dual_vertices(A: np.ndarray, v_lb: np.ndarray, v_ub: np.ndarray):
    """Vertices of {A^T y + lam - mu = 1, y, lam, mu >= 0}: coefficient rows on
    r plus constants, so that cost(r) = max_k (Y_k . r + const_k)."""
    n, m = A.shape
    finite_ub = np.isfinite(v_ub) & (v_ub < BIG_UB)
    cols = [A.T, np.eye(m)]
    col_kind = [("y", i) for i in range(n)] + [("lam", j) for j in range(m)]
    mu_cols = np.nonzero(finite_ub)[0]
    if mu_cols.size:
        eye = np.zeros((m, mu_cols.size))
        eye[mu_cols, np.arange(mu_cols.size)] = -1.0
        cols.append(eye)
        col_kind += [("mu", int(j)) for j in mu_cols]
    M = np.hstack(cols)
    total = M.shape[1]
    if math.comb(total, m) > DUAL_BASIS_GUARD:
        return None
    bases = np.asarray(list(itertools.combinations(range(total), m)), dtype=np.intp)
    stacks = M[:, bases].transpose(1, 0, 2)          # (K, m, m)
    dets = np.linalg.det(stacks)
    ok = np.abs(dets) > 1e-10
    stacks = stacks[ok]
    bases = bases[ok]
    sols = np.linalg.solve(stacks, np.ones((stacks.shape[0], m, 1)))[:, :, 0]
    feas = np.all(sols >= -1e-10, axis=1)
    bases, sols = bases[feas], sols[feas]
    K = bases.shape[0]
    Y = np.zeros((K, n))
    consts = np.zeros(K)
    for k in range(K):
        for pos, col in enumerate(bases[k]):
            kind, idx = col_kind[col]
            z = sols[k, pos]
            if kind == "y":
                Y[k, idx] = z
            elif kind == "lam":
                consts[k] += z * v_lb[idx]
            else:
                consts[k] -= z * v_ub[idx]
    return Y, consts


class _BatchCoster:
    """Bulk evaluation of the fixed-assignment cooling cost over index matrices."""

    def __init__(self, instance: ProblemInstance, tol: float = DEFAULT_TOL):
        self.instance = instance
        self.tol = tol
        self.bpT = np.ascontiguousarray(instance.b_prime.T)
        self.offset = instance.E - instance.b
        capped_ub = np.minimum(instance.v_ub, BIG_UB)
        self.cap = instance.A @ capped_ub
        nz_count = np.count_nonzero(instance.A, axis=1)
        self.single = bool(np.all(nz_count <= 1))
        if self.single:
            cols = np.argmax(instance.A != 0.0, axis=1)
            self.cols = np.where(nz_count == 0, -1, cols)
            self.vals = np.where(self.cols >= 0,
                                 instance.A[np.arange(instance.n), np.maximum(self.cols, 0)],
                                 1.0)
            self.dual = None
        else:
            norm = normalize(instance)
            self.dual = _dual_vertices(norm.A, norm.v_lb, norm.v_ub)

    def residuals(self, idx: np.ndarray) -> np.ndarray:
        if idx.shape[1] == 0:
            base = np.zeros((idx.shape[0], self.instance.n))
        else:
            onehot = np.zeros((idx.shape[0], self.instance.n))
            onehot[np.arange(idx.shape[0])[:, np.newaxis], idx] = 1.0
            base = onehot @ self.bpT
        return base + self.offset

    def costs(self, idx: np.ndarray) -> np.ndarray:
        inst = self.instance
        R = self.residuals(idx)
        infeasible = np.max(R - self.cap, axis=1) > self.tol
        if self.single:
            out = np.zeros(R.shape[0])
            for j in range(inst.m):
                mask = self.cols == j
                vj = np.full(R.shape[0], inst.v_lb[j])
                if np.any(mask):
                    need = np.max(R[:, mask] / self.vals[mask], axis=1)
                    vj = np.maximum(vj, np.minimum(need, inst.v_ub[j]))
                out += inst.cost_coeffs[j] * vj
        elif self.dual is not None:
            Y, consts = self.dual
            out = np.max(R @ Y.T + consts[np.newaxis, :], axis=1)
        else:
            out = np.empty(R.shape[0])
            for row, members in enumerate(idx):
                rho = np.zeros(inst.n)
                rho[members] = 1.0
                try:
                    _, out[row] = optimal_cooling_for(inst, rho, self.tol)
                except Infeasible:
                    out[row] = np.inf
        out[infeasible] = np.inf
        return out


def enumerate_exact(instance: ProblemInstance, tol: float = DEFAULT_TOL) -> Solution:
    """Global optimum by evaluating every load-D assignment.

    Guarded at C(n, D) <= 2e6; cost ties resolve to the lexicographically
    smallest busy-index set (assignments are scanned in ascending index order
    with strict improvement).
    """
    n, d = instance.n, instance.demand
    count = math.comb(n, d)
    if count > ENUM_GUARD:
        raise TooLarge(f"C({n},{d}) = {count} exceeds the enumeration guard {ENUM_GUARD}")
    coster = _BatchCoster(instance, tol)
    best_cost = np.inf
    best_members: Optional[np.ndarray] = None
    for idx in _combination_chunks(n, d):
        costs = coster.costs(idx)
        pos = int(np.argmin(costs))
        if costs[pos] < best_cost:
            best_cost = float(costs[pos])
            best_members = idx[pos].copy()
    if best_members is None or not np.isfinite(best_cost):
        raise Infeasible("no load-D assignment can be cooled within bounds")
    rho = np.zeros(n)
    rho[best_members] = 1.0
    v, _ = optimal_cooling_for(instance, rho, tol)
    return make_solution(instance, rho, v, tol)


@dataclass(frozen=True)
class SearchStats:
    nodes: int
    proven: bool


def branch_and_bound(instance: ProblemInstance, node_budget: Optional[int] = None,
                     with_stats: bool = False, tol: float = DEFAULT_TOL):
    """Best-first branch and bound on the LP relaxation.

    Branches on the most fractional utilization (ties to the lowest index),
    prunes nodes whose LP bound is >= incumbent - 1e-9, and proves optimality
    when the queue empties. The incumbent is seeded with simple rounding.
    Raises BudgetExceeded (carrying the unproven incumbent) if a node budget
    runs out.
    """
    n, d = instance.n, instance.demand
    nodes = 0
    incumbent_cost = np.inf
    incumbent_rho = None
    incumbent_v = None
    try:
        seed_sol = simple_rounding(instance, tol)
        incumbent_cost, incumbent_rho, incumbent_v = seed_sol.cost, seed_sol.rho, seed_sol.v
    except Infeasible:
        pass

    def finish(proven: bool):
        if incumbent_rho is None:
            raise Infeasible("no load-D assignment can be cooled within bounds")
        sol = make_solution(instance, incumbent_rho, incumbent_v, tol)
        if with_stats:
            return sol, SearchStats(nodes=nodes, proven=proven)
        return sol

    fixed_zero = np.zeros(n, dtype=bool)
    fixed_one = np.zeros(n, dtype=bool)
    try:
        rho0, _, bound0 = relaxation_bound(instance, fixed_zero, fixed_one)
    except Infeasible:
        raise Infeasible("relaxation infeasible: demand cannot be cooled within bounds")
    nodes = 1
    counter = itertools.count()
    heap = [(bound0, next(counter), fixed_zero, fixed_one, rho0)]

    while heap:
        bound, _, fz, fo, rho = heapq.heappop(heap)
        if bound >= incumbent_cost - 1e-9:
            break  # best-first: every remaining node is at least as bad
        frac = np.minimum(rho, 1.0 - rho)
        frac[fz | fo] = 0.0
        branch_var = int(np.argmax(frac))
        if frac[branch_var] <= 1e-6:
            rounded = np.where(rho >= 0.5, 1.0, 0.0)
            rounded[fz], rounded[fo] = 0.0, 1.0
            if int(rounded.sum()) != d:
                continue  # degenerate rounding artifact; children cover this region
            try:
                v, cost = optimal_cooling_for(instance, rounded, tol)
            except Infeasible:
                continue
            if cost < incumbent_cost:
                incumbent_cost, incumbent_rho, incumbent_v = cost, rounded, v
            continue
        for value in (0, 1):
            child_fz, child_fo = fz.copy(), fo.copy()
            (child_fz if value == 0 else child_fo)[branch_var] = True
            if node_budget is not None and nodes >= node_budget:
                raise BudgetExceeded(
                    "node budget exhausted before proving optimality",
                    best=finish(False) if incumbent_rho is not None else None,
                    nodes=nodes,
                )
            try:
                child_rho, _, child_bound = relaxation_bound(instance, child_fz, child_fo)
            except Infeasible:
                nodes += 1
                continue
            nodes += 1
            if child_bound < incumbent_cost - 1e-9:
                heapq.heappush(heap, (child_bound, next(counter), child_fz, child_fo, child_rho))
    return finish(True)


@dataclass(frozen=True)
class MaxMinResult:
    """Optimum of min max(B'rho) over load-D binary rho (problem-(4) form)."""

    rho: np.ndarray
    value: float


def exact_special_maxmin(B, a: float, demand: int) -> MaxMinResult:
    """Enumerate min over load-D binary rho of max((B + aI) rho).

    This is the single-cooling-variable special case; the general-path cost on
    the embedded instance equals max(0, value - b). Guarded at n <= 25.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if B.shape != (n, n):
        raise ToolkitError("B must be square")
    if n > MAXMIN_GUARD_N:
        raise TooLarge(f"n = {n} exceeds the max-min enumeration guard {MAXMIN_GUARD_N}")
    if not (0 <= demand <= n):
        raise ToolkitError(f"demand must lie in [0, {n}]")
    bpT = np.ascontiguousarray((B + a * np.eye(n)).T)
    best_value = np.inf
    best_members = None
    for idx in _combination_chunks(n, demand):
        if idx.shape[1] == 0:
            vals = np.zeros(idx.shape[0])
        else:
            vals = bpT[idx].sum(axis=1).max(axis=1)
        pos = int(np.argmin(vals))
        if vals[pos] < best_value:
            best_value = float(vals[pos])
            best_members = idx[pos].copy()
    rho = np.zeros(n)
    if best_members is not None:
        rho[best_members] = 1.0
    return MaxMinResult(rho=rho, value=best_value)


def exact_reference(instance: ProblemInstance, tol: float = DEFAULT_TOL) -> Solution:
    """Preferred exact solver: enumeration when the guard allows, else B&B."""
    if math.comb(instance.n, instance.demand) <= ENUM_GUARD:
        return enumerate_exact(instance, tol)
    return branch_and_bound(instance, tol=tol)
