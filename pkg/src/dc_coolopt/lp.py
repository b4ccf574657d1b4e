"""Dense linear programming: a small self-verifying simplex plus the two LP
formulations the toolkit needs (the relaxation of the placement problem and
the cooling-only LP for a fixed assignment).

The simplex is a textbook two-phase dense tableau method with Bland's rule
(lowest-index entering variable, lowest-index leaving on ratio ties), which
is deterministic and cannot cycle. Problems here are tiny (tens of variables)
and dense, so an in-repo solver keeps results bit-reproducible without a
heavyweight dependency.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, Infeasible, NumericalFailure, ToolkitError
from .model import BIG_UB, DEFAULT_TOL, ProblemInstance, denormalize_cooling, normalize

LE = "<="
GE = ">="
EQ = "="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class LinearProgram:
    """min objective @ x subject to dense constraint rows and variable bounds.

    ``constraints`` is a sequence of (coefficients, sense, rhs) with sense one
    of "<=", ">=", "="; bounds may be +-inf.
    """

    objective: np.ndarray
    constraints: tuple
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        p = c.shape[0]
        if lower.shape != (p,) or upper.shape != (p,):
            raise DimensionMismatch("bounds must match the number of variables")
        rows = []
        for coeffs, sense, rhs in self.constraints:
            row = np.asarray(coeffs, dtype=float)
            if row.shape != (p,):
                raise DimensionMismatch(f"constraint row has shape {row.shape}, expected ({p},)")
            if sense not in (LE, GE, EQ):
                raise ToolkitError(f"unknown constraint sense {sense!r}")
            rows.append((row, sense, float(rhs)))
        finite = np.isfinite(lower) & np.isfinite(upper)
        if np.any(lower[finite] > upper[finite]):
            raise ToolkitError("lower bound exceeds upper bound")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", tuple(rows))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpResult:
    status: str
    x: Optional[np.ndarray] = None
    objective_value: Optional[float] = None


def _pivot(tableau: np.ndarray, rhs: np.ndarray, zrow: np.ndarray, row: int, col: int):
    piv = tableau[row, col]
    tableau[row] /= piv
    rhs[row] /= piv
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    rhs -= factors * rhs[row]
    zfac = zrow[col]
    zrow -= zfac * tableau[row]
    return zfac * rhs[row]


def _run_simplex(tableau, rhs, zrow, basis, allowed, pivot_tol, max_iters):
    """Bland's-rule iterations in place. Returns the accumulated objective delta
    or None if unbounded."""
    delta = 0.0
    for _ in range(max_iters):
        candidates = np.nonzero(allowed & (zrow < -pivot_tol))[0]
        if candidates.size == 0:
            return delta
        col = int(candidates[0])
        column = tableau[:, col]
        pos = column > pivot_tol
        if not np.any(pos):
            return None
        ratios = np.full(rhs.shape, np.inf)
        ratios[pos] = rhs[pos] / column[pos]
        best = np.min(ratios)
        ties = np.nonzero(ratios <= best + 1e-12)[0]
        row = int(ties[np.argmin(basis[ties])])
        delta += _pivot(tableau, rhs, zrow, row, col)
        basis[row] = col
    raise NumericalFailure("simplex iteration limit exceeded (degenerate pivoting)")


def solve_lp(lp: LinearProgram, pivot_tol: float = PIVOT_TOL,
             feas_tol: float = DEFAULT_TOL, max_iters: Optional[int] = None) -> LpResult:
    """Two-phase simplex. Optimal results are re-checked for primal feasibility
    within ``feas_tol`` before being returned; a failed check raises
    NumericalFailure rather than silently mis-solving.
    """
    p = lp.num_vars
    lower, upper = lp.lower, lp.upper

    # Transform every variable to y >= 0: shift when the lower bound is finite,
    # reflect when only the upper bound is, split free variables.
    col_of = []      # per original var: ("shift", lo, col) | ("reflect", up, col) | ("free", cp, cm)
    caps = []        # (column, cap) rows for finite ranges
    ncols = 0
    for j in range(p):
        lo, up = lower[j], upper[j]
        if np.isfinite(lo):
            col_of.append(("shift", lo, ncols))
            if np.isfinite(up) and up - lo < BIG_UB:
                caps.append((ncols, up - lo))
            ncols += 1
        elif np.isfinite(up):
            col_of.append(("reflect", up, ncols))
            ncols += 1
        else:
            col_of.append(("free", ncols, ncols + 1))
            ncols += 2

    def to_y_row(row):
        out = np.zeros(ncols)
        shift = 0.0
        for j in range(p):
            form = col_of[j]
            if form[0] == "shift":
                out[form[2]] = row[j]
                shift += row[j] * form[1]
            elif form[0] == "reflect":
                out[form[2]] = -row[j]
                shift += row[j] * form[1]
            else:
                out[form[1]] = row[j]
                out[form[2]] = -row[j]
        return out, shift

    rows = []
    for coeffs, sense, rhs in lp.constraints:
        yrow, shift = to_y_row(coeffs)
        rows.append((yrow, sense, rhs - shift))
    for col, cap in caps:
        yrow = np.zeros(ncols)
        yrow[col] = 1.0
        rows.append((yrow, LE, cap))

    m = len(rows)
    n_slack = sum(1 for _, sense, _ in rows if sense != EQ)
    body = np.zeros((m, ncols + n_slack))
    rvec = np.zeros(m)
    slack_idx = 0
    needs_artificial = []
    for i, (yrow, sense, rhs) in enumerate(rows):
        if sense == GE:
            yrow, rhs = -yrow, -rhs
            sense = LE
        if sense == LE:
            scol = ncols + slack_idx
            slack_idx += 1
            if rhs >= 0:
                body[i, :ncols] = yrow
                body[i, scol] = 1.0
                rvec[i] = rhs
                needs_artificial.append(scol)          # slack itself is basic
            else:
                body[i, :ncols] = -yrow
                body[i, scol] = -1.0
                rvec[i] = -rhs
                needs_artificial.append(None)
        else:
            if rhs < 0:
                yrow, rhs = -yrow, -rhs
            body[i, :ncols] = yrow
            rvec[i] = rhs
            needs_artificial.append(None)

    n_art = sum(1 for mark in needs_artificial if mark is None)
    total = ncols + n_slack + n_art
    tableau = np.zeros((m, total))
    tableau[:, : ncols + n_slack] = body
    basis = np.zeros(m, dtype=int)
    art_idx = ncols + n_slack
    art_cols = []
    for i, mark in enumerate(needs_artificial):
        if mark is not None:
            basis[i] = mark
        else:
            tableau[i, art_idx] = 1.0
            basis[i] = art_idx
            art_cols.append(art_idx)
            art_idx += 1

    if max_iters is None:
        max_iters = 2000 + 200 * (m + total)

    allowed = np.ones(total, dtype=bool)
    rhs_vec = rvec.copy()

    # Phase 1: minimize the artificial sum.
    if art_cols:
        zrow = np.zeros(total)
        zrow[art_cols] = 1.0
        phase1_obj = 0.0
        for i in range(m):
            if basis[i] in art_cols:
                zrow -= tableau[i]
                phase1_obj += rhs_vec[i]
        delta = _run_simplex(tableau, rhs_vec, zrow, basis, allowed, pivot_tol, max_iters)
        if delta is None:
            raise NumericalFailure("phase-1 subproblem unbounded")
        phase1_obj += delta
        if phase1_obj > feas_tol:
            return LpResult(status=INFEASIBLE)
        # Pivot lingering artificials out of the basis where possible.
        for i in range(m):
            if basis[i] in art_cols:
                nz = np.nonzero(np.abs(tableau[i, : ncols + n_slack]) > pivot_tol)[0]
                if nz.size:
                    _pivot(tableau, rhs_vec, zrow, i, int(nz[0]))
                    basis[i] = int(nz[0])
        allowed[art_cols] = False

    # Phase 2: the real objective over y columns.
    cost = np.zeros(total)
    for j in range(p):
        form = col_of[j]
        cj = lp.objective[j]
        if form[0] == "shift":
            cost[form[2]] = cj
        elif form[0] == "reflect":
            cost[form[2]] = -cj
        else:
            cost[form[1]] = cj
            cost[form[2]] = -cj
    zrow = cost.copy()
    for i in range(m):
        if cost[basis[i]] != 0.0:
            zrow -= cost[basis[i]] * tableau[i]
    delta = _run_simplex(tableau, rhs_vec, zrow, basis, allowed, pivot_tol, max_iters)
    if delta is None:
        return LpResult(status=UNBOUNDED)

    y = np.zeros(total)
    y[basis] = rhs_vec
    x = np.zeros(p)
    for j in range(p):
        form = col_of[j]
        if form[0] == "shift":
            x[j] = form[1] + y[form[2]]
        elif form[0] == "reflect":
            x[j] = form[1] - y[form[2]]
        else:
            x[j] = y[form[1]] - y[form[2]]
    objective_value = float(lp.objective @ x)

    _verify_primal(lp, x, feas_tol, objective_value)
    return LpResult(status=OPTIMAL, x=x, objective_value=objective_value)


def _verify_primal(lp: LinearProgram, x: np.ndarray, feas_tol: float, obj: float):
    for coeffs, sense, rhs in lp.constraints:
        val = float(coeffs @ x)
        scale = max(1.0, abs(rhs))
        if sense == LE and val > rhs + feas_tol * scale:
            raise NumericalFailure(f"constraint violated after solve: {val} <= {rhs}")
        if sense == GE and val < rhs - feas_tol * scale:
            raise NumericalFailure(f"constraint violated after solve: {val} >= {rhs}")
        if sense == EQ and abs(val - rhs) > feas_tol * scale:
            raise NumericalFailure(f"constraint violated after solve: {val} = {rhs}")
    lo_bad = np.isfinite(lp.lower) & (x < lp.lower - feas_tol * np.maximum(1.0, np.abs(lp.lower)))
    up_bad = np.isfinite(lp.upper) & (x > lp.upper + feas_tol * np.maximum(1.0, np.abs(lp.upper)))
    if np.any(lo_bad) or np.any(up_bad):
        raise NumericalFailure("variable bound violated after solve")
    recomputed = float(lp.objective @ x)
    if abs(recomputed - obj) > 1e-9 * max(1.0, abs(obj)):
        raise NumericalFailure("objective value inconsistent after solve")


def _bounded_upper(upper: np.ndarray) -> np.ndarray:
    """Map huge sentinels to +inf so they never enter a tableau row."""
    out = upper.copy()
    out[out >= BIG_UB] = np.inf
    return out


def _relaxation_lp(norm: ProblemInstance, fixed_zero=None, fixed_one=None):
    """Stage-1 relaxation on a normalized instance with optional fixed servers.

    Returns (result, free_idx); variables are [rho_free..., v...].
    """
    n, m = norm.n, norm.m
    fixed_zero = np.zeros(n, dtype=bool) if fixed_zero is None else np.asarray(fixed_zero, bool)
    fixed_one = np.zeros(n, dtype=bool) if fixed_one is None else np.asarray(fixed_one, bool)
    if np.any(fixed_zero & fixed_one):
        raise ToolkitError("a server cannot be fixed both idle and busy")
    free = ~(fixed_zero | fixed_one)
    free_idx = np.nonzero(free)[0]
    k = free_idx.size
    bp = norm.b_prime
    residual_demand = norm.demand - int(np.count_nonzero(fixed_one))
    if residual_demand < 0 or residual_demand > k:
        return LpResult(status=INFEASIBLE), free_idx

    rows = []
    base = bp[:, fixed_one].sum(axis=1) if np.any(fixed_one) else np.zeros(n)
    for l in range(n):
        coeffs = np.concatenate([bp[l, free_idx], -norm.A[l]])
        rows.append((coeffs, LE, norm.b - norm.E[l] - base[l]))
    rows.append((np.concatenate([np.ones(k), np.zeros(m)]), EQ, float(residual_demand)))
    objective = np.concatenate([np.zeros(k), np.ones(m)])
    lower = np.concatenate([np.zeros(k), norm.v_lb])
    upper = np.concatenate([np.ones(k), _bounded_upper(norm.v_ub)])
    lp = LinearProgram(objective=objective, constraints=rows, lower=lower, upper=upper)
    return solve_lp(lp), free_idx


def relaxation_bound(instance: ProblemInstance, fixed_zero=None, fixed_one=None):
    """Optimal value and point of the LP relaxation (cost-optimal simplex vertex).

    Used as the branch-and-bound node bound. Returns (rho, v_raw, cost);
    raises Infeasible when the node has no feasible cooling.
    """
    norm = normalize(instance)
    result, free_idx = _relaxation_lp(norm, fixed_zero, fixed_one)
    if result.status == INFEASIBLE:
        raise Infeasible("LP relaxation infeasible")
    if result.status != OPTIMAL:
        raise NumericalFailure(f"unexpected LP status {result.status}")
    k = free_idx.size
    rho = np.zeros(instance.n)
    if fixed_one is not None:
        rho[np.asarray(fixed_one, bool)] = 1.0
    rho[free_idx] = np.clip(result.x[:k], 0.0, 1.0)
    v_norm = result.x[k:]
    return rho, denormalize_cooling(v_norm, instance.cost_coeffs), float(result.objective_value)


def solve_relaxation(instance: ProblemInstance):
    """Solve the LP relaxation and balance the returned load.

    Stage 1 finds the optimal cost c* by simplex. Stage 2 minimizes the
    largest utilization over the cost-c* face, so symmetric instances return
    the uniform-load optimum the analysis describes (when uniform load is
    optimal, rho_i <= t and sum rho = D force rho = (D/n) 1 exactly).
    Returns (rho_star, v_star_raw, cost) with cost = c*.
    """
    norm = normalize(instance)
    stage1, _ = _relaxation_lp(norm)
    if stage1.status == INFEASIBLE:
        raise Infeasible("relaxation infeasible: demand cannot be cooled within bounds")
    if stage1.status != OPTIMAL:
        raise NumericalFailure(f"unexpected LP status {stage1.status}")
    cost = float(stage1.objective_value)

    n, m = norm.n, norm.m
    bp = norm.b_prime
    rows = []
    for l in range(n):
        rows.append((np.concatenate([bp[l], -norm.A[l], [0.0]]), LE, norm.b - norm.E[l]))
    rows.append((np.concatenate([np.ones(n), np.zeros(m), [0.0]]), EQ, float(norm.demand)))
    rows.append((np.concatenate([np.zeros(n), np.ones(m), [0.0]]), EQ, cost))
    for i in range(n):
        coeffs = np.zeros(n + m + 1)
        coeffs[i] = 1.0
        coeffs[-1] = -1.0
        rows.append((coeffs, LE, 0.0))
    objective = np.zeros(n + m + 1)
    objective[-1] = 1.0
    lower = np.concatenate([np.zeros(n), norm.v_lb, [0.0]])
    upper = np.concatenate([np.ones(n), _bounded_upper(norm.v_ub), [1.0]])
    lp = LinearProgram(objective=objective, constraints=rows, lower=lower, upper=upper)
    stage2 = solve_lp(lp)
    if stage2.status != OPTIMAL:
        # The stage-1 point is feasible for stage 2, so this is float noise;
        # fall back to the vertex solution deterministically.
        rho, v_raw, _ = relaxation_bound(instance)
        return rho, v_raw, cost
    rho = np.clip(stage2.x[:n], 0.0, 1.0)
    v_norm = stage2.x[n:n + m]
    return rho, denormalize_cooling(v_norm, instance.cost_coeffs), cost


def _single_nonzero_structure(A: np.ndarray):
    """If every row of A has at most one nonzero entry, return (col_index, value)
    arrays per row with col_index = -1 for all-zero rows; else None."""
    nz_count = np.count_nonzero(A, axis=1)
    if np.any(nz_count > 1):
        return None
    cols = np.argmax(A != 0.0, axis=1)
    cols = np.where(nz_count == 0, -1, cols)
    vals = np.where(cols >= 0, A[np.arange(A.shape[0]), np.maximum(cols, 0)], 0.0)
    return cols, vals


def optimal_cooling_for(instance: ProblemInstance, rho, tol: float = DEFAULT_TOL):
    """Cheapest feasible cooling for a fixed assignment: min c.v subject to
    A v >= B'rho + E - b and the cooling box. Defines cost(rho) for every
    heuristic and exact solver. Returns (v_raw, cost) or raises Infeasible.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (instance.n,):
        raise DimensionMismatch(f"rho must have shape ({instance.n},)")
    r = instance.b_prime @ rho + instance.E - instance.b

    structure = _single_nonzero_structure(instance.A)
    if structure is not None:
        cols, vals = structure
        zero_rows = cols < 0
        if np.any(r[zero_rows] > tol):
            raise Infeasible("uncoolable server row violated by this assignment")
        v = instance.v_lb.copy()
        for j in range(instance.m):
            mask = cols == j
            if np.any(mask):
                need = np.max(r[mask] / vals[mask])
                if need > v[j]:
                    v[j] = need
        over = v > instance.v_ub + tol * np.maximum(1.0, np.abs(instance.v_ub))
        if np.any(over):
            raise Infeasible("assignment needs cooling beyond the upper bounds")
        v = np.minimum(v, instance.v_ub)
        return v, float(instance.cost_coeffs @ v)

    norm = normalize(instance)
    rows = [(-norm.A[l], LE, -(r[l])) for l in range(norm.n)]
    lp = LinearProgram(
        objective=np.ones(norm.m),
        constraints=rows,
        lower=norm.v_lb,
        upper=_bounded_upper(norm.v_ub),
    )
    result = solve_lp(lp)
    if result.status == INFEASIBLE:
        raise Infeasible("assignment needs cooling beyond the upper bounds")
    if result.status != OPTIMAL:
        raise NumericalFailure(f"unexpected LP status {result.status}")
    v = denormalize_cooling(result.x, instance.cost_coeffs)
    return v, float(result.objective_value)
