"""Seeded construction of every benchmark instance family.

Synthetic families (cases 1-3) follow the evaluation setup: 25 servers, three
cooling variables, circulant or diagonally-dominant recirculation, red-line
temperatures 2/1. The lemma families are the adversarial constructions for
simple rounding, and the dc families come from regressing the synthetic
nonlinear data-center model and applying deterministic scaling transforms.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import PreconditionViolated, RankDeficient, RegressionFailed, ToolkitError
from .model import ProblemInstance

HUGE_UB = 1e18  # effectively unbounded cooling (canonical JSON cannot carry inf)


def circulant_ones(n: int, p: int) -> np.ndarray:
    """0/1 circulant matrix whose row i has ones at columns i..i+p-1 (mod n)."""
    B = np.zeros((n, n))
    for i in range(n):
        for k in range(p):
            B[i, (i + k) % n] = 1.0
    return B


def _case_fields(n: int, m: int) -> dict:
    return {
        "E": np.zeros(n),
        "t_idle": 2.0,
        "t_busy": 1.0,
        "v_lb": np.full(m, 1e-3),
        "v_ub": np.full(m, 1e8),
    }


def gen_case1(seed: int = 0, n: int = 25, m: int = 3, p: int = 5,
              demand: int = 5) -> ProblemInstance:
    """Case 1: one random positive entry per cooling row, circulant B with p
    ones per row and column."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cols = rng.integers(0, m, size=n)
    vals = rng.uniform(0.0, 1.0, size=n)
    A = np.zeros((n, m))
    A[np.arange(n), cols] = vals
    return ProblemInstance(n=n, m=m, A=A, B=circulant_ones(n, p), demand=demand,
                           cost_coeffs=np.ones(m), **_case_fields(n, m))


def gen_case2(seed: int = 0, n: int = 25, m: int = 3, p: int = 5,
              demand: int = 5) -> ProblemInstance:
    """Case 2: like case 1 but every cooling row is the same random row."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    row = rng.uniform(0.0, 1.0, size=m)
    A = np.tile(row, (n, 1))
    return ProblemInstance(n=n, m=m, A=A, B=circulant_ones(n, p), demand=demand,
                           cost_coeffs=np.ones(m), **_case_fields(n, m))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def gen_case3(seed: int = 0, n: int = 25, m: int = 3,
              demand: int = 5) -> ProblemInstance:
    """Case 3: smoother practical mix. Cooling rows are integer compositions of
    3; B has a dominant [2,5] diagonal, four [1,2] neighbours per row and
    [0,0.5] background."""
    if n < 5:
        raise PreconditionViolated("case 3 needs n >= 5 for four off-diagonal picks")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    comps = np.asarray(list(_compositions(3, m)), dtype=float)
    A = comps[rng.integers(0, comps.shape[0], size=n)]
    B = rng.uniform(0.0, 0.5, size=(n, n))
    for i in range(n):
        others = np.delete(np.arange(n), i)
        strong = rng.choice(others, size=4, replace=False)
        B[i, strong] = rng.uniform(1.0, 2.0, size=4)
        B[i, i] = rng.uniform(2.0, 5.0)
    return ProblemInstance(n=n, m=m, A=A, B=B, demand=demand,
                           cost_coeffs=np.ones(m), **_case_fields(n, m))


def lemma1_default_n(p: int, a: float, b: float, q: float, v_L: float, demand: int) -> int:
    """Smallest n keeping the uniform-load optimum feasible plus spacing for a
    disjoint optimal set."""
    n_uniform = math.ceil(demand * (p + a) / (b + q * v_L))
    return max(n_uniform, demand + 2 * p - 1)


def gen_lemma1(p: int = 3, a: float = 1.0, b: float = 2.0, q: float = 1.0,
               v_L: float = 1e-3, demand: int = 4, n: int | None = None,
               m: int = 1) -> ProblemInstance:
    """Adversarial instance for simple rounding (unbounded ratio as v_L -> 0).

    Rows 1..D of B carry diagonal ones. Row 1's extra ones sit right next to
    the diagonal so the deterministic ascending-index rounding of the uniform
    relaxation lands on them, while rows 2..D place extras in the tail columns
    so a disjoint set of cost m*v_L still exists.
    """
    if demand < 1:
        raise PreconditionViolated("lemma-1 family needs demand >= 1")
    if a <= 0:
        raise PreconditionViolated("lemma-1 family needs a > 0")
    if n is None:
        n = lemma1_default_n(p, a, b, q, v_L, demand)
    if p > n - demand:
        raise PreconditionViolated(f"need p <= n - D to place tail rows, got p={p}, n={n}, D={demand}")
    lhs = (demand / n) * (p + a)
    mid = b + q * v_L
    rhs = min(demand, p) + a
    if not (lhs <= mid < rhs):
        raise PreconditionViolated(
            f"condition (D/n)(p+a) <= b + q v_L < min(D,p)+a fails: {lhs} <= {mid} < {rhs}"
        )
    B = np.zeros((n, n))
    for i in range(demand):
        B[i, i] = 1.0
    B[0, 1:p] = 1.0                      # adversarial cluster next to server 1
    for i in range(1, demand):
        B[i, n - (p - 1):] = 1.0         # tail extras, columns D+1..n
    for i in range(demand, n):
        B[i, n - p:] = 1.0
    A = np.zeros((n, m))
    A[np.arange(n), np.arange(n) % m] = q
    return ProblemInstance(
        n=n, m=m, A=A, B=B, E=np.zeros(n), t_idle=b, t_busy=b - a,
        v_lb=np.full(m, v_L), v_ub=np.full(m, HUGE_UB),
        demand=demand, cost_coeffs=np.ones(m),
    )


def gen_lemma2(p: int = 5, n: int = 25, a: float = 1.0, b: float = 1.5) -> ProblemInstance:
    """Circulant bad case: window-p recirculation, D = n/p, single cooling
    variable. Simple rounding picks one full window (cost p+a-b) while the
    spread set {1, p+1, 2p+1, ...} costs 1+a-b."""
    if n % p != 0:
        raise PreconditionViolated(f"p must divide n, got p={p}, n={n}")
    if not (1 + a > b):
        raise PreconditionViolated(f"need 1 + a > b, got a={a}, b={b}")
    if a <= 0:
        raise PreconditionViolated("lemma-2 family needs a > 0")
    return ProblemInstance(
        n=n, m=1, A=np.ones((n, 1)), B=circulant_ones(n, p), E=np.zeros(n),
        t_idle=b, t_busy=b - a, v_lb=np.zeros(1), v_ub=np.full(1, HUGE_UB),
        demand=n // p, cost_coeffs=np.ones(1),
    )


def gen_reduction(B, a: float, b: float, demand: int) -> ProblemInstance:
    """The hardness family: m=1, A = all-ones, E = 0, v in [0, inf). The optimal
    cost equals max(0, max(B'rho*) - b) with rho* from the min-max problem."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if B.shape != (n, n) or not np.all((B == 0.0) | (B == 1.0)):
        raise ToolkitError("B must be a square 0/1 matrix")
    return ProblemInstance(
        n=n, m=1, A=np.ones((n, 1)), B=B, E=np.zeros(n),
        t_idle=b, t_busy=b - a, v_lb=np.zeros(1), v_ub=np.full(1, HUGE_UB),
        demand=demand, cost_coeffs=np.ones(1),
    )


def perturb(instance: ProblemInstance, lo: float = 0.98, hi: float = 1.02,
            seed: int = 0) -> ProblemInstance:
    """Multiply every entry of A, B and E by an independent uniform factor."""
    if lo > hi:
        raise PreconditionViolated(f"lo must be <= hi, got {lo} > {hi}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fa = rng.uniform(lo, hi, size=instance.A.shape)
    fb = rng.uniform(lo, hi, size=instance.B.shape)
    fe = rng.uniform(lo, hi, size=instance.E.shape)
    return dataclasses.replace(instance, A=instance.A * fa, B=instance.B * fb,
                               E=instance.E * fe)


def _block_cross_factors(n_block: int, toward_high: bool) -> np.ndarray:
    """Per-server cross-block scale 0.15 * rack multiplier (1..5): the rack
    nearest the other block gets the largest factor."""
    racks = (5 * np.arange(n_block)) // n_block
    mult = (racks + 1) if toward_high else (5 - racks)
    return 0.15 * mult


def gen_datacenter(size: int, model=None, regression_samples: int = 5000,
                   seed: int = 0, demand: int = 10) -> ProblemInstance:
    """Linear data-center instances at 25/50/75 servers.

    The 25-server base is regressed from the synthetic nonlinear model
    (t_idle=35, t_busy=27, fans in [650,1150] each, chiller in [10,22]).
    50 servers: two blocks, three fans (middle fan's flow halved per side),
    cross-block recirculation at 0.15 x rack-distance multipliers 1..5.
    75 servers: three blocks, four fans; non-adjacent blocks are isolated.
    """
    from .surrogate import default_synthetic_model, fit_linear, sample_model

    if size not in (25, 50, 75):
        raise ToolkitError(f"size must be one of 25, 50, 75, got {size}")
    if model is None:
        model = default_synthetic_model(n=25, seed=seed)
    samples = sample_model(model, regression_samples, seed=seed + 1)
    try:
        base, _ = fit_linear(samples, t_idle=35.0, t_busy=27.0, demand=min(demand, 25))
    except RankDeficient as exc:
        raise RegressionFailed(str(exc)) from exc
    if size == 25:
        return base.with_demand(demand)

    n0 = base.n
    blocks = size // 25
    fans = blocks + 1
    m = fans + 1
    a_fl, a_fr, a_ch = base.A[:, 0], base.A[:, 1], base.A[:, 2]
    A = np.zeros((size, m))
    for blk in range(blocks):
        rows = slice(blk * n0, (blk + 1) * n0)
        left_shared = blk > 0
        right_shared = blk < blocks - 1
        A[rows, blk] = a_fl * (0.5 if left_shared else 1.0)
        A[rows, blk + 1] = a_fr * (0.5 if right_shared else 1.0)
        A[rows, fans] = a_ch

    B = np.zeros((size, size))
    down = _block_cross_factors(n0, toward_high=True)
    up = _block_cross_factors(n0, toward_high=False)
    for bi in range(blocks):
        for bj in range(blocks):
            ri, rj = slice(bi * n0, (bi + 1) * n0), slice(bj * n0, (bj + 1) * n0)
            if bi == bj:
                B[ri, rj] = base.B
            elif abs(bi - bj) == 1:
                factors = down if bj > bi else up
                B[ri, rj] = factors[:, np.newaxis] * base.B
            # non-adjacent blocks stay isolated

    E = np.tile(base.E, blocks)
    c_fl, c_fr, c_ch = base.cost_coeffs
    c_mid = 0.5 * (c_fl + c_fr)
    cost = np.concatenate([[c_fl], np.full(fans - 2, c_mid), [c_fr], [c_ch]])
    v_lb = np.concatenate([np.full(fans, base.v_lb[0]), [base.v_lb[2]]])
    v_ub = np.concatenate([np.full(fans, base.v_ub[0]), [base.v_ub[2]]])
    return ProblemInstance(n=size, m=m, A=A, B=B, E=E, t_idle=35.0, t_busy=27.0,
                           v_lb=v_lb, v_ub=v_ub, demand=demand, cost_coeffs=cost)


FAMILIES = {
    "case1": gen_case1,
    "case2": gen_case2,
    "case3": gen_case3,
    "lemma1": gen_lemma1,
    "lemma2": gen_lemma2,
    "dc25": lambda seed=0, demand=10, regression_samples=5000: gen_datacenter(
        25, seed=seed, demand=demand, regression_samples=regression_samples),
    "dc50": lambda seed=0, demand=10, regression_samples=5000: gen_datacenter(
        50, seed=seed, demand=demand, regression_samples=regression_samples),
    "dc75": lambda seed=0, demand=10, regression_samples=5000: gen_datacenter(
        75, seed=seed, demand=demand, regression_samples=regression_samples),
}


def generate(family: str, **params) -> ProblemInstance:
    """Build an instance by family name; unknown keywords are rejected."""
    if family not in FAMILIES:
        raise ToolkitError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    return FAMILIES[family](**params)
