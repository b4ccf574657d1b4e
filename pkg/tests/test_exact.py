import itertools

import numpy as np
import pytest

import dc_coolopt as dc
from dc_coolopt.errors import BudgetExceeded, Infeasible, TooLarge
from dc_coolopt.exact import (MaxMinResult, _BatchCoster, _combination_chunks,
                              branch_and_bound, enumerate_exact,
                              exact_special_maxmin)
from dc_coolopt.lp import optimal_cooling_for, relaxation_bound


class TestEnumerate:
    def test_full_demand_single_assignment(self):
        inst = dc.gen_case3(seed=0, n=7, demand=7)
        sol = enumerate_exact(inst)
        assert np.all(sol.rho == 1.0)

    def test_lemma2_optimum(self):
        inst = dc.gen_lemma2(p=5, n=25, a=1.0, b=1.5)
        sol = enumerate_exact(inst)
        assert sol.cost == pytest.approx(0.5, abs=1e-9)
        assert list(np.nonzero(sol.rho)[0]) == [0, 5, 10, 15, 20]

    def test_guard(self):
        inst = dc.gen_case3(seed=0, n=25, demand=12)
        with pytest.raises(TooLarge):
            enumerate_exact(inst)

    def test_batch_coster_matches_lp(self):
        # dual-vertex batch path vs the simplex, every load-3 assignment
        inst = dc.gen_case3(seed=7, n=8, demand=3)
        coster = _BatchCoster(inst)
        idx = next(_combination_chunks(8, 3))
        costs = coster.costs(idx)
        for row, members in enumerate(idx):
            rho = np.zeros(8)
            rho[members] = 1.0
            _, c = optimal_cooling_for(inst, rho)
            assert costs[row] == pytest.approx(c, abs=1e-8)

    def test_batch_coster_single_nonzero_path(self):
        inst = dc.gen_case1(seed=3, n=10, demand=3)
        coster = _BatchCoster(inst)
        assert coster.single
        idx = next(_combination_chunks(10, 3))
        costs = coster.costs(idx)
        for row in range(0, len(idx), 17):
            rho = np.zeros(10)
            rho[idx[row]] = 1.0
            _, c = optimal_cooling_for(inst, rho)
            assert costs[row] == pytest.approx(c, abs=1e-8)

    def test_infeasible_assignments_masked(self):
        inst = dc.gen_case1(seed=3, n=6, demand=2)
        import dataclasses
        tight = dataclasses.replace(inst, v_ub=np.full(inst.m, 1e-3))
        coster = _BatchCoster(tight)
        idx = next(_combination_chunks(6, 2))
        costs = coster.costs(idx)
        for row in range(len(idx)):
            rho = np.zeros(6)
            rho[idx[row]] = 1.0
            try:
                optimal_cooling_for(tight, rho)
                assert np.isfinite(costs[row])
            except Infeasible:
                assert np.isinf(costs[row])


class TestBranchAndBound:
    def test_matches_enumeration_random(self):
        for seed in range(15):
            inst = dc.gen_case3(seed=seed, n=9, demand=min(4, 2 + seed % 4))
            e = enumerate_exact(inst)
            b = branch_and_bound(inst)
            assert b.cost == pytest.approx(e.cost, abs=1e-6)
            assert b.feasible

    def test_integral_relaxation_root_node(self):
        # demand = n forces an integral relaxation
        inst = dc.gen_case3(seed=1, n=6, demand=6)
        sol, stats = branch_and_bound(inst, with_stats=True)
        assert stats.proven
        assert stats.nodes == 1
        assert np.all(sol.rho == 1.0)

    def test_lemma2_cost(self):
        inst = dc.gen_lemma2(p=5, n=25, a=1.0, b=1.5)
        sol = branch_and_bound(inst)
        assert sol.cost == pytest.approx(0.5, abs=1e-9)

    def test_budget_exceeded_carries_incumbent(self):
        inst = dc.gen_case3(seed=2, n=10, demand=4)
        with pytest.raises(BudgetExceeded) as err:
            branch_and_bound(inst, node_budget=2)
        assert err.value.best is not None
        assert err.value.nodes >= 2

    def test_bound_validity(self):
        # every node bound is <= the optimal integral cost
        inst = dc.gen_case3(seed=3, n=8, demand=3)
        opt = enumerate_exact(inst).cost
        _, _, root = relaxation_bound(inst)
        assert root <= opt + 1e-9
        fixed_one = np.zeros(8, dtype=bool)
        fixed_one[0] = True
        _, _, child = relaxation_bound(inst, fixed_one=fixed_one)
        best_with_zero = min(
            optimal_cooling_for(inst, _rho_from(8, members))[1]
            for members in itertools.combinations(range(8), 3) if 0 in members
        )
        assert child <= best_with_zero + 1e-9


def _rho_from(n, members):
    rho = np.zeros(n)
    rho[list(members)] = 1.0
    return rho


class TestSandwich:
    def test_relaxation_exact_heuristics_order(self):
        for seed in range(8):
            inst = dc.gen_case3(seed=seed, n=9, demand=3)
            _, _, relax = dc.solve_relaxation(inst)
            exact = enumerate_exact(inst).cost
            costs = [
                dc.simple_rounding(inst).cost,
                dc.genetic_algorithm(inst, dc.GaParams(seed=seed)).cost,
                dc.run_heuristic(inst, dc.H1, seed=seed).cost,
                dc.run_heuristic(inst, dc.H2, seed=seed).cost,
            ]
            assert relax <= exact + 1e-9
            assert exact <= min(costs) + 1e-9


class TestSpecialMaxMin:
    def test_zero_matrix(self):
        res = exact_special_maxmin(np.zeros((5, 5)), a=1.0, demand=3)
        assert res.value == pytest.approx(1.0)
        assert res.rho.sum() == 3

    def test_lemma2_window(self):
        n, p, a = 25, 5, 1.0
        B = dc.gen_lemma2(p=p, n=n, a=a, b=1.5).B
        res = exact_special_maxmin(B, a=a, demand=n // p)
        assert res.value == pytest.approx(1.0 + a)

    def test_random_vs_bruteforce(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            B = (rng.uniform(size=(6, 6)) < 0.4).astype(float)
            a, d = 1.0, 3
            res = exact_special_maxmin(B, a=a, demand=d)
            bp = B + a * np.eye(6)
            brute = min(
                np.max(bp @ _rho_from(6, members))
                for members in itertools.combinations(range(6), d)
            )
            assert res.value == pytest.approx(brute)

    def test_guard(self):
        with pytest.raises(TooLarge):
            exact_special_maxmin(np.zeros((26, 26)), a=1.0, demand=3)

    def test_reduction_mapping(self):
        # general-path optimum equals max(0, maxmin value - b)
        rng = np.random.default_rng(1)
        for _ in range(5):
            B = (rng.uniform(size=(6, 6)) < 0.4).astype(float)
            a, b, d = 1.0, 1.8, 3
            inst = dc.gen_reduction(B, a=a, b=b, demand=d)
            general = branch_and_bound(inst)
            special = exact_special_maxmin(B, a=a, demand=d)
            assert general.cost == pytest.approx(max(0.0, special.value - b), abs=1e-9)

    def test_reduction_zero_matrix_cost(self):
        inst = dc.gen_reduction(np.zeros((4, 4)), a=1.0, b=1.5, demand=2)
        sol = enumerate_exact(inst)
        assert sol.cost == pytest.approx(max(0.0, 1.0 - 1.5))
