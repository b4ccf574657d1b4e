import dataclasses
import json

import numpy as np
import pytest

import dc_coolopt as dc
from dc_coolopt.errors import DimensionMismatch, NonPositiveCoefficient, ToolkitError
from dc_coolopt.model import JSON_FORMAT, ProblemInstance, denormalize_cooling


def tiny_instance(**overrides):
    fields = dict(
        n=1, m=1, A=[[2.0]], B=[[3.0]], E=[1.0], t_idle=2.0, t_busy=1.0,
        v_lb=[0.0], v_ub=[10.0], demand=1, cost_coeffs=[1.0],
    )
    fields.update(overrides)
    return ProblemInstance(**fields)


def random_instance(rng, n=4, m=2):
    A = rng.uniform(0.0, 2.0, size=(n, m))
    B = rng.uniform(0.0, 1.0, size=(n, n))
    return ProblemInstance(
        n=n, m=m, A=A, B=B, E=rng.uniform(-1.0, 1.0, size=n),
        t_idle=3.0, t_busy=1.5, v_lb=rng.uniform(0.0, 0.5, size=m),
        v_ub=rng.uniform(2.0, 4.0, size=m), demand=2,
        cost_coeffs=rng.uniform(0.5, 3.0, size=m),
    )


class TestValidation:
    def test_negative_a_rejected(self):
        with pytest.raises(ToolkitError):
            tiny_instance(A=[[-0.5]])

    def test_negative_b_rejected(self):
        with pytest.raises(ToolkitError):
            tiny_instance(B=[[-0.1]])

    def test_redline_order(self):
        with pytest.raises(ToolkitError):
            tiny_instance(t_idle=1.0, t_busy=2.0)

    def test_equal_redlines_allowed(self):
        inst = tiny_instance(t_idle=1.0, t_busy=1.0)
        assert inst.a == 0.0

    def test_bounds_order(self):
        with pytest.raises(ToolkitError):
            tiny_instance(v_lb=[5.0], v_ub=[1.0])

    def test_demand_range(self):
        with pytest.raises(ToolkitError):
            tiny_instance(demand=2)
        with pytest.raises(ToolkitError):
            tiny_instance(demand=-1)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            tiny_instance(E=[1.0, 2.0])

    def test_cost_coeff_positive(self):
        with pytest.raises(NonPositiveCoefficient):
            tiny_instance(cost_coeffs=[0.0])

    def test_b_prime(self):
        inst = tiny_instance()
        assert inst.b_prime[0, 0] == pytest.approx(3.0 + 1.0)


class TestNormalize:
    def test_identity_when_unit_costs(self):
        inst = tiny_instance()
        assert dc.normalize(inst) is inst

    def test_column_scaling(self):
        inst = ProblemInstance(
            n=2, m=2, A=[[4.0, 8.0], [2.0, 4.0]], B=np.zeros((2, 2)), E=[0.0, 0.0],
            t_idle=2.0, t_busy=1.0, v_lb=[1.0, 1.0], v_ub=[3.0, 3.0],
            demand=1, cost_coeffs=[2.0, 4.0],
        )
        norm = dc.normalize(inst)
        assert np.allclose(norm.A[:, 0], inst.A[:, 0] / 2.0)
        assert np.allclose(norm.A[:, 1], inst.A[:, 1] / 4.0)
        assert np.allclose(norm.v_lb, [2.0, 4.0])
        assert np.allclose(norm.v_ub, [6.0, 12.0])
        assert np.all(norm.cost_coeffs == 1.0)

    def test_objective_preserved_at_mapped_point(self):
        inst = ProblemInstance(
            n=1, m=2, A=[[1.0, 1.0]], B=[[0.0]], E=[0.0], t_idle=2.0, t_busy=1.0,
            v_lb=[1.0, 1.0], v_ub=[3.0, 3.0], demand=0, cost_coeffs=[2.0, 4.0],
        )
        v = np.array([1.0, 1.0])
        norm = dc.normalize(inst)
        v_mapped = v * inst.cost_coeffs
        assert dc.cooling_cost(inst, v) == pytest.approx(6.0)
        assert dc.cooling_cost(norm, v_mapped) == pytest.approx(6.0)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        inst = random_instance(rng)
        once = dc.normalize(inst)
        twice = dc.normalize(once)
        assert np.array_equal(once.A, twice.A)
        assert np.array_equal(once.v_lb, twice.v_lb)

    def test_cost_preserved_random(self):
        # 1000 random (instance, v) pairs, tolerance 1e-12
        rng = np.random.default_rng(42)
        for _ in range(1000):
            inst = random_instance(rng)
            v = rng.uniform(inst.v_lb, inst.v_ub)
            norm = dc.normalize(inst)
            raw = dc.cooling_cost(inst, v)
            mapped = dc.cooling_cost(norm, v * inst.cost_coeffs)
            assert abs(raw - mapped) <= 1e-12 * max(1.0, abs(raw))

    def test_denormalize_roundtrip(self):
        rng = np.random.default_rng(3)
        inst = random_instance(rng)
        v = rng.uniform(inst.v_lb, inst.v_ub)
        assert np.allclose(denormalize_cooling(v * inst.cost_coeffs, inst.cost_coeffs), v)


class TestInletTemperatures:
    def test_origin_returns_offset(self):
        rng = np.random.default_rng(1)
        inst = random_instance(rng)
        out = dc.inlet_temperatures(inst, np.zeros(inst.m), np.zeros(inst.n))
        assert np.allclose(out, inst.E)

    def test_1x1_arithmetic(self):
        inst = tiny_instance()
        out = dc.inlet_temperatures(inst, [1.0], [1.0])
        assert out[0] == pytest.approx(-2.0 + 3.0 + 1.0)

    def test_linearity_in_v(self):
        rng = np.random.default_rng(2)
        inst = random_instance(rng)
        inst = dataclasses.replace(inst, E=np.zeros(inst.n))
        v = rng.uniform(0.1, 1.0, size=inst.m)
        one = dc.inlet_temperatures(inst, v, np.zeros(inst.n))
        two = dc.inlet_temperatures(inst, 2 * v, np.zeros(inst.n))
        assert np.allclose(two, 2 * one)


class TestViolations:
    def test_1x1_value(self):
        inst = ProblemInstance(n=1, m=1, A=[[1.0]], B=[[1.0]], E=[0.0],
                               t_idle=1.5, t_busy=0.5, v_lb=[0.0], v_ub=[10.0],
                               demand=1, cost_coeffs=[1.0])
        out = dc.violations(inst, [0.0], [1.0])
        assert out[0] == pytest.approx(0.5)

    def test_clamped_at_zero(self):
        inst = ProblemInstance(n=1, m=1, A=[[1.0]], B=[[1.0]], E=[0.0],
                               t_idle=2.0, t_busy=1.0, v_lb=[0.0], v_ub=[10.0],
                               demand=1, cost_coeffs=[1.0])
        assert dc.violations(inst, [0.0], [1.0])[0] == 0.0

    def test_full_cooling_clears_feasible_instance(self):
        inst = dc.gen_case1(seed=5, demand=10)
        rho = np.zeros(inst.n)
        rho[:10] = 1.0
        assert np.all(dc.violations(inst, inst.v_ub, rho) == 0.0)

    def test_monotone_in_v_and_rho(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            inst = random_instance(rng)
            v = rng.uniform(inst.v_lb, inst.v_ub)
            rho = rng.uniform(0.0, 1.0, size=inst.n)
            base = dc.violations(inst, v, rho)
            j = rng.integers(inst.m)
            dv = v.copy()
            dv[j] += 0.1
            assert np.all(dc.violations(inst, dv, rho) <= base + 1e-12)
            i = rng.integers(inst.n)
            drho = rho.copy()
            drho[i] = min(1.0, drho[i] + 0.1)
            assert np.all(dc.violations(inst, v, drho) >= base - 1e-12)

    def test_zero_violations_iff_constraints_hold(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            inst = random_instance(rng)
            v = rng.uniform(inst.v_lb, inst.v_ub)
            rho = rng.uniform(0.0, 1.0, size=inst.n)
            rows_hold = np.all(
                inst.b_prime @ rho - inst.A @ v + inst.E <= inst.b + 1e-12
            )
            assert (np.max(dc.violations(inst, v, rho)) == 0.0) == rows_hold


class TestFeasibilityAndCost:
    def test_load_constraint(self):
        inst = tiny_instance(B=[[0.0]], E=[0.0])
        assert not dc.is_feasible(inst, [1.0], [0.0])

    def test_upper_cooling_feasible(self):
        inst = dc.gen_case2(seed=9, demand=6)
        rho = np.zeros(inst.n)
        rho[:6] = 1.0
        assert dc.is_feasible(inst, inst.v_ub, rho)

    def test_below_lower_bound_infeasible(self):
        inst = tiny_instance(v_lb=[1.0], B=[[0.0]], E=[0.0], demand=0)
        assert not dc.is_feasible(inst, [0.5], [0.0])

    def test_cooling_cost_values(self):
        inst_unit = ProblemInstance(n=1, m=2, A=[[1.0, 1.0]], B=[[0.0]], E=[0.0],
                                    t_idle=2.0, t_busy=1.0, v_lb=[0.0, 0.0],
                                    v_ub=[9.0, 9.0], demand=0, cost_coeffs=[1.0, 1.0])
        assert dc.cooling_cost(inst_unit, [0.0, 0.0]) == 0.0
        assert dc.cooling_cost(inst_unit, [2.0, 3.0]) == pytest.approx(5.0)
        inst_weighted = dataclasses.replace(inst_unit, cost_coeffs=np.array([2.0, 4.0]))
        assert dc.cooling_cost(inst_weighted, [1.0, 1.0]) == pytest.approx(6.0)


class TestJson:
    def test_round_trip(self):
        rng = np.random.default_rng(11)
        inst = random_instance(rng)
        back = ProblemInstance.from_json(inst.to_json())
        assert np.array_equal(back.A, inst.A)
        assert np.array_equal(back.B, inst.B)
        assert back.demand == inst.demand

    def test_format_tag(self):
        inst = tiny_instance()
        data = json.loads(inst.to_json())
        assert data["format"] == JSON_FORMAT
        data["format"] = "other/9"
        with pytest.raises(ToolkitError):
            ProblemInstance.from_dict(data)
