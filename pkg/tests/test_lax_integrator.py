import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from wdvv_submanifolds.lax_integrator import (
    DEFAULT_PARAM_VALUES,
    LaxState,
    LaxSystem,
    SpectralParams,
    consistency_tensors,
    holonomy_defect,
    holonomy_table,
    rectangle_loop,
    scaling_exponent,
    transport,
)
from wdvv_submanifolds.potential_field import DimensionError, MetricMatrix, Polynomial, gradient_potentials
from wdvv_submanifolds.submanifold_equations import gauss_tensor, ricci_tensor, second_forms

from conftest import GENERIC_BASE, a3_potential, random_metric, random_point, random_polynomial

F = Fraction
BASE = tuple(float(v) for v in GENERIC_BASE)
ETA = MetricMatrix.antidiagonal(3)


@pytest.fixture(scope="module")
def solution_system():
    return LaxSystem(gradient_potentials(a3_potential()), ETA, ETA)


@pytest.fixture(scope="module")
def perturbed_system():
    return LaxSystem(gradient_potentials(a3_potential(F(1, 10))), ETA, ETA)


def _quadratic_system(seed=0):
    rng = random.Random(seed)
    psi = [random_polynomial(rng, 2, 2, terms=4, min_degree=2) for _ in range(2)]
    return LaxSystem(psi, random_metric(rng, 2), random_metric(rng, 2))


class TestGenerator:
    def test_block_structure(self, perturbed_system):
        m = perturbed_system.generator(BASE, (1.0, 0.0, 0.0), SpectralParams(2.0, 3.0))
        w = perturbed_system.forms(BASE)[:, 0, :]  # w[a, j] = w_a,0j
        eta_inv = perturbed_system.eta_inv
        assert np.allclose(m[:3, 3:], 2.0 * w.T @ perturbed_system.mu_inv)
        assert np.allclose(m[3:, :3], 3.0 * w @ eta_inv)
        assert not np.any(m[:3, :3]) and not np.any(m[3:, 3:])

    def test_linear_in_direction(self, perturbed_system):
        p = SpectralParams(0.5, -1.0)
        d1, d2 = np.array([1.0, 2.0, -1.0]), np.array([0.0, 0.5, 3.0])
        lhs = perturbed_system.generator(BASE, 2 * d1 + d2, p)
        rhs = 2 * perturbed_system.generator(BASE, d1, p) + perturbed_system.generator(BASE, d2, p)
        assert np.allclose(lhs, rhs, atol=1e-13)

    def test_metric_size_checked(self):
        with pytest.raises(DimensionError):
            LaxSystem([Polynomial(2)], MetricMatrix.identity(2), MetricMatrix.identity(2))


class TestTransport:
    def test_constant_coefficients_match_matrix_exponential(self):
        # quadratic potentials give constant forms, so transport is exp(M)
        system = _quadratic_system()
        params = SpectralParams(0.7, -1.3)
        a, b = np.array([0.1, -0.2]), np.array([0.4, 0.3])
        m = system.generator(a, b - a, params)
        got = transport(np.eye(4), [a, b], params, system, step=0.001)
        assert np.max(np.abs(got - expm(m))) < 1e-10

    def test_state_vector_and_matrix_agree(self, perturbed_system):
        params = SpectralParams(1.0, 2.0)
        path = rectangle_loop(BASE, 0.2, (0, 2))
        x0 = np.arange(1.0, 7.0)
        as_vec = transport(x0, path, params, perturbed_system, 0.01)
        as_state = transport(LaxState.from_vector(x0, 3), path, params, perturbed_system, 0.01)
        as_mat = transport(np.eye(6), path, params, perturbed_system, 0.01) @ x0
        assert isinstance(as_state, LaxState)
        assert np.allclose(as_state.vector(), as_vec, atol=1e-13)
        assert np.allclose(as_mat, as_vec, atol=1e-12)

    def test_reversed_path_returns_to_start(self, perturbed_system):
        params = SpectralParams(-0.5, 1.0)
        path = [np.array(BASE), np.array(BASE) + [0.1, 0.2, -0.1], np.array(BASE) + [0.3, 0.0, 0.1]]
        x0 = np.ones(6)
        there = transport(x0, path, params, perturbed_system, 0.005)
        back = transport(there, path[::-1], params, perturbed_system, 0.005)
        assert np.max(np.abs(back - x0)) < 1e-10

    def test_fourth_order_convergence(self, perturbed_system):
        params = SpectralParams(2.0, 2.0)
        path = [np.array(BASE), np.array(BASE) + [0.5, -0.4, 0.3]]
        ref = transport(np.eye(6), path, params, perturbed_system, 1 / 4096)
        errs = [np.max(np.abs(transport(np.eye(6), path, params, perturbed_system, h) - ref))
                for h in (1 / 32, 1 / 64, 1 / 128)]
        rates = [np.log2(errs[k] / errs[k + 1]) for k in range(2)]
        assert all(3.7 < r < 4.3 for r in rates)

    def test_partial_last_step(self):
        # step 0.3 does not divide length 1; the final short step still lands on b
        system = _quadratic_system(1)
        params = SpectralParams(1.0, 1.0)
        a, b = np.zeros(2), np.array([1.0, 0.0])
        got = transport(np.eye(4), [a, b], params, system, step=0.3)
        fine = transport(np.eye(4), [a, b], params, system, step=0.001)
        assert np.max(np.abs(got - fine)) < 1e-2
        assert np.max(np.abs(fine - expm(system.generator(a, b - a, params)))) < 1e-10

    def test_bad_inputs(self, perturbed_system):
        p = SpectralParams(1.0, 1.0)
        with pytest.raises(ValueError):
            transport(np.ones(6), [BASE, BASE], p, perturbed_system, 0.0)
        with pytest.raises(DimensionError):
            transport(np.ones(5), [BASE, BASE], p, perturbed_system, 0.1)
        with pytest.raises(DimensionError):
            transport(np.ones(6), [(0.0, 0.0), (1.0, 1.0)], p, perturbed_system, 0.1)


class TestHolonomy:
    def test_solution_is_trivial_on_parameter_grid(self, solution_system):
        rows = holonomy_table(BASE, [0.1], solution_system)
        assert len(rows) == 25
        assert max(r["defect"] for r in rows) < 1e-8

    def test_perturbed_is_nontrivial_for_every_parameter(self, perturbed_system):
        rows = holonomy_table(BASE, [0.1], perturbed_system)
        assert min(r["defect"] for r in rows) > 1e-4

    def test_zero_parameters_give_trivial_holonomy(self, perturbed_system):
        assert holonomy_defect(BASE, 0.1, (0, 1), SpectralParams(0.0, 0.0), perturbed_system) == 0.0

    def test_degenerate_loops(self, perturbed_system):
        p = SpectralParams(1.0, 1.0)
        assert holonomy_defect(BASE, 0.0, (0, 1), p, perturbed_system) == 0.0
        with pytest.raises(ValueError):
            holonomy_defect(BASE, 0.1, (1, 1), p, perturbed_system)

    def test_loop_scaling_is_quadratic(self, perturbed_system):
        hs = [0.025, 0.05, 0.1, 0.2]
        p = SpectralParams(1.0, 1.0)
        d = [holonomy_defect(BASE, h, (0, 1), p, perturbed_system) for h in hs]
        assert abs(scaling_exponent(hs, d) - 2.0) < 0.3

    def test_scaling_exponent_exact_power(self):
        assert scaling_exponent([1, 2, 4], [3, 24, 192]) == pytest.approx(3.0)

    def test_rectangle_loop_closes(self):
        loop = rectangle_loop((1.0, 2.0, 3.0), 0.5, (2, 0))
        assert np.array_equal(loop[0], loop[-1])
        assert np.allclose(loop[2], [1.5, 2.0, 3.5])

    def test_default_parameters(self):
        assert len(DEFAULT_PARAM_VALUES) == 5 and 0.0 not in DEFAULT_PARAM_VALUES


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_consistency_tensors_are_reindexed_gauss_ricci(seed):
    rng = random.Random(seed)
    n, l = rng.randint(1, 3), rng.randint(1, 3)
    psi = [random_polynomial(rng, n, 4, terms=5) for _ in range(l)]
    eta_inv, mu_inv = random_metric(rng, n), random_metric(rng, l)
    x = random_point(rng, n)
    b1, b2 = consistency_tensors(psi, eta_inv, mu_inv, x)
    forms = second_forms(psi, x)
    assert np.array_equal(b1, gauss_tensor(forms, mu_inv).transpose(0, 2, 3, 1))
    assert np.array_equal(b2, ricci_tensor(forms, eta_inv))
