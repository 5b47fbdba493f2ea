import json
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from wdvv_submanifolds.bonnet_builder import (
    AmbientForm,
    GridTooCoarseError,
    gram_drift,
    fd_weights,
    initial_frame,
    integrate_frame,
    path_dependence,
    reconstruct,
    second_form_values,
    torsion_values,
    verify_induced_metric,
    verify_second_forms,
    verify_torsion,
)
from wdvv_submanifolds.potential_field import DimensionError, MetricMatrix, invert_metric, parse_problem

from conftest import FIXTURES


def _spec(name, **domain):
    obj = json.loads((FIXTURES / name).read_text())
    if domain:
        obj["domain"] = {**obj.get("domain", {}), **domain}
    return parse_problem(obj)


@pytest.fixture(scope="module")
def solution():
    spec = _spec("wdvv_a3.json")
    grid, form = reconstruct(spec)
    return spec, grid, form


class TestFdWeights:
    def test_three_point_central(self):
        assert np.allclose(fd_weights([-1.0, 0.0, 1.0]), [-0.5, 0.0, 0.5])

    def test_exact_on_polynomials(self):
        offsets = [-0.2, -0.1, 0.0, 0.1, 0.2]
        w = fd_weights(offsets)
        x = 0.7
        f = lambda t: 3 * t**4 - t**3 + 2 * t  # noqa: E731
        assert np.dot(w, [f(x + s) for s in offsets]) == pytest.approx(12 * x**3 - 3 * x**2 + 2, rel=1e-10)

    def test_one_sided(self):
        assert np.allclose(fd_weights([0.0, 1.0, 2.0]), [-1.5, 2.0, -0.5])


class TestInitialFrame:
    def test_identity_rows_and_form(self):
        eta, mu = MetricMatrix.antidiagonal(2), MetricMatrix([[Fraction(-2)]])
        frame, form = initial_frame(eta, mu)
        assert np.array_equal(frame.rows[1:], np.eye(3))
        assert not np.any(frame.position)
        assert np.array_equal(frame.gram(form), form.matrix)
        assert form.signature() == (1, 2)

    def test_asymmetric_form_rejected(self):
        with pytest.raises(ValueError):
            AmbientForm(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestCircle:
    def test_radius_and_centre(self):
        grid, form = reconstruct(_spec("circle.json"))
        r = grid.positions.reshape(-1, 2)
        radius = np.hypot(r[:, 0], r[:, 1] - 1.0)
        assert np.max(np.abs(radius - 1.0)) < 1e-8

    def test_curve_is_the_exact_arc(self):
        grid, _ = reconstruct(_spec("circle.json"))
        u = np.array(grid.axes[0])
        exact = np.stack([np.sin(u), 1 - np.cos(u)], axis=1)
        assert np.max(np.abs(grid.positions - exact)) < 1e-10

    def test_single_normal_has_no_torsion(self):
        grid, form = reconstruct(_spec("circle.json"))
        assert verify_torsion(grid, form) == 0.0
        assert np.max(np.abs(torsion_values(grid, form))) < 1e-6  # (n', n) = 0 for unit n


class TestSolutionReconstruction:
    def test_induced_metric_and_frame_gram(self, solution):
        spec, grid, form = solution
        assert verify_induced_metric(grid, form, invert_metric(spec.eta_inv)) < 1e-8
        assert verify_induced_metric(grid, form) < 1e-8
        assert np.max(gram_drift(grid, form)) < 1e-8

    def test_base_node_carries_identity_frame(self, solution):
        spec, grid, form = solution
        assert np.array_equal(grid.frames[2, 2, 2][1:], np.eye(6))
        assert not np.any(grid.positions[2, 2, 2])

    def test_path_independence(self):
        spec = _spec("wdvv_a3.json")
        assert np.max(path_dependence(spec)) < 1e-8
        all_orders = [[0, 1, 2], [2, 1, 0], [1, 0, 2], [1, 2, 0]]
        assert np.max(path_dependence(spec, all_orders)) < 1e-8

    def test_fd_second_forms_converge(self):
        # fourth-order stencils: error shrinks about 16x per halving of the spacing
        errs = []
        for k in (5, 9):
            spec = _spec("wdvv_a3.json", grid=k)
            grid, form = reconstruct(spec)
            errs.append(verify_second_forms(grid, form, spec.potentials))
        assert errs[1] < errs[0] / 10

    def test_refined_grid_meets_fd_tolerance(self):
        spec = _spec("wdvv_a3.json", grid=13)
        grid, form = reconstruct(spec)
        assert verify_second_forms(grid, form, spec.potentials) < 1e-4
        assert verify_torsion(grid, form) < 1e-4

    def test_three_point_stencil_is_second_order(self):
        errs = []
        for k in (9, 17):
            spec = _spec("circle.json", grid=k)
            grid, form = reconstruct(spec)
            errs.append(verify_second_forms(grid, form, spec.potentials, stencil=3))
        assert 3.0 < errs[0] / errs[1] < 5.0


def test_motion_equivariance():
    # start from a moved frame: positions move rigidly, invariants are unchanged
    spec = _spec("wdvv_a3.json", grid=3)
    grid, form = reconstruct(spec)
    rng = np.random.default_rng(7)
    s = rng.normal(size=(6, 6))
    s = s - s.T
    q = expm(np.linalg.solve(form.matrix, s) * 0.3)
    assert np.allclose(q.T @ form.matrix @ q, form.matrix, atol=1e-12)
    c = rng.normal(size=6)
    rows0 = initial_frame(invert_metric(spec.eta_inv), invert_metric(spec.mu_inv))[0].rows
    moved0 = rows0 @ q
    moved0[0] += c
    moved = integrate_frame(spec, initial_rows=moved0)
    assert np.allclose(moved.positions, grid.positions @ q + c, atol=1e-10)
    assert verify_induced_metric(moved, form) < 1e-8
    assert np.allclose(second_form_values(moved, form), second_form_values(grid, form), atol=1e-10)


def test_perturbed_path_dependence_at_unit_distance():
    spec = _spec("wdvv_a3_perturbed_tenth.json", base=["0", "0", "0"], half_width="1", grid=3)
    dep = path_dependence(spec)
    assert dep[2, 2, 2] > 1e-4 and dep[1, 1, 1] == 0.0


def test_invalid_inputs():
    spec = _spec("wdvv_a3.json", grid=2)
    grid, form = reconstruct(spec)
    with pytest.raises(GridTooCoarseError):
        verify_second_forms(grid, form, spec.potentials)
    with pytest.raises(ValueError):
        integrate_frame(spec, order=[0, 0, 1])
    with pytest.raises(DimensionError):
        integrate_frame(spec, initial_rows=np.eye(6))
