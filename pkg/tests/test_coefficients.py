"""
Тесты коэффициентов, моделей линеаризации и выборочной пробы.
"""

import numpy as np
import pytest

from lod.coefficients import (
    CheckerboardCoefficient,
    LinearCoefficient,
    LinearizationModel,
    PeriodicCoefficient,
    RichardsCoefficient,
    check_jacobian,
    get_coefficient,
    list_coefficients,
    monotonicity_probe,
    random_checkerboard,
)
from lod.fem.mesh import build_mesh
from lod.utils.exceptions import CoefficientError, UnsupportedLinearizationError


def _points(rng, n=50):
    return rng.uniform(0.0, 1.0, (n, 2)), rng.uniform(-3.0, 3.0, (n, 2))


@pytest.mark.parametrize("coefficient", [
    PeriodicCoefficient(epsilon=2.0 ** -3),
    CheckerboardCoefficient(epsilon=2.0 ** -3, seed=5),
    RichardsCoefficient(epsilon=2.0 ** -3),
    LinearCoefficient(),
])
def test_jacobian_matches_finite_differences(coefficient):
    assert check_jacobian(coefficient, samples=200, seed=1) <= 1e-5


def test_periodic_flux_and_kacanov_form(rng):
    coefficient = PeriodicCoefficient(epsilon=0.25)
    points, grads = _points(rng)
    alpha = coefficient.kacanov_factor(points, grads)
    np.testing.assert_allclose(coefficient.flux(points, grads), alpha[:, None] * grads)
    # A(x, 0) = 0
    np.testing.assert_array_equal(coefficient.flux(points, np.zeros_like(grads)), 0.0)


def test_periodic_spatial_factor_is_periodic_in_x1():
    coefficient = PeriodicCoefficient(epsilon=0.25)
    base = np.array([[0.1, 0.0], [0.3, 0.0]])
    shifted = base + np.array([0.25, 0.0])
    # при x2 = 0 множитель зависит только от sin(2 pi x1 / eps)
    np.testing.assert_allclose(coefficient.spatial_factor(base), coefficient.spatial_factor(shifted), rtol=1e-12)


def test_checkerboard_is_reproducible_and_bounded():
    first = random_checkerboard(2.0 ** -3, seed=11)
    second = random_checkerboard(2.0 ** -3, seed=11)
    other = random_checkerboard(2.0 ** -3, seed=12)
    np.testing.assert_array_equal(first.cell_values, second.cell_values)
    assert not np.array_equal(first.cell_values, other.cell_values)
    assert first.cell_values.shape == (8, 8)
    assert first.cell_values.min() >= 0.1 and first.cell_values.max() <= 1.0
    with pytest.raises(ValueError):
        first.cell_values[0, 0] = 0.5


def test_checkerboard_cell_indexing():
    coefficient = CheckerboardCoefficient(epsilon=0.5, seed=3)
    values = coefficient.spatial_factor(np.array([[0.25, 0.75], [0.75, 0.25]]))
    assert values[0] == coefficient.cell_values[1, 0]
    assert values[1] == coefficient.cell_values[0, 1]


def test_checkerboard_rejects_kacanov():
    mesh = build_mesh(4)
    with pytest.raises(UnsupportedLinearizationError):
        LinearizationModel("kacanov").produce(CheckerboardCoefficient(epsilon=0.25, seed=0), mesh)


def test_richards_conductivity():
    coefficient = RichardsCoefficient()
    assert coefficient.conductivity(np.array([0.0]))[0] == pytest.approx(1.0)
    assert coefficient.conductivity(np.array([200.0]))[0] == pytest.approx(0.042893, abs=1e-6)
    np.testing.assert_allclose(coefficient.conductivity(np.array([-50.0])), coefficient.conductivity(np.array([50.0])))
    values = np.linspace(-300.0, 300.0, 41)
    step = 1e-4
    numeric = (coefficient.conductivity(values + step) - coefficient.conductivity(values - step)) / (2 * step)
    mask = np.abs(values) > 1.0
    np.testing.assert_allclose(coefficient.conductivity_derivative(values)[mask], numeric[mask], rtol=1e-5, atol=1e-9)


def test_richards_channel():
    coefficient = RichardsCoefficient(channel_contrast=100.0, epsilon=2.0 ** -4, channel_width=2)
    inside = coefficient.spatial_factor(np.array([[0.3, 0.5]]))
    outside = coefficient.spatial_factor(np.array([[0.3, 0.9]]))
    assert inside[0] == 100.0
    assert 0.5 <= outside[0] <= 1.5
    assert coefficient.depends_on_value


def test_newton_linearization_offset(rng):
    mesh = build_mesh(4)
    coefficient = PeriodicCoefficient(epsilon=0.25)
    u = rng.standard_normal(mesh.num_nodes)
    linearized = LinearizationModel("newton").produce(coefficient, mesh, u)
    grads = mesh.element_gradients(u)
    # A_L(grad u*) = A(grad u*)
    np.testing.assert_allclose(linearized.flux(grads), coefficient.flux(mesh.barycenters, grads), rtol=1e-12)
    np.testing.assert_allclose(linearized.matrix.values, np.swapaxes(linearized.matrix.values, 1, 2))


def test_kacanov_linearization(rng):
    mesh = build_mesh(4)
    coefficient = PeriodicCoefficient(epsilon=0.25)
    u = rng.standard_normal(mesh.num_nodes)
    linearized = LinearizationModel("kacanov").produce(coefficient, mesh, u)
    np.testing.assert_array_equal(linearized.offset, 0.0)
    grads = mesh.element_gradients(u)
    np.testing.assert_allclose(linearized.flux(grads), coefficient.flux(mesh.barycenters, grads), rtol=1e-12)


def test_linearization_at_zero_is_spatial_field():
    mesh = build_mesh(4)
    coefficient = PeriodicCoefficient(epsilon=0.25)
    field = LinearizationModel("newton").produce(coefficient, mesh).matrix
    expected = 2.0 * coefficient.spatial_factor(mesh.barycenters)
    np.testing.assert_allclose(field.values[:, 0, 0], expected)
    np.testing.assert_allclose(field.values[:, 0, 1], 0.0)


def test_unknown_linearization_model():
    with pytest.raises(CoefficientError):
        LinearizationModel("picard")


def test_probe_periodic_constants():
    coefficient = PeriodicCoefficient(epsilon=0.25)
    report = monotonicity_probe(coefficient, samples=2000, seed=0)
    assert report.passed
    assert 0 < report.lower_bound <= report.upper_bound
    assert report.data_bound == 0.0
    assert coefficient.metadata.lower_bound == report.lower_bound
    assert report.to_dict()["samples"] == 2000


def test_probe_linear_identity():
    report = monotonicity_probe(LinearCoefficient(), samples=500)
    assert report.lower_bound == pytest.approx(1.0)
    assert report.upper_bound == pytest.approx(1.0)
    assert report.jacobian_lipschitz == pytest.approx(0.0)


def test_registry():
    assert set(list_coefficients()) == {"periodic", "checkerboard", "richards", "linear"}
    assert isinstance(get_coefficient("periodic", epsilon=0.125), PeriodicCoefficient)
    with pytest.raises(CoefficientError):
        get_coefficient("spiral")
    with pytest.raises(CoefficientError):
        get_coefficient("periodic", radius=2.0)
    with pytest.raises(CoefficientError):
        CheckerboardCoefficient(epsilon=0.3)
