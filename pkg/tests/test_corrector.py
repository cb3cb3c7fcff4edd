"""
Тесты элементных корректоров, базиса V_{H,m}, кэша и затухания.
"""

import numpy as np
import pytest

from lod.coefficients import LinearizationModel, PeriodicCoefficient
from lod.fem.assembly import MatrixField, assemble_stiffness
from lod.fem.mesh import build_mesh, build_nested_pair, build_patch
from lod.multiscale.corrector import (
    CorrectorCache,
    apply_global_corrector,
    apply_ideal_corrector,
    assemble_basis,
    compute_correctors,
    decay_study,
    fit_decay_rate,
    solve_element_corrector,
)
from lod.multiscale.interpolation import compose_interpolation, kernel_constraints
from lod.utils.exceptions import CorrectorError
from tests.conftest import random_coarse_vector, rough_field

SATURATED = 10


@pytest.fixture(scope="module")
def field_16(pair_4_16):
    return rough_field(pair_4_16.fine, seed=21)


@pytest.fixture(scope="module")
def saturated_set(pair_4_16, op_4_16, field_16):
    return compute_correctors(pair_4_16, field_16, op_4_16, SATURATED)


@pytest.mark.parametrize("element", [0, 9, 17, 31])
def test_element_corrector_in_kernel(pair_4_16, op_4_16, field_16, element):
    patch = build_patch(pair_4_16, element, 1)
    corrector = solve_element_corrector(pair_4_16, patch, field_16, op_4_16)
    fine = pair_4_16.fine

    assert corrector.vectors.shape == (2, patch.interior_global.size)
    full = corrector.expand(fine.num_nodes)
    # I_H q = 0 на всех грубых узлах
    assert np.abs(op_4_16.full @ full.T).max() <= 1e-9
    # носитель внутри патча
    outside = np.setdiff1d(np.arange(fine.num_nodes), patch.interior_global)
    assert np.all(full[:, outside] == 0.0)
    constraints = kernel_constraints(op_4_16, patch).matrix
    assert np.abs(constraints @ corrector.vectors.T).max() <= 1e-9


def test_element_corrector_variational_equation(pair_4_16, op_4_16, field_16):
    # (𝔄 grad q^(j), grad w) = (𝔄 e_j, grad w)_T для w из ядра I_H на патче
    element = 12
    patch = build_patch(pair_4_16, element, 1)
    corrector = solve_element_corrector(pair_4_16, patch, field_16, op_4_16)
    fine = pair_4_16.fine
    interior = patch.interior_global

    constraints = kernel_constraints(op_4_16, patch).matrix.toarray()
    _, singular, vt = np.linalg.svd(constraints)
    rank = int(np.sum(singular > 1e-10 * singular[0]))
    kernel_basis = vt[rank:].T

    stiffness = assemble_stiffness(fine, field_16).matrix.toarray()[np.ix_(interior, interior)]
    inside = pair_4_16.fine_elements_of_coarse_element[element]
    rhs = np.zeros((interior.size, 2))
    local_index = {int(g): k for k, g in enumerate(interior)}
    for K in inside:
        flux = fine.element_areas[K] * fine.gradients[K] @ field_16.values[K]
        for a, node in enumerate(fine.elements[K]):
            if int(node) in local_index:
                rhs[local_index[int(node)]] += flux[a]

    residual = kernel_basis.T @ (stiffness @ corrector.vectors.T - rhs)
    assert np.abs(residual).max() <= 1e-9 * max(np.abs(rhs).max(), 1.0)


def test_saturated_correctors_match_ideal(pair_4_16, op_4_16, field_16, saturated_set):
    v = random_coarse_vector(pair_4_16.coarse, seed=5)
    truncated = apply_global_corrector(saturated_set, v)
    ideal = apply_ideal_corrector(pair_4_16, field_16, op_4_16, v)
    assert np.linalg.norm(truncated - ideal) <= 1e-9 * np.linalg.norm(ideal)


def test_basis_orthogonal_to_kernel(pair_4_16, op_4_16, field_16, saturated_set, rng):
    fine = pair_4_16.fine
    stiffness = assemble_stiffness(fine, field_16).matrix
    u = np.zeros(fine.num_nodes)
    u[fine.free_nodes] = rng.standard_normal(fine.free_nodes.size)
    w = u - op_4_16.embed(op_4_16.interpolate(u))
    assert np.abs(op_4_16.interpolate(w)).max() <= 1e-12

    products = saturated_set.basis.T @ (stiffness @ w)
    scale = np.sqrt(w @ (stiffness @ w))
    assert np.abs(products).max() <= 1e-9 * scale


def test_basis_shape_and_multiscale(pair_4_16, op_4_16, saturated_set):
    assert saturated_set.basis.shape == (pair_4_16.fine.num_nodes, op_4_16.coarse_free.size)
    assert saturated_set.basis_count == op_4_16.coarse_free.size
    v = random_coarse_vector(pair_4_16.coarse, seed=8)
    np.testing.assert_allclose(saturated_set.multiscale(v), op_4_16.embed(v) - saturated_set.apply(v))
    # I_H (id - Q) v = v
    np.testing.assert_allclose(op_4_16.interpolate(saturated_set.multiscale(v)), v, atol=1e-9)


def test_correctors_vanish_when_h_equals_H():
    pair = build_nested_pair(build_mesh(4), build_mesh(4))
    op = compose_interpolation(pair)
    correctors = compute_correctors(pair, MatrixField.identity(pair.fine.num_elements), op, 2)
    assert np.abs(correctors.correction_matrix.toarray()).max() <= 1e-12


def test_cache_reuses_correctors(pair_4_16, op_4_16, field_16):
    cache = CorrectorCache()
    first = compute_correctors(pair_4_16, field_16, op_4_16, 1, cache=cache)
    second = compute_correctors(pair_4_16, field_16, op_4_16, 1, cache=cache)
    assert first.solve_count == pair_4_16.coarse.num_elements
    assert second.solve_count == 0
    assert cache.hits == pair_4_16.coarse.num_elements
    assert (first.correction_matrix != second.correction_matrix).nnz == 0


def test_cache_resolves_only_changed_patches(pair_4_16, op_4_16, field_16):
    cache = CorrectorCache()
    compute_correctors(pair_4_16, field_16, op_4_16, 1, cache=cache)
    values = field_16.values.copy()
    changed = pair_4_16.fine_elements_of_coarse_element[0]
    values[changed] *= 3.0
    updated = compute_correctors(pair_4_16, MatrixField(values), op_4_16, 1, cache=cache)
    assert 0 < updated.solve_count < pair_4_16.coarse.num_elements


def test_disk_cache_roundtrip(pair_4_16, op_4_16, field_16, tmp_path):
    first = compute_correctors(pair_4_16, field_16, op_4_16, 1, cache_dir=str(tmp_path))
    assert list(tmp_path.glob("*.npz"))
    loaded = compute_correctors(pair_4_16, field_16, op_4_16, 1, cache_dir=str(tmp_path))
    assert loaded.solve_count == 0
    assert loaded.coefficient_hash == first.coefficient_hash
    np.testing.assert_array_equal(loaded.correction_matrix.toarray(), first.correction_matrix.toarray())


def test_parallel_result_is_deterministic(pair_4_16, op_4_16, field_16):
    serial = compute_correctors(pair_4_16, field_16, op_4_16, 1, n_jobs=1)
    parallel = compute_correctors(pair_4_16, field_16, op_4_16, 1, n_jobs=2)
    np.testing.assert_array_equal(serial.correction_matrix.toarray(), parallel.correction_matrix.toarray())


def test_missing_corrector(pair_4_16, op_4_16, saturated_set):
    with pytest.raises(CorrectorError) as info:
        assemble_basis(saturated_set.correctors[1:], pair_4_16, op_4_16, SATURATED)
    assert info.value.element == 0


def test_decay_gaps_shrink(pair_4_16, op_4_16):
    field = LinearizationModel("newton").produce(PeriodicCoefficient(epsilon=0.125), pair_4_16.fine).matrix
    vectors = np.stack([random_coarse_vector(pair_4_16.coarse, seed=s) for s in range(3)])
    gaps = decay_study(pair_4_16, field, op_4_16, vectors, max_layers=3)
    assert gaps.shape == (3, 2)
    assert np.all(gaps[:, 1] <= gaps[:, 0])
    single = decay_study(pair_4_16, field, op_4_16, vectors[0], max_layers=3)
    np.testing.assert_allclose(single, gaps[0])


def test_decay_requires_two_layers(pair_4_16, op_4_16, field_16):
    with pytest.raises(ValueError):
        decay_study(pair_4_16, field_16, op_4_16, np.zeros(pair_4_16.coarse.num_nodes), max_layers=1)


def test_fit_decay_rate():
    assert fit_decay_rate(0.5 ** np.arange(1, 6)) == pytest.approx(0.5)
    assert fit_decay_rate([3.0, 0.3, 0.03], layers=[2, 3, 4]) == pytest.approx(0.1)
    assert np.isnan(fit_decay_rate([1.0, 0.0]))


@pytest.mark.slow
def test_decay_rate_periodic_acceptance(pair_8_32, op_8_32):
    field = LinearizationModel("newton").produce(PeriodicCoefficient(epsilon=2.0 ** -4), pair_8_32.fine).matrix
    vectors = np.stack([random_coarse_vector(pair_8_32.coarse, seed=s) for s in range(5)])
    gaps = decay_study(pair_8_32, field, op_8_32, vectors, max_layers=5)
    for row in gaps:
        assert fit_decay_rate(row) <= 0.9
