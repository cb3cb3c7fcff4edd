"""
Тесты квазиинтерполяции I_H = E_H o Pi_H и ограничений ядра.
"""

import numpy as np
import pytest

from lod.fem.assembly import assemble_mass
from lod.fem.mesh import build_mesh, build_nested_pair, build_patch
from lod.multiscale.interpolation import (
    build_averaging,
    build_l2_projection,
    build_prolongation,
    compose_interpolation,
    kernel_constraints,
)
from tests.conftest import random_coarse_vector


def test_prolongation_reproduces_coarse_functions(pair_4_16):
    prolongation = build_prolongation(pair_4_16)
    coarse, fine = pair_4_16.coarse, pair_4_16.fine
    u = 1.0 + 2.0 * coarse.nodes[:, 0] - coarse.nodes[:, 1]
    expected = 1.0 + 2.0 * fine.nodes[:, 0] - fine.nodes[:, 1]
    np.testing.assert_allclose(prolongation @ u, expected, atol=1e-13)
    np.testing.assert_allclose(prolongation.sum(axis=1), 1.0, atol=1e-13)


def test_l2_projection_exact_on_affine(pair_4_16):
    projection = build_l2_projection(pair_4_16)
    coarse, fine = pair_4_16.coarse, pair_4_16.fine
    u = 0.5 - fine.nodes[:, 0] + 3.0 * fine.nodes[:, 1]
    values = (projection @ u).reshape(coarse.num_elements, 3)
    corners = coarse.nodes[coarse.elements]
    np.testing.assert_allclose(values, 0.5 - corners[..., 0] + 3.0 * corners[..., 1], atol=1e-12)


def test_averaging_rows():
    coarse = build_mesh(4)
    averaging = build_averaging(coarse)
    sums = np.asarray(averaging.sum(axis=1)).ravel()
    np.testing.assert_allclose(sums[coarse.free_nodes], 1.0)
    np.testing.assert_array_equal(sums[coarse.boundary_node_flags], 0.0)


def test_projection_property(pair_4_16, op_4_16):
    v = random_coarse_vector(pair_4_16.coarse, seed=3)
    np.testing.assert_allclose(op_4_16.interpolate(op_4_16.embed(v)), v, atol=1e-12)


def test_idempotence(op_8_32, rng):
    fine = op_8_32.fine_mesh
    u = np.zeros(fine.num_nodes)
    u[fine.free_nodes] = rng.standard_normal(fine.free_nodes.size)
    once = op_8_32.interpolate(u)
    twice = op_8_32.interpolate(op_8_32.embed(once))
    np.testing.assert_allclose(twice, once, atol=1e-12)


def test_boundary_rows_vanish(op_4_16):
    boundary = op_4_16.coarse_mesh.boundary_node_flags
    assert op_4_16.full[boundary].nnz == 0
    assert op_4_16.matrix.shape == (op_4_16.coarse_free.size, op_4_16.fine_free.size)


def test_local_boundedness(op_8_32, rng):
    # ||I_H v||_0 <= C ||v||_0 с умеренной константой
    fine = op_8_32.fine_mesh
    coarse = op_8_32.coarse_mesh
    fine_mass = assemble_mass(fine).matrix
    coarse_mass = assemble_mass(coarse).matrix
    ratios = []
    for _ in range(10):
        v = np.zeros(fine.num_nodes)
        v[fine.free_nodes] = rng.standard_normal(fine.free_nodes.size)
        w = op_8_32.interpolate(v)
        ratios.append(np.sqrt(w @ (coarse_mass @ w)) / np.sqrt(v @ (fine_mass @ v)))
    assert max(ratios) < 5.0


def test_identity_when_h_equals_H():
    pair = build_nested_pair(build_mesh(4), build_mesh(4))
    op = compose_interpolation(pair)
    np.testing.assert_allclose(op.matrix.toarray(), np.eye(op.coarse_free.size), atol=1e-12)


def test_kernel_constraints_cover_touching_rows(pair_4_16, op_4_16):
    patch = build_patch(pair_4_16, 12, 1)
    constraints = kernel_constraints(op_4_16, patch)
    assert constraints.matrix.shape == (constraints.count, patch.interior_global.size)
    # ни одна из пропущенных строк не касается внутренних узлов патча
    rows = op_4_16.constraint_rows[:, patch.interior_global].toarray()
    touched = np.flatnonzero(np.abs(rows).sum(axis=1) > 0)
    np.testing.assert_array_equal(op_4_16.coarse_free[touched], constraints.coarse_nodes)


@pytest.mark.parametrize("element", [0, 7, 31])
def test_constraints_nonempty_for_interior_patches(pair_4_16, op_4_16, element):
    patch = build_patch(pair_4_16, element, 2)
    assert kernel_constraints(op_4_16, patch).count > 0
