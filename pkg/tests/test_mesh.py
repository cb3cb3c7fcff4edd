"""
Тесты сеток, вложенных пар и патчей.
"""

import numpy as np
import pytest

from lod.fem.mesh import build_mesh, build_nested_pair, build_patch, dump_mesh, element_patch, overlap_constant
from lod.utils.exceptions import MeshError


@pytest.mark.parametrize("n", [1, 2, 4, 16])
def test_mesh_sizes_and_areas(n):
    mesh = build_mesh(n)
    assert mesh.num_nodes == (n + 1) ** 2
    assert mesh.num_elements == 2 * n * n
    assert np.all(mesh.element_areas > 0)
    assert mesh.element_areas.sum() == pytest.approx(1.0, abs=1e-14)


def test_boundary_flags():
    mesh = build_mesh(4)
    on_boundary = np.isclose(mesh.nodes, 0.0).any(axis=1) | np.isclose(mesh.nodes, 1.0).any(axis=1)
    np.testing.assert_array_equal(mesh.boundary_node_flags, on_boundary)
    assert mesh.free_nodes.size == 9


@pytest.mark.parametrize("n", [0, 3, 6, -4])
def test_invalid_divisions(n):
    with pytest.raises(MeshError):
        build_mesh(n)


def test_gradients_reproduce_linear_function():
    mesh = build_mesh(8)
    u = 2.0 * mesh.nodes[:, 0] - 3.0 * mesh.nodes[:, 1] + 1.0
    np.testing.assert_allclose(mesh.element_gradients(u), np.tile([2.0, -3.0], (mesh.num_elements, 1)), atol=1e-12)


def test_locate_barycenters():
    mesh = build_mesh(8)
    np.testing.assert_array_equal(mesh.locate(mesh.barycenters), np.arange(mesh.num_elements))


def test_nested_pair_tiles_coarse_elements(pair_4_16):
    pair = pair_4_16
    assert pair.refinement == 4
    assert pair.fine_elements_of_coarse_element.shape == (pair.coarse.num_elements, 16)
    np.testing.assert_allclose(
        pair.fine.element_areas[pair.fine_elements_of_coarse_element].sum(axis=1),
        pair.coarse.element_areas,
    )
    np.testing.assert_allclose(pair.fine.nodes[pair.fine_node_of_coarse_node], pair.coarse.nodes)
    owner = pair.coarse_element_of_fine_element
    for T, fine_elements in enumerate(pair.fine_elements_of_coarse_element):
        assert np.all(owner[fine_elements] == T)


@pytest.mark.parametrize("n_coarse, n_fine", [(1, 1), (1, 4), (2, 8), (4, 4), (4, 32), (8, 16)])
def test_nested_pair_accepts_power_of_two_refinements(n_coarse, n_fine):
    pair = build_nested_pair(build_mesh(n_coarse), build_mesh(n_fine))
    r = n_fine // n_coarse
    assert pair.fine_elements_of_coarse_element.shape == (pair.coarse.num_elements, r * r)
    assert np.unique(pair.fine_elements_of_coarse_element).size == pair.fine.num_elements


def test_non_nested_pair_rejected():
    with pytest.raises(MeshError):
        build_nested_pair(build_mesh(8), build_mesh(4))


def test_degenerate_pair_h_equals_H():
    pair = build_nested_pair(build_mesh(4), build_mesh(4))
    assert pair.refinement == 1
    np.testing.assert_array_equal(pair.fine_node_of_coarse_node, np.arange(pair.coarse.num_nodes))


def test_patch_growth():
    mesh = build_mesh(8)
    center = 2 * (3 * 8 + 3)
    sizes = [element_patch(mesh, center, m).size for m in range(5)]
    assert sizes[0] == 1
    assert sizes[1] == 13
    assert all(a < b for a, b in zip(sizes[:-1], sizes[1:]))
    assert element_patch(mesh, center, 20).size == mesh.num_elements


def test_overlap_constant():
    mesh = build_mesh(8)
    values = [overlap_constant(mesh, m) for m in range(4)]
    assert values[:2] == [1, 13]
    assert all(a <= b for a, b in zip(values[:-1], values[1:]))


def test_patch_saturates_at_domain():
    mesh = build_mesh(2)
    assert element_patch(mesh, 0, 10).size == mesh.num_elements
    assert overlap_constant(mesh, 10) == mesh.num_elements


def test_patch_invalid_arguments():
    mesh = build_mesh(2)
    with pytest.raises(MeshError):
        element_patch(mesh, mesh.num_elements, 1)
    with pytest.raises(MeshError):
        element_patch(mesh, 0, -1)


def test_patch_interior_nodes(pair_4_16):
    patch = build_patch(pair_4_16, 10, 1)
    fine = pair_4_16.fine
    interior = patch.interior_global
    assert not np.any(fine.boundary_node_flags[interior])
    # все элементы вокруг внутреннего узла лежат в патче
    in_patch = np.zeros(fine.num_elements, dtype=bool)
    in_patch[patch.fine_elements] = True
    touching = fine.incidence[:, interior].toarray().any(axis=1)
    assert np.all(in_patch[touching])
    np.testing.assert_array_equal(patch.fine_node_index_map(patch.fine_nodes), np.arange(patch.fine_nodes.size))
    np.testing.assert_array_equal(patch.fine_node_index_map(interior), patch.interior_fine_nodes)
    outside = np.setdiff1d(np.arange(fine.num_nodes), patch.fine_nodes)
    with pytest.raises(MeshError):
        patch.fine_node_index_map(outside[:1])


def test_dump_mesh(tmp_path):
    mesh = build_mesh(2)
    path = tmp_path / "mesh.txt"
    dump_mesh(mesh, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "mesh 2 9 8"
    assert len(lines) == 1 + 9 + 8
