"""
Тесты сборки P1 матриц, нагрузки и прямых решателей.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from lod.fem.assembly import MatrixField, assemble_load, assemble_mass, assemble_stiffness
from lod.fem.linalg import DirectFactorization, SparseOperator, eliminate_dirichlet, factor_and_solve
from lod.fem.mesh import build_mesh
from lod.utils.exceptions import AssemblyError, SingularSystemError
from tests.conftest import rough_field


def test_stiffness_rows_sum_to_zero():
    mesh = build_mesh(8)
    stiffness = assemble_stiffness(mesh, rough_field(mesh))
    np.testing.assert_allclose(stiffness.matrix.sum(axis=1), 0.0, atol=1e-12)
    assert stiffness.symmetry_defect() <= 1e-14


def test_stiffness_energy_of_linear_function():
    mesh = build_mesh(4)
    u = mesh.nodes[:, 0]
    energy = u @ (assemble_stiffness(mesh) @ u)
    assert energy == pytest.approx(1.0, rel=1e-12)


def test_anisotropic_field_energy():
    mesh = build_mesh(4)
    field = MatrixField(np.broadcast_to(np.array([[2.0, 0.5], [0.5, 1.0]]), (mesh.num_elements, 2, 2)).copy())
    u = mesh.nodes[:, 0] + mesh.nodes[:, 1]
    # grad u = (1, 1): (A g).g = 2 + 1 + 1
    assert u @ (assemble_stiffness(mesh, field) @ u) == pytest.approx(4.0, rel=1e-12)


def test_mass_total_area():
    mesh = build_mesh(8)
    mass = assemble_mass(mesh)
    ones = np.ones(mesh.num_nodes)
    assert ones @ (mass @ ones) == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.linalg.eigvalsh(mass.matrix.toarray()) > 0)


def test_nonsymmetric_field_rejected():
    mesh = build_mesh(2)
    values = np.broadcast_to(np.array([[1.0, 0.3], [0.0, 1.0]]), (mesh.num_elements, 2, 2)).copy()
    with pytest.raises(AssemblyError):
        assemble_stiffness(mesh, MatrixField(values))


def test_nonfinite_field_rejected():
    mesh = build_mesh(2)
    values = MatrixField.identity(mesh.num_elements).values.copy()
    values[3, 0, 0] = np.nan
    with pytest.raises(AssemblyError):
        assemble_stiffness(mesh, MatrixField(values))


@pytest.mark.parametrize("rule", ["barycenter", "edge_midpoint"])
def test_load_of_constant(rule):
    mesh = build_mesh(8)
    load = assemble_load(mesh, lambda x: np.ones(x.shape[0]), rule=rule)
    assert load.sum() == pytest.approx(1.0, rel=1e-12)


def test_load_rejects_nonfinite_and_unknown_rule():
    mesh = build_mesh(2)
    with pytest.raises(AssemblyError):
        assemble_load(mesh, lambda x: np.full(x.shape[0], np.inf))
    with pytest.raises(AssemblyError):
        assemble_load(mesh, lambda x: np.ones(x.shape[0]), rule="gauss")


def test_poisson_solution_converges():
    # -Δu = 2π² sin(πx) sin(πy), u = sin(πx) sin(πy)
    errors = []
    for n in (8, 16):
        mesh = build_mesh(n)
        source = lambda x: 2 * np.pi ** 2 * np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
        system = eliminate_dirichlet(assemble_stiffness(mesh), assemble_load(mesh, source, "edge_midpoint"),
                                     mesh.boundary_node_flags)
        u = system.solve()
        exact = np.sin(np.pi * mesh.nodes[:, 0]) * np.sin(np.pi * mesh.nodes[:, 1])
        errors.append(np.abs(u - exact).max())
    assert errors[1] < errors[0] / 2.5


def test_singular_factorization_reports_pivot():
    matrix = sp.csr_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]]))
    with pytest.raises(SingularSystemError) as info:
        DirectFactorization(matrix, label="test")
    assert info.value.pivot_index == 1


def test_factorization_reused_for_several_rhs():
    matrix = sp.csr_matrix(np.array([[4.0, 1.0], [1.0, 3.0]]))
    operator = SparseOperator(matrix, symmetric=True)
    rhs = np.array([[1.0, 0.0], [0.0, 1.0]])
    solution = operator.factorize().solve(rhs)
    np.testing.assert_allclose(matrix @ solution, rhs, atol=1e-14)
    assert operator.factorize() is operator.factorize()


def test_empty_system():
    mesh = build_mesh(1)
    system = eliminate_dirichlet(assemble_stiffness(mesh), np.zeros(mesh.num_nodes), mesh.boundary_node_flags)
    np.testing.assert_array_equal(system.solve(), np.zeros(mesh.num_nodes))


def test_factor_and_solve_small_systems():
    identity = SparseOperator(sp.identity(4, format="csr"), symmetric=True)
    rhs = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_allclose(factor_and_solve(identity, rhs), rhs)
    pair = SparseOperator(sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]])), symmetric=True)
    np.testing.assert_allclose(factor_and_solve(pair, np.array([3.0, 3.0])), [1.0, 1.0])


def test_factor_and_solve_matches_dense(rng):
    factor = rng.standard_normal((50, 50))
    dense = factor @ factor.T + 50.0 * np.eye(50)
    rhs = rng.standard_normal(50)
    solution = factor_and_solve(SparseOperator(sp.csr_matrix(dense), symmetric=True), rhs)
    assert np.abs(solution - np.linalg.solve(dense, rhs)).max() <= 1e-9


def test_membrane_problem():
    n = 32
    mesh = build_mesh(n)
    system = eliminate_dirichlet(assemble_stiffness(mesh), assemble_load(mesh, lambda x: np.ones(x.shape[0])),
                                 mesh.boundary_node_flags)
    u = system.solve()
    assert u.max() == pytest.approx(0.0736, abs=1e-3)
    # симметрия относительно диагонали x1 = x2
    grid = np.zeros((n + 1, n + 1))
    ix, iy = np.rint(mesh.nodes * n).astype(int).T
    grid[ix, iy] = u
    np.testing.assert_allclose(grid, grid.T, atol=1e-12)
