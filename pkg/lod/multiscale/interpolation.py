"""
Модуль квазиинтерполяции I_H = E_H o Pi_H.

Pi_H - поэлементная L2-проекция мелкой P1 функции на разрывные аффинные функции T_H,
E_H - усреднение значений в свободных вершинах. Оператор хранится явной
разреженной матрицей, так как его строки нужны как ограничения в задачах корректоров.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from lod.fem.assembly import REFERENCE_MASS
from lod.fem.mesh import NestedPair, Patch, TriMesh
from lod.utils.constants import Tolerances
from lod.utils.logger import get_logger

logger = get_logger(__name__)


def _drop_small(matrix: sp.spmatrix) -> sp.csr_matrix:
    """Удалить элементы на уровне ошибок округления (относительно max|a|)."""
    csr = sp.csr_matrix(matrix)
    if csr.nnz:
        threshold = Tolerances.SPARSE_DROP * np.abs(csr.data).max()
        csr.data[np.abs(csr.data) < threshold] = 0.0
        csr.eliminate_zeros()
    return csr


def build_prolongation(pair: NestedPair) -> sp.csr_matrix:
    """
    Вложение грубых P1 функций в мелкое пространство (узловая интерполяция).

    Args:
        pair: Вложенная пара сеток.

    Returns:
        sp.csr_matrix: Матрица (N_h, N_H).
    """
    coarse, fine = pair.coarse, pair.fine
    owner = coarse.locate(fine.nodes)
    lam = coarse.barycentric(owner, fine.nodes)

    rows = np.repeat(np.arange(fine.num_nodes), 3)
    cols = coarse.elements[owner].ravel()
    matrix = sp.csr_matrix((lam.ravel(), (rows, cols)), shape=(fine.num_nodes, coarse.num_nodes))
    return _drop_small(matrix)


def build_l2_projection(pair: NestedPair) -> sp.csr_matrix:
    """
    Поэлементная L2-проекция Pi_H на аффинные функции грубых элементов.

    Для каждого T решается локальная система M_T c = b_T, где b_T - интегралы
    мелкой функции против трёх аффинных базисных функций T (точно для P1 данных).

    Args:
        pair: Вложенная пара сеток.

    Returns:
        sp.csr_matrix: Матрица (3 M_H, N_h); строка 3T+a - коэффициент при вершине a элемента T.
    """
    coarse, fine = pair.coarse, pair.fine
    fine_elements = pair.fine_elements_of_coarse_element
    connectivity = fine.elements[fine_elements]
    points = fine.nodes[connectivity]

    origin = coarse.nodes[coarse.elements[:, 0]]
    lam = np.einsum('tad,tfld->tfla', coarse.gradients, points - origin[:, None, None, :])
    lam[..., 0] += 1.0

    fine_areas = fine.element_areas[fine_elements]
    moments = fine_areas[:, :, None, None] / 12.0 * np.einsum('pl,tfla->tfpa', REFERENCE_MASS, lam)

    local_mass = coarse.element_areas[:, None, None] / 12.0 * REFERENCE_MASS
    assert np.all(coarse.element_areas > 0), "coarse elements must have positive area"
    local_mass_inv = np.linalg.inv(local_mass)
    values = np.einsum('tab,tfpb->tfpa', local_mass_inv, moments)

    shape = values.shape
    rows = np.broadcast_to(
        3 * np.arange(coarse.num_elements)[:, None, None, None] + np.arange(3)[None, None, None, :], shape
    )
    cols = np.broadcast_to(connectivity[:, :, :, None], shape)
    matrix = sp.csr_matrix(
        (values.ravel(), (rows.ravel(), cols.ravel())),
        shape=(3 * coarse.num_elements, fine.num_nodes)
    )
    return _drop_small(matrix)


def build_averaging(coarse: TriMesh) -> sp.csr_matrix:
    """
    Оператор усреднения E_H разрывных аффинных функций в свободных вершинах.

    Args:
        coarse: Грубая сетка.

    Returns:
        sp.csr_matrix: Матрица (N_H, 3 M_H); граничные строки нулевые.
    """
    nodes = coarse.elements.ravel()
    weights = 1.0 / coarse.node_valence[nodes]
    weights[coarse.boundary_node_flags[nodes]] = 0.0
    matrix = sp.csr_matrix(
        (weights, (nodes, np.arange(nodes.size))),
        shape=(coarse.num_nodes, 3 * coarse.num_elements)
    )
    matrix.eliminate_zeros()
    return matrix


@dataclass(frozen=True, eq=False)
class InterpolationOperator:
    """
    Квазиинтерполяция I_H и вложение V_H -> V_h.

    Attributes:
        coarse_mesh: Грубая сетка.
        fine_mesh: Мелкая сетка.
        full: I_H на всех узлах, матрица (N_H, N_h) с нулевыми граничными строками.
        matrix: I_H на внутренних узлах (свободные грубые x свободные мелкие).
        prolongation: Вложение грубых P1 функций, матрица (N_h, N_H).
    """
    coarse_mesh: TriMesh
    fine_mesh: TriMesh
    full: sp.csr_matrix
    matrix: sp.csr_matrix
    prolongation: sp.csr_matrix

    @property
    def coarse_free(self) -> np.ndarray:
        return self.coarse_mesh.free_nodes

    @property
    def fine_free(self) -> np.ndarray:
        return self.fine_mesh.free_nodes

    @cached_property
    def constraint_rows(self) -> sp.csc_matrix:
        """Строки I_H свободных грубых узлов на всех мелких узлах (для выборки столбцов)."""
        return sp.csc_matrix(self.full[self.coarse_free])

    @cached_property
    def free_embedding(self) -> sp.csc_matrix:
        """Вложенные грубые шапочки внутренних узлов, матрица (N_h, n_free_H)."""
        return sp.csc_matrix(self.prolongation[:, self.coarse_free])

    def interpolate(self, fine_vector: np.ndarray) -> np.ndarray:
        """Применить I_H к мелкому вектору; результат - грубые узловые значения."""
        return self.full @ fine_vector

    def embed(self, coarse_vector: np.ndarray) -> np.ndarray:
        """Представить грубую P1 функцию на мелкой сетке."""
        return self.prolongation @ coarse_vector


def compose_interpolation(pair: NestedPair) -> InterpolationOperator:
    """
    Собрать I_H = E_H o Pi_H.

    Args:
        pair: Вложенная пара сеток.

    Returns:
        InterpolationOperator: Оператор с проекционным свойством I_H o P = Id.
    """
    projection = build_l2_projection(pair)
    averaging = build_averaging(pair.coarse)
    full = _drop_small(averaging @ projection)

    coarse_free = pair.coarse.free_nodes
    fine_free = pair.fine.free_nodes
    operator = InterpolationOperator(
        coarse_mesh=pair.coarse,
        fine_mesh=pair.fine,
        full=full,
        matrix=sp.csr_matrix(full[coarse_free][:, fine_free]),
        prolongation=build_prolongation(pair),
    )
    logger.debug(f"Composed I_H: {full.shape[0]}x{full.shape[1]}, nnz={full.nnz}")
    return operator


@dataclass(frozen=True, eq=False)
class KernelConstraints:
    """
    Строки I_H, ограниченные внутренними узлами патча.

    Attributes:
        matrix: Ограничения (n_constraints, n_interior).
        coarse_nodes: Грубые узлы, соответствующие строкам.
    """
    matrix: sp.csr_matrix
    coarse_nodes: np.ndarray

    @property
    def count(self) -> int:
        return int(self.coarse_nodes.size)


def kernel_constraints(op: InterpolationOperator, patch: Patch) -> KernelConstraints:
    """
    Ограничения I_H w = 0 для функций с носителем во внутренности патча.

    Включаются все грубые узлы, чья строка I_H касается внутренних узлов патча,
    а не только узлы, лежащие в патче геометрически.

    Args:
        op: Оператор квазиинтерполяции.
        patch: Патч той же пары сеток.

    Returns:
        KernelConstraints: Ненулевые строки ограничений.
    """
    rows = sp.csr_matrix(op.constraint_rows[:, patch.interior_global])
    touched = np.diff(rows.indptr) > 0
    return KernelConstraints(
        matrix=sp.csr_matrix(rows[touched]),
        coarse_nodes=op.coarse_free[touched],
    )
