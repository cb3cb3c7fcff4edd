"""
Сборка P1 конечных элементов.

Матрица жёсткости с матричным коэффициентом, матрица масс и вектор нагрузки.
Все интегралы по x берутся одноточечной квадратурой в центре масс мелкого элемента.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from lod.fem.linalg import SparseOperator
from lod.fem.mesh import TriMesh
from lod.utils.constants import Tolerances
from lod.utils.exceptions import AssemblyError
from lod.utils.logger import get_logger

logger = get_logger(__name__)

REFERENCE_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]])

ScalarField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MatrixField:
    """
    Поэлементно постоянное поле симметричных матриц 2x2.

    Attributes:
        values: Значения на элементах, форма (M, 2, 2).
    """
    values: np.ndarray

    @classmethod
    def identity(cls, num_elements: int) -> "MatrixField":
        return cls(np.broadcast_to(np.eye(2), (num_elements, 2, 2)).copy())

    @classmethod
    def from_scalar(cls, scalars: np.ndarray) -> "MatrixField":
        """Поле c(x) Id из скалярных значений на элементах."""
        return cls(np.asarray(scalars, dtype=float)[:, None, None] * np.eye(2))

    @property
    def num_elements(self) -> int:
        return int(self.values.shape[0])

    def scaled(self, factor: float) -> "MatrixField":
        return MatrixField(self.values * factor)

    def restrict(self, elements: np.ndarray) -> "MatrixField":
        return MatrixField(self.values[elements])

    def eigenvalue_bounds(self) -> Tuple[float, float]:
        """Минимальное и максимальное собственное значение по всем элементам."""
        eigenvalues = np.linalg.eigvalsh(self.values)
        return float(eigenvalues.min()), float(eigenvalues.max())

    def validate(self) -> None:
        """
        Проверить конечность и симметричность значений.

        Raises:
            AssemblyError: Если значение не конечно или несимметрично.
        """
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(self.values).all(axis=(1, 2)))[0])
            raise AssemblyError(f"Non-finite coefficient value on element {bad}")

        scale = max(float(np.abs(self.values).max()), np.finfo(float).tiny)
        defect = np.abs(self.values[:, 0, 1] - self.values[:, 1, 0])
        if np.any(defect > Tolerances.SYMMETRY * scale):
            bad = int(np.argmax(defect))
            raise AssemblyError(f"Non-symmetric coefficient value on element {bad}")


def _scatter(connectivity: np.ndarray, local: np.ndarray, size: int) -> sp.csr_matrix:
    """Собрать глобальную матрицу из локальных (n, 3, 3) блоков."""
    rows = np.repeat(connectivity, 3, axis=1).ravel()
    cols = np.tile(connectivity, (1, 3)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(size, size))


def element_stiffness(mesh: TriMesh, field: Optional[MatrixField] = None,
                      elements: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Локальные матрицы жёсткости |K| (A_K grad phi_j) . grad phi_i.

    Args:
        mesh: Сетка.
        field: Поле коэффициентов на всех элементах сетки (None - единичное).
        elements: Подмножество элементов (None - все).

    Returns:
        np.ndarray: Локальные матрицы, форма (n, 3, 3).
    """
    if elements is None:
        elements = np.arange(mesh.num_elements)
    grads = mesh.gradients[elements]
    areas = mesh.element_areas[elements]
    if field is None:
        return areas[:, None, None] * np.einsum('eid,ejd->eij', grads, grads)
    coef = field.values[elements]
    return areas[:, None, None] * np.einsum('eid,edf,ejf->eij', grads, coef, grads)


def assemble_stiffness(mesh: TriMesh, field: Optional[MatrixField] = None,
                       elements: Optional[np.ndarray] = None) -> SparseOperator:
    """
    Собрать матрицу жёсткости A_ij = sum_K |K| (A_K grad phi_j) . grad phi_i.

    Args:
        mesh: Сетка.
        field: Поле симметричных матриц (None - единичное поле).
        elements: Подмножество элементов для сборки (None - все).

    Returns:
        SparseOperator: Симметричный оператор на всех узлах сетки.

    Raises:
        AssemblyError: Если поле несимметрично или не конечно.
    """
    if field is not None:
        if field.num_elements != mesh.num_elements:
            raise AssemblyError(
                f"Coefficient field has {field.num_elements} values, mesh has {mesh.num_elements} elements"
            )
        field.validate()
    if elements is None:
        elements = np.arange(mesh.num_elements)

    local = element_stiffness(mesh, field, elements)
    matrix = _scatter(mesh.elements[elements], local, mesh.num_nodes)
    return SparseOperator(matrix, symmetric=True)


def assemble_mass(mesh: TriMesh) -> SparseOperator:
    """
    Собрать P1 матрицу масс.

    Args:
        mesh: Сетка.

    Returns:
        SparseOperator: Симметричная матрица масс (сумма элементов равна |Omega|).
    """
    local = mesh.element_areas[:, None, None] / 12.0 * REFERENCE_MASS
    return SparseOperator(_scatter(mesh.elements, local, mesh.num_nodes), symmetric=True)


def assemble_load(mesh: TriMesh, f: ScalarField, rule: str = "barycenter") -> np.ndarray:
    """
    Собрать вектор нагрузки b_i = (f, phi_i).

    Args:
        mesh: Сетка.
        f: Скалярная функция точек (n, 2) -> (n,).
        rule: "barycenter" (одна точка) или "edge_midpoint" (три середины рёбер).

    Returns:
        np.ndarray: Вектор нагрузки на всех узлах.

    Raises:
        AssemblyError: Если f принимает неконечные значения или правило неизвестно.
    """
    areas = mesh.element_areas

    if rule == "barycenter":
        values = np.asarray(f(mesh.barycenters), dtype=float)
        _check_finite(values)
        local = np.repeat((areas * values / 3.0)[:, None], 3, axis=1)
    elif rule == "edge_midpoint":
        p = mesh.nodes[mesh.elements]
        # середина ребра напротив вершины k
        midpoints = [(p[:, 1] + p[:, 2]) / 2, (p[:, 0] + p[:, 2]) / 2, (p[:, 0] + p[:, 1]) / 2]
        values = np.stack([np.asarray(f(mid), dtype=float) for mid in midpoints], axis=1)
        _check_finite(values)
        # phi_i = 1/2 в серединах прилежащих рёбер, 0 на противоположном
        local = areas[:, None] / 3.0 * 0.5 * (values.sum(axis=1, keepdims=True) - values)
    else:
        raise AssemblyError(f"Unknown quadrature rule '{rule}'")

    return np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.num_nodes)


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise AssemblyError("Right-hand side takes non-finite values")
