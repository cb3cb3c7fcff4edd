"""
Разреженные операторы и прямые решатели.

Хранение матриц в CSR, переиспользуемая факторизация (splu), исключение
условий Дирихле и диагностика вырожденных систем.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from lod.utils.constants import Tolerances
from lod.utils.exceptions import SingularSystemError
from lod.utils.logger import get_logger

logger = get_logger(__name__)

# порог размерности для плотной диагностики ведущего элемента
_DENSE_PIVOT_LIMIT = 4000


def _find_singular_pivot(matrix: sp.spmatrix) -> Optional[int]:
    """
    Найти индекс нулевого ведущего элемента вырожденной матрицы.

    Args:
        matrix: Квадратная разреженная матрица.

    Returns:
        Optional[int]: Индекс ведущего элемента или None, если не удалось определить.
    """
    csr = sp.csr_matrix(matrix)
    empty_rows = np.flatnonzero(np.diff(csr.indptr) == 0)
    if empty_rows.size:
        return int(empty_rows[0])

    if csr.shape[0] > _DENSE_PIVOT_LIMIT:
        return None

    dense = csr.toarray()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, _ = sla.lu_factor(dense, check_finite=False)
    diag = np.abs(np.diag(lu))
    scale = max(np.abs(dense).max(), 1.0)
    small = np.flatnonzero(diag <= scale * np.finfo(float).eps * dense.shape[0])
    return int(small[0]) if small.size else None


class DirectFactorization:
    """
    Обёртка над разреженной LU-факторизацией.

    Одна факторизация переиспользуется для нескольких правых частей.
    Подходит для симметричных неопределённых систем (седловые точки корректоров).
    """

    def __init__(self, matrix: sp.spmatrix, label: str = "operator"):
        """
        Факторизовать матрицу.

        Args:
            matrix: Квадратная разреженная матрица.
            label: Имя системы для сообщений об ошибках.

        Raises:
            SingularSystemError: Если матрица вырождена.
        """
        self.shape = matrix.shape
        self.label = label
        self._lu = None
        if self.shape[0] == 0:
            return

        csc = sp.csc_matrix(matrix)
        try:
            self._lu = splu(csc)
        except RuntimeError as e:
            pivot = _find_singular_pivot(csc)
            raise SingularSystemError(
                f"Singular {label} of dimension {self.shape[0]} (pivot {pivot}): {e}",
                pivot_index=pivot
            ) from e

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """
        Решить систему для одной или нескольких правых частей.

        Args:
            rhs: Вектор (n,) или матрица (n, k).

        Returns:
            np.ndarray: Решение той же формы.

        Raises:
            SingularSystemError: Если решение содержит inf/NaN.
        """
        rhs = np.asarray(rhs, dtype=float)
        if self._lu is None:
            return np.zeros_like(rhs)

        solution = self._lu.solve(rhs)
        if not np.all(np.isfinite(solution)):
            raise SingularSystemError(f"Non-finite solution of {self.label}")
        return solution


@dataclass(eq=False)
class SparseOperator:
    """
    Разреженный оператор в формате CSR с ассоциированной факторизацией.

    Attributes:
        matrix: Матрица CSR.
        symmetric: Признак симметричности.
    """
    matrix: sp.csr_matrix
    symmetric: bool = False
    _factorization: Optional[DirectFactorization] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    def symmetry_defect(self) -> float:
        """max|a_ij - a_ji| / max|a|."""
        if self.matrix.nnz == 0:
            return 0.0
        diff = abs(self.matrix - self.matrix.T)
        return float(diff.max() / abs(self.matrix).max()) if diff.nnz else 0.0

    def restrict(self, index: np.ndarray) -> "SparseOperator":
        """Подматрица по строкам и столбцам index."""
        return SparseOperator(sp.csr_matrix(self.matrix[index][:, index]), self.symmetric)

    def factorize(self) -> DirectFactorization:
        """Получить (и закэшировать) факторизацию."""
        if self._factorization is None:
            self._factorization = DirectFactorization(self.matrix, label="sparse operator")
        return self._factorization

    def __matmul__(self, other):
        return self.matrix @ other


def factor_and_solve(op: SparseOperator, rhs: np.ndarray) -> np.ndarray:
    """
    Решить op x = rhs прямым методом с проверкой невязки.

    Args:
        op: Квадратный оператор.
        rhs: Правая часть (n,) или (n, k).

    Returns:
        np.ndarray: Решение.

    Raises:
        SingularSystemError: Если оператор вырожден.
    """
    solution = op.factorize().solve(rhs)

    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm > 0:
        residual = np.linalg.norm(op.matrix @ solution - rhs)
        if residual > Tolerances.SOLVE_RESIDUAL * rhs_norm:
            logger.warning(
                f"Direct solve residual {residual:.3e} exceeds {Tolerances.SOLVE_RESIDUAL:.0e}*||rhs||"
            )
    return solution


@dataclass(eq=False)
class ReducedSystem:
    """
    Система после исключения граничных узлов Дирихле.

    Attributes:
        operator: Оператор на свободных узлах.
        rhs: Правая часть на свободных узлах.
        free: Индексы свободных узлов.
        size: Полная размерность.
    """
    operator: SparseOperator
    rhs: np.ndarray
    free: np.ndarray
    size: int

    def expand(self, reduced_solution: np.ndarray) -> np.ndarray:
        """Вернуть полный вектор с нулями на границе."""
        full = np.zeros(self.size)
        full[self.free] = reduced_solution
        return full

    def solve(self) -> np.ndarray:
        """Решить редуцированную систему и вернуть полный вектор."""
        if self.free.size == 0:
            return np.zeros(self.size)
        return self.expand(factor_and_solve(self.operator, self.rhs))


def eliminate_dirichlet(op: SparseOperator, rhs: np.ndarray, boundary_flags: np.ndarray) -> ReducedSystem:
    """
    Исключить однородные условия Дирихле (удаление граничных строк и столбцов).

    Args:
        op: Полный оператор.
        rhs: Полная правая часть.
        boundary_flags: Признаки граничных узлов.

    Returns:
        ReducedSystem: Система на свободных узлах.
    """
    free = np.flatnonzero(~np.asarray(boundary_flags, dtype=bool))
    return ReducedSystem(
        operator=op.restrict(free),
        rhs=np.asarray(rhs, dtype=float)[free],
        free=free,
        size=op.dimension,
    )
