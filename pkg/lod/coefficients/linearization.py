"""
Модели линеаризации: Ньютон и Качанов.

Линеаризация в точке u* задаёт поэлементно постоянные 𝔄 и b_L, так что
A_L(x, u*, xi) = 𝔄 xi + b_L.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from lod.coefficients.base import NonlinearCoefficient, element_arguments
from lod.fem.assembly import MatrixField
from lod.fem.mesh import TriMesh
from lod.utils.exceptions import CoefficientError
from lod.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class LinearizedCoefficient:
    """
    Результат линеаризации.

    Attributes:
        matrix: Поле 𝔄 на элементах.
        offset: Поле b_L на элементах, форма (M, 2).
        model: Имя модели.
    """
    matrix: MatrixField
    offset: np.ndarray
    model: str

    def flux(self, grads: np.ndarray) -> np.ndarray:
        """A_L(x, u*, xi) = 𝔄 xi + b_L."""
        return np.einsum('nij,nj->ni', self.matrix.values, grads) + self.offset


class LinearizationModel:
    """
    Модель линеаризации коэффициента.

    newton:  𝔄 = D_xi A(x, u*, grad u*), b_L = A(x, u*, grad u*) - 𝔄 grad u*
    kacanov: 𝔄 = alpha(x, |grad u*|^2) Id, b_L = 0
    """

    KINDS = ("newton", "kacanov")

    def __init__(self, kind: str = "newton"):
        if kind not in self.KINDS:
            raise CoefficientError(f"Unknown linearization model '{kind}'. Available: {list(self.KINDS)}")
        self.kind = kind

    def __repr__(self) -> str:
        return f"LinearizationModel({self.kind!r})"

    def produce_from_fields(self, coefficient: NonlinearCoefficient, points: np.ndarray,
                            grads: np.ndarray, values: Optional[np.ndarray] = None) -> LinearizedCoefficient:
        """
        Линеаризовать по заданным поэлементным аргументам.

        Args:
            coefficient: Нелинейный коэффициент.
            points: Точки квадратуры (центры масс), форма (M, 2).
            grads: Градиенты точки линеаризации, форма (M, 2).
            values: Значения точки линеаризации (для квазилинейных коэффициентов).

        Returns:
            LinearizedCoefficient: Поля 𝔄 и b_L.

        Raises:
            UnsupportedLinearizationError: Модель Качанова для коэффициента не того вида.
        """
        grads = np.asarray(grads, dtype=float)
        if self.kind == "kacanov":
            factor = coefficient.kacanov_factor(points, grads, values)
            return LinearizedCoefficient(
                matrix=MatrixField.from_scalar(factor),
                offset=np.zeros_like(grads),
                model=self.kind,
            )

        jacobian = coefficient.jacobian(points, grads, values)
        # симметризация убирает ошибки округления
        jacobian = 0.5 * (jacobian + np.swapaxes(jacobian, 1, 2))
        offset = coefficient.flux(points, grads, values) - np.einsum('nij,nj->ni', jacobian, grads)
        return LinearizedCoefficient(matrix=MatrixField(jacobian), offset=offset, model=self.kind)

    def produce(self, coefficient: NonlinearCoefficient, mesh: TriMesh,
                u: Optional[np.ndarray] = None) -> LinearizedCoefficient:
        """
        Линеаризовать в P1 функции u* на сетке.

        Args:
            coefficient: Нелинейный коэффициент.
            mesh: Мелкая сетка.
            u: Узловые значения u* (None - ноль).

        Returns:
            LinearizedCoefficient: Поля на элементах сетки.
        """
        points, grads, values = element_arguments(mesh, u)
        linearized = self.produce_from_fields(coefficient, points, grads, values)
        linearized.matrix.validate()
        return linearized
