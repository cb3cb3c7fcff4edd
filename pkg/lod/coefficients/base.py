"""
Базовый класс нелинейных коэффициентов.

Предоставляет абстрактный интерфейс A(x, u, xi) с производными по xi и по u.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from lod.fem.mesh import TriMesh
from lod.utils.exceptions import UnsupportedLinearizationError


@dataclass
class CoefficientMetadata:
    """Параметры коэффициента и выборочные оценки констант (заполняются пробой)."""
    name: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    lower_bound: Optional[float] = None          # lambda
    upper_bound: Optional[float] = None          # Lambda
    data_bound: Optional[float] = None           # C_0 = max |A(x, 0)|
    jacobian_lipschitz: Optional[float] = None   # L_A


def element_arguments(mesh: TriMesh, u: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Аргументы коэффициента на элементах сетки для P1 функции u.

    Args:
        mesh: Сетка.
        u: Узловые значения (None - нулевая функция).

    Returns:
        Tuple: Центры масс (M, 2), градиенты (M, 2), значения в центрах масс (M,).
    """
    if u is None:
        return mesh.barycenters, np.zeros((mesh.num_elements, 2)), np.zeros(mesh.num_elements)
    return mesh.barycenters, mesh.element_gradients(u), mesh.element_values(u)


class NonlinearCoefficient(ABC):
    """
    Абстрактный нелинейный коэффициент A(x, u, xi).

    Все методы векторизованы: points (n, 2), grads (n, 2), values (n,) или None.
    Коэффициенты без зависимости от u игнорируют values.
    """

    name: str = "coefficient"

    def __init__(self, **parameters):
        self.metadata = CoefficientMetadata(name=self.name, parameters=dict(parameters))

    @abstractmethod
    def flux(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Значения A(x, u, xi).

        Returns:
            np.ndarray: Форма (n, 2).
        """
        pass

    @abstractmethod
    def jacobian(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Производная D_xi A(x, u, xi).

        Returns:
            np.ndarray: Симметричные матрицы, форма (n, 2, 2).
        """
        pass

    @staticmethod
    @abstractmethod
    def get_description() -> str:
        """Читаемое описание коэффициента."""
        pass

    @property
    def depends_on_value(self) -> bool:
        """Зависит ли A от значения u (квазилинейный случай)."""
        return False

    def value_derivative(self, points: np.ndarray, grads: np.ndarray,
                         values: Optional[np.ndarray] = None) -> np.ndarray:
        """Производная d_u A, форма (n, 2); ноль для коэффициентов без зависимости от u."""
        return np.zeros_like(np.asarray(grads, dtype=float))

    def kacanov_factor(self, points: np.ndarray, grads: np.ndarray,
                       values: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Скаляр alpha(x, |xi|^2) для коэффициентов вида A = alpha(x, |xi|^2) xi.

        Raises:
            UnsupportedLinearizationError: Если коэффициент не имеет такой формы.
        """
        raise UnsupportedLinearizationError(
            f"Coefficient '{self.name}' is not of the form alpha(x, |xi|^2) xi; Kacanov model unavailable"
        )

    def describe(self) -> Dict[str, Any]:
        """Имя, описание и параметры для отчётов."""
        return {
            'name': self.name,
            'description': self.get_description(),
            'parameters': dict(self.metadata.parameters),
        }
