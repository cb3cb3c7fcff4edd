"""
Вычислимые оценки ошибки линеаризации.

Точные величины ошибки линеаризации - супремумы по ядру I_H и не вычисляются;
вместо них в журнал стратегии пишутся оценки сверху через выборочные константы.
"""

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.coefficients.linearization import LinearizedCoefficient
from lod.fem.mesh import TriMesh


@dataclass(frozen=True)
class LinearizationSurrogates:
    """
    Attributes:
        kacanov: (Lambda + Lambda_L) |v - u*|_1.
        newton: L_A ||grad(v - u*)||_inf |v - u*|_1.
        data_bound: C_0 + ||b_L(., grad u*)||_0.
        distance: |v - u*|_1.
    """
    kacanov: float
    newton: float
    data_bound: float
    distance: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _known(value) -> float:
    return float("nan") if value is None else float(value)


def linearization_surrogates(mesh: TriMesh, coefficient: NonlinearCoefficient,
                             linearized: LinearizedCoefficient, solution: np.ndarray,
                             point: np.ndarray) -> LinearizationSurrogates:
    """
    Оценки ошибки линеаризации для решения v при точке линеаризации u*.

    Константы Lambda, L_A и C_0 берутся из coefficient.metadata (после пробы);
    если проба не выполнялась, соответствующие оценки равны nan.

    Args:
        mesh: Мелкая сетка.
        coefficient: Нелинейный коэффициент.
        linearized: Линеаризация в u*.
        solution: Решение v на мелкой сетке.
        point: Точка линеаризации u* на мелкой сетке.

    Returns:
        LinearizationSurrogates: Оценки.
    """
    metadata = coefficient.metadata
    gradient = mesh.element_gradients(solution - point)
    areas = mesh.element_areas

    distance = float(np.sqrt(np.sum(areas * np.einsum('ed,ed->e', gradient, gradient))))
    gradient_max = float(np.linalg.norm(gradient, axis=1).max()) if gradient.size else 0.0
    _, upper_linearized = linearized.matrix.eigenvalue_bounds()
    offset_norm = float(np.sqrt(np.sum(areas * np.einsum('ed,ed->e', linearized.offset, linearized.offset))))

    return LinearizationSurrogates(
        kacanov=(_known(metadata.upper_bound) + upper_linearized) * distance,
        newton=_known(metadata.jacobian_lipschitz) * gradient_max * distance,
        data_bound=_known(metadata.data_bound) + offset_norm,
        distance=distance,
    )
