"""
Индикатор E_{Q,T} изменения корректоров при замене коэффициента.

Сравниваются нормированные следом поля 𝔄 и 𝔄^u на патче; вес каждого грубого
элемента патча - наибольшее собственное число 2x2 матрицы энергий
функций chi_T e_j - grad q_T^(j).
"""

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from lod.fem.assembly import MatrixField
from lod.fem.mesh import NestedPair, Patch, TriMesh, build_patch
from lod.multiscale.corrector import CorrectorSet
from lod.utils.constants import ReportColumns
from lod.utils.exceptions import CorrectorError, IndicatorError
from lod.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class IndicatorRecord:
    """Значение индикатора на грубом элементе."""
    element: int
    center_x: float
    center_y: float
    indicator: float


def scale_coefficient(coefficient: MatrixField, patch: Patch, fine_mesh: TriMesh) -> MatrixField:
    """
    Поле a / mean_{N^m(T)} tr(a) на мелких элементах патча.

    Args:
        coefficient: Поле на всех мелких элементах.
        patch: Патч.
        fine_mesh: Мелкая сетка.

    Returns:
        MatrixField: Нормированное поле на patch.fine_elements (в том же порядке).

    Raises:
        IndicatorError: Если средний след неположителен.
    """
    local = coefficient.values[patch.fine_elements]
    areas = fine_mesh.element_areas[patch.fine_elements]
    trace_mean = float(np.sum(areas * np.trace(local, axis1=1, axis2=2)) / np.sum(areas))
    if not trace_mean > 0:
        raise IndicatorError(
            f"Non-positive trace average {trace_mean:.3e} on the patch of element {patch.center_element}"
        )
    return MatrixField(local / trace_mean)


def compute_indicator(pair: NestedPair, element: int, layers: int, coefficient: MatrixField,
                      coefficient_u: MatrixField, correctors: CorrectorSet) -> float:
    """
    Вычислить E_{Q,T}.

    E^2 = sum_{T' in N^m(T)} max_{K in T'} ||a_u^ - a^||_2^2 * mu_max(T'), где mu_max -
    наибольшее собственное число M(T')/|T|,
    M(T')[j,k] = int_{T'} (chi_T e_j - grad q^(j)) . (chi_T e_k - grad q^(k)).

    Args:
        pair: Вложенная пара сеток.
        element: Грубый элемент T.
        layers: Число слоёв m.
        coefficient: Поле 𝔄, для которого вычислены корректоры.
        coefficient_u: Сравниваемое поле 𝔄^u.
        correctors: Корректоры поля 𝔄.

    Returns:
        float: Неотрицательное значение индикатора.

    Raises:
        CorrectorError: Если корректор элемента отсутствует.
    """
    if correctors.layers != layers or element >= len(correctors.correctors):
        raise CorrectorError(f"No corrector with m={layers} for element {element}", element=element)
    corrector = correctors.correctors[element]
    if corrector.element != element:
        raise CorrectorError(f"Corrector set is not ordered by element at {element}", element=element)

    fine = pair.fine
    patch = build_patch(pair, element, layers)
    scaled = scale_coefficient(coefficient, patch, fine).values
    scaled_u = scale_coefficient(coefficient_u, patch, fine).values
    difference = np.linalg.norm(scaled_u - scaled, ord=2, axis=(1, 2))

    # градиенты q^(1), q^(2) на мелких элементах патча
    full = corrector.expand(fine.num_nodes)
    connectivity = fine.elements[patch.fine_elements]
    grads = np.einsum('ekd,jek->ejd', fine.gradients[patch.fine_elements], full[:, connectivity])

    owner = pair.coarse_element_of_fine_element[patch.fine_elements]
    inside = (owner == element).astype(float)
    functions = inside[:, None, None] * np.eye(2)[None, :, :] - grads
    areas = fine.element_areas[patch.fine_elements]
    coarse_area = pair.coarse.element_areas[element]

    total = 0.0
    for neighbour in patch.coarse_elements:
        mask = owner == neighbour
        gram = np.einsum('e,ejd,ekd->jk', areas[mask], functions[mask], functions[mask]) / coarse_area
        mu_max = float(np.linalg.eigvalsh(gram).max())
        total += float(difference[mask].max()) ** 2 * max(mu_max, 0.0)
    return float(np.sqrt(total))


def compute_indicators(pair: NestedPair, layers: int, coefficient: MatrixField, coefficient_u: MatrixField,
                       correctors: CorrectorSet, n_jobs: int = 1) -> List[IndicatorRecord]:
    """
    Индикатор E_{Q,T} для всех грубых элементов.

    Вместо недоступного 𝔄^u можно передать поле, построенное по LOD решению.

    Returns:
        List[IndicatorRecord]: Записи в порядке элементов.
    """
    values = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(compute_indicator)(pair, T, layers, coefficient, coefficient_u, correctors)
        for T in range(pair.coarse.num_elements)
    )
    centers = pair.coarse.barycenters
    records = [
        IndicatorRecord(element=T, center_x=float(centers[T, 0]), center_y=float(centers[T, 1]), indicator=value)
        for T, value in enumerate(values)
    ]
    logger.info(f"Computed {len(records)} indicators, max {max(values, default=0.0):.3e}")
    return records


def indicators_frame(records: List[IndicatorRecord]) -> pd.DataFrame:
    """Таблица индикаторов со столбцами element, center_x, center_y, indicator."""
    return pd.DataFrame([vars(record) for record in records], columns=ReportColumns.INDICATOR)


def recomputation_gap(correctors: CorrectorSet, correctors_u: CorrectorSet, element: int,
                      coarse_vector: np.ndarray, stiffness) -> float:
    """
    |(Q_{T,m} - Q^u_{T,m}) v_H|_1 для одного элемента.

    Args:
        correctors: Корректоры поля 𝔄.
        correctors_u: Корректоры поля 𝔄^u.
        element: Грубый элемент T.
        coarse_vector: v_H на всех грубых узлах.
        stiffness: Мелкая матрица жёсткости с единичным коэффициентом.

    Returns:
        float: Энергетическая полунорма разности.
    """
    coarse = correctors.pair.coarse
    gradient = coarse.gradients[element].T @ coarse_vector[coarse.elements[element]]
    size = correctors.pair.fine.num_nodes
    difference = gradient @ (correctors.correctors[element].expand(size) - correctors_u.correctors[element].expand(size))
    matrix = stiffness.matrix if hasattr(stiffness, "matrix") else stiffness
    return float(np.sqrt(max(difference @ (matrix @ difference), 0.0)))


def local_seminorm(coarse_mesh: TriMesh, element: int, coarse_vector: np.ndarray) -> float:
    """|v_H|_{1,T} для P1 функции на грубом элементе."""
    gradient = coarse_mesh.gradients[element].T @ coarse_vector[coarse_mesh.elements[element]]
    return float(np.sqrt(coarse_mesh.element_areas[element]) * np.linalg.norm(gradient))
