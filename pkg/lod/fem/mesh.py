"""
Модуль структурированных треугольных сеток.

Строит вложенные триангуляции Фридрихса-Келлера единичного квадрата,
m-слойные патчи элементов N^m(T) и отображения грубых индексов в мелкие.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from lod.utils.constants import Tolerances
from lod.utils.exceptions import MeshError
from lod.utils.helpers import atomic_write_text
from lod.utils.logger import get_logger

logger = get_logger(__name__)


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    Структурированная триангуляция [0,1]^2.

    Каждый квадрат сетки делится одной и той же диагональю от (i, j) к (i+1, j+1).
    Узлы нумеруются лексикографически (сначала x, затем y), элементы - по квадратам
    в том же порядке, нижний треугольник перед верхним.

    Attributes:
        divisions_per_side: Число делений стороны (1/H или 1/h).
        nodes: Координаты узлов, форма (N, 2).
        elements: Тройки индексов узлов против часовой стрелки, форма (M, 3).
        boundary_node_flags: Признак граничного узла.
        element_areas: Площади элементов.
    """
    divisions_per_side: int
    nodes: np.ndarray
    elements: np.ndarray
    boundary_node_flags: np.ndarray
    element_areas: np.ndarray

    @property
    def h(self) -> float:
        """Длина катета элемента."""
        return 1.0 / self.divisions_per_side

    @property
    def num_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def num_elements(self) -> int:
        return int(self.elements.shape[0])

    @cached_property
    def free_nodes(self) -> np.ndarray:
        """Индексы внутренних (свободных) узлов."""
        return np.flatnonzero(~self.boundary_node_flags)

    @cached_property
    def barycenters(self) -> np.ndarray:
        """Центры масс элементов, форма (M, 2)."""
        return self.nodes[self.elements].mean(axis=1)

    @cached_property
    def gradients(self) -> np.ndarray:
        """
        Градиенты барицентрических функций на каждом элементе.

        Returns:
            np.ndarray: Форма (M, 3, 2); gradients[e, k] = grad(phi_k) на элементе e.
        """
        p = self.nodes[self.elements]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        jac_inv = np.linalg.inv(jac)
        return np.stack([-jac_inv[:, 0] - jac_inv[:, 1], jac_inv[:, 0], jac_inv[:, 1]], axis=1)

    @cached_property
    def node_valence(self) -> np.ndarray:
        """Число элементов, содержащих узел."""
        return np.bincount(self.elements.ravel(), minlength=self.num_nodes)

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Разреженная матрица инцидентности элемент-узел, форма (M, N)."""
        rows = np.repeat(np.arange(self.num_elements), 3)
        data = np.ones(rows.size, dtype=np.int8)
        return sp.csr_matrix(
            (data, (rows, self.elements.ravel())),
            shape=(self.num_elements, self.num_nodes)
        )

    def element_gradients(self, u: np.ndarray) -> np.ndarray:
        """
        Поэлементно постоянные градиенты P1 функции.

        Args:
            u: Узловые значения, форма (N,).

        Returns:
            np.ndarray: Градиенты, форма (M, 2).
        """
        return np.einsum('ekd,ek->ed', self.gradients, u[self.elements])

    def element_values(self, u: np.ndarray) -> np.ndarray:
        """Значения P1 функции в центрах масс элементов."""
        return u[self.elements].mean(axis=1)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """
        Найти элементы, содержащие точки (для точек на рёбрах - детерминированный выбор).

        Args:
            points: Координаты, форма (n, 2).

        Returns:
            np.ndarray: Индексы элементов.
        """
        n = self.divisions_per_side
        scaled = np.asarray(points, dtype=float) * n
        cell = np.clip(np.floor(scaled), 0, n - 1).astype(np.int64)
        local = scaled - cell
        upper = local[:, 1] > local[:, 0] + Tolerances.BARYCENTRIC
        return 2 * (cell[:, 1] * n + cell[:, 0]) + upper.astype(np.int64)

    def barycentric(self, element: np.ndarray, points: np.ndarray) -> np.ndarray:
        """
        Барицентрические координаты точек относительно заданных элементов.

        Args:
            element: Индексы элементов, форма (n,).
            points: Координаты, форма (n, 2).

        Returns:
            np.ndarray: Координаты, форма (n, 3).
        """
        origin = self.nodes[self.elements[element, 0]]
        grads = self.gradients[element]
        lam = np.einsum('nkd,nd->nk', grads, points - origin)
        lam[:, 0] += 1.0
        return lam

    def to_text(self) -> str:
        """
        Текстовый дамп сетки: одна запись на строку.

        Returns:
            str: Строки "node i x y b" и "element e a b c".
        """
        lines = [f"mesh {self.divisions_per_side} {self.num_nodes} {self.num_elements}"]
        for idx, (x, y) in enumerate(self.nodes):
            lines.append(f"node {idx} {x:.17g} {y:.17g} {int(self.boundary_node_flags[idx])}")
        for idx, (a, b, c) in enumerate(self.elements):
            lines.append(f"element {idx} {a} {b} {c}")
        return "\n".join(lines) + "\n"


def build_mesh(divisions_per_side: int) -> TriMesh:
    """
    Построить триангуляцию Фридрихса-Келлера единичного квадрата.

    Args:
        divisions_per_side: Число делений стороны (степень двойки).

    Returns:
        TriMesh: Сетка с (n+1)^2 узлами и 2n^2 элементами.

    Raises:
        MeshError: Если число делений не является положительной степенью двойки.
    """
    n = int(divisions_per_side)
    if n != divisions_per_side or not _is_power_of_two(n):
        raise MeshError(f"divisions_per_side must be a positive power of two, got {divisions_per_side!r}")

    coords = np.arange(n + 1) / n
    xx, yy = np.meshgrid(coords, coords, indexing='xy')
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing='xy')
    ii, jj = ii.ravel(), jj.ravel()
    boundary = (ii == 0) | (ii == n) | (jj == 0) | (jj == n)

    ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing='xy')
    a = (cj * (n + 1) + ci).ravel()
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3).astype(np.int64)

    p = nodes[elements]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    mesh = TriMesh(
        divisions_per_side=n,
        nodes=nodes,
        elements=elements,
        boundary_node_flags=boundary,
        element_areas=areas,
    )
    logger.debug(f"Built mesh n={n}: {mesh.num_nodes} nodes, {mesh.num_elements} elements")
    return mesh


def dump_mesh(mesh: TriMesh, path: str) -> None:
    """Записать текстовый дамп сетки (для дифференциального тестирования)."""
    atomic_write_text(path, mesh.to_text())


@dataclass(frozen=True, eq=False)
class NestedPair:
    """
    Пара вложенных сеток T_H и T_h.

    Attributes:
        coarse: Грубая сетка.
        fine: Мелкая сетка.
        fine_elements_of_coarse_element: Мелкие элементы каждого грубого, форма (M_H, r^2).
        fine_node_of_coarse_node: Мелкий индекс каждого грубого узла.
    """
    coarse: TriMesh
    fine: TriMesh
    fine_elements_of_coarse_element: np.ndarray
    fine_node_of_coarse_node: np.ndarray

    @property
    def refinement(self) -> int:
        """Отношение H/h."""
        return self.fine.divisions_per_side // self.coarse.divisions_per_side

    @cached_property
    def coarse_element_of_fine_element(self) -> np.ndarray:
        """Обратное отображение: грубый элемент каждого мелкого."""
        owner = np.empty(self.fine.num_elements, dtype=np.int64)
        for T, fine_elements in enumerate(self.fine_elements_of_coarse_element):
            owner[fine_elements] = T
        return owner


def build_nested_pair(coarse: TriMesh, fine: TriMesh) -> NestedPair:
    """
    Построить вложенную пару сеток.

    Args:
        coarse: Грубая сетка.
        fine: Мелкая сетка.

    Returns:
        NestedPair: Пара с отображениями грубых индексов в мелкие.

    Raises:
        MeshError: Если сетки не вложены.
    """
    n_H, n_h = coarse.divisions_per_side, fine.divisions_per_side
    if n_h % n_H != 0:
        raise MeshError(f"Fine divisions {n_h} are not a multiple of coarse divisions {n_H}")
    r = n_h // n_H

    owner = coarse.locate(fine.barycenters)
    order = np.argsort(owner, kind='stable')
    counts = np.bincount(owner, minlength=coarse.num_elements)
    if np.any(counts != r * r):
        raise MeshError("Fine elements do not tile the coarse elements uniformly")
    fine_elements = order.reshape(coarse.num_elements, r * r)

    tiled_area = fine.element_areas[fine_elements].sum(axis=1)
    if not np.allclose(tiled_area, coarse.element_areas, rtol=Tolerances.AREA, atol=0.0):
        raise MeshError("Fine elements do not tile the coarse elements exactly")

    coarse_ij = np.rint(coarse.nodes * n_H).astype(np.int64)
    fine_nodes = coarse_ij[:, 1] * r * (n_h + 1) + coarse_ij[:, 0] * r

    logger.info(f"Built nested pair H=1/{n_H}, h=1/{n_h} (refinement {r})")
    return NestedPair(
        coarse=coarse,
        fine=fine,
        fine_elements_of_coarse_element=fine_elements,
        fine_node_of_coarse_node=fine_nodes,
    )


def element_patch(mesh: TriMesh, element: int, layers: int) -> np.ndarray:
    """
    Элементы m-слойного патча N^m(T) по вершинному соседству.

    Args:
        mesh: Сетка.
        element: Индекс центрального элемента.
        layers: Число слоёв m >= 0.

    Returns:
        np.ndarray: Отсортированные индексы элементов.

    Raises:
        MeshError: При невалидном индексе или отрицательном m.
    """
    if not 0 <= element < mesh.num_elements:
        raise MeshError(f"Element index {element} out of range [0, {mesh.num_elements})")
    if layers < 0:
        raise MeshError(f"Number of layers must be nonnegative, got {layers}")

    incidence = mesh.incidence
    in_patch = np.zeros(mesh.num_elements, dtype=bool)
    in_patch[element] = True
    for _ in range(layers):
        node_mask = np.asarray(incidence[in_patch].sum(axis=0)).ravel() > 0
        grown = np.asarray(incidence @ node_mask.astype(np.int64)).ravel() > 0
        if grown.sum() == in_patch.sum():
            break
        in_patch = grown
    return np.flatnonzero(in_patch)


def overlap_constant(mesh: TriMesh, layers: int) -> int:
    """
    Максимальное число элементов m-слойного патча (C_ol,m).

    Args:
        mesh: Сетка.
        layers: Число слоёв m.

    Returns:
        int: max_T card{K : K в N^m(T)}.
    """
    return max(element_patch(mesh, T, layers).size for T in range(mesh.num_elements))


@dataclass(frozen=True, eq=False)
class Patch:
    """
    m-слойный патч грубого элемента и его мелкие степени свободы.

    Attributes:
        center_element: Центральный грубый элемент T.
        layers: Число слоёв m.
        coarse_elements: Отсортированные грубые элементы N^m(T).
        fine_elements: Отсортированные мелкие элементы патча.
        fine_nodes: Отсортированные глобальные мелкие узлы патча (локальный индекс = позиция).
        interior_fine_nodes: Локальные индексы узлов вне границы патча и вне границы области.
    """
    center_element: int
    layers: int
    coarse_elements: np.ndarray
    fine_elements: np.ndarray
    fine_nodes: np.ndarray
    interior_fine_nodes: np.ndarray

    @property
    def interior_global(self) -> np.ndarray:
        """Глобальные индексы внутренних узлов патча."""
        return self.fine_nodes[self.interior_fine_nodes]

    def fine_node_index_map(self, global_nodes: np.ndarray) -> np.ndarray:
        """
        Отображение глобальных мелких узлов в локальные узлы патча.

        Args:
            global_nodes: Глобальные индексы узлов, лежащих в патче.

        Returns:
            np.ndarray: Позиции в fine_nodes той же формы.

        Raises:
            MeshError: Если какой-либо узел не принадлежит патчу.
        """
        global_nodes = np.asarray(global_nodes, dtype=np.int64)
        local = np.searchsorted(self.fine_nodes, global_nodes)
        clipped = np.minimum(local, self.fine_nodes.size - 1)
        if np.any(self.fine_nodes[clipped] != global_nodes):
            raise MeshError(f"Nodes outside patch of element {self.center_element}")
        return local


def build_patch(pair: NestedPair, element: int, layers: int) -> Patch:
    """
    Построить патч N^m(T) с разметкой внутренних мелких узлов.

    Args:
        pair: Вложенная пара сеток.
        element: Грубый элемент T.
        layers: Число слоёв m.

    Returns:
        Patch: Патч элемента.
    """
    coarse_elements = element_patch(pair.coarse, element, layers)
    fine_elements = np.sort(pair.fine_elements_of_coarse_element[coarse_elements].ravel())

    fine = pair.fine
    patch_connectivity = fine.elements[fine_elements].ravel()
    fine_nodes = np.unique(patch_connectivity)
    count_in_patch = np.bincount(patch_connectivity, minlength=fine.num_nodes)[fine_nodes]

    # узел внутренний, если все содержащие его элементы лежат в патче
    interior = (count_in_patch == fine.node_valence[fine_nodes]) & ~fine.boundary_node_flags[fine_nodes]

    return Patch(
        center_element=int(element),
        layers=int(layers),
        coarse_elements=coarse_elements,
        fine_elements=fine_elements,
        fine_nodes=fine_nodes,
        interior_fine_nodes=np.flatnonzero(interior),
    )
