"""
Модуль элементных корректоров.

Для каждого грубого элемента T решается седловая задача на патче N^m(T):
жёсткость с коэффициентом 𝔄 на внутренних мелких узлах патча плюс ограничения
I_H w = 0 через множители Лагранжа. Из корректоров собирается базис V_{H,m}.
"""

import os
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from joblib import Parallel, delayed

from lod.fem.assembly import MatrixField, assemble_stiffness, element_stiffness
from lod.fem.linalg import DirectFactorization
from lod.fem.mesh import NestedPair, Patch, build_patch
from lod.multiscale.interpolation import InterpolationOperator, kernel_constraints
from lod.utils.constants import FileConfig, Tolerances
from lod.utils.exceptions import CorrectorError, SingularSystemError
from lod.utils.helpers import array_digest
from lod.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ElementCorrector:
    """
    Корректоры q_{T,m}^{(1)}, q_{T,m}^{(2)} одного грубого элемента.

    Attributes:
        element: Грубый элемент T.
        layers: Число слоёв m.
        fine_nodes: Глобальные внутренние мелкие узлы патча (носитель).
        vectors: Значения в fine_nodes, форма (2, n).
        coefficient_hash: Хеш поля 𝔄 на мелких элементах патча.
    """
    element: int
    layers: int
    fine_nodes: np.ndarray
    vectors: np.ndarray
    coefficient_hash: str

    def expand(self, size: int) -> np.ndarray:
        """Корректоры как полные мелкие векторы, форма (2, size)."""
        full = np.zeros((2, size))
        full[:, self.fine_nodes] = self.vectors
        return full


@dataclass(eq=False)
class CorrectorProblem:
    """Собранная седловая задача одного патча (передаётся в рабочие процессы)."""
    element: int
    layers: int
    fine_nodes: np.ndarray
    saddle: sp.csc_matrix
    rhs: np.ndarray
    coefficient_hash: str


def _independent_rows(constraints: sp.csr_matrix) -> np.ndarray:
    """
    Индексы линейно независимых строк ограничений (QR с выбором столбца).

    Зависимые строки с нулевой правой частью не меняют множество решений,
    но делают седловую матрицу вырожденной.
    """
    count = constraints.shape[0]
    if count == 0:
        return np.arange(0)
    _, r, pivots = sla.qr(constraints.toarray().T, mode='economic', pivoting=True)
    diagonal = np.abs(np.diag(r))
    if diagonal.size == 0 or diagonal[0] == 0.0:
        return np.arange(0)
    rank = int(np.count_nonzero(diagonal > Tolerances.KERNEL * diagonal[0]))
    return np.sort(pivots[:rank])


def build_corrector_problem(pair: NestedPair, patch: Patch, coefficient: MatrixField,
                            op: InterpolationOperator) -> CorrectorProblem:
    """
    Собрать седловую систему [S C^T; C 0] и две правые части для патча.

    Args:
        pair: Вложенная пара сеток.
        patch: Патч N^m(T).
        coefficient: Поле 𝔄 на мелких элементах.
        op: Оператор квазиинтерполяции.

    Returns:
        CorrectorProblem: Задача патча.
    """
    fine = pair.fine
    interior = patch.interior_global
    n = interior.size

    # локальный узел патча -> номер внутренней степени свободы (-1 на границе патча)
    unknown = np.full(patch.fine_nodes.size, -1, dtype=np.int64)
    unknown[patch.interior_fine_nodes] = np.arange(n)

    # жёсткость патча на внутренних узлах
    local = element_stiffness(fine, coefficient, patch.fine_elements)
    connectivity = unknown[patch.fine_node_index_map(fine.elements[patch.fine_elements])]
    rows = np.repeat(connectivity, 3, axis=1).ravel()
    cols = np.tile(connectivity, (1, 3)).ravel()
    keep = (rows >= 0) & (cols >= 0)
    stiffness = sp.csr_matrix((local.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n))

    # r_{j,i} = sum_{K in T} |K| (𝔄_K e_j) . grad phi_i
    inside = pair.fine_elements_of_coarse_element[patch.center_element]
    grads = fine.gradients[inside]
    flux = fine.element_areas[inside, None, None] * np.einsum('kid,kdj->kij', grads, coefficient.values[inside])
    target = unknown[patch.fine_node_index_map(fine.elements[inside])].ravel()
    mask = target >= 0
    rhs_fine = np.zeros((n, 2))
    for j in range(2):
        rhs_fine[:, j] = np.bincount(target[mask], weights=flux[..., j].ravel()[mask], minlength=n)

    constraints = kernel_constraints(op, patch).matrix
    independent = _independent_rows(constraints)
    if independent.size < constraints.shape[0]:
        logger.debug(
            f"Element {patch.center_element}: dropped {constraints.shape[0] - independent.size} "
            f"dependent kernel constraints"
        )
    constraints = constraints[independent]

    if constraints.shape[0]:
        saddle = sp.bmat([[stiffness, constraints.T], [constraints, None]], format='csc')
    else:
        saddle = sp.csc_matrix(stiffness)
    rhs = np.vstack([rhs_fine, np.zeros((constraints.shape[0], 2))])

    return CorrectorProblem(
        element=int(patch.center_element),
        layers=int(patch.layers),
        fine_nodes=interior,
        saddle=saddle,
        rhs=rhs,
        coefficient_hash=array_digest(coefficient.values[patch.fine_elements]),
    )


def solve_corrector_problem(problem: CorrectorProblem) -> ElementCorrector:
    """
    Решить седловую задачу патча (одна факторизация на обе правые части).

    Raises:
        CorrectorError: Если седловая матрица вырождена.
    """
    n = problem.fine_nodes.size
    if n == 0:
        vectors = np.zeros((2, 0))
    else:
        try:
            factorization = DirectFactorization(problem.saddle, label=f"corrector saddle point of element {problem.element}")
            vectors = factorization.solve(problem.rhs)[:n].T
        except SingularSystemError as e:
            raise CorrectorError(str(e), element=problem.element) from e

    return ElementCorrector(
        element=problem.element,
        layers=problem.layers,
        fine_nodes=problem.fine_nodes,
        vectors=np.ascontiguousarray(vectors),
        coefficient_hash=problem.coefficient_hash,
    )


def solve_element_corrector(pair: NestedPair, patch: Patch, coefficient: MatrixField,
                            op: InterpolationOperator) -> ElementCorrector:
    """
    Вычислить усечённые корректоры элемента T на патче.

    Args:
        pair: Вложенная пара сеток.
        patch: Патч N^m(T).
        coefficient: Симметричное положительно определённое поле 𝔄 на мелких элементах.
        op: Оператор квазиинтерполяции.

    Returns:
        ElementCorrector: Корректоры с носителем во внутренних узлах патча.

    Raises:
        CorrectorError: Если седловая задача вырождена.
    """
    corrector = solve_corrector_problem(build_corrector_problem(pair, patch, coefficient, op))

    if corrector.fine_nodes.size:
        constraints = kernel_constraints(op, patch).matrix
        defect = np.abs(constraints @ corrector.vectors.T).max() if constraints.shape[0] else 0.0
        if defect > Tolerances.KERNEL:
            logger.warning(f"Element {patch.center_element}: kernel defect {defect:.3e}")
    return corrector


class CorrectorCache:
    """
    Кэш корректоров в памяти.

    Ключ - (деления грубой сетки, деления мелкой сетки, T, m, хеш 𝔄 на патче),
    поэтому стратегии с совпадающим на патче коэффициентом переиспользуют решения.
    """

    def __init__(self):
        self._store: Dict[Tuple[int, int, int, int, str], ElementCorrector] = {}
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(pair: NestedPair, element: int, layers: int, coefficient_hash: str) -> tuple:
        return (pair.coarse.divisions_per_side, pair.fine.divisions_per_side, element, layers, coefficient_hash)

    def get(self, key: tuple) -> Optional[ElementCorrector]:
        corrector = self._store.get(key)
        if corrector is None:
            self.misses += 1
        else:
            self.hits += 1
        return corrector

    def put(self, key: tuple, corrector: ElementCorrector) -> None:
        self._store[key] = corrector

    def __len__(self) -> int:
        return len(self._store)


@dataclass(eq=False)
class CorrectorSet:
    """
    Корректоры всех грубых элементов и базис V_{H,m}.

    Attributes:
        pair: Вложенная пара сеток.
        op: Оператор квазиинтерполяции.
        layers: Число слоёв m.
        correctors: Корректоры в порядке грубых элементов.
        coefficient_hash: Хеш глобального поля 𝔄.
        solve_count: Число решённых (не взятых из кэша) задач патчей.
        wall_time: Время вычисления в секундах.
    """
    pair: NestedPair
    op: InterpolationOperator
    layers: int
    correctors: Tuple[ElementCorrector, ...]
    coefficient_hash: str = ""
    solve_count: int = 0
    wall_time: float = 0.0

    @cached_property
    def correction_matrix(self) -> sp.csc_matrix:
        """
        Матрица Q_m, форма (N_h, N_H): (Q_m v)= sum_T sum_j (d_j v|_T) q_T^(j).
        """
        coarse = self.pair.coarse
        gradients = coarse.gradients
        rows, cols, vals = [], [], []
        for corrector in self.correctors:
            T = corrector.element
            n = corrector.fine_nodes.size
            if n == 0:
                continue
            # столбец вершины a: sum_j q^(j) * d_j lambda_a|_T
            contributions = gradients[T] @ corrector.vectors
            for a in range(3):
                rows.append(corrector.fine_nodes)
                cols.append(np.full(n, coarse.elements[T, a]))
                vals.append(contributions[a])

        shape = (self.pair.fine.num_nodes, coarse.num_nodes)
        if not rows:
            return sp.csc_matrix(shape)
        return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)

    @cached_property
    def basis(self) -> sp.csc_matrix:
        """Базис V_{H,m}: столбец z - мелкий вектор (id - Q_m) lambda_z, форма (N_h, n_free_H)."""
        free = self.op.coarse_free
        return sp.csc_matrix(self.op.prolongation[:, free] - self.correction_matrix[:, free])

    @property
    def basis_count(self) -> int:
        return int(self.basis.shape[1])

    def apply(self, coarse_vector: np.ndarray) -> np.ndarray:
        """Q_m v_H для грубого вектора на всех узлах."""
        return self.correction_matrix @ np.asarray(coarse_vector, dtype=float)

    def multiscale(self, coarse_vector: np.ndarray) -> np.ndarray:
        """(id - Q_m) v_H как мелкий вектор."""
        return self.op.embed(coarse_vector) - self.apply(coarse_vector)


def assemble_basis(correctors: Sequence[ElementCorrector], pair: NestedPair, op: InterpolationOperator,
                   layers: int, coefficient_hash: str = "", solve_count: int = 0,
                   wall_time: float = 0.0) -> CorrectorSet:
    """
    Собрать набор корректоров и базис V_{H,m}.

    Args:
        correctors: Корректоры (по одному на каждый грубый элемент).
        pair: Вложенная пара сеток.
        op: Оператор квазиинтерполяции.
        layers: Число слоёв m.
        coefficient_hash: Хеш глобального поля 𝔄.
        solve_count: Число решённых задач патчей.
        wall_time: Время вычисления.

    Returns:
        CorrectorSet: Набор с базисом из dim V_H векторов.

    Raises:
        CorrectorError: Если отсутствует корректор какого-либо элемента.
    """
    by_element = {c.element: c for c in correctors}
    ordered = []
    for T in range(pair.coarse.num_elements):
        if T not in by_element:
            raise CorrectorError(f"Missing corrector for coarse element {T}", element=T)
        ordered.append(by_element[T])

    return CorrectorSet(
        pair=pair,
        op=op,
        layers=layers,
        correctors=tuple(ordered),
        coefficient_hash=coefficient_hash,
        solve_count=solve_count,
        wall_time=wall_time,
    )


def apply_global_corrector(correctors: CorrectorSet, coarse_vector: np.ndarray) -> np.ndarray:
    """
    Применить Q_m = sum_T Q_{T,m} к грубой функции.

    Args:
        correctors: Набор корректоров.
        coarse_vector: Узловые значения v_H на всех грубых узлах.

    Returns:
        np.ndarray: Мелкий вектор Q_m v_H.
    """
    return correctors.apply(coarse_vector)


def _cache_path(cache_dir: str, pair: NestedPair, layers: int, coefficient_hash: str) -> str:
    name = (f"correctors_H{pair.coarse.divisions_per_side}_h{pair.fine.divisions_per_side}"
            f"_m{layers}_{coefficient_hash[:16]}.npz")
    return os.path.join(cache_dir, name)


def save_correctors(path: str, correctors: CorrectorSet) -> None:
    """
    Записать корректоры в .npz файл с заголовком.

    Args:
        path: Путь к файлу.
        correctors: Набор корректоров.
    """
    items = correctors.correctors
    offsets = np.cumsum([0] + [c.fine_nodes.size for c in items])
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)

    tmp_path = path + ".part.npz"
    np.savez(
        tmp_path,
        format_version=np.array(FileConfig.CACHE_FORMAT_VERSION),
        coarse_divisions=np.array(correctors.pair.coarse.divisions_per_side),
        fine_divisions=np.array(correctors.pair.fine.divisions_per_side),
        layers=np.array(correctors.layers),
        coefficient_hash=np.array(correctors.coefficient_hash),
        element_hashes=np.array([c.coefficient_hash for c in items]),
        offsets=offsets,
        fine_nodes=np.concatenate([c.fine_nodes for c in items]) if items else np.zeros(0, dtype=np.int64),
        vectors=np.concatenate([c.vectors for c in items], axis=1) if items else np.zeros((2, 0)),
    )
    os.replace(tmp_path, path)
    logger.info(f"Saved {len(items)} correctors to {path}")


def load_correctors(path: str, pair: NestedPair, op: InterpolationOperator, layers: int,
                    coefficient_hash: str) -> Optional[CorrectorSet]:
    """
    Прочитать корректоры из .npz файла, если заголовок совпадает.

    Returns:
        Optional[CorrectorSet]: Набор корректоров или None при несовпадении заголовка.
    """
    if not os.path.exists(path):
        return None

    with np.load(path) as data:
        header = (
            int(data["format_version"]), int(data["coarse_divisions"]),
            int(data["fine_divisions"]), int(data["layers"]), str(data["coefficient_hash"]),
        )
        expected = (
            FileConfig.CACHE_FORMAT_VERSION, pair.coarse.divisions_per_side,
            pair.fine.divisions_per_side, layers, coefficient_hash,
        )
        if header != expected:
            logger.warning(f"Corrector cache {path} does not match the request, ignoring it")
            return None

        offsets = data["offsets"]
        nodes = data["fine_nodes"]
        vectors = data["vectors"]
        hashes = data["element_hashes"]
        items = [
            ElementCorrector(
                element=T,
                layers=layers,
                fine_nodes=nodes[offsets[T]:offsets[T + 1]].astype(np.int64),
                vectors=np.ascontiguousarray(vectors[:, offsets[T]:offsets[T + 1]]),
                coefficient_hash=str(hashes[T]),
            )
            for T in range(offsets.size - 1)
        ]

    logger.info(f"Loaded {len(items)} correctors from {path}")
    return assemble_basis(items, pair, op, layers, coefficient_hash=coefficient_hash)


def compute_correctors(pair: NestedPair, coefficient: MatrixField, op: InterpolationOperator,
                       layers: int, n_jobs: int = 1, cache: Optional[CorrectorCache] = None,
                       cache_dir: Optional[str] = None) -> CorrectorSet:
    """
    Вычислить корректоры всех грубых элементов.

    Задачи патчей независимы и решаются через joblib; результаты
    объединяются в порядке элементов, поэтому итог не зависит от расписания.

    Args:
        pair: Вложенная пара сеток.
        coefficient: Поле 𝔄 на мелких элементах.
        op: Оператор квазиинтерполяции.
        layers: Число слоёв m.
        n_jobs: Число процессов joblib.
        cache: Кэш в памяти (None - без кэша).
        cache_dir: Директория .npz кэша (None - без дискового кэша).

    Returns:
        CorrectorSet: Набор корректоров с базисом.

    Raises:
        CorrectorError: Если задача какого-либо патча вырождена.
    """
    start = time.perf_counter()
    coefficient.validate()
    global_hash = array_digest(coefficient.values)

    if cache_dir:
        path = _cache_path(cache_dir, pair, layers, global_hash)
        stored = load_correctors(path, pair, op, layers, global_hash)
        if stored is not None:
            stored.wall_time = time.perf_counter() - start
            return stored

    found: Dict[int, ElementCorrector] = {}
    problems: List[CorrectorProblem] = []
    for T in range(pair.coarse.num_elements):
        patch = build_patch(pair, T, layers)
        if cache is not None:
            key = CorrectorCache.key(pair, T, layers, array_digest(coefficient.values[patch.fine_elements]))
            hit = cache.get(key)
            if hit is not None:
                found[T] = hit
                continue
        problems.append(build_corrector_problem(pair, patch, coefficient, op))

    solved = Parallel(n_jobs=n_jobs)(delayed(solve_corrector_problem)(problem) for problem in problems)
    for corrector in solved:
        found[corrector.element] = corrector
        if cache is not None:
            cache.put(CorrectorCache.key(pair, corrector.element, layers, corrector.coefficient_hash), corrector)

    elapsed = time.perf_counter() - start
    logger.info(
        f"Correctors H=1/{pair.coarse.divisions_per_side}, m={layers}: "
        f"{len(solved)} solved, {len(found) - len(solved)} reused in {elapsed:.2f}s"
    )
    result = assemble_basis(
        list(found.values()), pair, op, layers,
        coefficient_hash=global_hash, solve_count=len(solved), wall_time=elapsed,
    )

    if cache_dir:
        save_correctors(_cache_path(cache_dir, pair, layers, global_hash), result)
    return result


def apply_ideal_corrector(pair: NestedPair, coefficient: MatrixField, op: InterpolationOperator,
                          coarse_vector: np.ndarray) -> np.ndarray:
    """
    Неусечённый корректор Q v_H одной седловой задачей на всей области.

    Args:
        pair: Вложенная пара сеток.
        coefficient: Поле 𝔄 на мелких элементах.
        op: Оператор квазиинтерполяции.
        coarse_vector: Узловые значения v_H на всех грубых узлах.

    Returns:
        np.ndarray: Мелкий вектор Q v_H (нули на границе).

    Raises:
        CorrectorError: Если глобальная седловая задача вырождена.
    """
    fine = pair.fine
    free = op.fine_free
    stiffness = assemble_stiffness(fine, coefficient).matrix
    rhs = (stiffness @ op.embed(coarse_vector))[free]

    constraints = op.matrix
    saddle = sp.bmat([[stiffness[free][:, free], constraints.T], [constraints, None]], format='csc')
    full_rhs = np.concatenate([rhs, np.zeros(constraints.shape[0])])
    try:
        solution = DirectFactorization(saddle, label="global corrector saddle point").solve(full_rhs)
    except SingularSystemError as e:
        raise CorrectorError(str(e)) from e

    result = np.zeros(fine.num_nodes)
    result[free] = solution[:free.size]
    return result


def energy_seminorm(stiffness: sp.spmatrix, vector: np.ndarray) -> float:
    """|v|_1 = sqrt(v^T S v) для единичной матрицы жёсткости S."""
    return float(np.sqrt(max(vector @ (stiffness @ vector), 0.0)))


def decay_study(pair: NestedPair, coefficient: MatrixField, op: InterpolationOperator,
                coarse_vector: np.ndarray, max_layers: int, n_jobs: int = 1) -> np.ndarray:
    """
    Разрывы |(Q_{m_max} - Q_m) v_H|_1 для m = 1..m_max-1.

    Args:
        pair: Вложенная пара сеток.
        coefficient: Поле 𝔄.
        op: Оператор квазиинтерполяции.
        coarse_vector: Грубая функция v_H на всех узлах (N_H,) или набор функций (k, N_H).
        max_layers: Опорное число слоёв m_max (>= 2).
        n_jobs: Число процессов joblib.

    Returns:
        np.ndarray: Разрывы формы (m_max - 1,) или (k, m_max - 1).
    """
    if max_layers < 2:
        raise ValueError(f"max_layers must be at least 2, got {max_layers}")

    vectors = np.atleast_2d(np.asarray(coarse_vector, dtype=float))
    seminorm = assemble_stiffness(pair.fine).matrix
    reference_set = compute_correctors(pair, coefficient, op, max_layers, n_jobs=n_jobs)
    references = [reference_set.apply(v) for v in vectors]

    gaps = np.zeros((vectors.shape[0], max_layers - 1))
    for layers in range(1, max_layers):
        truncated = compute_correctors(pair, coefficient, op, layers, n_jobs=n_jobs)
        for k, v in enumerate(vectors):
            gaps[k, layers - 1] = energy_seminorm(seminorm, references[k] - truncated.apply(v))
        logger.debug(f"Decay study m={layers}: max gap {gaps[:, layers - 1].max():.3e}")
    return gaps[0] if np.ndim(coarse_vector) == 1 else gaps


def fit_decay_rate(gaps: Sequence[float], layers: Optional[Sequence[int]] = None) -> float:
    """
    Оценка beta по наклону log(gap) от m (метод наименьших квадратов).

    Args:
        gaps: Разрывы из decay_study.
        layers: Значения m (по умолчанию 1, 2, ...).

    Returns:
        float: beta = exp(наклон); nan, если положительных разрывов меньше двух.
    """
    gaps = np.asarray(gaps, dtype=float)
    m = np.arange(1, gaps.size + 1) if layers is None else np.asarray(layers, dtype=float)
    # нулевые разрывы соответствуют насыщенным патчам
    positive = gaps > np.finfo(float).tiny
    if np.count_nonzero(positive) < 2:
        logger.warning("Too few positive gaps to fit a decay rate")
        return float("nan")
    slope, _ = np.polyfit(m[positive], np.log(gaps[positive]), 1)
    return float(np.exp(slope))
