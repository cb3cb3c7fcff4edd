"""
Метод Ньютона для нелинейной задачи на мелкой сетке и в подпространствах.

Невязка и якобиан всегда собираются на мелкой сетке (одна точка квадратуры
на элемент); подпространственные решатели проецируют их на пробный и тестовый
базисы и решают плотную систему малой размерности.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from lod.coefficients.base import NonlinearCoefficient, element_arguments
from lod.fem.assembly import MatrixField, assemble_load, assemble_stiffness
from lod.fem.linalg import DirectFactorization, SparseOperator
from lod.fem.mesh import NestedPair, TriMesh
from lod.multiscale.interpolation import build_prolongation
from lod.utils.constants import NewtonDefaults
from lod.utils.exceptions import (
    ConfigurationError,
    NonConvergenceError,
    NumericalBreakdownError,
    SingularSystemError,
)
from lod.utils.logger import get_logger

logger = get_logger(__name__)

SourceFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NewtonConfig:
    """
    Параметры метода Ньютона.

    Attributes:
        residual_tolerance: Допуск евклидовой нормы невязки.
        max_iterations: Максимальное число шагов.
        initial_guess: Начальное приближение на всех узлах соответствующей сетки (None - ноль).
    """
    residual_tolerance: float = NewtonDefaults.RESIDUAL_TOLERANCE
    max_iterations: int = NewtonDefaults.MAX_ITERATIONS
    initial_guess: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.residual_tolerance > 0:
            raise ConfigurationError(f"residual_tolerance must be positive, got {self.residual_tolerance!r}")
        if self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be at least 1, got {self.max_iterations!r}")

    def with_guess(self, guess: Optional[np.ndarray]) -> "NewtonConfig":
        return replace(self, initial_guess=guess)


@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Результат нелинейного решения.

    Attributes:
        solution: Решение на всех узлах мелкой сетки.
        iterations: Число шагов Ньютона.
        residual_history: Нормы невязки до и после каждого шага.
        strategy_label: Метка метода и стратегии линеаризации.
        coarse_solution: Грубые коэффициенты на всех грубых узлах (для грубых решателей).
        multiscale_solution: (id - Q_m) u для решения Петрова-Галёркина.
        wall_time: Время решения в секундах.
    """
    solution: np.ndarray
    iterations: int
    residual_history: Tuple[float, ...]
    strategy_label: str = ""
    coarse_solution: Optional[np.ndarray] = None
    multiscale_solution: Optional[np.ndarray] = None
    wall_time: float = 0.0

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def relabel(self, label: str) -> "SolveResult":
        return replace(self, strategy_label=label)


def fine_residual(mesh: TriMesh, coefficient: NonlinearCoefficient, u: np.ndarray,
                  load: np.ndarray) -> np.ndarray:
    """
    Невязка R_i(u) = sum_K |K| A(x_K, u_K, grad u_K) . grad phi_i - b_i на всех узлах.

    Args:
        mesh: Мелкая сетка.
        coefficient: Нелинейный коэффициент.
        u: Узловые значения.
        load: Вектор нагрузки.

    Returns:
        np.ndarray: Невязка (граничные строки не исключены).
    """
    points, grads, values = element_arguments(mesh, u)
    flux = coefficient.flux(points, grads, values)
    local = mesh.element_areas[:, None] * np.einsum('eid,ed->ei', mesh.gradients, flux)
    return np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.num_nodes) - load


def fine_jacobian(mesh: TriMesh, coefficient: NonlinearCoefficient, u: np.ndarray) -> SparseOperator:
    """
    Якобиан невязки на всех узлах.

    Для квазилинейных коэффициентов добавляется член
    sum_K |K| (d_u A . grad phi_i) phi_j(x_K), phi_j(x_K) = 1/3.

    Args:
        mesh: Мелкая сетка.
        coefficient: Нелинейный коэффициент.
        u: Узловые значения.

    Returns:
        SparseOperator: Якобиан (несимметричный при зависимости от u).
    """
    points, grads, values = element_arguments(mesh, u)
    operator = assemble_stiffness(mesh, MatrixField(coefficient.jacobian(points, grads, values)))
    if not coefficient.depends_on_value:
        return operator

    derivative = coefficient.value_derivative(points, grads, values)
    row_term = mesh.element_areas[:, None] / 3.0 * np.einsum('eid,ed->ei', mesh.gradients, derivative)
    local = np.repeat(row_term[:, :, None], 3, axis=2)
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    coupling = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(mesh.num_nodes, mesh.num_nodes))
    return SparseOperator(sp.csr_matrix(operator.matrix + coupling), symmetric=False)


def newton_loop(residual: Callable[[np.ndarray], np.ndarray],
                step: Callable[[np.ndarray, np.ndarray], np.ndarray],
                x0: np.ndarray, config: NewtonConfig, label: str) -> Tuple[np.ndarray, int, Tuple[float, ...]]:
    """
    Неускоренный метод Ньютона x <- x + dx, J dx = -r.

    Args:
        residual: Функция невязки x -> r.
        step: Функция (x, r) -> dx.
        x0: Начальное приближение.
        config: Параметры.
        label: Имя задачи для логов.

    Returns:
        Tuple: Решение, число шагов, история норм невязки.

    Raises:
        NonConvergenceError: Если допуск не достигнут за max_iterations шагов.
        NumericalBreakdownError: При inf/NaN в невязке или шаге.
    """
    x = np.array(x0, dtype=float)
    history = []
    norm = float("nan")
    for iteration in range(config.max_iterations + 1):
        r = residual(x)
        norm = float(np.linalg.norm(r))
        if not np.isfinite(norm):
            raise NumericalBreakdownError(f"{label}: non-finite residual at iteration {iteration}")
        history.append(norm)
        logger.debug(f"{label}: iteration {iteration}, residual {norm:.3e}")

        if norm <= config.residual_tolerance:
            logger.info(f"{label}: converged in {iteration} iterations (residual {norm:.3e})")
            return x, iteration, tuple(history)
        if iteration == config.max_iterations:
            break

        dx = step(x, r)
        if not np.all(np.isfinite(dx)):
            raise NumericalBreakdownError(f"{label}: non-finite Newton update at iteration {iteration}")
        x = x + dx

    raise NonConvergenceError(
        f"{label}: no convergence in {config.max_iterations} iterations (residual {norm:.3e})",
        iterations=config.max_iterations,
        residual=norm,
    )


def initial_guess_vector(config: NewtonConfig, size: int, free: np.ndarray, label: str) -> np.ndarray:
    if config.initial_guess is None:
        logger.info(f"{label}: Newton initial guess u0 = 0 (assumed)")
        return np.zeros(free.size)
    guess = np.asarray(config.initial_guess, dtype=float)
    if guess.shape != (size,):
        raise ConfigurationError(f"{label}: initial guess has shape {guess.shape}, expected ({size},)")
    logger.info(f"{label}: Newton initial guess supplied by caller")
    return guess[free]


def solve_fine_reference(mesh: TriMesh, coefficient: NonlinearCoefficient, f: SourceFunction,
                         config: Optional[NewtonConfig] = None, rule: str = "barycenter") -> SolveResult:
    """
    Решить нелинейную задачу стандартным МКЭ на сетке mesh.

    Args:
        mesh: Сетка.
        coefficient: Нелинейный коэффициент.
        f: Правая часть.
        config: Параметры Ньютона.
        rule: Квадратура нагрузки.

    Returns:
        SolveResult: Решение на всех узлах сетки.

    Raises:
        NonConvergenceError: Если Ньютон не сошёлся.
        NumericalBreakdownError: При inf/NaN.
    """
    config = config or NewtonConfig()
    label = f"FEM h=1/{mesh.divisions_per_side}"
    start = time.perf_counter()

    load = assemble_load(mesh, f, rule=rule)
    free = mesh.free_nodes

    def expand(x: np.ndarray) -> np.ndarray:
        u = np.zeros(mesh.num_nodes)
        u[free] = x
        return u

    def residual(x: np.ndarray) -> np.ndarray:
        return fine_residual(mesh, coefficient, expand(x), load)[free]

    def step(x: np.ndarray, r: np.ndarray) -> np.ndarray:
        jacobian = fine_jacobian(mesh, coefficient, expand(x)).restrict(free)
        return -DirectFactorization(jacobian.matrix, label=f"{label} Jacobian").solve(r)

    x, iterations, history = newton_loop(
        residual, step, initial_guess_vector(config, mesh.num_nodes, free, label), config, label
    )
    return SolveResult(
        solution=expand(x),
        iterations=iterations,
        residual_history=history,
        strategy_label="reference",
        wall_time=time.perf_counter() - start,
    )


def solve_subspace(mesh: TriMesh, coefficient: NonlinearCoefficient, load: np.ndarray,
                   trial: sp.spmatrix, test: sp.spmatrix, config: NewtonConfig,
                   x0: np.ndarray, label: str, symmetric: bool = True) -> Tuple[np.ndarray, int, Tuple[float, ...]]:
    """
    Метод Ньютона в подпространстве: u = trial c, невязка проецируется на test.

    Плотная система J = test^T J_h trial решается scipy.linalg.solve
    (симметричная ветка для Галёркина, общая - для Петрова-Галёркина и
    квазилинейных коэффициентов).

    Returns:
        Tuple: Коэффициенты, число шагов, история невязок.

    Raises:
        SingularSystemError: Если грубый якобиан вырожден.
    """
    trial = sp.csc_matrix(trial)
    test_t = sp.csr_matrix(sp.csc_matrix(test).T)
    assume = "sym" if symmetric and not coefficient.depends_on_value else "gen"

    def residual(c: np.ndarray) -> np.ndarray:
        return test_t @ fine_residual(mesh, coefficient, trial @ c, load)

    def step(c: np.ndarray, r: np.ndarray) -> np.ndarray:
        jacobian = fine_jacobian(mesh, coefficient, trial @ c).matrix
        coarse = np.asarray((test_t @ (jacobian @ trial)).todense())
        if coarse.shape[0] == 0:
            return np.zeros(0)
        try:
            return sla.solve(coarse, -r, assume_a=assume)
        except sla.LinAlgError as e:
            raise SingularSystemError(f"{label}: singular coarse Jacobian: {e}") from e

    return newton_loop(residual, step, x0, config, label)


def solve_coarse_fem(coarse_mesh: TriMesh, coefficient: NonlinearCoefficient, f: SourceFunction,
                     config: Optional[NewtonConfig] = None, pair: Optional[NestedPair] = None) -> SolveResult:
    """
    Стандартный МКЭ в V_H.

    Без пары сеток задача решается на грубой сетке (квадратура грубой сетки).
    С парой сеток V_H вкладывается в V_h, и невязка считается мелкой квадратурой,
    как у мультимасштабных решателей; при h = H результат совпадает с эталонным.

    Args:
        coarse_mesh: Грубая сетка.
        coefficient: Нелинейный коэффициент.
        f: Правая часть.
        config: Параметры Ньютона (initial_guess - на грубых узлах).
        pair: Вложенная пара (None - решение на самой грубой сетке).

    Returns:
        SolveResult: solution на мелкой сетке пары (или грубой без пары), coarse_solution на грубых узлах.
    """
    config = config or NewtonConfig()
    if pair is None:
        result = solve_fine_reference(coarse_mesh, coefficient, f, config)
        return replace(result, strategy_label="coarse_fem", coarse_solution=result.solution)

    label = f"Coarse FEM H=1/{coarse_mesh.divisions_per_side}"
    start = time.perf_counter()
    fine = pair.fine
    prolongation = build_prolongation(pair)
    free = coarse_mesh.free_nodes
    trial = sp.csc_matrix(prolongation[:, free])

    c, iterations, history = solve_subspace(
        fine, coefficient, assemble_load(fine, f), trial, trial, config,
        initial_guess_vector(config, coarse_mesh.num_nodes, free, label), label,
    )
    coarse_solution = np.zeros(coarse_mesh.num_nodes)
    coarse_solution[free] = c
    return SolveResult(
        solution=prolongation @ coarse_solution,
        iterations=iterations,
        residual_history=history,
        strategy_label="coarse_fem",
        coarse_solution=coarse_solution,
        wall_time=time.perf_counter() - start,
    )
