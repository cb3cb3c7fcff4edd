"""
Стратегии выбора точки линеаризации u* для корректоров.

zero        - u* = 0
coarse_fem  - u* = решение стандартного МКЭ в V_H
given:*     - u* задан: LOD решение (lod), его интерполяция (lod_interpolated),
              эталонное решение (reference) или вектор вызывающего кода (vector)
cascade:K   - K раундов: корректоры по предыдущему LOD решению
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.coefficients.linearization import LinearizationModel
from lod.fem.assembly import assemble_stiffness
from lod.fem.mesh import NestedPair
from lod.indicators.errors import h1_seminorm
from lod.indicators.linearization import linearization_surrogates
from lod.multiscale.corrector import CorrectorCache, CorrectorSet, compute_correctors
from lod.multiscale.interpolation import InterpolationOperator
from lod.solvers.lod import solve_lod_galerkin, solve_lod_petrov_galerkin
from lod.solvers.newton import NewtonConfig, SolveResult, SourceFunction, solve_coarse_fem
from lod.utils.exceptions import ConfigurationError
from lod.utils.helpers import array_digest
from lod.utils.logger import LoggerAdapter, get_logger

logger = get_logger(__name__)

METHODS = ("galerkin", "petrov_galerkin")


@dataclass(frozen=True)
class LinearizationStrategy:
    """
    Стратегия линеаризации.

    Attributes:
        kind: zero | coarse_fem | given | cascade.
        steps: Число раундов каскада (>= 1).
        source: Источник u* для given: lod | lod_interpolated | reference | vector.
        model: Модель линеаризации.
    """
    kind: str
    steps: int = 1
    source: Optional[str] = None
    model: LinearizationModel = field(default_factory=LinearizationModel, compare=False)

    KINDS = ("zero", "coarse_fem", "given", "cascade")
    SOURCES = ("lod", "lod_interpolated", "reference", "vector")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"Unknown strategy '{self.kind}'. Available: {list(self.KINDS)}")
        if self.kind == "cascade" and self.steps < 1:
            raise ConfigurationError(f"Cascade needs at least one step, got {self.steps}")
        if self.kind == "given" and self.source not in self.SOURCES:
            raise ConfigurationError(f"Unknown linearization point source '{self.source}'. Available: {list(self.SOURCES)}")

    @classmethod
    def parse(cls, text: str, model: str = "newton") -> "LinearizationStrategy":
        """
        Разобрать строку конфигурации: zero | coarse_fem | cascade:K | given:SOURCE.

        Raises:
            ConfigurationError: Если строка невалидна.
        """
        kind, _, argument = text.strip().partition(":")
        linearization = LinearizationModel(model)
        if kind == "cascade":
            try:
                steps = int(argument)
            except ValueError as e:
                raise ConfigurationError(f"Invalid cascade step count in '{text}'") from e
            return cls(kind="cascade", steps=steps, model=linearization)
        if kind == "given":
            return cls(kind="given", source=argument, model=linearization)
        if argument:
            raise ConfigurationError(f"Strategy '{kind}' takes no argument: '{text}'")
        return cls(kind=kind, model=linearization)

    @property
    def label(self) -> str:
        if self.kind == "cascade":
            return f"cascade:{self.steps}"
        if self.kind == "given":
            return f"given:{self.source}"
        return self.kind


@dataclass(eq=False)
class StrategyProblem:
    """
    Входные данные стратегии для одной строки эксперимента.

    Attributes:
        pair: Вложенная пара сеток.
        op: Оператор квазиинтерполяции.
        coefficient: Нелинейный коэффициент.
        f: Правая часть.
        layers: Число слоёв m.
        method: galerkin | petrov_galerkin.
        newton: Параметры Ньютона.
        reference: Эталонное решение (для given:reference).
        n_jobs: Число процессов для корректоров.
        cache: Кэш корректоров в памяти.
        cache_dir: Директория дискового кэша.
    """
    pair: NestedPair
    op: InterpolationOperator
    coefficient: NonlinearCoefficient
    f: SourceFunction
    layers: int
    method: str = "galerkin"
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    reference: Optional[np.ndarray] = None
    n_jobs: int = 1
    cache: Optional[CorrectorCache] = None
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"Unknown method '{self.method}'. Available: {list(METHODS)}")


@dataclass(frozen=True)
class ProvenanceEntry:
    """Одна использованная точка линеаризации."""
    round: int
    point: str
    point_digest: str
    coefficient_hash: str
    corrector_solve_count: int
    surrogates: dict


@dataclass(eq=False)
class StrategyOutcome:
    """
    Итог стратегии.

    Attributes:
        result: Финальное решение.
        correctors: Корректоры финального раунда.
        provenance: Журнал точек линеаризации.
        rounds: Решения всех раундов (последний - финальный).
        coarse_fem: Решение грубого МКЭ (для стратегии coarse_fem).
        corrector_time: Суммарное время корректоров.
    """
    result: SolveResult
    correctors: CorrectorSet
    provenance: List[ProvenanceEntry]
    rounds: List[SolveResult]
    coarse_fem: Optional[SolveResult] = None
    corrector_time: float = 0.0

    @property
    def corrector_solve_count(self) -> int:
        return sum(entry.corrector_solve_count for entry in self.provenance)

    @property
    def coarse_iterations(self) -> int:
        return sum(result.iterations for result in self.rounds)


class _StrategyRunner:
    """Выполняет раунды стратегии и ведёт журнал."""

    def __init__(self, strategy: LinearizationStrategy, problem: StrategyProblem, log: LoggerAdapter):
        self.strategy = strategy
        self.problem = problem
        self.log = log
        self.provenance: List[ProvenanceEntry] = []
        self.rounds: List[SolveResult] = []
        self.corrector_time = 0.0

    def solve_round(self, point: np.ndarray, point_label: str) -> Tuple[SolveResult, CorrectorSet]:
        problem = self.problem
        fine = problem.pair.fine
        linearized = self.strategy.model.produce(problem.coefficient, fine, point)
        correctors = compute_correctors(
            problem.pair, linearized.matrix, problem.op, problem.layers,
            n_jobs=problem.n_jobs, cache=problem.cache, cache_dir=problem.cache_dir,
        )
        self.corrector_time += correctors.wall_time

        solver = solve_lod_petrov_galerkin if problem.method == "petrov_galerkin" else solve_lod_galerkin
        result = solver(problem.pair, problem.coefficient, problem.f, correctors, problem.newton)
        upscaled = result.multiscale_solution if result.multiscale_solution is not None else result.solution
        surrogates = linearization_surrogates(fine, problem.coefficient, linearized, upscaled, point)

        entry = ProvenanceEntry(
            round=len(self.provenance) + 1,
            point=point_label,
            point_digest=array_digest(point)[:12],
            coefficient_hash=correctors.coefficient_hash[:12],
            corrector_solve_count=correctors.solve_count,
            surrogates=surrogates.to_dict(),
        )
        self.provenance.append(entry)
        self.rounds.append(result)
        self.log.info(
            f"round {entry.round}: u*={point_label} [{entry.point_digest}], correctors {entry.coefficient_hash} "
            f"({entry.corrector_solve_count} solved), |v-u*|_1={surrogates.distance:.3e}"
        )
        return result, correctors

    def lod_point(self, result: SolveResult, interpolated: bool) -> np.ndarray:
        """LOD решение раунда (или его представление в V_H) как мелкий вектор."""
        op = self.problem.op
        if self.problem.method == "petrov_galerkin":
            return result.solution if interpolated else result.multiscale_solution
        if interpolated:
            return op.embed(result.coarse_solution)
        return result.solution


def run_strategy(strategy: LinearizationStrategy, problem: StrategyProblem,
                 point: Optional[np.ndarray] = None,
                 log: Optional[LoggerAdapter] = None) -> StrategyOutcome:
    """
    Выполнить стратегию линеаризации и решить задачу LOD.

    Args:
        strategy: Стратегия.
        problem: Входные данные строки.
        point: Вектор u* на мелкой сетке для given:vector.
        log: Адаптер логгера с контекстом строки.

    Returns:
        StrategyOutcome: Решение, корректоры и журнал точек линеаризации.

    Raises:
        ConfigurationError: Если для given не хватает данных.
    """
    log = log or LoggerAdapter(logger, {"strategy": strategy.label})
    runner = _StrategyRunner(strategy, problem, log)
    fine = problem.pair.fine
    zero = np.zeros(fine.num_nodes)
    coarse_fem = None

    if strategy.kind == "zero":
        result, correctors = runner.solve_round(zero, "zero")

    elif strategy.kind == "coarse_fem":
        coarse_fem = solve_coarse_fem(problem.pair.coarse, problem.coefficient, problem.f,
                                      problem.newton, pair=problem.pair)
        result, correctors = runner.solve_round(coarse_fem.solution, "coarse_fem")

    elif strategy.kind == "cascade":
        result, correctors = runner.solve_round(zero, "zero")
        for step in range(2, strategy.steps + 1):
            result, correctors = runner.solve_round(runner.lod_point(result, interpolated=False), f"lod[{step - 1}]")

    else:
        source = strategy.source
        if source == "reference":
            if problem.reference is None:
                raise ConfigurationError("Strategy given:reference needs the reference solution")
            given = problem.reference
        elif source == "vector":
            if point is None or np.shape(point) != (fine.num_nodes,):
                raise ConfigurationError(f"Strategy given:vector needs a fine vector of size {fine.num_nodes}")
            given = np.asarray(point, dtype=float)
        else:
            preliminary, _ = runner.solve_round(zero, "zero")
            given = runner.lod_point(preliminary, interpolated=(source == "lod_interpolated"))
        result, correctors = runner.solve_round(given, source)

    label = f"{problem.method}/{strategy.label}"
    return StrategyOutcome(
        result=result.relabel(label),
        correctors=correctors,
        provenance=runner.provenance,
        rounds=runner.rounds,
        coarse_fem=coarse_fem,
        corrector_time=runner.corrector_time,
    )


@dataclass(frozen=True)
class StabilityReport:
    """|u|_1 <= (Lambda/lambda) ||f||_0 по выборочным константам."""
    seminorm: float
    bound: float
    passed: bool


def stability_check(solution: np.ndarray, coefficient: NonlinearCoefficient, f: SourceFunction,
                    pair_or_mesh, log: Optional[LoggerAdapter] = None) -> StabilityReport:
    """
    Проверить априорную оценку устойчивости (только отчёт, не ошибка).

    Args:
        solution: Решение на мелкой сетке.
        coefficient: Коэффициент с заполненными константами пробы.
        f: Правая часть.
        pair_or_mesh: Мелкая сетка или пара сеток.
        log: Адаптер логгера.

    Returns:
        StabilityReport: Полунорма, граница и результат.
    """
    log = log or LoggerAdapter(logger)
    mesh = pair_or_mesh.fine if isinstance(pair_or_mesh, NestedPair) else pair_or_mesh
    seminorm = h1_seminorm(assemble_stiffness(mesh), solution)

    values = np.asarray(f(mesh.barycenters), dtype=float)
    source_norm = float(np.sqrt(np.sum(mesh.element_areas * values ** 2)))

    lower, upper = coefficient.metadata.lower_bound, coefficient.metadata.upper_bound
    if lower is None or upper is None or not lower > 0:
        log.warning("Stability check skipped: monotonicity constants unavailable")
        return StabilityReport(seminorm=seminorm, bound=float("inf"), passed=True)

    bound = upper / lower * source_norm
    passed = seminorm <= bound
    if not passed:
        log.warning(f"Stability bound violated: |u|_1={seminorm:.4e} > {bound:.4e}")
    return StabilityReport(seminorm=seminorm, bound=bound, passed=passed)
