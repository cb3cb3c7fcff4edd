"""
Исполнитель экспериментов.

run_experiment строит мелкую сетку и коэффициент один раз, один раз решает
эталонную задачу и затем обходит пары (H, m). Ошибка внутри строки
записывается в отчёт тегом и не прерывает остальные строки.
"""

import time
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from lod.coefficients.linearization import LinearizationModel
from lod.coefficients.probe import monotonicity_probe
from lod.config import Config
from lod.experiments.problems import Problem, build_problem
from lod.experiments.report import ExperimentReport, row_key
from lod.experiments.settings import ExperimentConfig
from lod.fem.assembly import assemble_mass, assemble_stiffness
from lod.fem.mesh import NestedPair, TriMesh, build_mesh, build_nested_pair
from lod.indicators.corrector_indicator import compute_indicators, indicators_frame
from lod.indicators.errors import best_l2_approximation, compute_errors
from lod.multiscale.corrector import CorrectorCache, compute_correctors, decay_study, fit_decay_rate
from lod.multiscale.interpolation import InterpolationOperator, compose_interpolation
from lod.solvers.newton import SolveResult, solve_coarse_fem, solve_fine_reference
from lod.solvers.strategies import LinearizationStrategy, StrategyProblem, run_strategy, stability_check
from lod.utils.constants import ReportColumns
from lod.utils.exceptions import ConfigurationError, LodException
from lod.utils.logger import LoggerAdapter, get_logger

logger = get_logger(__name__)


def _empty_row(config: ExperimentConfig, H: float, m: int, label: str) -> Dict[str, Any]:
    row = {column: np.nan for column in ReportColumns.BASE + ReportColumns.TIMINGS}
    row.update(problem=config.problem, H=H, m=m, method=config.method, strategy=label, error="")
    return row


class _CoarseLevel:
    """Данные одного уровня H, общие для всех m."""

    def __init__(self, fine: TriMesh, exponent: int, problem: Problem, reference: np.ndarray,
                 mass, stiffness, config: ExperimentConfig, log: LoggerAdapter):
        self.pair: NestedPair = build_nested_pair(build_mesh(2 ** exponent), fine)
        self.op: InterpolationOperator = compose_interpolation(self.pair)
        _, self.best_l2 = best_l2_approximation(reference, self.op, mass)

        # грубый МКЭ - базовая линия; его ошибка не прерывает строки LOD
        self.coarse_fem_error = np.nan
        try:
            baseline = solve_coarse_fem(self.pair.coarse, problem.coefficient, problem.f,
                                        config.newton_config(), pair=self.pair)
            self.coarse_fem_error = compute_errors(
                reference, baseline.solution, self.op, mass, stiffness, coarse_space=True,
            ).e_H
        except LodException as e:
            log.warning(f"Coarse FEM baseline failed: {e.__class__.__name__}: {e}")


def run_experiment(config: ExperimentConfig, n_jobs: Optional[int] = None,
                   cache_dir: Optional[str] = None) -> ExperimentReport:
    """
    Выполнить эксперимент по конфигурации.

    Args:
        config: Проверенная конфигурация.
        n_jobs: Число процессов для корректоров (по умолчанию LOD_N_JOBS).
        cache_dir: Директория дискового кэша корректоров (None - без него).

    Returns:
        ExperimentReport: Строки в порядке H_exponents x m_values.
    """
    config.validate()
    n_jobs = Config.n_jobs() if n_jobs is None else n_jobs
    strategy = config.linearization_strategy()
    log = LoggerAdapter(logger, {"problem": config.problem})
    report = ExperimentReport(config=config)
    log.info(f"Seed {config.seed}, strategy {strategy.label}, method {config.method}")

    problem = build_problem(
        config.problem, epsilon=config.epsilon, seed=config.seed,
        channel_contrast=config.channel_contrast, channel_width=config.channel_width,
    )
    probe = monotonicity_probe(problem.coefficient)
    report.metadata["probe"] = probe.to_dict()

    fine = build_mesh(2 ** config.h_exponent)
    mass = assemble_mass(fine)
    stiffness = assemble_stiffness(fine)
    log.info(f"Fine mesh h=2^-{config.h_exponent}: {fine.num_nodes} nodes, {fine.num_elements} elements")

    try:
        reference = solve_fine_reference(fine, problem.coefficient, problem.f, config.newton_config())
    except LodException as e:
        log.failure("Reference solve failed", e)
        for exponent in config.H_exponents:
            for m in config.m_values:
                row = _empty_row(config, 2.0 ** -exponent, m, strategy.label)
                row["error"] = e.__class__.__name__
                report.rows.append(row)
        return report

    stability = stability_check(reference.solution, problem.coefficient, problem.f, fine, log=log)
    report.metadata["reference"] = {
        "iterations": reference.iterations,
        "final_residual": reference.final_residual,
        "wall_time": reference.wall_time,
    }
    report.metadata["stability"] = {
        "seminorm": stability.seminorm, "bound": stability.bound, "passed": stability.passed,
    }

    cache = CorrectorCache()
    for exponent in config.H_exponents:
        H = 2.0 ** -exponent
        level_log = log.bind(H=f"2^-{exponent}")
        try:
            level = _CoarseLevel(fine, exponent, problem, reference.solution, mass, stiffness, config, level_log)
        except LodException as e:
            level_log.failure("Coarse level setup failed", e)
            level = None
            level_error = e.__class__.__name__

        for m in config.m_values:
            row = _empty_row(config, H, m, strategy.label)
            row_log = level_log.bind(m=m, strategy=f"{config.method}/{strategy.label}")
            if level is None:
                row["error"] = level_error
            else:
                provenance = _run_row(row, config, strategy, problem, level, reference, mass, stiffness,
                                      cache, n_jobs, cache_dir, row_log)
                report.provenance[row_key(row)] = provenance
            report.rows.append(row)

    log.info(f"Experiment finished: {len(report.rows)} rows, corrector cache {cache.hits} hits / {cache.misses} misses")
    return report


def _run_row(row: Dict[str, Any], config: ExperimentConfig, strategy: LinearizationStrategy, problem: Problem,
             level: _CoarseLevel, reference: SolveResult, mass, stiffness, cache: CorrectorCache,
             n_jobs: int, cache_dir: Optional[str], log: LoggerAdapter) -> list:
    """Заполнить строку отчёта; вернуть журнал точек линеаризации."""
    start = time.perf_counter()
    row.update(best_l2=level.best_l2, e_coarse_fem=level.coarse_fem_error,
               newton_iterations_fine=reference.iterations)
    try:
        task = StrategyProblem(
            pair=level.pair, op=level.op, coefficient=problem.coefficient, f=problem.f,
            layers=row["m"], method=config.method, newton=config.newton_config(),
            reference=reference.solution, n_jobs=n_jobs, cache=cache, cache_dir=cache_dir,
        )
        outcome = run_strategy(strategy, task, log=log)
        result = outcome.result
        petrov_galerkin = config.method == "petrov_galerkin"
        errors = compute_errors(
            reference.solution, result.solution, level.op, mass, stiffness,
            coarse_space=petrov_galerkin, upscaled=result.multiscale_solution if petrov_galerkin else None,
            m=row["m"], best_l2=level.best_l2,
        )
    except LodException as e:
        log.failure("Row failed", e)
        row["error"] = e.__class__.__name__
        row["wall_time_total"] = time.perf_counter() - start
        return []

    row.update(
        e_H=errors.e_H,
        e_LOD=errors.e_LOD,
        newton_iterations_coarse=outcome.coarse_iterations,
        corrector_solve_count=outcome.corrector_solve_count,
        wall_time_correctors=outcome.corrector_time,
        wall_time_solve=sum(r.wall_time for r in outcome.rounds),
        wall_time_total=time.perf_counter() - start,
    )
    log.info(f"e_H={errors.e_H:.4e}, e_LOD={errors.e_LOD:.4e}, best_l2={level.best_l2:.4e}")
    return [vars(entry) for entry in outcome.provenance]


def run_decay_study(problem: Problem, coarse_exponent: int, fine_exponent: int, max_layers: int,
                    samples: int = 5, seed: int = 0, n_jobs: int = 1) -> Tuple[pd.DataFrame, float]:
    """
    Затухание корректоров для поля 𝔄 = D_xi A(x, 0) на случайных v_H.

    Args:
        problem: Задача (используется коэффициент).
        coarse_exponent: H = 2^-k.
        fine_exponent: h = 2^-k.
        max_layers: Опорное m_max.
        samples: Число случайных v_H.
        seed: Зерно генератора v_H.
        n_jobs: Число процессов.

    Returns:
        Tuple: Таблица (sample, m, gap) и оценка beta по средним разрывам.
    """
    pair = build_nested_pair(build_mesh(2 ** coarse_exponent), build_mesh(2 ** fine_exponent))
    op = compose_interpolation(pair)
    field = LinearizationModel("newton").produce(problem.coefficient, pair.fine).matrix

    rng = np.random.default_rng(seed)
    vectors = np.zeros((samples, pair.coarse.num_nodes))
    free = pair.coarse.free_nodes
    vectors[:, free] = rng.standard_normal((samples, free.size))

    gaps = decay_study(pair, field, op, vectors, max_layers, n_jobs=n_jobs)
    frame = pd.DataFrame(
        [(k, m, gaps[k, m - 1]) for k in range(samples) for m in range(1, max_layers)],
        columns=ReportColumns.DECAY,
    )
    beta = fit_decay_rate(gaps.mean(axis=0))
    logger.info(f"Decay study H=2^-{coarse_exponent}, h=2^-{fine_exponent}: beta={beta:.3f}")
    return frame, beta


def run_indicator_study(config: ExperimentConfig, coarse_exponent: int, layers: int,
                        against: str = "reference", n_jobs: int = 1) -> pd.DataFrame:
    """
    Таблица E_{Q,T}: корректоры для u* = 0 против поля в решении.

    Args:
        config: Конфигурация (задача, h, модель, Ньютон).
        coarse_exponent: H = 2^-k.
        layers: Число слоёв m.
        against: reference - поле в u_h; lod - поле в LOD решении стратегии zero.
        n_jobs: Число процессов.

    Returns:
        pd.DataFrame: element, center_x, center_y, indicator.

    Raises:
        ConfigurationError: Если against неизвестен.
    """
    if against not in ("reference", "lod"):
        raise ConfigurationError(f"Unknown indicator comparison '{against}'. Available: ['reference', 'lod']")

    problem = build_problem(
        config.problem, epsilon=config.epsilon, seed=config.seed,
        channel_contrast=config.channel_contrast, channel_width=config.channel_width,
    )
    model = LinearizationModel(config.model)
    pair = build_nested_pair(build_mesh(2 ** coarse_exponent), build_mesh(2 ** config.h_exponent))
    op = compose_interpolation(pair)

    field = model.produce(problem.coefficient, pair.fine).matrix
    correctors = compute_correctors(pair, field, op, layers, n_jobs=n_jobs)

    if against == "reference":
        point = solve_fine_reference(pair.fine, problem.coefficient, problem.f, config.newton_config()).solution
    else:
        task = StrategyProblem(
            pair=pair, op=op, coefficient=problem.coefficient, f=problem.f, layers=layers,
            method=config.method, newton=config.newton_config(), n_jobs=n_jobs,
        )
        outcome = run_strategy(LinearizationStrategy.parse("zero", config.model), task)
        result = outcome.result
        point = result.multiscale_solution if result.multiscale_solution is not None else result.solution

    field_u = model.produce(problem.coefficient, pair.fine, point).matrix
    return indicators_frame(compute_indicators(pair, layers, field, field_u, correctors, n_jobs=n_jobs))
