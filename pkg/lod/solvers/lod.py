"""
Решатели LOD: метод Галёркина в V_{H,m} и метод Петрова-Галёркина (V_H x V_{H,m}).
"""

import time
from typing import Optional

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.fem.assembly import assemble_load
from lod.fem.mesh import NestedPair
from lod.multiscale.corrector import CorrectorSet
from lod.solvers.newton import NewtonConfig, SolveResult, SourceFunction, initial_guess_vector, solve_subspace
from lod.utils.logger import get_logger

logger = get_logger(__name__)


def solve_lod_galerkin(pair: NestedPair, coefficient: NonlinearCoefficient, f: SourceFunction,
                       correctors: CorrectorSet, config: Optional[NewtonConfig] = None) -> SolveResult:
    """
    Найти u_{H,m} в V_{H,m}: B(u_{H,m}; v) = (f, v) для всех v из V_{H,m}.

    Args:
        pair: Вложенная пара сеток.
        coefficient: Нелинейный коэффициент.
        f: Правая часть.
        correctors: Корректоры, задающие базис V_{H,m}.
        config: Параметры Ньютона (initial_guess - на грубых узлах).

    Returns:
        SolveResult: solution = sum_z c_z basis_z на мелкой сетке, coarse_solution = c.

    Raises:
        NonConvergenceError: Если Ньютон не сошёлся.
        SingularSystemError: Если грубый якобиан вырожден.
    """
    config = config or NewtonConfig()
    coarse = pair.coarse
    label = f"LOD H=1/{coarse.divisions_per_side} m={correctors.layers}"
    start = time.perf_counter()

    free = coarse.free_nodes
    basis = correctors.basis
    c, iterations, history = solve_subspace(
        pair.fine, coefficient, assemble_load(pair.fine, f), basis, basis, config,
        initial_guess_vector(config, coarse.num_nodes, free, label), label, symmetric=True,
    )

    coarse_solution = np.zeros(coarse.num_nodes)
    coarse_solution[free] = c
    return SolveResult(
        solution=basis @ c,
        iterations=iterations,
        residual_history=history,
        strategy_label="galerkin",
        coarse_solution=coarse_solution,
        wall_time=time.perf_counter() - start,
    )


def solve_lod_petrov_galerkin(pair: NestedPair, coefficient: NonlinearCoefficient, f: SourceFunction,
                              correctors: CorrectorSet, config: Optional[NewtonConfig] = None) -> SolveResult:
    """
    Найти u^{PG} в V_H: B(u^{PG}; v) = (f, v) для всех v из V_{H,m}.

    Args:
        pair: Вложенная пара сеток.
        coefficient: Нелинейный коэффициент.
        f: Правая часть.
        correctors: Корректоры тестового пространства.
        config: Параметры Ньютона (initial_guess - на грубых узлах).

    Returns:
        SolveResult: solution = вложение u^{PG} на мелкую сетку,
        multiscale_solution = (id - Q_m) u^{PG}, coarse_solution = узловые значения u^{PG}.
    """
    config = config or NewtonConfig()
    coarse = pair.coarse
    label = f"PG-LOD H=1/{coarse.divisions_per_side} m={correctors.layers}"
    start = time.perf_counter()

    free = coarse.free_nodes
    trial = correctors.op.free_embedding
    c, iterations, history = solve_subspace(
        pair.fine, coefficient, assemble_load(pair.fine, f), trial, correctors.basis, config,
        initial_guess_vector(config, coarse.num_nodes, free, label), label, symmetric=False,
    )

    coarse_solution = np.zeros(coarse.num_nodes)
    coarse_solution[free] = c
    return SolveResult(
        solution=trial @ c,
        iterations=iterations,
        residual_history=history,
        strategy_label="petrov_galerkin",
        coarse_solution=coarse_solution,
        multiscale_solution=correctors.basis @ c,
        wall_time=time.perf_counter() - start,
    )
