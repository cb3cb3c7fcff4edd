"""
Нелинейные решатели: эталонный МКЭ, грубый МКЭ, LOD Галёркин и Петров-Галёркин.
"""

from lod.solvers.newton import (
    NewtonConfig,
    SolveResult,
    fine_jacobian,
    fine_residual,
    newton_loop,
    solve_coarse_fem,
    solve_fine_reference,
    solve_subspace,
)
from lod.solvers.lod import solve_lod_galerkin, solve_lod_petrov_galerkin
from lod.solvers.strategies import (
    METHODS,
    LinearizationStrategy,
    ProvenanceEntry,
    StabilityReport,
    StrategyOutcome,
    StrategyProblem,
    run_strategy,
    stability_check,
)

__all__ = [
    'NewtonConfig',
    'SolveResult',
    'fine_jacobian',
    'fine_residual',
    'newton_loop',
    'solve_coarse_fem',
    'solve_fine_reference',
    'solve_subspace',
    'solve_lod_galerkin',
    'solve_lod_petrov_galerkin',
    'METHODS',
    'LinearizationStrategy',
    'ProvenanceEntry',
    'StabilityReport',
    'StrategyOutcome',
    'StrategyProblem',
    'run_strategy',
    'stability_check',
]
