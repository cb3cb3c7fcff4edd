"""
Мультимасштабные операторы: квазиинтерполяция I_H и элементные корректоры.
"""

from lod.multiscale.interpolation import (
    InterpolationOperator,
    KernelConstraints,
    build_averaging,
    build_l2_projection,
    build_prolongation,
    compose_interpolation,
    kernel_constraints,
)
from lod.multiscale.corrector import (
    CorrectorCache,
    CorrectorSet,
    ElementCorrector,
    apply_global_corrector,
    apply_ideal_corrector,
    assemble_basis,
    compute_correctors,
    decay_study,
    energy_seminorm,
    fit_decay_rate,
    load_correctors,
    save_correctors,
    solve_element_corrector,
)

__all__ = [
    'InterpolationOperator',
    'KernelConstraints',
    'build_averaging',
    'build_l2_projection',
    'build_prolongation',
    'compose_interpolation',
    'kernel_constraints',
    'CorrectorCache',
    'CorrectorSet',
    'ElementCorrector',
    'apply_global_corrector',
    'apply_ideal_corrector',
    'assemble_basis',
    'compute_correctors',
    'decay_study',
    'energy_seminorm',
    'fit_decay_rate',
    'load_correctors',
    'save_correctors',
    'solve_element_corrector',
]
