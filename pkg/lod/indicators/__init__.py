"""
Меры ошибок и индикаторы.
"""

from lod.indicators.errors import ErrorRecord, best_l2_approximation, compute_errors, h1_seminorm, l2_norm
from lod.indicators.corrector_indicator import (
    IndicatorRecord,
    compute_indicator,
    compute_indicators,
    indicators_frame,
    local_seminorm,
    recomputation_gap,
    scale_coefficient,
)
from lod.indicators.linearization import LinearizationSurrogates, linearization_surrogates

__all__ = [
    'ErrorRecord',
    'best_l2_approximation',
    'compute_errors',
    'h1_seminorm',
    'l2_norm',
    'IndicatorRecord',
    'compute_indicator',
    'compute_indicators',
    'indicators_frame',
    'local_seminorm',
    'recomputation_gap',
    'scale_coefficient',
    'LinearizationSurrogates',
    'linearization_surrogates',
]
