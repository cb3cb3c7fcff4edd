"""
Линейный коэффициент A(x, xi) = xi для проверочных расчётов.
"""

from typing import Optional

import numpy as np

from lod.coefficients.base import NonlinearCoefficient


class LinearCoefficient(NonlinearCoefficient):
    """A(x, xi) = xi (задача Пуассона)."""

    name = "linear"

    def __init__(self):
        super().__init__()

    @staticmethod
    def get_description() -> str:
        return "Identity flux A(x, xi) = xi"

    def kacanov_factor(self, points: np.ndarray, grads: np.ndarray,
                       values: Optional[np.ndarray] = None) -> np.ndarray:
        return np.ones(np.asarray(grads).shape[0])

    def flux(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        return np.array(grads, dtype=float)

    def jacobian(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        return np.broadcast_to(np.eye(2), (np.asarray(grads).shape[0], 2, 2)).copy()
