"""
Случайный шахматный коэффициент с кубической нелинейностью.
"""

from typing import Optional

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.utils.constants import ProblemConstants
from lod.utils.exceptions import CoefficientError
from lod.utils.logger import get_logger

logger = get_logger(__name__)


class CheckerboardCoefficient(NonlinearCoefficient):
    """
    A(x, xi) = c(x) (xi1 + xi1^3/3, xi2 + xi2^3/3).

    c(x) постоянна на клетках eps-решётки; значения равномерно распределены
    на [0.1, 1] и генерируются numpy.random.default_rng(seed) в порядке
    cells[row, col], row = floor(x2/eps), col = floor(x1/eps).
    """

    name = "checkerboard"

    def __init__(self, epsilon: float = 2.0 ** -4, seed: int = 0):
        if not epsilon > 0:
            raise CoefficientError(f"epsilon must be positive, got {epsilon!r}")
        cells = int(round(1.0 / epsilon))
        if cells < 1 or not np.isclose(cells * epsilon, 1.0):
            raise CoefficientError(f"1/epsilon must be an integer, got epsilon={epsilon!r}")

        super().__init__(epsilon=float(epsilon), seed=int(seed))
        self.epsilon = float(epsilon)
        self.seed = int(seed)

        low, high = ProblemConstants.CHECKERBOARD_RANGE
        rng = np.random.default_rng(self.seed)
        self.cell_values = rng.uniform(low, high, size=(cells, cells))
        self.cell_values.setflags(write=False)
        logger.info(f"Checkerboard coefficient: {cells}x{cells} cells, seed={self.seed}")

    @staticmethod
    def get_description() -> str:
        return "Random checkerboard c(x) with cubic nonlinearity c(x)(xi + xi^3/3)"

    def spatial_factor(self, points: np.ndarray) -> np.ndarray:
        """Значения c(x)."""
        points = np.asarray(points, dtype=float)
        cells = self.cell_values.shape[0]
        index = np.clip(np.floor(points / self.epsilon).astype(np.int64), 0, cells - 1)
        return self.cell_values[index[:, 1], index[:, 0]]

    def flux(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        grads = np.asarray(grads, dtype=float)
        return self.spatial_factor(points)[:, None] * (grads + grads ** 3 / 3.0)

    def jacobian(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        grads = np.asarray(grads, dtype=float)
        c = self.spatial_factor(points)
        result = np.zeros((grads.shape[0], 2, 2))
        result[:, 0, 0] = c * (1.0 + grads[:, 0] ** 2)
        result[:, 1, 1] = c * (1.0 + grads[:, 1] ** 2)
        return result
