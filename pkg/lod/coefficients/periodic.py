"""
Периодический коэффициент с нелинейностью 1 + (1 + |xi|^2)^(-1/2).
"""

from typing import Optional

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.utils.exceptions import CoefficientError


class PeriodicCoefficient(NonlinearCoefficient):
    """
    A(x, xi) = a(x) g(|xi|^2) xi, где

        a(x) = 1 + x1 x2 + (1.1 + pi/3 + sin(2 pi x1/eps)) / (1.1 + sin(2 pi x1/eps)),
        g(s) = 1 + (1 + s)^(-1/2).

    Коэффициент имеет вид alpha(x, |xi|^2) xi, поэтому допускает модель Качанова.
    """

    name = "periodic"

    def __init__(self, epsilon: float = 2.0 ** -4):
        if not epsilon > 0:
            raise CoefficientError(f"epsilon must be positive, got {epsilon!r}")
        super().__init__(epsilon=float(epsilon))
        self.epsilon = float(epsilon)

    @staticmethod
    def get_description() -> str:
        return "Periodic multiscale coefficient a(x)(1 + (1+|xi|^2)^(-1/2)) xi"

    def spatial_factor(self, points: np.ndarray) -> np.ndarray:
        """Множитель a(x)."""
        points = np.asarray(points, dtype=float)
        wave = np.sin(2.0 * np.pi * points[:, 0] / self.epsilon)
        return 1.0 + points[:, 0] * points[:, 1] + (1.1 + np.pi / 3.0 + wave) / (1.1 + wave)

    def kacanov_factor(self, points: np.ndarray, grads: np.ndarray,
                       values: Optional[np.ndarray] = None) -> np.ndarray:
        s = np.einsum('nd,nd->n', grads, grads)
        return self.spatial_factor(points) * (1.0 + 1.0 / np.sqrt(1.0 + s))

    def flux(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        grads = np.asarray(grads, dtype=float)
        return self.kacanov_factor(points, grads)[:, None] * grads

    def jacobian(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        grads = np.asarray(grads, dtype=float)
        a = self.spatial_factor(points)
        s = np.einsum('nd,nd->n', grads, grads)
        g = 1.0 + (1.0 + s) ** -0.5
        g_prime = -0.5 * (1.0 + s) ** -1.5
        # a (g I + 2 g'(s) xi xi^T)
        outer = np.einsum('ni,nj->nij', grads, grads)
        return a[:, None, None] * (g[:, None, None] * np.eye(2) + 2.0 * g_prime[:, None, None] * outer)
