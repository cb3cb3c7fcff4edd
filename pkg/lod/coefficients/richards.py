"""
Квазилинейные коэффициенты A(x, u, xi) = c(x) k(u) xi.

Модель Ричардса: проводимость ван Генухтена k(s) и пористая среда c(x)
с высококонтрастным каналом.
"""

from abc import abstractmethod
from typing import Optional

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.utils.constants import ProblemConstants
from lod.utils.exceptions import CoefficientError


class QuasilinearCoefficient(NonlinearCoefficient):
    """
    Абстрактный коэффициент c(x) k(u) xi.

    Линеаризация в точке u* даёт 𝔄 = c(x) k(u*) Id; производная по u
    равна c(x) k'(u) xi.
    """

    @abstractmethod
    def spatial_factor(self, points: np.ndarray) -> np.ndarray:
        """Значения c(x)."""
        pass

    @abstractmethod
    def conductivity(self, values: np.ndarray) -> np.ndarray:
        """Значения k(u)."""
        pass

    @abstractmethod
    def conductivity_derivative(self, values: np.ndarray) -> np.ndarray:
        """Значения k'(u)."""
        pass

    @property
    def depends_on_value(self) -> bool:
        return True

    @staticmethod
    def _values(grads: np.ndarray, values: Optional[np.ndarray]) -> np.ndarray:
        if values is None:
            return np.zeros(np.asarray(grads).shape[0])
        return np.asarray(values, dtype=float)

    def kacanov_factor(self, points: np.ndarray, grads: np.ndarray,
                       values: Optional[np.ndarray] = None) -> np.ndarray:
        return self.spatial_factor(points) * self.conductivity(self._values(grads, values))

    def flux(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        return self.kacanov_factor(points, grads, values)[:, None] * np.asarray(grads, dtype=float)

    def jacobian(self, points: np.ndarray, grads: np.ndarray, values: Optional[np.ndarray] = None) -> np.ndarray:
        return self.kacanov_factor(points, grads, values)[:, None, None] * np.eye(2)

    def value_derivative(self, points: np.ndarray, grads: np.ndarray,
                         values: Optional[np.ndarray] = None) -> np.ndarray:
        factor = self.spatial_factor(points) * self.conductivity_derivative(self._values(grads, values))
        return factor[:, None] * np.asarray(grads, dtype=float)


class RichardsCoefficient(QuasilinearCoefficient):
    """
    Стационарное уравнение Ричардса.

    k(s) = (1 - t (1 + t^2)^(-1/2))^2 / (1 + t^2), t = alpha |s|, alpha = 0.005.
    c(x) = 1 + 0.5 sin(2 pi x1/eps) sin(2 pi x2/eps) вне канала и contrast
    в горизонтальной полосе |x2 - 1/2| < width eps / 2.
    """

    name = "richards"

    def __init__(self, channel_contrast: float = ProblemConstants.CHANNEL_CONTRAST,
                 epsilon: float = 2.0 ** -4, channel_width: float = ProblemConstants.CHANNEL_WIDTH,
                 alpha: float = ProblemConstants.VAN_GENUCHTEN_ALPHA):
        if not channel_contrast > 0:
            raise CoefficientError(f"channel_contrast must be positive, got {channel_contrast!r}")
        if not epsilon > 0 or not channel_width > 0 or not alpha > 0:
            raise CoefficientError("epsilon, channel_width and alpha must be positive")

        super().__init__(
            channel_contrast=float(channel_contrast), epsilon=float(epsilon),
            channel_width=float(channel_width), alpha=float(alpha),
        )
        self.channel_contrast = float(channel_contrast)
        self.epsilon = float(epsilon)
        self.channel_width = float(channel_width)
        self.alpha = float(alpha)

    @staticmethod
    def get_description() -> str:
        return "Richards equation c(x) k(u) grad u with van Genuchten conductivity and a channel"

    def in_channel(self, points: np.ndarray) -> np.ndarray:
        """Признак принадлежности точек каналу."""
        points = np.asarray(points, dtype=float)
        return np.abs(points[:, 1] - 0.5) < 0.5 * self.channel_width * self.epsilon

    def spatial_factor(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        scale = 2.0 * np.pi / self.epsilon
        background = 1.0 + 0.5 * np.sin(scale * points[:, 0]) * np.sin(scale * points[:, 1])
        return np.where(self.in_channel(points), self.channel_contrast, background)

    def conductivity(self, values: np.ndarray) -> np.ndarray:
        t = self.alpha * np.abs(np.asarray(values, dtype=float))
        root = 1.0 / np.sqrt(1.0 + t ** 2)
        return (1.0 - t * root) ** 2 / (1.0 + t ** 2)

    def conductivity_derivative(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        t = self.alpha * np.abs(values)
        root = 1.0 / np.sqrt(1.0 + t ** 2)
        gap = 1.0 - t * root
        # d/dt (t (1+t^2)^(-1/2)) = (1+t^2)^(-3/2)
        dk_dt = -2.0 * gap * root ** 3 / (1.0 + t ** 2) - 2.0 * t * gap ** 2 / (1.0 + t ** 2) ** 2
        return self.alpha * np.sign(values) * dk_dt
