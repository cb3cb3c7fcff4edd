"""
Каталог модельных задач экспериментов.

Каждая задача - пара (коэффициент, правая часть f). Правые части - функции
точек формы (n, 2), возвращающие значения формы (n,).
"""

from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, Optional

import numpy as np

from lod.coefficients import (
    LinearCoefficient,
    NonlinearCoefficient,
    periodic_coefficient,
    random_checkerboard,
    richards_coefficient,
)
from lod.utils.constants import ProblemConstants
from lod.utils.exceptions import ConfigurationError
from lod.utils.logger import get_logger

logger = get_logger(__name__)


def gaussian_source(points: np.ndarray, amplitude: float) -> np.ndarray:
    """amplitude * exp(-0.1 |x - x0|^2)."""
    center = np.asarray(ProblemConstants.SOURCE_CENTER)
    distance = np.sum((np.asarray(points) - center) ** 2, axis=1)
    return amplitude * np.exp(-ProblemConstants.SOURCE_DECAY * distance)


def strip_source(points: np.ndarray, low: float, high: float) -> np.ndarray:
    """low в полосе x2 <= 0.1, high выше неё."""
    points = np.asarray(points)
    return np.where(points[:, 1] <= ProblemConstants.SOURCE_STRIP_HEIGHT, low, high)


def constant_source(points: np.ndarray, value: float = 1.0) -> np.ndarray:
    return np.full(np.asarray(points).shape[0], float(value))


@dataclass(frozen=True)
class Problem:
    """
    Собранная задача.

    Attributes:
        name: Имя в каталоге.
        coefficient: Нелинейный коэффициент A(x, xi).
        f: Правая часть.
    """
    name: str
    coefficient: NonlinearCoefficient
    f: Callable[[np.ndarray], np.ndarray]


def _periodic(amplitude: float, epsilon: float, **_) -> tuple:
    return periodic_coefficient(epsilon), partial(gaussian_source, amplitude=amplitude)


def _random(epsilon: float, seed: Optional[int] = None, **_) -> tuple:
    if seed is None:
        raise ConfigurationError("Problem 'random' needs a seed")
    source = partial(strip_source, low=ProblemConstants.RANDOM_LOW_SOURCE, high=ProblemConstants.RANDOM_HIGH_SOURCE)
    return random_checkerboard(epsilon, seed), source


def _richards(epsilon: float, channel_contrast: float = ProblemConstants.CHANNEL_CONTRAST,
              channel_width: float = ProblemConstants.CHANNEL_WIDTH, **_) -> tuple:
    coefficient = richards_coefficient(channel_contrast, epsilon=epsilon, channel_width=channel_width)
    source = partial(strip_source, low=ProblemConstants.RICHARDS_LOW_SOURCE, high=ProblemConstants.RICHARDS_HIGH_SOURCE)
    return coefficient, source


def _linear(**_) -> tuple:
    return LinearCoefficient(), constant_source


# Реестр задач: имя -> (фабрика, описание)
PROBLEMS: Dict[str, tuple] = {
    'periodic_f1': (partial(_periodic, ProblemConstants.F1_AMPLITUDE),
                    "Периодический коэффициент, f1 = 10 exp(-0.1|x - x0|^2)"),
    'periodic_f2': (partial(_periodic, ProblemConstants.F2_AMPLITUDE),
                    "Периодический коэффициент, f2 = 100 exp(-0.1|x - x0|^2)"),
    'random': (_random, "Случайный шахматный коэффициент, f = 5 при x2 <= 0.1, иначе 50"),
    'richards': (_richards, "Стационарное уравнение Ричардса, f = 0.1 при x2 <= 0.1, иначе 1"),
    'linear_sanity': (_linear, "Линейная задача A(x, xi) = xi, f = 1"),
}


def build_problem(name: str, epsilon: float = 2.0 ** -4, seed: Optional[int] = None,
                  channel_contrast: float = ProblemConstants.CHANNEL_CONTRAST,
                  channel_width: float = ProblemConstants.CHANNEL_WIDTH) -> Problem:
    """
    Собрать задачу из каталога.

    Args:
        name: Имя задачи.
        epsilon: Масштаб коэффициента.
        seed: Зерно шахматного коэффициента (обязательно для random).
        channel_contrast: Контраст канала (richards).
        channel_width: Ширина канала в единицах eps (richards).

    Returns:
        Problem: Коэффициент и правая часть.

    Raises:
        ConfigurationError: Если задача неизвестна или не хватает параметров.
    """
    if name not in PROBLEMS:
        raise ConfigurationError(f"Problem '{name}' not found. Available: {list(PROBLEMS.keys())}")

    factory, _ = PROBLEMS[name]
    coefficient, source = factory(
        epsilon=epsilon, seed=seed, channel_contrast=channel_contrast, channel_width=channel_width,
    )
    logger.info(f"Problem {name}: coefficient {coefficient.name} {coefficient.metadata.parameters}")
    return Problem(name=name, coefficient=coefficient, f=source)


def list_problems() -> Dict[str, str]:
    """Имя задачи -> описание."""
    return {name: description for name, (_, description) in PROBLEMS.items()}
