"""
Инициализация и реестр коэффициентов.

Предоставляет фабрику и реестр для всех доступных нелинейных коэффициентов.
"""

from typing import Dict

from lod.coefficients.base import CoefficientMetadata, NonlinearCoefficient, element_arguments
from lod.coefficients.checkerboard import CheckerboardCoefficient
from lod.coefficients.linear import LinearCoefficient
from lod.coefficients.linearization import LinearizationModel, LinearizedCoefficient
from lod.coefficients.periodic import PeriodicCoefficient
from lod.coefficients.probe import ProbeReport, check_jacobian, monotonicity_probe
from lod.coefficients.richards import QuasilinearCoefficient, RichardsCoefficient
from lod.utils.exceptions import CoefficientError


# Реестр коэффициентов
COEFFICIENTS = {
    'periodic': PeriodicCoefficient,
    'checkerboard': CheckerboardCoefficient,
    'richards': RichardsCoefficient,
    'linear': LinearCoefficient,
}


def get_coefficient(name: str, **params) -> NonlinearCoefficient:
    """
    Получить экземпляр коэффициента по имени.

    Args:
        name: Имя коэффициента ('periodic', 'checkerboard', 'richards', 'linear').
        **params: Параметры конструктора (epsilon, seed, channel_contrast, ...).

    Returns:
        NonlinearCoefficient: Экземпляр коэффициента.

    Raises:
        CoefficientError: Если имя не найдено или параметры не подходят.
    """
    if name not in COEFFICIENTS:
        raise CoefficientError(f"Coefficient '{name}' not found. Available: {list(COEFFICIENTS.keys())}")

    try:
        return COEFFICIENTS[name](**params)
    except TypeError as e:
        raise CoefficientError(f"Invalid parameters for coefficient '{name}': {e}") from e


def list_coefficients() -> Dict[str, str]:
    """
    Получить описания всех доступных коэффициентов.

    Returns:
        dict: Имя -> описание.
    """
    return {name: cls.get_description() for name, cls in COEFFICIENTS.items()}


def periodic_coefficient(epsilon: float) -> PeriodicCoefficient:
    """Периодический коэффициент с масштабом eps."""
    return PeriodicCoefficient(epsilon=epsilon)


def random_checkerboard(epsilon: float, seed: int) -> CheckerboardCoefficient:
    """Случайный шахматный коэффициент с масштабом eps и зерном seed."""
    return CheckerboardCoefficient(epsilon=epsilon, seed=seed)


def richards_coefficient(channel_contrast: float, **params) -> RichardsCoefficient:
    """Коэффициент Ричардса с заданным контрастом канала."""
    return RichardsCoefficient(channel_contrast=channel_contrast, **params)


__all__ = [
    'COEFFICIENTS',
    'CoefficientMetadata',
    'NonlinearCoefficient',
    'QuasilinearCoefficient',
    'PeriodicCoefficient',
    'CheckerboardCoefficient',
    'RichardsCoefficient',
    'LinearCoefficient',
    'LinearizationModel',
    'LinearizedCoefficient',
    'ProbeReport',
    'check_jacobian',
    'element_arguments',
    'get_coefficient',
    'list_coefficients',
    'monotonicity_probe',
    'periodic_coefficient',
    'random_checkerboard',
    'richards_coefficient',
]
