"""
Пользовательские исключения решателя LOD.

Предоставляет специфические типы исключений для улучшенной обработки ошибок и отладки.
"""

from typing import Optional


class LodException(Exception):
    """Базовое исключение для всех ошибок библиотеки."""
    pass


class MeshError(LodException):
    """Возникает при невалидных параметрах сетки, патча или вложенной пары сеток."""
    pass


class AssemblyError(LodException):
    """Возникает когда поле коэффициентов или правая часть невалидны при сборке."""
    pass


class SingularSystemError(LodException):
    """
    Возникает при факторизации вырожденной матрицы.

    Attributes:
        pivot_index: Индекс нулевого ведущего элемента (или None, если не определён).
    """

    def __init__(self, message: str, pivot_index: Optional[int] = None):
        super().__init__(message)
        self.pivot_index = pivot_index


class CorrectorError(LodException):
    """
    Возникает при ошибке вычисления корректора элемента.

    Attributes:
        element: Индекс грубого элемента (центр патча).
    """

    def __init__(self, message: str, element: Optional[int] = None):
        super().__init__(message)
        self.element = element


class CoefficientError(LodException):
    """Возникает когда параметры коэффициента невалидны."""
    pass


class UnsupportedLinearizationError(CoefficientError):
    """Возникает когда модель линеаризации неприменима к коэффициенту."""
    pass


class NonConvergenceError(LodException):
    """
    Возникает когда метод Ньютона не достиг заданной точности.

    Attributes:
        iterations: Число выполненных итераций.
        residual: Норма последней невязки.
    """

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NumericalBreakdownError(LodException):
    """Возникает при появлении NaN/inf в невязке или шаге Ньютона."""
    pass


class ConfigurationError(LodException):
    """Возникает когда конфигурация эксперимента невалидна."""
    pass


class IndicatorError(LodException):
    """Возникает при ошибке вычисления погрешностей или индикатора."""
    pass
