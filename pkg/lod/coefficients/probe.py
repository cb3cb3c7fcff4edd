"""
Выборочная проверка предположений о коэффициенте.

Оценивает константы монотонности и Липшица случайной выборкой и сверяет
аналитический якобиан с центральными разностями.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np

from lod.coefficients.base import NonlinearCoefficient
from lod.utils.constants import ProbeDefaults
from lod.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ProbeReport:
    """
    Результат пробы.

    Attributes:
        lower_bound: Минимальное отношение монотонности (lambda).
        upper_bound: Максимальное отношение Липшица (Lambda).
        data_bound: max |A(x, 0)| (C_0).
        jacobian_lipschitz: Максимальное отношение Липшица якобиана (L_A).
        samples: Размер выборки.
        gradient_cap: Радиус выборки по |xi|.
        passed: lambda > 0 и все значения конечны.
    """
    lower_bound: float
    upper_bound: float
    data_bound: float
    jacobian_lipschitz: float
    samples: int
    gradient_cap: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _sample(coefficient: NonlinearCoefficient, rng: np.random.Generator, samples: int,
            gradient_cap: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    points = rng.uniform(0.0, 1.0, size=(samples, 2))
    radius = gradient_cap * np.sqrt(rng.uniform(0.0, 1.0, size=samples))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=samples)
    grads = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    values = rng.uniform(-gradient_cap, gradient_cap, size=samples) if coefficient.depends_on_value else None
    return points, grads, values


def monotonicity_probe(coefficient: NonlinearCoefficient, samples: int = ProbeDefaults.SAMPLES,
                       gradient_cap: float = ProbeDefaults.GRADIENT_CAP,
                       seed: int = ProbeDefaults.SEED) -> ProbeReport:
    """
    Оценить lambda, Lambda, C_0 и L_A по случайным парам (x, xi1, xi2) с |xi| <= cap.

    Проба никогда не бросает исключений: неконечные значения дают passed=False.

    Args:
        coefficient: Коэффициент.
        samples: Число пар (>= 1).
        gradient_cap: Радиус выборки по |xi|.
        seed: Зерно генератора.

    Returns:
        ProbeReport: Оценки констант. Также записываются в coefficient.metadata.
    """
    samples = max(int(samples), 1)
    rng = np.random.default_rng(seed)
    points, first, values = _sample(coefficient, rng, samples, gradient_cap)
    _, second, _ = _sample(coefficient, rng, samples, gradient_cap)

    with np.errstate(all='ignore'):
        try:
            step = first - second
            distance = np.linalg.norm(step, axis=1)
            valid = distance > 0

            flux_gap = coefficient.flux(points, first, values) - coefficient.flux(points, second, values)
            monotone = np.einsum('nd,nd->n', flux_gap, step)[valid] / distance[valid] ** 2
            lipschitz = np.linalg.norm(flux_gap, axis=1)[valid] / distance[valid]

            jacobian_gap = coefficient.jacobian(points, first, values) - coefficient.jacobian(points, second, values)
            jacobian_lipschitz = np.linalg.norm(jacobian_gap, ord=2, axis=(1, 2))[valid] / distance[valid]

            at_zero = coefficient.flux(points, np.zeros_like(first), values)
            data_bound = float(np.linalg.norm(at_zero, axis=1).max())

            lower = float(monotone.min()) if monotone.size else float("nan")
            upper = float(lipschitz.max()) if lipschitz.size else float("nan")
            lip_a = float(jacobian_lipschitz.max()) if jacobian_lipschitz.size else float("nan")
        except (ArithmeticError, ValueError) as e:
            logger.error(f"Monotonicity probe of '{coefficient.name}' failed: {e}")
            lower = upper = lip_a = data_bound = float("nan")

    finite = all(np.isfinite(x) for x in (lower, upper, lip_a, data_bound))
    report = ProbeReport(
        lower_bound=lower,
        upper_bound=upper,
        data_bound=data_bound,
        jacobian_lipschitz=lip_a,
        samples=samples,
        gradient_cap=float(gradient_cap),
        passed=bool(finite and lower > 0),
    )

    metadata = coefficient.metadata
    metadata.lower_bound = report.lower_bound
    metadata.upper_bound = report.upper_bound
    metadata.data_bound = report.data_bound
    metadata.jacobian_lipschitz = report.jacobian_lipschitz

    logger.info(
        f"Probe '{coefficient.name}' (cap {gradient_cap:g}): lambda={lower:.4g}, Lambda={upper:.4g}, "
        f"C0={data_bound:.4g}, L_A={lip_a:.4g}, pass={report.passed}"
    )
    return report


def check_jacobian(coefficient: NonlinearCoefficient, samples: int = 100,
                   step: float = ProbeDefaults.FD_STEP, seed: int = ProbeDefaults.SEED,
                   gradient_cap: float = ProbeDefaults.GRADIENT_CAP) -> float:
    """
    Сравнить D_xi A с центральными разностями.

    Args:
        coefficient: Коэффициент.
        samples: Число точек (x, xi).
        step: Шаг разностей.
        seed: Зерно генератора.
        gradient_cap: Радиус выборки по |xi|.

    Returns:
        float: Максимальная относительная ошибка ||D_fd - D|| / max(||D||, 1).
    """
    rng = np.random.default_rng(seed)
    points, grads, values = _sample(coefficient, rng, max(int(samples), 1), gradient_cap)
    analytic = coefficient.jacobian(points, grads, values)

    numeric = np.empty_like(analytic)
    for j in range(2):
        shift = np.zeros(2)
        shift[j] = step
        forward = coefficient.flux(points, grads + shift, values)
        backward = coefficient.flux(points, grads - shift, values)
        numeric[:, :, j] = (forward - backward) / (2.0 * step)

    scale = np.maximum(np.linalg.norm(analytic, axis=(1, 2)), 1.0)
    error = float((np.linalg.norm(numeric - analytic, axis=(1, 2)) / scale).max())
    logger.debug(f"Jacobian check '{coefficient.name}': max relative error {error:.3e}")
    return error
