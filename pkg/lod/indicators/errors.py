"""
Меры ошибок: макроскопическая e_H, мультимасштабная e_LOD и наилучшее L2-приближение в V_H.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from lod.fem.linalg import DirectFactorization, SparseOperator
from lod.multiscale.interpolation import InterpolationOperator
from lod.utils.exceptions import IndicatorError


@dataclass
class ErrorRecord:
    """
    Ошибки одного расчёта относительно эталонного решения u_h.

    Attributes:
        H: Шаг грубой сетки.
        h: Шаг мелкой сетки.
        m: Число слоёв (None для грубого МКЭ).
        e_H: ||u_h - I_H u||_0 / ||u_h||_0.
        e_LOD: |u_h - u|_1 / |u_h|_1.
        best_l2: Относительная ошибка L2-проекции u_h на V_H.
        eoc_e_H: Порядок сходимости e_H относительно предыдущего H.
        eoc_e_LOD: Порядок сходимости e_LOD относительно предыдущего H.
    """
    H: float
    h: float
    m: Optional[int]
    e_H: float
    e_LOD: float
    best_l2: float = float("nan")
    eoc_e_H: float = float("nan")
    eoc_e_LOD: float = float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _matrix(operator) -> sp.spmatrix:
    return operator.matrix if isinstance(operator, SparseOperator) else operator


def l2_norm(mass, vector: np.ndarray) -> float:
    """||v||_0 через матрицу масс."""
    return float(np.sqrt(max(vector @ (_matrix(mass) @ vector), 0.0)))


def h1_seminorm(stiffness, vector: np.ndarray) -> float:
    """|v|_1 через матрицу жёсткости с единичным коэффициентом."""
    return float(np.sqrt(max(vector @ (_matrix(stiffness) @ vector), 0.0)))


def compute_errors(u_ref: np.ndarray, u_ms: np.ndarray, op: InterpolationOperator, mass, stiffness,
                   coarse_space: bool = False, upscaled: Optional[np.ndarray] = None,
                   m: Optional[int] = None, best_l2: float = float("nan")) -> ErrorRecord:
    """
    Вычислить e_H и e_LOD.

    Args:
        u_ref: Эталонное решение u_h на мелкой сетке.
        u_ms: Приближённое решение на мелкой сетке.
        op: Оператор квазиинтерполяции.
        mass: Мелкая матрица масс.
        stiffness: Мелкая матрица жёсткости с единичным коэффициентом.
        coarse_space: u_ms уже лежит в V_H (Петров-Галёркин, грубый МКЭ): e_H без I_H.
        upscaled: Представление для e_LOD, если оно отличается от u_ms ((id - Q_m) u^{PG}).
        m: Число слоёв для записи.
        best_l2: Ошибка наилучшего приближения для записи.

    Returns:
        ErrorRecord: Относительные ошибки.

    Raises:
        IndicatorError: Если эталонное решение нулевое.
    """
    reference_l2 = l2_norm(mass, u_ref)
    reference_h1 = h1_seminorm(stiffness, u_ref)
    if reference_l2 == 0.0 or reference_h1 == 0.0:
        raise IndicatorError("Reference solution has zero norm; relative errors are undefined")

    macroscopic = u_ms if coarse_space else op.embed(op.interpolate(u_ms))
    upscaled = u_ms if upscaled is None else upscaled

    return ErrorRecord(
        H=op.coarse_mesh.h,
        h=op.fine_mesh.h,
        m=m,
        e_H=l2_norm(mass, u_ref - macroscopic) / reference_l2,
        e_LOD=h1_seminorm(stiffness, u_ref - upscaled) / reference_h1,
        best_l2=best_l2,
    )


def best_l2_approximation(u_ref: np.ndarray, op: InterpolationOperator, mass) -> Tuple[np.ndarray, float]:
    """
    L2-ортогональная проекция u_h на вложенное пространство V_H.

    Решается система Грама P^T M_h P c = P^T M_h u_h на свободных грубых узлах.

    Args:
        u_ref: Эталонное решение.
        op: Оператор квазиинтерполяции (источник вложения P).
        mass: Мелкая матрица масс.

    Returns:
        Tuple: Проекция на мелкой сетке и относительная ошибка.

    Raises:
        IndicatorError: Если эталонное решение нулевое.
    """
    mass_matrix = _matrix(mass)
    embedding = op.free_embedding
    gram = sp.csc_matrix(embedding.T @ (mass_matrix @ embedding))
    moments = embedding.T @ (mass_matrix @ u_ref)

    coefficients = DirectFactorization(gram, label="coarse Gram matrix").solve(moments)
    projection = embedding @ coefficients

    reference = l2_norm(mass_matrix, u_ref)
    if reference == 0.0:
        raise IndicatorError("Reference solution has zero L2 norm")
    return projection, l2_norm(mass_matrix, u_ref - projection) / reference
