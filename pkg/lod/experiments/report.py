"""
Отчёт эксперимента: CSV со строками (H, m), экспериментальные порядки
сходимости и JSON файл метаданных рядом с CSV.
"""

import io
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from lod.experiments.settings import ExperimentConfig
from lod.utils.constants import FileConfig, ReportColumns
from lod.utils.helpers import atomic_write_text, code_version_digest
from lod.utils.logger import get_logger

logger = get_logger(__name__)

# Целочисленные столбцы допускают пропуски (строки с ошибкой)
_INTEGER_COLUMNS = ["m", "newton_iterations_fine", "newton_iterations_coarse", "corrector_solve_count"]
_EOC_COLUMNS = {"e_H": "eoc_e_H", "e_LOD": "eoc_e_LOD"}


def experimental_orders(H: np.ndarray, errors: np.ndarray) -> np.ndarray:
    """
    Порядки log(e1/e2)/log(H1/H2) между соседними значениями H.

    Args:
        H: Размеры сетки в порядке убывания.
        errors: Ошибки той же длины.

    Returns:
        np.ndarray: Длина len(H); первый элемент nan.
    """
    H = np.asarray(H, dtype=float)
    errors = np.asarray(errors, dtype=float)
    orders = np.full(H.size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders[1:] = np.log(errors[1:] / errors[:-1]) / np.log(H[1:] / H[:-1])
    orders[~np.isfinite(orders)] = np.nan
    return orders


def fit_eoc(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Заполнить eoc_e_H и eoc_e_LOD внутри групп (method, strategy, m).

    Порядок строки - порядок между ней и предыдущим (более крупным) H группы.

    Args:
        frame: Таблица отчёта.

    Returns:
        pd.DataFrame: Копия таблицы с заполненными столбцами порядков.
    """
    frame = frame.copy()
    for source, target in _EOC_COLUMNS.items():
        frame[target] = np.nan

    for _, group in frame.groupby(["method", "strategy", "m"], sort=False, dropna=False):
        valid = group[group["error"].fillna("") == ""].sort_values("H", ascending=False)
        if len(valid) < 2:
            continue
        for source, target in _EOC_COLUMNS.items():
            frame.loc[valid.index, target] = experimental_orders(valid["H"].to_numpy(), valid[source].to_numpy())
    return frame


@dataclass
class ExperimentReport:
    """
    Результаты эксперимента.

    Attributes:
        config: Конфигурация.
        rows: Строки отчёта в порядке (H, m).
        provenance: Журнал точек линеаризации по ключу строки "H=2^-k,m=M".
        metadata: Проба коэффициента, эталонное решение, проверка устойчивости.
    """
    config: ExperimentConfig
    rows: List[Dict[str, Any]] = field(default_factory=list)
    provenance: Dict[str, list] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def columns(self) -> List[str]:
        if self.config.include_timings:
            return ReportColumns.BASE + ReportColumns.TIMINGS
        return list(ReportColumns.BASE)

    @property
    def has_errors(self) -> bool:
        return any(row.get("error") for row in self.rows)

    def frame(self) -> pd.DataFrame:
        """Таблица отчёта с порядками сходимости в контрактном порядке столбцов."""
        frame = pd.DataFrame(self.rows, columns=ReportColumns.BASE + ReportColumns.TIMINGS)
        frame["error"] = frame["error"].fillna("")
        frame = fit_eoc(frame)
        frame = frame.astype({column: "Int64" for column in _INTEGER_COLUMNS})
        return frame[self.columns]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        self.frame().to_csv(buffer, index=False, float_format=FileConfig.FLOAT_FORMAT, lineterminator="\n")
        return buffer.getvalue()

    def write(self, path: Optional[str] = None) -> str:
        """
        Атомарно записать CSV и JSON метаданных.

        Args:
            path: Путь к CSV (по умолчанию config.output_path).

        Returns:
            str: Путь к CSV.
        """
        path = path or self.config.output_path
        atomic_write_text(path, self.to_csv())

        sidecar = {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "code_version": code_version_digest(),
            "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "timings": {
                row_key(row): {column: row.get(column) for column in ReportColumns.TIMINGS}
                for row in self.rows
            },
            "provenance": self.provenance,
            **self.metadata,
        }
        atomic_write_text(meta_path(path), json.dumps(sidecar, indent=2, default=_json_default) + "\n")
        logger.info(f"Report written: {path} ({len(self.rows)} rows)")
        return path


def row_key(row: Dict[str, Any]) -> str:
    """Ключ строки для журнала и метаданных."""
    return f"H={row['H']:.6g},m={row['m']}"


def meta_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return root + FileConfig.META_SUFFIX


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def write_table(frame: pd.DataFrame, path: str) -> str:
    """Атомарно записать таблицу (индикаторы, затухание) в CSV."""
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FileConfig.FLOAT_FORMAT, lineterminator="\n")
    atomic_write_text(path, buffer.getvalue())
    logger.info(f"Table written: {path} ({len(frame)} rows)")
    return path
