"""
Модуль конфигурации решателя LOD.

Этот модуль обрабатывает загрузку и управление конфигурацией процесса из переменных окружения.
Использует python-dotenv для загрузки необязательного .env файла.
Параметры отдельных экспериментов описываются INI файлами (см. lod.experiments.settings).
"""

import logging
import os
from dotenv import load_dotenv

from lod.utils.constants import FileConfig

# Загрузить переменные окружения из .env файла
load_dotenv(".env")


def _env_bool(name: str, default: str = "False") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes")


class Config:
    """
    Основной класс конфигурации приложения.

    Все настройки процесса загружаются из переменных окружения.
    """

    # Настройки приложения
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
    DEBUG: bool = _env_bool("DEBUG")

    # Параллельное вычисление корректоров (joblib)
    N_JOBS_RAW: str = os.getenv("LOD_N_JOBS", "1")

    # Кэш корректоров на диске
    USE_CACHE: bool = _env_bool("LOD_USE_CACHE")

    # Директории
    CACHE_DIR: str = os.getenv("LOD_CACHE_DIR", FileConfig.CACHE_DIR)
    REPORTS_DIR: str = os.getenv("LOD_REPORTS_DIR", FileConfig.REPORTS_DIR)
    LOGS_DIR: str = os.getenv("LOD_LOGS_DIR", FileConfig.LOGS_DIR)

    @classmethod
    def n_jobs(cls) -> int:
        """
        Число параллельных процессов для задач корректоров.

        Returns:
            int: Значение LOD_N_JOBS (1 при невалидном значении).
        """
        try:
            return int(cls.N_JOBS_RAW)
        except ValueError:
            return 1

    @classmethod
    def validate(cls) -> bool:
        """
        Проверка, что все переменные конфигурации имеют допустимые значения.

        Returns:
            bool: True, если конфигурация валидна, иначе False.
        """
        problems = []

        try:
            if int(cls.N_JOBS_RAW) == 0:
                problems.append("LOD_N_JOBS must be nonzero")
        except ValueError:
            problems.append(f"LOD_N_JOBS is not an integer: {cls.N_JOBS_RAW!r}")

        if not isinstance(getattr(logging, cls.LOG_LEVEL, None), int):
            problems.append(f"LOG_LEVEL is unknown: {cls.LOG_LEVEL!r}")

        if problems:
            logging.error(f"Invalid environment configuration: {'; '.join(problems)}")
            return False

        return True

    @classmethod
    def setup_logging(cls) -> None:
        """
        Настройка логирования для приложения.

        Настраивает логирование с указанным уровнем и создает директорию logs,
        если она не существует.
        """
        os.makedirs(cls.LOGS_DIR, exist_ok=True)

        level = getattr(logging, cls.LOG_LEVEL, logging.INFO)
        if cls.DEBUG:
            level = logging.DEBUG

        logging.basicConfig(
            level=level,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(os.path.join(cls.LOGS_DIR, 'lod.log')),
                logging.StreamHandler()
            ]
        )

    @classmethod
    def create_directories(cls) -> None:
        """
        Создание необходимых директорий для приложения.

        Создает директории для отчётов, кэша корректоров и логов, если они не существуют.
        """
        for directory in [cls.REPORTS_DIR, cls.CACHE_DIR, cls.LOGS_DIR]:
            os.makedirs(directory, exist_ok=True)
