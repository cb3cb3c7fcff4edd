"""
Конфигурация эксперимента.

Параметры читаются из INI файла (секции [problem], [mesh], [method],
[newton], [output]) в ExperimentConfig; флаги командной строки
переопределяют отдельные поля через apply_overrides.
"""

import configparser
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List

from lod.coefficients.linearization import LinearizationModel
from lod.experiments.problems import PROBLEMS
from lod.solvers.newton import NewtonConfig
from lod.solvers.strategies import METHODS, LinearizationStrategy
from lod.utils.constants import FileConfig, NewtonDefaults, ProblemConstants
from lod.utils.exceptions import ConfigurationError, LodException
from lod.utils.helpers import parse_int_list
from lod.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Параметры одного эксперимента.

    Attributes:
        problem: Имя задачи из каталога.
        epsilon_exponent: eps = 2^-k.
        seed: Зерно генераторов (записывается всегда, используется задачей random).
        channel_contrast: Контраст канала (richards).
        channel_width: Ширина канала в единицах eps (richards).
        h_exponent: Мелкая сетка h = 2^-k.
        H_exponents: Грубые сетки H = 2^-k.
        m_values: Числа слоёв m.
        method: galerkin | petrov_galerkin.
        strategy: Строка стратегии (zero, coarse_fem, cascade:K, given:SOURCE).
        model: newton | kacanov.
        tolerance: Допуск невязки Ньютона.
        max_iterations: Максимум итераций Ньютона.
        output_path: Путь к CSV отчёту.
        include_timings: Добавлять столбцы времени в CSV.
    """
    problem: str = "periodic_f1"
    epsilon_exponent: int = 4
    seed: int = ProblemConstants.SEED
    channel_contrast: float = ProblemConstants.CHANNEL_CONTRAST
    channel_width: float = ProblemConstants.CHANNEL_WIDTH
    h_exponent: int = 6
    H_exponents: List[int] = field(default_factory=lambda: [2, 3, 4, 5])
    m_values: List[int] = field(default_factory=lambda: [1, 2, 3])
    method: str = "galerkin"
    strategy: str = "zero"
    model: str = "newton"
    tolerance: float = NewtonDefaults.RESIDUAL_TOLERANCE
    max_iterations: int = NewtonDefaults.MAX_ITERATIONS
    output_path: str = f"{FileConfig.REPORTS_DIR}/report.csv"
    include_timings: bool = False

    @property
    def epsilon(self) -> float:
        return 2.0 ** -self.epsilon_exponent

    def newton_config(self) -> NewtonConfig:
        return NewtonConfig(residual_tolerance=self.tolerance, max_iterations=self.max_iterations)

    def linearization_strategy(self) -> LinearizationStrategy:
        return LinearizationStrategy.parse(self.strategy, self.model)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def validate(self) -> "ExperimentConfig":
        """
        Проверить все поля и собрать список ошибок.

        Returns:
            ExperimentConfig: Сам объект (для цепочек вызовов).

        Raises:
            ConfigurationError: Со списком всех невалидных полей.
        """
        problems = []

        if self.problem not in PROBLEMS:
            problems.append(f"problem: unknown '{self.problem}', available {list(PROBLEMS.keys())}")
        if not isinstance(self.seed, int) or self.seed < 0:
            problems.append(f"seed: must be a non-negative integer, got {self.seed!r}")

        if not self.H_exponents:
            problems.append("H_exponents: empty")
        if not self.m_values:
            problems.append("m_values: empty")
        exponents = [self.h_exponent, self.epsilon_exponent, *self.H_exponents]
        if any(exponent < 1 for exponent in exponents):
            problems.append(f"exponents: all must be >= 1, got h={self.h_exponent}, "
                            f"eps={self.epsilon_exponent}, H={self.H_exponents}")
        if self.H_exponents and self.h_exponent <= max(self.H_exponents):
            problems.append(f"h_exponent: must exceed max(H_exponents)={max(self.H_exponents)}, "
                            f"got {self.h_exponent}")
        if len(set(self.H_exponents)) != len(self.H_exponents):
            problems.append(f"H_exponents: duplicates in {self.H_exponents}")
        if any(m < 0 for m in self.m_values) or len(set(self.m_values)) != len(self.m_values):
            problems.append(f"m_values: must be distinct and non-negative, got {self.m_values}")

        if self.method not in METHODS:
            problems.append(f"method: unknown '{self.method}', available {list(METHODS)}")
        if self.model not in LinearizationModel.KINDS:
            problems.append(f"model: unknown '{self.model}', available {list(LinearizationModel.KINDS)}")
        else:
            try:
                strategy = self.linearization_strategy()
                if strategy.kind == "given" and strategy.source == "vector":
                    problems.append("strategy: given:vector is available from the library only")
            except LodException as e:
                problems.append(f"strategy: {e}")

        if not self.tolerance > 0:
            problems.append(f"tolerance: must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            problems.append(f"max_iterations: must be >= 1, got {self.max_iterations}")
        if not self.channel_contrast > 0 or not self.channel_width > 0:
            problems.append("channel_contrast, channel_width: must be positive")
        if not self.output_path:
            problems.append("output_path: empty")

        if problems:
            raise ConfigurationError("Invalid experiment configuration: " + "; ".join(problems))
        return self


# Поле конфигурации -> (секция, ключ, преобразование)
_SCHEMA = {
    "problem": ("problem", "name", str),
    "epsilon_exponent": ("problem", "epsilon_exponent", int),
    "seed": ("problem", "seed", int),
    "channel_contrast": ("problem", "channel_contrast", float),
    "channel_width": ("problem", "channel_width", float),
    "h_exponent": ("mesh", "h_exponent", int),
    "H_exponents": ("mesh", "H_exponents", parse_int_list),
    "m_values": ("mesh", "m_values", parse_int_list),
    "method": ("method", "method", str),
    "strategy": ("method", "strategy", str),
    "model": ("method", "model", str),
    "tolerance": ("newton", "tolerance", float),
    "max_iterations": ("newton", "max_iterations", int),
    "output_path": ("output", "path", str),
    "include_timings": ("output", "include_timings", None),
}


def parse_config(text: str) -> ExperimentConfig:
    """
    Разобрать INI текст в ExperimentConfig.

    Отсутствующие ключи берут значения по умолчанию; неизвестные ключи
    считаются ошибкой.

    Raises:
        ConfigurationError: Если текст не разбирается или поля невалидны.
    """
    # ключи чувствительны к регистру (H_exponents)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse experiment config: {e}") from e

    known = {(section, key) for section, key, _ in _SCHEMA.values()}
    problems = [
        f"[{section}] {key}: unknown key"
        for section in parser.sections() for key in parser[section]
        if (section, key) not in known
    ]

    values: Dict[str, Any] = {}
    for name, (section, key, convert) in _SCHEMA.items():
        if not parser.has_option(section, key):
            continue
        try:
            if convert is None:
                values[name] = parser.getboolean(section, key)
            else:
                values[name] = convert(parser.get(section, key).strip())
        except ValueError as e:
            problems.append(f"[{section}] {key}: {e}")

    if problems:
        raise ConfigurationError("Invalid experiment configuration: " + "; ".join(problems))
    return ExperimentConfig(**values).validate()


def load_config(path: str) -> ExperimentConfig:
    """
    Загрузить конфигурацию эксперимента из INI файла.

    Args:
        path: Путь к файлу.

    Returns:
        ExperimentConfig: Проверенная конфигурация.

    Raises:
        ConfigurationError: Если файл недоступен или невалиден.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError(f"Cannot read experiment config {path}: {e}") from e

    config = parse_config(text)
    logger.info(f"Loaded experiment config {path}: problem={config.problem}, h=2^-{config.h_exponent}, "
                f"H=2^-{config.H_exponents}, m={config.m_values}, seed={config.seed}")
    return config


def apply_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """
    Переопределить поля конфигурации (значения None пропускаются).

    Raises:
        ConfigurationError: Если поле неизвестно или результат невалиден.
    """
    updates = {name: value for name, value in overrides.items() if value is not None}
    unknown = sorted(set(updates) - set(_SCHEMA))
    if unknown:
        raise ConfigurationError(f"Unknown config fields: {unknown}")
    if updates:
        logger.info(f"Config overrides: {updates}")
    return replace(config, **updates).validate()
