"""
Утилиты логирования для решателя LOD.

Предоставляет получение логгеров модулей и адаптер, помечающий сообщения
контекстом строки эксперимента.
"""

import logging
from typing import Any, Optional


def get_logger(name: str) -> logging.Logger:
    """
    Получить экземпляр логгера с указанным именем.

    Args:
        name: Имя логгера (обычно __name__ из вызывающего модуля).

    Returns:
        logging.Logger: Настроенный экземпляр логгера.
    """
    return logging.getLogger(name)


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


class LoggerAdapter:
    """
    Адаптер для логирования с контекстом строки эксперимента.

    Добавляет к каждому сообщению пары ключ=значение (задача, H, m, стратегия),
    чтобы строки отчёта можно было сопоставить с записями лога.
    Контекст накапливается через bind() по мере спуска от эксперимента
    к уровню H и к строке (H, m).
    """

    def __init__(self, logger: logging.Logger, context: Optional[dict] = None):
        """
        Args:
            logger: Базовый логгер модуля.
            context: Начальный контекст, например {"problem": "periodic_f1"}.
        """
        self.logger = logger
        self.context = context or {}

    def bind(self, **extra) -> "LoggerAdapter":
        """Вернуть новый адаптер с расширенным контекстом."""
        return LoggerAdapter(self.logger, {**self.context, **extra})

    def _format_message(self, message: str) -> str:
        """
        Добавить к сообщению префикс контекста строки.

        Args:
            message: Текст сообщения.

        Returns:
            str: "[problem=... | H=... | m=...] message" или исходный текст без контекста.
        """
        if not self.context:
            return message
        prefix = " | ".join(f"{key}={_format_value(value)}" for key, value in self.context.items())
        return f"[{prefix}] {message}"

    def info(self, message: str) -> None:
        """Ход вычисления строки: сетки, число корректоров, итерации."""
        self.logger.info(self._format_message(message))

    def debug(self, message: str) -> None:
        self.logger.debug(self._format_message(message))

    def warning(self, message: str) -> None:
        """Отчётные проверки, которые не прерывают строку."""
        self.logger.warning(self._format_message(message))

    def error(self, message: str) -> None:
        """Ошибка, после которой строка получает тег ошибки в отчёте."""
        self.logger.error(self._format_message(message))

    def failure(self, message: str, error: BaseException) -> None:
        """
        Записать ошибку строки с именем класса исключения.

        Имя класса совпадает с тегом в столбце error отчёта.
        """
        self.error(f"{message}: {error.__class__.__name__}: {error}")
