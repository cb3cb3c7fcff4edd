"""
Вспомогательные утилиты.

Хеширование массивов, разбор списков из конфигурации и атомарная запись файлов.
"""

import hashlib
import os
import tempfile
from pathlib import Path
from typing import List, Optional

import numpy as np

from lod.utils.logger import get_logger

logger = get_logger(__name__)


def array_digest(*arrays: np.ndarray) -> str:
    """
    Вычислить детерминированный хеш набора массивов.

    Используется как ключ переиспользования корректоров: одинаковые поля
    коэффициентов дают одинаковый хеш независимо от порядка вычислений.

    Args:
        arrays: Массивы numpy (форма и dtype входят в хеш).

    Returns:
        str: Шестнадцатеричный md5 дайджест.
    """
    digest = hashlib.md5()
    for array in arrays:
        contiguous = np.ascontiguousarray(array)
        digest.update(str(contiguous.shape).encode())
        digest.update(contiguous.dtype.str.encode())
        digest.update(contiguous.tobytes())
    return digest.hexdigest()


def parse_int_list(text: str) -> List[int]:
    """
    Разобрать список целых чисел вида "2, 3, 4".

    Args:
        text: Строка со значениями через запятую или пробел.

    Returns:
        List[int]: Список значений в исходном порядке.

    Raises:
        ValueError: Если элемент не является целым числом.
    """
    items = [item for item in text.replace(",", " ").split() if item]
    return [int(item) for item in items]


def atomic_write_text(path: str, content: str) -> None:
    """
    Атомарно записать текстовый файл (через временный файл в той же директории).

    Args:
        path: Путь к итоговому файлу.
        content: Содержимое файла.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)

    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def code_version_digest(root: Optional[str] = None) -> str:
    """
    Дайджест исходного кода пакета (sha256 по отсортированным .py файлам).

    Args:
        root: Корень пакета. По умолчанию директория пакета lod.

    Returns:
        str: Первые 16 символов sha256.
    """
    package_root = Path(root) if root else Path(__file__).resolve().parent.parent
    digest = hashlib.sha256()
    for source in sorted(package_root.rglob("*.py")):
        digest.update(source.relative_to(package_root).as_posix().encode())
        digest.update(source.read_bytes())
    return digest.hexdigest()[:16]
