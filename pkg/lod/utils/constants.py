"""
Константы приложения.

Централизованное хранилище всех констант, используемых в решателе.
"""


class Tolerances:
    """Допуски численных проверок."""

    SYMMETRY = 1e-12          # |a_ij - a_ji| относительно max|a|
    SOLVE_RESIDUAL = 1e-10    # ||A x - b|| / ||b|| для прямого решателя
    SPARSE_DROP = 1e-13       # отбрасывание шума в I_H и продолжении (относительно max)
    KERNEL = 1e-9             # ||I_H q||_inf для корректоров
    AREA = 1e-12              # относительная точность разбиения площадей
    BARYCENTRIC = 1e-12       # допуск принадлежности точки треугольнику


class NewtonDefaults:
    """Параметры метода Ньютона по умолчанию."""

    RESIDUAL_TOLERANCE = 1e-11
    MAX_ITERATIONS = 100


class ProbeDefaults:
    """Параметры выборочной проверки монотонности."""

    SAMPLES = 10_000
    GRADIENT_CAP = 10.0
    SEED = 0
    FD_STEP = 1e-5


class ProblemConstants:
    """Данные модельных задач."""

    SOURCE_CENTER = (0.45, 0.5)
    SOURCE_DECAY = 0.1
    F1_AMPLITUDE = 10.0
    F2_AMPLITUDE = 100.0

    RANDOM_LOW_SOURCE = 5.0
    RANDOM_HIGH_SOURCE = 50.0
    RICHARDS_LOW_SOURCE = 0.1
    RICHARDS_HIGH_SOURCE = 1.0
    SOURCE_STRIP_HEIGHT = 0.1

    CHECKERBOARD_RANGE = (0.1, 1.0)
    VAN_GENUCHTEN_ALPHA = 0.005
    CHANNEL_CONTRAST = 100.0
    CHANNEL_WIDTH = 2          # в единицах eps
    SEED = 20200101


class ReportColumns:
    """Контракт столбцов CSV отчёта."""

    BASE = [
        "problem", "H", "m", "method", "strategy",
        "e_H", "e_LOD", "best_l2", "e_coarse_fem",
        "eoc_e_H", "eoc_e_LOD",
        "newton_iterations_fine", "newton_iterations_coarse",
        "corrector_solve_count", "error",
    ]
    TIMINGS = ["wall_time_correctors", "wall_time_solve", "wall_time_total"]

    INDICATOR = ["element", "center_x", "center_y", "indicator"]
    DECAY = ["sample", "m", "gap"]


class FileConfig:
    """Конфигурация файлов и путей."""

    REPORTS_DIR = "reports"
    CACHE_DIR = "cache"
    LOGS_DIR = "logs"

    FLOAT_FORMAT = "%.12e"
    META_SUFFIX = ".meta.json"
    CACHE_FORMAT_VERSION = 1
