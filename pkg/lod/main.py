"""
Точка входа командной строки.

Подкоманды:
    run        - эксперимент сходимости по INI конфигурации
    probe      - выборочная проверка предположений о коэффициенте
    decay      - затухание корректоров
    indicator  - таблица индикаторов E_{Q,T}

Запуск: python -m lod.main run configs/periodic_f1_desk.ini
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from lod.coefficients.probe import check_jacobian, monotonicity_probe
from lod.config import Config
from lod.experiments.problems import PROBLEMS, build_problem
from lod.experiments.report import write_table
from lod.experiments.runner import run_decay_study, run_experiment, run_indicator_study
from lod.experiments.settings import apply_overrides, load_config
from lod.utils.constants import ProbeDefaults
from lod.utils.exceptions import LodException
from lod.utils.helpers import parse_int_list
from lod.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ROW_ERRORS = 2


def _int_list(text: str) -> List[int]:
    try:
        return parse_int_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    """Собрать парсер аргументов со всеми подкомандами."""
    parser = argparse.ArgumentParser(prog="lod", description="Linearized LOD for nonlinear monotone problems")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="run a convergence experiment")
    run.add_argument("config", help="experiment INI file")
    run.add_argument("--h-exponent", type=int, dest="h_exponent")
    run.add_argument("--H-exponents", type=_int_list, dest="H_exponents", help="e.g. 2,3,4")
    run.add_argument("--m-values", type=_int_list, dest="m_values", help="e.g. 1,2,3")
    run.add_argument("--method", choices=["galerkin", "petrov_galerkin"])
    run.add_argument("--strategy", help="zero | coarse_fem | cascade:K | given:SOURCE")
    run.add_argument("--model", choices=["newton", "kacanov"])
    run.add_argument("--seed", type=int)
    run.add_argument("--output", dest="output_path")
    run.add_argument("--include-timings", action="store_const", const=True, dest="include_timings")

    probe = subparsers.add_parser("probe", help="sample monotonicity constants of a problem coefficient")
    probe.add_argument("problem", choices=sorted(PROBLEMS))
    probe.add_argument("--epsilon-exponent", type=int, default=4)
    probe.add_argument("--seed", type=int, default=ProbeDefaults.SEED)
    probe.add_argument("--samples", type=int, default=ProbeDefaults.SAMPLES)
    probe.add_argument("--gradient-cap", type=float, default=ProbeDefaults.GRADIENT_CAP)

    decay = subparsers.add_parser("decay", help="corrector decay study")
    decay.add_argument("problem", choices=sorted(PROBLEMS))
    decay.add_argument("--epsilon-exponent", type=int, default=4)
    decay.add_argument("--seed", type=int, default=0)
    decay.add_argument("--H-exponent", type=int, default=3, dest="coarse_exponent")
    decay.add_argument("--h-exponent", type=int, default=5, dest="fine_exponent")
    decay.add_argument("--max-layers", type=int, default=4)
    decay.add_argument("--samples", type=int, default=5)
    decay.add_argument("--output", default=os.path.join(Config.REPORTS_DIR, "decay.csv"))

    indicator = subparsers.add_parser("indicator", help="E_{Q,T} table for one coarse mesh")
    indicator.add_argument("config", help="experiment INI file")
    indicator.add_argument("--H-exponent", type=int, default=3, dest="coarse_exponent")
    indicator.add_argument("--m", type=int, default=2, dest="layers")
    indicator.add_argument("--against", choices=["reference", "lod"], default="reference")
    indicator.add_argument("--output", default=os.path.join(Config.REPORTS_DIR, "indicators.csv"))

    return parser


def command_run(args: argparse.Namespace) -> int:
    config = apply_overrides(
        load_config(args.config),
        h_exponent=args.h_exponent, H_exponents=args.H_exponents, m_values=args.m_values,
        method=args.method, strategy=args.strategy, model=args.model, seed=args.seed,
        output_path=args.output_path, include_timings=args.include_timings,
    )
    cache_dir = Config.CACHE_DIR if Config.USE_CACHE else None
    report = run_experiment(config, cache_dir=cache_dir)
    report.write()
    if report.has_errors:
        logger.error("Some rows failed, see the error column of the report")
        return EXIT_ROW_ERRORS
    return EXIT_OK


def command_probe(args: argparse.Namespace) -> int:
    problem = build_problem(args.problem, epsilon=2.0 ** -args.epsilon_exponent, seed=args.seed)
    report = monotonicity_probe(problem.coefficient, samples=args.samples,
                                gradient_cap=args.gradient_cap, seed=args.seed)
    summary = report.to_dict()
    summary["jacobian_fd_error"] = check_jacobian(problem.coefficient, seed=args.seed,
                                                  gradient_cap=args.gradient_cap)
    summary["coefficient"] = problem.coefficient.describe()
    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK if report.passed else EXIT_FAILED


def command_decay(args: argparse.Namespace) -> int:
    problem = build_problem(args.problem, epsilon=2.0 ** -args.epsilon_exponent, seed=args.seed)
    frame, beta = run_decay_study(problem, args.coarse_exponent, args.fine_exponent, args.max_layers,
                                  samples=args.samples, seed=args.seed, n_jobs=Config.n_jobs())
    write_table(frame, args.output)
    print(f"beta = {beta:.4f}")
    return EXIT_OK


def command_indicator(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    frame = run_indicator_study(config, args.coarse_exponent, args.layers,
                                against=args.against, n_jobs=Config.n_jobs())
    write_table(frame, args.output)
    print(f"max E_QT = {frame['indicator'].max():.4e}")
    return EXIT_OK


COMMANDS = {
    'run': command_run,
    'probe': command_probe,
    'decay': command_decay,
    'indicator': command_indicator,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Основная точка входа.

    Проверяет конфигурацию окружения, настраивает логирование и директории,
    затем выполняет подкоманду.

    Returns:
        int: Код выхода (0 - успех, 1 - ошибка, 2 - в отчёте есть строки с ошибкой).
    """
    args = build_parser().parse_args(argv)

    # Проверить конфигурацию
    if not Config.validate():
        logger.error("Configuration validation failed!")
        return EXIT_FAILED

    # Настроить логирование и директории
    Config.setup_logging()
    Config.create_directories()
    logger.info(f"Command: {args.command}, n_jobs={Config.n_jobs()}, cache={Config.USE_CACHE}")

    try:
        return COMMANDS[args.command](args)
    except LodException as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        return EXIT_FAILED
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
