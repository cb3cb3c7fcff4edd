"""
Эксперименты сходимости: каталог задач, конфигурация, исполнитель и отчёты.
"""

from lod.experiments.problems import PROBLEMS, Problem, build_problem, list_problems
from lod.experiments.report import ExperimentReport, experimental_orders, fit_eoc, write_table
from lod.experiments.runner import run_decay_study, run_experiment, run_indicator_study
from lod.experiments.settings import ExperimentConfig, apply_overrides, load_config, parse_config

__all__ = [
    'PROBLEMS',
    'Problem',
    'build_problem',
    'list_problems',
    'ExperimentReport',
    'experimental_orders',
    'fit_eoc',
    'write_table',
    'run_decay_study',
    'run_experiment',
    'run_indicator_study',
    'ExperimentConfig',
    'apply_overrides',
    'load_config',
    'parse_config',
]
