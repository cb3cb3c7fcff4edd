"""
Экспериментальные проверки сходимости на масштабе рабочей станции.

Все тесты долгие (минуты), помечены slow. Предасимптотический режим
H = 2^-2 исключён из проверок наклонов и порядков стратегий.
"""

import numpy as np
import pytest

from lod.experiments import ExperimentConfig, run_experiment

pytestmark = pytest.mark.slow

# асимптотические пары для наклона e_LOD: (2^-3, 2^-4)
ASYMPTOTIC_H = (0.125, 0.0625)


def desk_frame(tmp_path_factory, **values):
    output = tmp_path_factory.mktemp("desk") / "report.csv"
    config = ExperimentConfig(output_path=str(output), **values).validate()
    report = run_experiment(config)
    frame = report.frame()
    assert not report.has_errors, frame["error"].tolist()
    return frame


@pytest.fixture(scope="module")
def periodic_f1(tmp_path_factory):
    return desk_frame(tmp_path_factory, problem="periodic_f1", epsilon_exponent=4, h_exponent=6,
                      H_exponents=[2, 3, 4, 5], m_values=[1, 2, 3])


def test_periodic_macroscopic_error_follows_best_approximation(periodic_f1):
    assert (periodic_f1["e_H"] <= 2.0 * periodic_f1["best_l2"]).all()


def test_periodic_energy_error_rate(periodic_f1):
    rows = periodic_f1[periodic_f1["m"] == 3].set_index("H")
    coarse, fine = ASYMPTOTIC_H
    rate = np.log(rows.loc[coarse, "e_LOD"] / rows.loc[fine, "e_LOD"]) / np.log(coarse / fine)
    assert 0.8 <= rate <= 1.3
    assert rows.loc[fine, "eoc_e_LOD"] == pytest.approx(rate)


def test_two_or_three_layers_suffice(periodic_f1):
    table = periodic_f1.pivot(index="H", columns="m", values="e_LOD")
    assert (table[3] <= 1.1 * table[2]).all()
    assert (table[1] >= table[2]).all()


def strategy_error(tmp_path_factory, strategy: str) -> float:
    frame = desk_frame(tmp_path_factory, problem="periodic_f2", epsilon_exponent=4, h_exponent=6,
                       H_exponents=[3], m_values=[2], strategy=strategy)
    return float(frame["e_LOD"].iloc[0])


def test_strategy_ordering_on_steep_source(tmp_path_factory):
    errors = {
        strategy: strategy_error(tmp_path_factory, strategy)
        for strategy in ("zero", "cascade:2", "coarse_fem", "given:lod_interpolated")
    }
    assert errors["cascade:2"] <= errors["zero"]
    assert errors["coarse_fem"] == pytest.approx(errors["given:lod_interpolated"], rel=0.1)


def test_petrov_galerkin_beats_coarse_fem_on_random_coefficient(tmp_path_factory):
    frame = desk_frame(tmp_path_factory, problem="random", epsilon_exponent=4, seed=20200101, h_exponent=7,
                       H_exponents=[3, 4, 5], m_values=[3], method="petrov_galerkin")
    assert (frame["e_H"] < frame["e_coarse_fem"]).all()
    assert (frame["e_H"] <= 2.0 * frame["best_l2"]).all()
