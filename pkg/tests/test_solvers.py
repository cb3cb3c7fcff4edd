"""
Тесты метода Ньютона, эталонного и грубого МКЭ, решателей LOD и стратегий.
"""

import numpy as np
import pytest

from lod.coefficients import LinearCoefficient, LinearizationModel, PeriodicCoefficient, RichardsCoefficient
from lod.coefficients.probe import monotonicity_probe
from lod.fem.assembly import MatrixField, assemble_load, assemble_mass, assemble_stiffness
from lod.fem.linalg import eliminate_dirichlet
from lod.fem.mesh import build_mesh, build_nested_pair
from lod.indicators.errors import h1_seminorm, l2_norm
from lod.multiscale.corrector import compute_correctors
from lod.multiscale.interpolation import compose_interpolation
from lod.solvers import (
    LinearizationStrategy,
    NewtonConfig,
    StrategyProblem,
    newton_loop,
    run_strategy,
    solve_coarse_fem,
    solve_fine_reference,
    solve_lod_galerkin,
    solve_lod_petrov_galerkin,
    stability_check,
)
from lod.utils.exceptions import ConfigurationError, NonConvergenceError, NumericalBreakdownError


def source(points):
    return 10.0 * np.exp(-0.1 * np.sum((points - np.array([0.45, 0.5])) ** 2, axis=1))


def unit_source(points):
    return np.ones(points.shape[0])


def test_newton_loop_scalar():
    x, iterations, history = newton_loop(
        lambda x: x ** 2 - 2.0, lambda x, r: -r / (2.0 * x), np.array([1.0]), NewtonConfig(1e-14, 20), "sqrt2",
    )
    assert x[0] == pytest.approx(np.sqrt(2.0), rel=1e-14)
    assert iterations == len(history) - 1
    assert iterations <= 6


def test_newton_loop_nonconvergence():
    with pytest.raises(NonConvergenceError) as info:
        newton_loop(lambda x: x ** 2 + 1.0, lambda x, r: -r / (2.0 * x + 1e-3), np.array([1.0]),
                    NewtonConfig(1e-12, 3), "no root")
    assert info.value.iterations == 3


def test_newton_loop_breakdown():
    with pytest.raises(NumericalBreakdownError):
        newton_loop(lambda x: x, lambda x, r: np.array([np.nan]), np.array([1.0]), NewtonConfig(), "nan")


def test_newton_config_validation():
    with pytest.raises(ConfigurationError):
        NewtonConfig(residual_tolerance=0.0)
    with pytest.raises(ConfigurationError):
        NewtonConfig(max_iterations=0)


def test_reference_linear_matches_direct_solve():
    mesh = build_mesh(8)
    result = solve_fine_reference(mesh, LinearCoefficient(), unit_source)
    direct = eliminate_dirichlet(assemble_stiffness(mesh), assemble_load(mesh, unit_source),
                                 mesh.boundary_node_flags).solve()
    np.testing.assert_allclose(result.solution, direct, atol=1e-12)
    assert result.iterations == 1
    assert result.strategy_label == "reference"


def test_reference_periodic_quadratic_tail():
    mesh = build_mesh(16)
    result = solve_fine_reference(mesh, PeriodicCoefficient(epsilon=0.25), source)
    history = np.array(result.residual_history)
    assert history[-1] <= NewtonConfig().residual_tolerance
    assert result.iterations <= 10
    assert history.size >= 3
    tail = history[-3:]
    for previous, current in zip(tail[:-1], tail[1:]):
        # уровень округления ограничивает последний шаг снизу
        assert current <= 1e4 * previous ** 2 + 1e-13
    np.testing.assert_array_equal(result.solution[mesh.boundary_node_flags], 0.0)


def zero_source(points):
    return np.zeros(points.shape[0])


@pytest.mark.parametrize("coefficient", [
    LinearCoefficient(), PeriodicCoefficient(epsilon=0.25), RichardsCoefficient(epsilon=0.25, channel_width=1),
])
def test_zero_source_gives_zero_solution(coefficient):
    mesh = build_mesh(8)
    result = solve_fine_reference(mesh, coefficient, zero_source)
    assert result.iterations <= 1
    np.testing.assert_allclose(result.solution, 0.0, atol=1e-14)
    coarse = solve_coarse_fem(build_mesh(4), coefficient, zero_source)
    assert coarse.iterations <= 1
    np.testing.assert_allclose(coarse.solution, 0.0, atol=1e-14)


def test_reference_richards_converges():
    mesh = build_mesh(16)
    coefficient = RichardsCoefficient(epsilon=0.25, channel_width=1)
    result = solve_fine_reference(mesh, coefficient, unit_source)
    assert result.final_residual <= NewtonConfig().residual_tolerance


def test_initial_guess_shape_checked():
    mesh = build_mesh(4)
    with pytest.raises(ConfigurationError):
        solve_fine_reference(mesh, LinearCoefficient(), unit_source, NewtonConfig().with_guess(np.zeros(3)))


def test_initial_guess_at_solution_needs_no_steps():
    mesh = build_mesh(8)
    coefficient = PeriodicCoefficient(epsilon=0.25)
    first = solve_fine_reference(mesh, coefficient, source)
    second = solve_fine_reference(mesh, coefficient, source, NewtonConfig().with_guess(first.solution))
    assert second.iterations == 0


def test_coarse_fem_without_pair_is_fem_on_coarse_mesh():
    coarse = build_mesh(4)
    result = solve_coarse_fem(coarse, PeriodicCoefficient(epsilon=0.25), source)
    reference = solve_fine_reference(coarse, PeriodicCoefficient(epsilon=0.25), source)
    np.testing.assert_allclose(result.solution, reference.solution)
    np.testing.assert_allclose(result.coarse_solution, reference.solution)


def test_degenerate_pair_methods_agree():
    mesh = build_mesh(4)
    pair = build_nested_pair(mesh, build_mesh(4))
    op = compose_interpolation(pair)
    coefficient = PeriodicCoefficient(epsilon=0.25)
    field = LinearizationModel("newton").produce(coefficient, pair.fine).matrix
    correctors = compute_correctors(pair, field, op, 1)

    stiffness = assemble_stiffness(pair.fine)
    reference = solve_fine_reference(pair.fine, coefficient, source).solution
    galerkin = solve_lod_galerkin(pair, coefficient, source, correctors).solution
    petrov = solve_lod_petrov_galerkin(pair, coefficient, source, correctors)
    coarse = solve_coarse_fem(pair.coarse, coefficient, source, pair=pair).solution

    scale = h1_seminorm(stiffness, reference)
    for candidate in (galerkin, petrov.solution, petrov.multiscale_solution, coarse):
        assert h1_seminorm(stiffness, candidate - reference) <= 1e-9 * scale


def test_ideal_lod_linear_oracle(pair_8_32, op_8_32):
    coefficient = LinearCoefficient()
    fine = pair_8_32.fine
    field = MatrixField.identity(fine.num_elements)
    correctors = compute_correctors(pair_8_32, field, op_8_32, 8)

    reference = solve_fine_reference(fine, coefficient, unit_source).solution
    galerkin = solve_lod_galerkin(pair_8_32, coefficient, unit_source, correctors)
    petrov = solve_lod_petrov_galerkin(pair_8_32, coefficient, unit_source, correctors)

    mass = assemble_mass(fine)
    difference = op_8_32.embed(op_8_32.interpolate(reference - galerkin.solution))
    assert l2_norm(mass, difference) <= 1e-8 * l2_norm(mass, reference)
    np.testing.assert_allclose(petrov.coarse_solution, galerkin.coarse_solution, atol=1e-9)
    np.testing.assert_allclose(op_8_32.interpolate(reference), galerkin.coarse_solution, atol=1e-9)


def test_petrov_galerkin_representations(pair_4_16, op_4_16):
    coefficient = PeriodicCoefficient(epsilon=0.25)
    field = LinearizationModel("newton").produce(coefficient, pair_4_16.fine).matrix
    correctors = compute_correctors(pair_4_16, field, op_4_16, 1)
    result = solve_lod_petrov_galerkin(pair_4_16, coefficient, source, correctors)
    np.testing.assert_allclose(result.solution, op_4_16.embed(result.coarse_solution))
    np.testing.assert_allclose(result.multiscale_solution, correctors.multiscale(result.coarse_solution))


@pytest.mark.parametrize("text, kind, steps, source_name", [
    ("zero", "zero", 1, None),
    ("coarse_fem", "coarse_fem", 1, None),
    ("cascade:3", "cascade", 3, None),
    ("given:lod_interpolated", "given", 1, "lod_interpolated"),
])
def test_strategy_parse(text, kind, steps, source_name):
    strategy = LinearizationStrategy.parse(text)
    assert (strategy.kind, strategy.steps, strategy.source) == (kind, steps, source_name)
    assert strategy.label == text


@pytest.mark.parametrize("text", ["cascade:0", "cascade:x", "given:nowhere", "zero:1", "picard"])
def test_strategy_parse_rejects(text):
    with pytest.raises(ConfigurationError):
        LinearizationStrategy.parse(text)


@pytest.fixture(scope="module")
def strategy_problem(pair_4_16, op_4_16):
    return StrategyProblem(
        pair=pair_4_16, op=op_4_16, coefficient=PeriodicCoefficient(epsilon=0.25), f=source, layers=1,
    )


def test_cascade_records_provenance(strategy_problem):
    outcome = run_strategy(LinearizationStrategy.parse("cascade:3"), strategy_problem)
    assert len(outcome.provenance) == 3
    assert [entry.point for entry in outcome.provenance] == ["zero", "lod[1]", "lod[2]"]
    assert outcome.result.strategy_label == "galerkin/cascade:3"
    assert outcome.coarse_iterations == sum(r.iterations for r in outcome.rounds)
    assert np.isfinite(outcome.provenance[1].surrogates["distance"])


def test_given_lod_runs_preliminary_round(strategy_problem):
    outcome = run_strategy(LinearizationStrategy.parse("given:lod"), strategy_problem)
    assert [entry.point for entry in outcome.provenance] == ["zero", "lod"]


def test_coarse_fem_strategy(strategy_problem):
    outcome = run_strategy(LinearizationStrategy.parse("coarse_fem"), strategy_problem)
    assert outcome.coarse_fem is not None
    assert outcome.provenance[0].point == "coarse_fem"


def test_given_vector_matches_coarse_fem_point(strategy_problem):
    coarse_fem = run_strategy(LinearizationStrategy.parse("coarse_fem"), strategy_problem)
    vector = run_strategy(LinearizationStrategy.parse("given:vector"), strategy_problem,
                          point=coarse_fem.coarse_fem.solution)
    np.testing.assert_allclose(vector.result.solution, coarse_fem.result.solution, atol=1e-12)


def test_given_requires_data(strategy_problem):
    with pytest.raises(ConfigurationError):
        run_strategy(LinearizationStrategy.parse("given:reference"), strategy_problem)
    with pytest.raises(ConfigurationError):
        run_strategy(LinearizationStrategy.parse("given:vector"), strategy_problem, point=np.zeros(3))


def test_unknown_method(pair_4_16, op_4_16):
    with pytest.raises(ConfigurationError):
        StrategyProblem(pair=pair_4_16, op=op_4_16, coefficient=LinearCoefficient(), f=source, layers=1,
                        method="least_squares")


def test_stability_check():
    mesh = build_mesh(8)
    coefficient = LinearCoefficient()
    solution = solve_fine_reference(mesh, coefficient, unit_source).solution
    skipped = stability_check(solution, coefficient, unit_source, mesh)
    assert skipped.passed and skipped.bound == float("inf")
    monotonicity_probe(coefficient, samples=200)
    report = stability_check(solution, coefficient, unit_source, mesh)
    assert report.passed
    assert report.seminorm <= report.bound


def test_stability_check_zero_source():
    mesh = build_mesh(8)
    coefficient = PeriodicCoefficient(epsilon=0.25)
    monotonicity_probe(coefficient, samples=200)
    solution = solve_fine_reference(mesh, coefficient, zero_source).solution
    report = stability_check(solution, coefficient, zero_source, mesh)
    assert report.seminorm == 0.0
    assert report.bound == 0.0
    assert report.passed
