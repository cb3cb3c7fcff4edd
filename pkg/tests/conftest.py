"""
Общие фикстуры тестов: небольшие вложенные пары сеток и поля коэффициентов.
"""

import numpy as np
import pytest

from lod.coefficients import PeriodicCoefficient
from lod.fem.assembly import MatrixField, assemble_mass, assemble_stiffness
from lod.fem.mesh import build_mesh, build_nested_pair
from lod.multiscale.interpolation import compose_interpolation


@pytest.fixture(scope="session")
def pair_4_16():
    return build_nested_pair(build_mesh(4), build_mesh(16))


@pytest.fixture(scope="session")
def op_4_16(pair_4_16):
    return compose_interpolation(pair_4_16)


@pytest.fixture(scope="session")
def pair_8_32():
    return build_nested_pair(build_mesh(8), build_mesh(32))


@pytest.fixture(scope="session")
def op_8_32(pair_8_32):
    return compose_interpolation(pair_8_32)


@pytest.fixture(scope="session")
def fine_operators_16(pair_4_16):
    fine = pair_4_16.fine
    return assemble_mass(fine), assemble_stiffness(fine)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def periodic():
    return PeriodicCoefficient(epsilon=2.0 ** -2)


def rough_field(mesh, seed: int = 7, low: float = 0.5, high: float = 2.0) -> MatrixField:
    """Случайное скалярное поле c(x) Id на элементах."""
    values = np.random.default_rng(seed).uniform(low, high, mesh.num_elements)
    return MatrixField.from_scalar(values)


def random_coarse_vector(mesh, seed: int = 0) -> np.ndarray:
    """Случайная грубая функция с нулями на границе."""
    vector = np.zeros(mesh.num_nodes)
    vector[mesh.free_nodes] = np.random.default_rng(seed).standard_normal(mesh.free_nodes.size)
    return vector
