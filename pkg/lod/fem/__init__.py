"""
Конечноэлементное ядро: сетки, сборка и прямые решатели.
"""

from lod.fem.mesh import (
    TriMesh, NestedPair, Patch,
    build_mesh, build_nested_pair, build_patch, element_patch, overlap_constant, dump_mesh,
)
from lod.fem.linalg import SparseOperator, DirectFactorization, ReducedSystem, factor_and_solve, eliminate_dirichlet
from lod.fem.assembly import MatrixField, assemble_stiffness, assemble_mass, assemble_load, element_stiffness

__all__ = [
    "TriMesh", "NestedPair", "Patch",
    "build_mesh", "build_nested_pair", "build_patch", "element_patch", "overlap_constant", "dump_mesh",
    "SparseOperator", "DirectFactorization", "ReducedSystem", "factor_and_solve", "eliminate_dirichlet",
    "MatrixField", "assemble_stiffness", "assemble_mass", "assemble_load", "element_stiffness",
]
