"""Laboratory for random regular digraph adjacency matrices.

Uniform sampling and exact counting over M(n, d), the shuffling coupling,
discrepancy and expansion checkers, exact rank and kernel analysis, and
Monte Carlo experiments on singularity.
"""

from .matrix_core import (
    Matrix01,
    MatrixFormatError,
    RegularityWitness,
    SignedMatrix,
    co_ex_sets,
    complement,
    edge_count,
    hadamard,
    neighborhood,
    set_neighborhood,
)
from .rng import make_rng

__version__ = "0.1.0"

__all__ = [
    "Matrix01",
    "MatrixFormatError",
    "RegularityWitness",
    "SignedMatrix",
    "co_ex_sets",
    "complement",
    "edge_count",
    "hadamard",
    "make_rng",
    "neighborhood",
    "set_neighborhood",
]
