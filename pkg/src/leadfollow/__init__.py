"""Steady-state variances of leader-follower consensus on directed lattices.

Closed-form sums, a triangular Lyapunov solver, Monte Carlo simulation and
scaling checks for followers on ``{1..N}**D``, ``D`` in {1, 2, 3}.
"""

__version__ = "0.1.0"

from .closedform import (
    VarianceField,
    diagonal_variances,
    normalized_total_1d,
    variance_1d,
    variance_2d,
    variance_3d,
    variance_field,
)
from .combinatorics import ReturnProbSeries, central_binomial_scaled, return_prob, return_prob_series
from .lattice import LatticeSpec, ModifiedLaplacian, build_laplacian
from .lyapunov import CovarianceMatrix, solve_triangular_lyapunov, variance_diagonal
from .simulate import SimulationConfig, VarianceEstimate, simulate_lattice, simulate_random_walk_returns

__all__ = [
    "CovarianceMatrix",
    "LatticeSpec",
    "ModifiedLaplacian",
    "ReturnProbSeries",
    "SimulationConfig",
    "VarianceEstimate",
    "VarianceField",
    "build_laplacian",
    "central_binomial_scaled",
    "diagonal_variances",
    "normalized_total_1d",
    "return_prob",
    "return_prob_series",
    "simulate_lattice",
    "simulate_random_walk_returns",
    "solve_triangular_lyapunov",
    "variance_1d",
    "variance_2d",
    "variance_3d",
    "variance_diagonal",
    "variance_field",
]
