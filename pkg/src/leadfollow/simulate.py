"""Monte Carlo estimates of follower variances and random-walk returns.

Consensus dynamics are integrated with Euler-Maruyama,

    x <- x - dt L x + sqrt(dt) xi,    xi ~ N(0, I),

which corresponds to unit spectral density white noise (a single follower
then has variance 1/2).  The scheme is biased: its stationary variance in the
scalar case is ``1 / (2 - dt)``, an excess of about ``dt / 4``.  With the
default ``dt = 0.01 / D`` this is well inside the statistical error of the
default ensemble.

Every trajectory draws from its own PCG64 stream keyed by ``(seed, member)``,
and members are reduced in index order, so estimates are bit-identical for a
given configuration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .closedform import VarianceField
from .combinatorics import ReturnProbSeries
from .lattice import LatticeSpec, build_laplacian

__all__ = [
    "DEFAULT_SEED",
    "WORK_LIMIT",
    "SimulationConfig",
    "VarianceEstimate",
    "simulate_lattice",
    "simulate_random_walk_returns",
]

DEFAULT_SEED = 20141028
#: cap on followers * ensemble * steps
WORK_LIMIT = 2 * 10**9
_CHUNK = 1 << 20
_DENSE_LIMIT = 1024


@dataclass(frozen=True)
class SimulationConfig:
    dt: float
    horizon: float
    burn_in: float
    ensemble: int
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 <= self.burn_in < self.horizon:
            raise ValueError("burn_in must lie in [0, horizon)")
        if self.ensemble < 1:
            raise ValueError("ensemble must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def default(cls, dimension, seed=DEFAULT_SEED):
        """``dt = 0.01/D``, burn-in 20, horizon 220, 64 trajectories."""
        return cls(dt=0.01 / dimension, horizon=220.0, burn_in=20.0, ensemble=64, seed=seed)

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    @property
    def burn_steps(self):
        return int(round(self.burn_in / self.dt))


@dataclass(frozen=True, eq=False)
class VarianceEstimate:
    """Ensemble mean of time-averaged ``x**2`` and its standard error.

    The standard error is taken across ensemble members only, because samples
    along one trajectory are correlated.  It is NaN when ``ensemble == 1``.
    """

    mean: VarianceField
    standard_error: VarianceField
    config: SimulationConfig
    member_means: np.ndarray = field(repr=False)

    @property
    def has_standard_error(self):
        return self.config.ensemble > 1

    def z_scores(self, reference):
        """``(reference - mean) / standard_error`` elementwise."""
        ref = reference.values if isinstance(reference, VarianceField) else np.asarray(reference)
        return (np.asarray(ref, dtype=float) - self.mean.values) / self.standard_error.values


def _member_rngs(seed, ensemble):
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(m,))))
        for m in range(ensemble)
    ]


def simulate_lattice(spec, config=None):
    """Estimate every follower's stationary variance by simulation.

    The lattice relaxes more slowly than the single rate ``D`` suggests: the
    follower ``n`` steps from the leader needs a time of order ``n / D`` to
    forget its start, so long chains need a burn-in beyond the default.
    """
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(*spec)
    config = config or SimulationConfig.default(spec.dimension)
    D, n, ens = spec.dimension, spec.size, config.ensemble
    if config.dt > 0.1 / D:
        raise ValueError(f"dt = {config.dt} exceeds the stability guard 0.1/D = {0.1 / D}")
    steps, burn = config.steps, config.burn_steps
    samples = steps - burn
    if samples < 1:
        raise ValueError("no time samples after burn-in")
    work = n * ens * steps
    if work > WORK_LIMIT:
        raise ValueError(f"simulation work {work:.3g} exceeds the budget {WORK_LIMIT:.3g}")

    lap = build_laplacian(spec)
    # one Euler-Maruyama step for a row of states: x <- x (I - dt L)^T + noise
    if n <= _DENSE_LIMIT:
        step = np.eye(n) - config.dt * lap.to_dense().T
    else:
        step = (sp.eye_array(n, format="csr") - config.dt * lap.to_sparse()).T.tocsr()
    rngs = _member_rngs(config.seed, ens)
    sqrt_dt = math.sqrt(config.dt)

    x = np.zeros((ens, n))
    sumsq = np.zeros((ens, n))
    chunk = max(1, min(steps, _CHUNK // (ens * n)))
    t = 0
    while t < steps:
        c = min(chunk, steps - t)
        # the noise buffer is overwritten in place with the states it drives
        states = np.stack([g.standard_normal((c, n)) for g in rngs], axis=1)
        states *= sqrt_dt
        for r in range(c):
            states[r] += x @ step
            x = states[r]
        first = max(0, burn - t)
        if first < c:
            kept = states[first:]
            sumsq += np.einsum("rei,rei->ei", kept, kept)
        t += c

    member_means = sumsq / samples
    mean = member_means.mean(axis=0)
    if ens > 1:
        se = member_means.std(axis=0, ddof=1) / math.sqrt(ens)
    else:
        warnings.warn("ensemble of one: standard error is undefined", RuntimeWarning, stacklevel=2)
        se = np.full(n, np.nan)
    return VarianceEstimate(
        VarianceField(spec, mean.reshape(spec.shape)),
        VarianceField(spec, se.reshape(spec.shape)),
        config,
        member_means,
    )


def simulate_random_walk_returns(dimension, K, walks, seed=DEFAULT_SEED):
    """Empirical ``u_2k``, ``k = 0..K``, from simple random walks on Z^dimension.

    Each walk takes ``2K`` steps and is checked for being at the origin at
    every even time.
    """
    if dimension not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dimension!r}")
    if K < 0 or walks < 1:
        raise ValueError("need K >= 0 and walks >= 1")
    counts = np.zeros(K + 1, dtype=np.int64)
    counts[0] = walks
    if K:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        length = 2 * K
        batch = max(1, _CHUNK // length)
        done = 0
        while done < walks:
            b = min(batch, walks - done)
            axis = rng.integers(0, dimension, size=(b, length))
            sign = 2 * rng.integers(0, 2, size=(b, length), dtype=np.int32) - 1
            home = np.ones((b, length), dtype=bool)
            for a in range(dimension):
                home &= np.cumsum(np.where(axis == a, sign, 0), axis=1) == 0
            counts[1:] += home[:, 1::2].sum(axis=0)
            done += b
    return ReturnProbSeries(dimension, counts / walks, walks=walks)
