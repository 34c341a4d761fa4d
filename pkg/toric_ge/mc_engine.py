# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that holds the Monte Carlo sampler of the 2D Ising model on the torus. The coupling ``beta``
is the perturbation strength of the toric code ground state, mapped to J / k_B T with J = 1.

Energies are kept in link units, ``E = -sum_links S_u * S_v``, so the ferromagnetic ground state has
``E = -n_links``.

Functions in the source file:
    * :class:`InvalidChainConfigError`: Exception for an inconsistent chain schedule.
    * :class:`ChainAbortedError`: Exception raised when the measurement collector fails.
    * :class:`SpinConfiguration`: Spin state of one chain together with its cached energy.
    * :class:`ChainConfig`: Parameters of one Markov chain.
    * :func:`derive_chain_seed`: Per-chain 63-bit seed from the master seed and the cell key.
    * :func:`make_rng`: The chain's random generator.
    * :func:`total_energy`: Energy of a spin array recomputed from scratch.
    * :func:`random_state`: Hot start.
    * :func:`ordered_state`: Cold start.
    * :func:`metropolis_sweep`: One sweep of single-site Metropolis proposals.
    * :func:`wolff_step`: One Wolff cluster flip.
    * :func:`run_chain`: Thermalize, then feed spaced measurements to a collector.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from toric_ge import torus_lattice as tl
from toric_ge.constants import ALGORITHMS, DEFAULT_SCHEDULE

logger = logging.getLogger(__name__)

METROPOLIS = 0
WOLFF = 1
MIXED = 2
ALGORITHM_CODES = dict(zip(ALGORITHMS, (METROPOLIS, WOLFF, MIXED)))


class InvalidChainConfigError(ValueError):
    """
    Exception for chain parameters outside their valid range (negative coupling, no measurements,
    zero measurement interval, unknown algorithm).
    """
    pass


class ChainAbortedError(RuntimeError):
    """
    Exception raised by :func:`run_chain` when the measurement collector fails. The collector's
    exception is chained as the cause.
    """
    pass


@dataclass
class SpinConfiguration:
    """
    Current spin state of one Markov chain. ``energy`` is updated incrementally by every move and
    must always equal :func:`total_energy` of ``spins``.
    """
    geometry: tl.TorusGeometry
    spins: np.ndarray
    energy: int

    def recompute_energy(self):
        """Return the energy of the current spins computed from scratch."""
        return total_energy(self.spins, self.geometry.endpoints)

    def copy(self):
        """Return an independent copy sharing only the (immutable) geometry."""
        return SpinConfiguration(self.geometry, self.spins.copy(), self.energy)


@dataclass(frozen=True)
class ChainConfig:
    """
    Parameters of one Markov chain. Sweeps are compound sweeps of the chosen algorithm.
    """
    L: int
    beta: float
    seed: int
    n_therm: int = DEFAULT_SCHEDULE['n_therm']
    n_measure: int = DEFAULT_SCHEDULE['n_measure']
    measure_interval: int = DEFAULT_SCHEDULE['measure_interval']
    algorithm: str = DEFAULT_SCHEDULE['algorithm']

    def __post_init__(self):
        if not self.beta >= 0:
            raise InvalidChainConfigError(f"beta must be non-negative, got {self.beta}")
        if self.n_therm < 0:
            raise InvalidChainConfigError(f"n_therm must be >= 0, got {self.n_therm}")
        if self.n_measure < 1:
            raise InvalidChainConfigError(f"n_measure must be >= 1, got {self.n_measure}")
        if self.measure_interval < 1:
            raise InvalidChainConfigError(f"measure_interval must be >= 1, got {self.measure_interval}")
        if self.algorithm not in ALGORITHM_CODES:
            raise InvalidChainConfigError(f"Unknown algorithm '{self.algorithm}', "
                                          f"expected one of {', '.join(ALGORITHMS)}")


def derive_chain_seed(master_seed: int, L: int, beta_index: int, chain_index: int = 0) -> int:
    """
    Derive the seed of one chain from the master seed and the cell key. The result depends only on
    its arguments, never on the order in which cells are executed, and fits a signed 64-bit column.

    :param master_seed: Seed of the whole run
    :type master_seed: int
    :param L: Linear lattice size of the cell
    :type L: int
    :param beta_index: Position of the coupling in the run's grid
    :type beta_index: int
    :param chain_index: Chain number inside the cell
    :type chain_index: int
    """
    sequence = np.random.SeedSequence([int(master_seed), int(L), int(beta_index), int(chain_index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed: int) -> np.random.Generator:
    """Return the chain generator, a PCG64 stream seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


@njit(cache=True)
def total_energy(spins, endpoints):
    """Energy ``-sum_links S_u * S_v`` of a spin array."""
    energy = 0
    for link in range(endpoints.shape[0]):
        energy -= spins[endpoints[link, 0]] * spins[endpoints[link, 1]]
    return energy


@njit(cache=True)
def _metropolis(spins, energy, vertex_links, endpoints, beta, rng):
    n_spins = spins.size
    # Flip costs are multiples of 4 between -8 and 8
    boltzmann = np.exp(-beta * np.arange(9.0))
    for _ in range(n_spins):
        site = int(rng.random() * n_spins)
        field = 0
        for k in range(4):
            link = vertex_links[site, k]
            other = endpoints[link, 0] + endpoints[link, 1] - site
            field += spins[other]
        delta = 2 * spins[site] * field
        if delta <= 0 or rng.random() < boltzmann[delta]:
            spins[site] = -spins[site]
            energy += delta
    return energy


@njit(cache=True)
def _wolff(spins, vertex_links, endpoints, p_add, rng, members, in_cluster):
    n_spins = spins.size
    seed = int(rng.random() * n_spins)
    cluster_spin = spins[seed]
    members[0] = seed
    in_cluster[seed] = True
    size = 1
    head = 0
    while head < size:
        site = members[head]
        head += 1
        # Every link gets its own bond test, including the doubled links of L = 2
        for k in range(4):
            link = vertex_links[site, k]
            other = endpoints[link, 0] + endpoints[link, 1] - site
            if not in_cluster[other] and spins[other] == cluster_spin and rng.random() < p_add:
                in_cluster[other] = True
                members[size] = other
                size += 1

    delta = 0
    for i in range(size):
        site = members[i]
        for k in range(4):
            link = vertex_links[site, k]
            other = endpoints[link, 0] + endpoints[link, 1] - site
            if not in_cluster[other]:
                delta += 2 * cluster_spin * spins[other]
    for i in range(size):
        spins[members[i]] = -cluster_spin
        in_cluster[members[i]] = False
    return delta, size


@njit(cache=True)
def _advance(spins, energy, vertex_links, endpoints, beta, n_sweeps, algorithm, rng):
    n_spins = spins.size
    members = np.empty(n_spins, dtype=np.int64)
    in_cluster = np.zeros(n_spins, dtype=np.bool_)
    p_add = 1.0 - np.exp(-2.0 * beta)
    for _ in range(n_sweeps):
        if algorithm != METROPOLIS:
            # The number of cluster flips per sweep must not depend on the cluster sizes
            delta, size = _wolff(spins, vertex_links, endpoints, p_add, rng, members, in_cluster)
            energy += delta
        if algorithm != WOLFF:
            energy = _metropolis(spins, energy, vertex_links, endpoints, beta, rng)
    return energy


def random_state(geom: tl.TorusGeometry, rng: np.random.Generator) -> SpinConfiguration:
    """
    Return a configuration of independent uniform spins.

    :param geom: Lattice geometry
    :type geom: TorusGeometry
    :param rng: Chain generator
    :type rng: numpy.random.Generator
    """
    spins = np.where(rng.random(geom.n_spins) < 0.5, -1, 1).astype(np.int8)
    return SpinConfiguration(geom, spins, int(total_energy(spins, geom.endpoints)))


def ordered_state(geom: tl.TorusGeometry, value: int = 1) -> SpinConfiguration:
    """
    Return the configuration with every spin equal to ``value``.

    :param geom: Lattice geometry
    :type geom: TorusGeometry
    :param value: +1 or -1
    :type value: int
    """
    spins = np.full(geom.n_spins, value, dtype=np.int8)
    return SpinConfiguration(geom, spins, -geom.n_links)


def metropolis_sweep(state: SpinConfiguration, beta: float, rng: np.random.Generator) -> SpinConfiguration:
    """
    Apply ``n_spins`` single-site flip proposals at random sites, each accepted with probability
    ``min(1, exp(-beta * dE))``. The state is updated in place and returned.

    :param state: Chain state
    :type state: SpinConfiguration
    :param beta: Coupling
    :type beta: float
    :param rng: Chain generator
    :type rng: numpy.random.Generator
    """
    geom = state.geometry
    state.energy = int(_metropolis(state.spins, state.energy, geom.vertex_links, geom.endpoints,
                                   float(beta), rng))
    return state


def wolff_step(state: SpinConfiguration, beta: float, rng: np.random.Generator):
    """
    Grow one cluster from a random seed site with bond probability ``1 - exp(-2 beta)`` between
    aligned spins and flip it. The state is updated in place.

    :param state: Chain state
    :type state: SpinConfiguration
    :param beta: Coupling
    :type beta: float
    :param rng: Chain generator
    :type rng: numpy.random.Generator
    :returns: the state and the cluster size
    """
    geom = state.geometry
    members = np.empty(geom.n_spins, dtype=np.int64)
    in_cluster = np.zeros(geom.n_spins, dtype=np.bool_)
    p_add = 1.0 - np.exp(-2.0 * float(beta))
    delta, size = _wolff(state.spins, geom.vertex_links, geom.endpoints, p_add, rng, members, in_cluster)
    state.energy += int(delta)
    return state, int(size)


def advance(state: SpinConfiguration, beta: float, n_sweeps: int, algorithm: str,
            rng: np.random.Generator) -> SpinConfiguration:
    """
    Run ``n_sweeps`` compound sweeps in one compiled call. A mixed sweep is one Wolff step followed
    by one Metropolis sweep; a Wolff sweep is a single cluster flip.

    :param state: Chain state, updated in place
    :type state: SpinConfiguration
    :param beta: Coupling
    :type beta: float
    :param n_sweeps: Number of compound sweeps
    :type n_sweeps: int
    :param algorithm: metropolis, wolff or mixed
    :type algorithm: str
    :param rng: Chain generator
    :type rng: numpy.random.Generator
    """
    if n_sweeps <= 0:
        return state
    geom = state.geometry
    state.energy = int(_advance(state.spins, state.energy, geom.vertex_links, geom.endpoints,
                                float(beta), int(n_sweeps), ALGORITHM_CODES[algorithm], rng))
    return state


def run_chain(config: ChainConfig, collector: Callable, geometry: tl.TorusGeometry = None):
    """
    Run one chain: ``n_therm`` sweeps of thermalization from a random start, then ``n_measure``
    measurements spaced ``measure_interval`` sweeps apart. The collector is called with the state
    after every spacing and its last return value is returned. Given the same config the run is
    fully deterministic.

    :param config: Chain parameters
    :type config: ChainConfig
    :param collector: Measurement sink, called as ``collector(state)``
    :type collector: callable
    :param geometry: Prebuilt geometry for ``config.L`` (built on demand if omitted)
    :type geometry: TorusGeometry
    :raises ChainAbortedError: if the collector raises
    """
    geom = geometry if geometry is not None else tl.build_geometry(config.L)
    if geom.L != config.L:
        raise InvalidChainConfigError(f"Geometry of size {geom.L} does not match chain size {config.L}")

    rng = make_rng(config.seed)
    state = random_state(geom, rng)
    logger.debug(f"Chain L={config.L} beta={config.beta:.6f} seed={config.seed} started "
                 f"({config.algorithm}, {config.n_therm} + {config.n_measure}x{config.measure_interval} sweeps)")
    advance(state, config.beta, config.n_therm, config.algorithm, rng)

    result = None
    for measurement in range(config.n_measure):
        advance(state, config.beta, config.measure_interval, config.algorithm, rng)
        try:
            result = collector(state)
        except Exception as e:
            raise ChainAbortedError(f"Collector failed at measurement {measurement} of chain "
                                    f"L={config.L} beta={config.beta}") from e
    logger.debug(f"Chain L={config.L} beta={config.beta:.6f} finished with E={state.energy}")
    return result
