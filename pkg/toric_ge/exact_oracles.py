# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that holds the exact ground-truth engines used to validate the Monte Carlo pipeline.

The classical oracle enumerates every spin configuration of a small torus. The quantum oracle
builds the perturbed toric code ground state

    |GS(beta)> = Z^(-1/2) sum_{g in G} exp((beta / 2) sum_i sigma_i^z(g)) g |0...0>

on a tiny torus, where ``G`` is the group generated by the star operators, and evaluates the
reduced density matrices by partial traces. Both sides must give the same GE and GE_tilde.

Qubit ``i`` of a basis state is bit ``i`` of its integer index; bit value 0 is
``sigma^z = +1`` (the link ends are aligned).

Functions in the source file:
    * :class:`OracleSizeError`: Exception for lattices outside the oracle limits.
    * :class:`DuplicateQubitError`: Exception for a partial trace over repeated qubits.
    * :class:`ExactIsingResult`: Exact classical moments and entanglement at one (L, beta).
    * :class:`LoopGroupElement`: One element of the star-operator group.
    * :class:`GroundStateVector`: Nonzero amplitudes of the exact ground state.
    * :func:`exact_ising`: Exhaustive Ising enumeration.
    * :func:`enumerate_loop_group`: All elements of the star-operator group.
    * :func:`build_ground_state`: Exact ground state from the group sum.
    * :func:`reduced_density_matrix`: Partial trace onto one or two qubits.
    * :func:`entanglement_from_state`: GE and GE_tilde from the reduced density matrices.
    * :func:`off_diagonal_residual`: Largest off-diagonal element of all one- and two-qubit matrices.
    * :func:`loop_parity_violations`: Basis states that are not closed loops.
    * :func:`export_fixture`, :func:`load_fixture`: JSON regression baselines.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass
from typing import (
    Sequence,
    Tuple
)

import numpy as np
from scipy.special import logsumexp

from toric_ge import estimators as est
from toric_ge import torus_lattice as tl
from toric_ge.constants import (
    MAX_ENUMERATION_SIZE,
    MAX_ENUMERATION_SIZE_OPT_IN,
    MAX_LOOP_GROUP_SIZE
)

logger = logging.getLogger(__name__)

ENUMERATION_CHUNK = 1 << 16


class OracleSizeError(ValueError):
    """
    Exception for a lattice size outside the limits of an exact oracle (or beyond them without
    the explicit opt-in).
    """
    pass


class DuplicateQubitError(ValueError):
    """
    Exception for a partial trace asked to keep the same qubit twice.
    """
    pass


@dataclass(frozen=True, eq=False)
class ExactIsingResult:
    """
    Exact Boltzmann averages of one small torus at one coupling. ``Z`` follows the convention
    ``Z = 1/2 sum_C exp(-beta E(C))``, which is the normalization of the quantum ground state.
    """
    L: int
    beta: float
    Z: float
    log_Z: float
    mean_E: float
    var_E: float
    e: float
    link_means: np.ndarray
    pair_correlations: np.ndarray
    classes: Tuple[tl.PairClass, ...]
    class_correlations: np.ndarray
    within_class_spread: float
    probabilities: Tuple[est.ProbabilitySet, ...]
    GE: float
    GE_tilde: float
    Q: float
    dGE_dbeta: float

    @property
    def n_links(self):
        return 2 * self.L * self.L


@dataclass(frozen=True, eq=False)
class LoopGroupElement:
    """
    Product of the star operators of the vertices set in ``mask``. A mask and its complement give
    the same operator; the canonical mask is the one leaving vertex 0 out. ``sigma_z[i]`` is -1
    where the loop crosses link ``i``, i.e. where the mask differs at the two link ends.
    """
    mask: int
    sigma_z: np.ndarray

    @staticmethod
    def canonical_mask(mask: int, n_spins: int) -> int:
        """
        Return the representative of ``mask`` and its complement that excludes vertex 0, i.e. the
        one whose bit 0 is clear. This is the complement of the representative whose lowest set
        bit is smallest; both conventions pick one mask per operator.
        """
        return mask ^ ((1 << n_spins) - 1) if mask & 1 else mask

    def basis_index(self) -> int:
        """Index of the basis state ``g |0...0>``."""
        flipped = np.flatnonzero(self.sigma_z < 0)
        return int(np.sum(np.left_shift(1, flipped, dtype=np.int64)))


@dataclass(frozen=True, eq=False)
class GroundStateVector:
    """
    The exact ground state, stored sparsely: one basis index and one real amplitude per group
    element. Every other amplitude is zero.
    """
    L: int
    beta: float
    n_qubits: int
    basis: np.ndarray
    amplitudes: np.ndarray
    Z: float
    log_Z: float

    def norm(self):
        return float(np.sqrt(np.sum(self.amplitudes ** 2)))

    def to_dense(self) -> np.ndarray:
        """Return the full amplitude vector of length ``2 ** n_qubits``."""
        dense = np.zeros(1 << self.n_qubits)
        dense[self.basis] = self.amplitudes
        return dense


def exact_ising(L: int, beta: float, allow_large: bool = False) -> ExactIsingResult:
    """
    Exhaustive enumeration of the Ising model on the L x L torus. Weights are evaluated relative
    to the ground-state energy, so large couplings do not overflow.

    :param L: Linear size, 2 to 4 (5 with ``allow_large``)
    :type L: int
    :param beta: Coupling
    :type beta: float
    :param allow_large: Permit L = 5 (2^25 configurations)
    :type allow_large: bool
    :raises OracleSizeError: for sizes outside the limits
    """
    max_size = MAX_ENUMERATION_SIZE_OPT_IN if allow_large else MAX_ENUMERATION_SIZE
    if not 2 <= L <= max_size:
        raise OracleSizeError(f"Exact enumeration supports 2 <= L <= {max_size}, got L={L}")
    geom = tl.build_geometry(L)
    classes = tl.classify_pairs(geom)
    n_spins, n_links = geom.n_spins, geom.n_links
    first, second = geom.endpoints[:, 0], geom.endpoints[:, 1]

    total = 1 << n_spins
    chunk = min(total, ENUMERATION_CHUNK)
    shifts = np.arange(n_spins, dtype=np.int64)
    sum_w = 0.0
    sum_wE = 0.0
    sum_wE2 = 0.0
    sum_w_links = np.zeros(n_links)
    sum_w_pairs = np.zeros((n_links, n_links))
    for start in range(0, total, chunk):
        configs = np.arange(start, start + chunk, dtype=np.int64)
        spins = 1 - 2 * ((configs[:, None] >> shifts) & 1)
        link_E = -(spins[:, first] * spins[:, second]).astype(float)
        E = link_E.sum(axis=1)
        weights = np.exp(-beta * (E + n_links))
        sum_w += weights.sum()
        sum_wE += weights @ E
        sum_wE2 += weights @ (E * E)
        sum_w_links += weights @ link_E
        sum_w_pairs += (link_E * weights[:, None]).T @ link_E

    mean_E = sum_wE / sum_w
    var_E = max(sum_wE2 / sum_w - mean_E * mean_E, 0.0)
    log_Z = beta * n_links + math.log(sum_w) - math.log(2.0)
    pairs = sum_w_pairs / sum_w

    index = tl.pair_class_index(geom, classes)
    off_diagonal = index >= 0
    counts = np.bincount(index[off_diagonal], minlength=len(classes))
    class_correlations = np.bincount(index[off_diagonal], weights=pairs[off_diagonal],
                                     minlength=len(classes)) / counts
    spread = float(np.max(np.abs(pairs[off_diagonal] - class_correlations[index[off_diagonal]])))

    e = mean_E / n_links
    multiplicities = np.array([c.multiplicity for c in classes])
    GE = est.compute_GE(e)
    GE_tilde = est.compute_GE_tilde(e, class_correlations, multiplicities, n_links)
    probabilities = tuple(est.probabilities_from_moments(e, e, c) for c in class_correlations)

    return ExactIsingResult(
        L=L, beta=float(beta), Z=math.exp(log_Z) if log_Z < 700 else math.inf, log_Z=log_Z,
        mean_E=float(mean_E), var_E=float(var_E), e=float(e),
        link_means=sum_w_links / sum_w, pair_correlations=pairs,
        classes=classes, class_correlations=class_correlations, within_class_spread=spread,
        probabilities=probabilities, GE=float(GE), GE_tilde=float(GE_tilde),
        Q=float(est.compute_Q(GE_tilde, GE)),
        dGE_dbeta=float(est.dGE_dbeta_fluctuation(e, var_E, n_links)),
    )


def enumerate_loop_group(L: int) -> Tuple[LoopGroupElement, ...]:
    """
    All ``2 ** (L^2 - 1)`` elements of the star-operator group in increasing canonical mask order.

    :param L: Linear size, 2 or 3
    :type L: int
    :raises OracleSizeError: for sizes outside the limits
    """
    if not 2 <= L <= MAX_LOOP_GROUP_SIZE:
        raise OracleSizeError(f"Loop group enumeration supports 2 <= L <= {MAX_LOOP_GROUP_SIZE}, got L={L}")
    geom = tl.build_geometry(L)
    n_spins = geom.n_spins
    shifts = np.arange(n_spins)
    first, second = geom.endpoints[:, 0], geom.endpoints[:, 1]

    elements = list()
    for mask in range(0, 1 << n_spins, 2):
        bits = (mask >> shifts) & 1
        sigma_z = (1 - 2 * (bits[first] ^ bits[second])).astype(np.int8)
        sigma_z.flags.writeable = False
        elements.append(LoopGroupElement(mask, sigma_z))

    expected = 1 << (n_spins - 1)
    patterns = {element.sigma_z.tobytes() for element in elements}
    if len(elements) != expected or len(patterns) != expected:
        raise RuntimeError(f"Loop group of L={L} has {len(patterns)} distinct elements, expected {expected}")
    return tuple(elements)


def build_ground_state(L: int, beta: float, allow_sparse: bool = False) -> GroundStateVector:
    """
    Build the exact ground state of the perturbed toric code from the group sum. Amplitudes are
    normalized in log space.

    :param L: Linear size, 2 (3 with ``allow_sparse``)
    :type L: int
    :param beta: Perturbation strength
    :type beta: float
    :param allow_sparse: Permit L = 3 (18 qubits, 256 nonzero amplitudes)
    :type allow_sparse: bool
    :raises OracleSizeError: for other sizes
    """
    max_size = 3 if allow_sparse else 2
    if not 2 <= L <= max_size:
        raise OracleSizeError(f"Ground state construction supports 2 <= L <= {max_size}, got L={L}")
    if not beta >= 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    elements = enumerate_loop_group(L)
    log_weights = np.array([beta * float(element.sigma_z.sum()) for element in elements])
    log_Z = float(logsumexp(log_weights))
    amplitudes = np.exp(0.5 * (log_weights - log_Z))
    basis = np.array([element.basis_index() for element in elements], dtype=np.int64)
    return GroundStateVector(L=L, beta=float(beta), n_qubits=2 * L * L, basis=basis, amplitudes=amplitudes,
                             Z=math.exp(log_Z) if log_Z < 700 else math.inf, log_Z=log_Z)


def reduced_density_matrix(state: GroundStateVector, qubits) -> np.ndarray:
    """
    Partial trace of ``|GS><GS|`` onto one or two qubits. For two qubits (a, b) the local basis
    order is ``|alpha_a alpha_b>`` = 00, 01, 10, 11.

    :param state: Ground state
    :type state: GroundStateVector
    :param qubits: One link id, or a pair of distinct link ids
    :type qubits: int or sequence of int
    :raises DuplicateQubitError: if the same qubit is given twice
    :raises IndexError: for ids outside the state
    """
    qubits = (int(qubits),) if np.isscalar(qubits) else tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise DuplicateQubitError(f"Qubits must be distinct, got {qubits}")
    if not 1 <= len(qubits) <= 2:
        raise ValueError(f"Only one- and two-qubit reduced density matrices are supported, got {qubits}")
    for qubit in qubits:
        if not 0 <= qubit < state.n_qubits:
            raise IndexError(f"Qubit {qubit} out of range for {state.n_qubits} qubits")

    kept_mask = 0
    local = np.zeros(state.basis.size, dtype=np.int64)
    for qubit in qubits:
        kept_mask |= 1 << qubit
        local = 2 * local + ((state.basis >> qubit) & 1)
    _, environment = np.unique(state.basis & ~kept_mask, return_inverse=True)

    # Rows are environment states, columns the kept qubits; rho = T^T T traces the rows out
    table = np.zeros((environment.max() + 1, 1 << len(qubits)))
    np.add.at(table, (environment, local), state.amplitudes)
    return table.T @ table


def entanglement_from_state(state: GroundStateVector) -> Tuple[float, float]:
    """
    GE and GE_tilde of a ground state from the purities of all one- and two-qubit reduced
    density matrices.

    :param state: Ground state
    :type state: GroundStateVector
    """
    N = state.n_qubits
    single = sum(np.sum(reduced_density_matrix(state, i) ** 2) for i in range(N))
    pair = sum(np.sum(reduced_density_matrix(state, (i, j)) ** 2)
               for i, j in itertools.combinations(range(N), 2))
    GE = 2.0 * (1.0 - single / N)
    GE_tilde = (4.0 / 3.0) * (1.0 - 2.0 * pair / (N * (N - 1)))
    return float(GE), float(GE_tilde)


def off_diagonal_residual(state: GroundStateVector, qubits: Sequence = None) -> float:
    """
    Largest off-diagonal magnitude over the reduced density matrices of all single qubits and
    all qubit pairs (or of the given qubit selections).

    :param state: Ground state
    :type state: GroundStateVector
    :param qubits: Optional list of qubit selections to check
    :type qubits: sequence
    """
    if qubits is None:
        qubits = list(range(state.n_qubits)) + list(itertools.combinations(range(state.n_qubits), 2))
    worst = 0.0
    for selection in qubits:
        rho = reduced_density_matrix(state, selection)
        worst = max(worst, float(np.max(np.abs(rho - np.diag(np.diag(rho))))))
    return worst


def loop_parity_violations(state: GroundStateVector) -> int:
    """
    Count the nonzero-amplitude basis states with an odd number of flipped qubits around some
    plaquette, i.e. basis states that are not closed loops of the dual lattice.

    :param state: Ground state
    :type state: GroundStateVector
    """
    plaquettes = tl.plaquette_links(tl.build_geometry(state.L))
    bits = (state.basis[:, None] >> np.arange(state.n_qubits)) & 1
    parity = bits[:, plaquettes].sum(axis=2) % 2
    return int(np.count_nonzero(parity.any(axis=1)))


def export_fixture(result: ExactIsingResult, path: str):
    """
    Write the scalar observables and class correlations of an exact result as a JSON baseline.

    :param result: Exact enumeration result
    :type result: ExactIsingResult
    :param path: Output file
    :type path: str
    """
    fixture = {
        'L': result.L,
        'beta': result.beta,
        'log_Z': result.log_Z,
        'mean_E': result.mean_E,
        'var_E': result.var_E,
        'e': result.e,
        'GE': result.GE,
        'GE_tilde': result.GE_tilde,
        'Q': result.Q,
        'classes': [[c.orientation, list(c.displacement), c.multiplicity] for c in result.classes],
        'class_correlations': result.class_correlations.tolist(),
    }
    with open(path, 'w') as f:
        json.dump(fixture, f, indent=4)
    logger.info(f"Exact fixture for L={result.L} beta={result.beta} written to {path}")


def load_fixture(path: str) -> dict:
    """Read a JSON baseline written by :func:`export_fixture`."""
    with open(path, 'r') as f:
        return json.load(f)
