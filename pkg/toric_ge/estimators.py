# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that turns sampled spin configurations into the entanglement observables of the toric
code ground state.

The one-qubit and two-qubit reduced density matrices of the ground state are diagonal, with
entries given by probabilities of aligned (s) and opposite (o) spins at the ends of a link of the
classical Ising model. As a consequence::

    GE       = 1 - e^2
    GE_tilde = 1 - (2/3) e^2 - 2 / (3 N (N - 1)) * sum_pairs <E_i E_j>^2
    Q        = GE_tilde - GE

with ``e = <E> / N`` the per-link energy and ``N`` the number of links (qubits). The sum over
pairs runs over translation classes, each weighted by its multiplicity. Squared correlations are
estimated by the product of the means over two contiguous halves of the chain, which has no
positive bias.

Energies follow ``E = -sum S_u S_v``, so ``e = -1`` in the ordered phase. Every formula depends on
``e`` only through ``e^2``.

Functions in the source file:
    * :class:`EnergyDomainError`, :class:`InconsistentMomentsError`, :class:`MissingClassError`,
      :class:`TooFewPointsError`, :class:`TooFewBinsError`: Exceptions of the estimators.
    * :class:`ProbabilitySet`: Single-link and link-pair probabilities.
    * :class:`ObservableAccumulator`: Binned, split-half running sums of one chain.
    * :class:`EntanglementReport`: Observables and errors at one (L, beta) point.
    * :func:`link_energy_fields`: Link energies of a state as horizontal and vertical fields.
    * :func:`class_products`: Translation-averaged link-energy products per pair class.
    * :func:`measure_configuration`: Add one sampled state to an accumulator.
    * :func:`probabilities_from_moments`: Invert the moment equations for the probabilities.
    * :func:`compute_GE`, :func:`compute_GE_tilde`, :func:`compute_Q`: Entanglement from moments.
    * :func:`dGE_dbeta_fluctuation`: Derivative of GE from the energy variance.
    * :func:`heat_capacity`: Classical heat capacity per spin.
    * :func:`finite_difference_derivative`: Derivative of a series over a coupling grid.
    * :func:`fEE_profile`: Connected energy-energy correlator against distance.
    * :func:`fEE_profile_with_errors`: The same profile with jackknife errors from an accumulator.
    * :func:`analytic_Q`: Thermodynamic-limit estimate of Q from the per-link energy.
    * :func:`onsager_energy_per_link`: Exact per-link energy of the infinite lattice.
    * :func:`jackknife`: Leave-one-bin-out jackknife over named bin sums.
    * :func:`jackknife_errors`: Errors of all report fields from an accumulator.
    * :func:`build_report`: Report of one accumulator.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import (
    Callable,
    Dict,
    List,
    Optional,
    Sequence
)

import numpy as np
import pandas as pd
from scipy.special import ellipk

from toric_ge import torus_lattice as tl
from toric_ge.constants import (
    BETA_CRITICAL,
    MIN_JACKKNIFE_BINS,
    PROBABILITY_CLAMP_LIMIT,
    PROBABILITY_EPS
)

logger = logging.getLogger(__name__)

# Observables of a report, in estimator order
REPORT_FIELDS = ('e', 'GE', 'GE_tilde', 'Q', 'dGE_dbeta')


class EnergyDomainError(ValueError):
    """
    Exception for a per-link energy outside ``[-1, 1]``.
    """
    pass


class InconsistentMomentsError(ValueError):
    """
    Exception for link moments whose implied probabilities leave ``[0, 1]`` by more than the
    clamping limit. Points to a bug or to badly converged statistics.
    """
    pass


class MissingClassError(ValueError):
    """
    Exception for pair-class data that does not cover all ``N (N - 1) / 2`` link pairs.
    """
    pass


class TooFewPointsError(ValueError):
    """
    Exception for a coupling grid too short for finite differences.
    """
    pass


class TooFewBinsError(ValueError):
    """
    Exception for a jackknife over fewer bins than ``MIN_JACKKNIFE_BINS``.
    """
    pass


@dataclass(frozen=True)
class ProbabilitySet:
    """
    Probabilities of aligned (s) and opposite (o) link ends: one link, and a pair of links a, b.
    """
    P_s: float
    P_o: float
    P_ss: float
    P_so: float
    P_os: float
    P_oo: float

    def single_purity(self):
        """Tr rho_a^2 of the one-qubit reduced density matrix."""
        return self.P_s ** 2 + self.P_o ** 2

    def pair_purity(self):
        """Tr rho_ab^2 of the two-qubit reduced density matrix."""
        return self.P_ss ** 2 + self.P_so ** 2 + self.P_os ** 2 + self.P_oo ** 2


@dataclass
class ObservableAccumulator:
    """
    Running sums of one chain, kept per bin so that errors can be estimated by jackknife.
    The class products are summed separately over two halves A and B. When the chain length is
    known, A holds the first half of the measurements and B the rest, so their counts differ by at
    most one; otherwise whole bins alternate between A and B.
    """
    L: int
    bin_size: int
    class_codes: np.ndarray
    class_dx: np.ndarray
    class_dy: np.ndarray
    multiplicities: np.ndarray
    split_at: Optional[int] = None
    n_measure: int = 0
    bin_n: List[int] = field(default_factory=list)
    bin_E: List[float] = field(default_factory=list)
    bin_E2: List[float] = field(default_factory=list)
    bin_nA: List[int] = field(default_factory=list)
    bin_nB: List[int] = field(default_factory=list)
    bin_A: List[np.ndarray] = field(default_factory=list)
    bin_B: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_classes(cls, L: int, classes: Sequence[tl.PairClass], bin_size: int, n_measure: int = None):
        """
        Create an empty accumulator for the pair classes of an L x L torus.

        :param L: Linear lattice size
        :type L: int
        :param classes: Pair classes of the lattice
        :type classes: sequence of PairClass
        :param bin_size: Measurements per bin
        :type bin_size: int
        :param n_measure: Planned measurements of the chain; half B starts at its middle.
            Bins alternate between the halves if omitted.
        :type n_measure: int
        """
        if bin_size < 1:
            raise ValueError(f"bin_size must be >= 1, got {bin_size}")
        split_at = None if n_measure is None else max(int(n_measure) // 2, 1)
        codes, dx, dy, multiplicities = tl.class_arrays(classes)
        return cls(L=L, bin_size=bin_size, class_codes=codes, class_dx=dx, class_dy=dy,
                   multiplicities=multiplicities, split_at=split_at)

    @property
    def n_links(self):
        return 2 * self.L * self.L

    @property
    def n_classes(self):
        return self.multiplicities.size

    @property
    def n_bins(self):
        return len(self.bin_n)

    def _in_half_a(self):
        if self.split_at is not None:
            return self.n_measure < self.split_at
        return (self.n_bins - 1) % 2 == 0

    def add(self, energy: float, products: np.ndarray):
        """
        Add one measurement: the total energy and the per-class products.

        :param energy: Total energy of the configuration
        :type energy: float
        :param products: Translation-averaged product per class
        :type products: numpy.ndarray
        """
        if self.n_measure % self.bin_size == 0:
            self.bin_n.append(0)
            self.bin_E.append(0.0)
            self.bin_E2.append(0.0)
            self.bin_nA.append(0)
            self.bin_nB.append(0)
            self.bin_A.append(np.zeros(self.n_classes))
            self.bin_B.append(np.zeros(self.n_classes))
        energy = float(energy)
        self.bin_n[-1] += 1
        self.bin_E[-1] += energy
        self.bin_E2[-1] += energy * energy
        if self._in_half_a():
            self.bin_nA[-1] += 1
            self.bin_A[-1] += products
        else:
            self.bin_nB[-1] += 1
            self.bin_B[-1] += products
        self.n_measure += 1

    def merge(self, other: 'ObservableAccumulator') -> 'ObservableAccumulator':
        """
        Return a new accumulator holding the bins of this one followed by the bins of ``other``.
        Used to combine chains at the same (L, beta) in seed order.

        :param other: Accumulator of another chain on the same lattice
        :type other: ObservableAccumulator
        """
        if other.L != self.L or other.n_classes != self.n_classes:
            raise ValueError("Only accumulators of the same lattice can be merged")
        return replace(
            self,
            n_measure=self.n_measure + other.n_measure,
            bin_n=self.bin_n + other.bin_n,
            bin_E=self.bin_E + other.bin_E,
            bin_E2=self.bin_E2 + other.bin_E2,
            bin_nA=self.bin_nA + other.bin_nA,
            bin_nB=self.bin_nB + other.bin_nB,
            bin_A=[a.copy() for a in self.bin_A + other.bin_A],
            bin_B=[b.copy() for b in self.bin_B + other.bin_B],
        )

    def bins(self) -> Dict[str, np.ndarray]:
        """Return the bin sums stacked into arrays, one row per bin."""
        return {
            'n': np.array(self.bin_n, dtype=float),
            'E': np.array(self.bin_E, dtype=float),
            'E2': np.array(self.bin_E2, dtype=float),
            'nA': np.array(self.bin_nA, dtype=float),
            'nB': np.array(self.bin_nB, dtype=float),
            'A': np.array(self.bin_A, dtype=float).reshape(self.n_bins, self.n_classes),
            'B': np.array(self.bin_B, dtype=float).reshape(self.n_bins, self.n_classes),
        }


@dataclass(frozen=True)
class EntanglementReport:
    """
    Entanglement observables and their jackknife errors at one (L, beta) point. The coupling
    derivative of GE_tilde is filled in from a grid of reports by finite differences.
    """
    L: int
    beta: float
    e: float
    GE: float
    GE_tilde: float
    Q: float
    dGE_dbeta: float
    e_err: float
    GE_err: float
    GE_tilde_err: float
    Q_err: float
    dGE_dbeta_err: float
    n_measure: int
    dGEtilde_dbeta: float = math.nan
    dGEtilde_dbeta_err: float = math.nan


def link_energy_fields(state) -> np.ndarray:
    """
    Return the link energies ``-S_u S_v`` of a state as an (L, L, 2) array indexed by the anchor
    (y, x) and the orientation (0 horizontal, 1 vertical).

    :param state: Spin configuration
    :type state: SpinConfiguration
    """
    geom = state.geometry
    spins = state.spins.astype(np.int64)
    energies = -spins[geom.endpoints[:, 0]] * spins[geom.endpoints[:, 1]]
    return energies.reshape(geom.L, geom.L, 2)


def class_products(fields: np.ndarray, codes: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """
    Translation-averaged product ``E_i E_j`` over all member pairs of each class, from FFT
    cross-correlations of the link-energy fields. The sums are integers and are rounded back to
    them before averaging.

    :param fields: Output of :func:`link_energy_fields`
    :type fields: numpy.ndarray
    :param codes: Orientation codes of the classes (hh, hv, vv)
    :type codes: numpy.ndarray
    :param dx: Class displacements along x
    :type dx: numpy.ndarray
    :param dy: Class displacements along y
    :type dy: numpy.ndarray
    """
    L = fields.shape[0]
    spectrum = np.fft.fft2(fields, axes=(0, 1))
    horizontal, vertical = spectrum[:, :, 0], spectrum[:, :, 1]
    correlations = np.stack([
        np.fft.ifft2(np.conj(horizontal) * horizontal),
        np.fft.ifft2(np.conj(horizontal) * vertical),
        np.fft.ifft2(np.conj(vertical) * vertical),
    ]).real
    return np.rint(correlations[codes, dy, dx]) / (L * L)


def measure_configuration(state, accumulator: ObservableAccumulator) -> ObservableAccumulator:
    """
    Add one sampled configuration to an accumulator: its energy and the class products.

    :param state: Thermalized spin configuration
    :type state: SpinConfiguration
    :param accumulator: Accumulator of the chain
    :type accumulator: ObservableAccumulator
    """
    products = class_products(link_energy_fields(state), accumulator.class_codes,
                              accumulator.class_dx, accumulator.class_dy)
    accumulator.add(state.energy, products)
    return accumulator


def _check_probabilities(values, names):
    values = np.asarray(values, dtype=float)
    violation = np.maximum(-values, values - 1.0)
    worst = float(np.max(violation))
    if worst > PROBABILITY_CLAMP_LIMIT:
        bad = names[int(np.argmax(violation))]
        raise InconsistentMomentsError(f"Probability {bad} outside [0, 1] by {worst:.3g}")
    if worst > PROBABILITY_EPS:
        logger.warning(f"Clamping probabilities outside [0, 1] by up to {worst:.3g}")
    return np.clip(values, 0.0, 1.0)


def probabilities_from_moments(E_a: float, E_b: float, E_ab: float) -> ProbabilitySet:
    """
    Invert ``<E_a> = P_o - P_s`` and the four pair equations for the link probabilities.

    :param E_a: Mean energy of link a
    :type E_a: float
    :param E_b: Mean energy of link b
    :type E_b: float
    :param E_ab: Mean product of the energies of links a and b
    :type E_ab: float
    :raises InconsistentMomentsError: if a probability leaves [0, 1] beyond the clamping limit
    """
    values = [
        (1.0 - E_a) / 2.0,
        (1.0 + E_a) / 2.0,
        (1.0 - E_a - E_b + E_ab) / 4.0,
        (1.0 - E_a + E_b - E_ab) / 4.0,
        (1.0 + E_a - E_b - E_ab) / 4.0,
        (1.0 + E_a + E_b + E_ab) / 4.0,
    ]
    names = ['P_s', 'P_o', 'P_ss', 'P_so', 'P_os', 'P_oo']
    return ProbabilitySet(*(float(v) for v in _check_probabilities(values, names)))


def _as_scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def _check_energy(e):
    e = np.asarray(e, dtype=float)
    if np.any(np.abs(e) > 1.0 + 1e-12) or np.any(np.isnan(e)):
        raise EnergyDomainError(f"Per-link energy must lie in [-1, 1], got {e}")
    return np.clip(e, -1.0, 1.0)


def compute_GE(e):
    """
    Global entanglement ``1 - e^2`` from the per-link energy.

    :param e: Per-link energy ``<E> / N``
    :type e: float
    :raises EnergyDomainError: if ``|e| > 1``
    """
    e = _check_energy(e)
    return _as_scalar(1.0 - e * e)


def compute_GE_tilde(e, correlations, multiplicities, n_links, correlations_b=None):
    """
    Generalized global entanglement from the per-link energy and the per-class correlations.
    When a second, independent estimate ``correlations_b`` is given, each squared correlation is
    replaced by the product of the two estimates.

    :param e: Per-link energy
    :type e: float
    :param correlations: ``<E_i E_j>`` per class
    :type correlations: numpy.ndarray
    :param multiplicities: Number of link pairs per class
    :type multiplicities: numpy.ndarray
    :param n_links: Number of links N
    :type n_links: int
    :param correlations_b: Independent estimate of the same correlations
    :type correlations_b: numpy.ndarray
    :raises MissingClassError: if the classes do not cover every pair
    """
    e = _check_energy(e)
    correlations = np.asarray(correlations, dtype=float)
    multiplicities = np.asarray(multiplicities)
    n_pairs = n_links * (n_links - 1) // 2
    if correlations.shape != multiplicities.shape or int(multiplicities.sum()) != n_pairs:
        raise MissingClassError(f"Class data covers {int(multiplicities.sum())} of {n_pairs} link pairs")
    if np.any(np.isnan(correlations)):
        raise MissingClassError("Class correlations contain missing values")
    if correlations_b is None:
        squares = correlations * correlations
    else:
        squares = correlations * np.asarray(correlations_b, dtype=float)
    pair_sum = float(np.dot(multiplicities, squares))
    return 1.0 - (2.0 / 3.0) * e * e - 2.0 * pair_sum / (3.0 * n_links * (n_links - 1))


def compute_Q(GE_tilde, GE):
    """Conditional global entanglement ``GE_tilde - GE``."""
    return GE_tilde - GE


def dGE_dbeta_fluctuation(e, var_E, n_links):
    """
    Coupling derivative of GE from ``d<E>/dbeta = -Var(E)``, i.e. ``2 <E> Var(E) / N^2``.

    :param e: Per-link energy
    :type e: float
    :param var_E: Variance of the total energy
    :type var_E: float
    :param n_links: Number of links N
    :type n_links: int
    """
    return 2.0 * e * var_E / n_links


def heat_capacity(var_E, beta, n_spins):
    """Heat capacity per spin ``beta^2 Var(E) / n_spins`` of the classical model."""
    return beta * beta * var_E / n_spins


def finite_difference_derivative(betas, values, errors=None):
    """
    Derivative of a series over a coupling grid: central differences inside, one-sided at the
    ends, errors of the two values combined in quadrature.

    :param betas: Strictly increasing couplings
    :type betas: array-like
    :param values: Series values
    :type values: array-like
    :param errors: Standard errors of the values (zeros if omitted)
    :type errors: array-like
    :returns: couplings, derivatives and derivative errors
    :raises TooFewPointsError: for fewer than 3 points
    """
    betas = np.asarray(betas, dtype=float)
    values = np.asarray(values, dtype=float)
    errors = np.zeros_like(values) if errors is None else np.asarray(errors, dtype=float)
    if betas.size < 3:
        raise TooFewPointsError(f"Finite differences need at least 3 points, got {betas.size}")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("Coupling grid must be strictly increasing")

    upper = np.concatenate([[1], np.arange(2, betas.size), [betas.size - 1]])
    lower = np.concatenate([[0], np.arange(0, betas.size - 2), [betas.size - 2]])
    step = betas[upper] - betas[lower]
    derivative = (values[upper] - values[lower]) / step
    derivative_err = np.hypot(errors[upper], errors[lower]) / step
    return betas, derivative, derivative_err


def fEE_profile(correlations, e, classes: Sequence[tl.PairClass], L: int) -> pd.DataFrame:
    """
    Connected energy-energy correlator ``<E_i E_j> - e^2`` against the minimum-image distance
    between link anchors, averaged over the classes at equal distance.

    :param correlations: ``<E_i E_j>`` per class
    :type correlations: numpy.ndarray
    :param e: Per-link energy
    :type e: float
    :param classes: Pair classes
    :type classes: sequence of PairClass
    :param L: Linear lattice size
    :type L: int
    :returns: DataFrame with columns r, f_EE, n_classes sorted by r
    """
    table = pd.DataFrame({
        'r': np.round(tl.anchor_distance(classes, L), 9),
        'f_EE': np.asarray(correlations, dtype=float) - e * e,
    })
    profile = table.groupby('r', sort=True).agg(f_EE=('f_EE', 'mean'), n_classes=('f_EE', 'size'))
    return profile.reset_index()


def analytic_Q(e):
    """Thermodynamic-limit estimate ``(e^2 - e^4) / 3`` of Q, which peaks at 1/12 for ``e^2 = 1/2``."""
    e = _check_energy(e)
    return _as_scalar((e * e - e ** 4) / 3.0)


def onsager_energy_per_link(beta):
    """
    Exact per-link energy of the infinite square-lattice Ising model (half the energy per spin).
    Equals ``-1/sqrt(2)`` at the critical coupling.

    :param beta: Coupling(s)
    :type beta: float or numpy.ndarray
    """
    beta = np.asarray(beta, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        two_beta = 2.0 * beta
        modulus = 2.0 * np.sinh(two_beta) / np.cosh(two_beta) ** 2
        elliptic = ellipk(np.minimum(modulus * modulus, 1.0))
        per_spin = -(1.0 / np.tanh(two_beta)) * (
            1.0 + (2.0 / np.pi) * (2.0 * np.tanh(two_beta) ** 2 - 1.0) * elliptic)
        energy = per_spin / 2.0
    energy = np.where(np.isclose(beta, BETA_CRITICAL, rtol=0.0, atol=1e-14), -1.0 / math.sqrt(2.0), energy)
    energy = np.where(beta == 0.0, 0.0, energy)
    return energy if energy.ndim else float(energy)


def jackknife(bins: Dict[str, np.ndarray], estimator: Callable[[Dict[str, np.ndarray]], object]):
    """
    Leave-one-bin-out jackknife. ``bins`` maps names to per-bin sums (first axis = bin) and the
    estimator maps the corresponding totals to a scalar or an array.

    :param bins: Per-bin sums
    :type bins: dict
    :param estimator: Function of the totals
    :type estimator: callable
    :returns: the estimate on all bins and its jackknife standard error
    :raises TooFewBinsError: for fewer than ``MIN_JACKKNIFE_BINS`` bins
    """
    n_bins = len(next(iter(bins.values())))
    if n_bins < MIN_JACKKNIFE_BINS:
        raise TooFewBinsError(f"Jackknife needs at least {MIN_JACKKNIFE_BINS} bins, got {n_bins}")
    totals = {name: values.sum(axis=0) for name, values in bins.items()}
    estimate = np.asarray(estimator(totals), dtype=float)
    resampled = np.array([
        estimator({name: totals[name] - values[k] for name, values in bins.items()})
        for k in range(n_bins)
    ], dtype=float)
    spread = resampled - resampled.mean(axis=0)
    error = np.sqrt((n_bins - 1) / n_bins * np.sum(spread * spread, axis=0))
    if estimate.ndim == 0:
        return float(estimate), float(error)
    return estimate, error


def _report_estimator(multiplicities, n_links):
    """Estimator of the ``REPORT_FIELDS`` from accumulator totals."""
    def estimator(totals):
        mean_E = totals['E'] / totals['n']
        var_E = max(totals['E2'] / totals['n'] - mean_E * mean_E, 0.0)
        e = mean_E / n_links
        half_a = totals['A'] / totals['nA']
        half_b = totals['B'] / totals['nB']
        GE = compute_GE(e)
        GE_tilde = compute_GE_tilde(e, half_a, multiplicities, n_links, correlations_b=half_b)
        return np.array([e, GE, GE_tilde, compute_Q(GE_tilde, GE), dGE_dbeta_fluctuation(e, var_E, n_links)])
    return estimator


def jackknife_errors(accumulator: ObservableAccumulator) -> Dict[str, float]:
    """
    Jackknife standard errors of e, GE, GE_tilde, Q and dGE/dbeta.

    :param accumulator: Accumulator with at least ``MIN_JACKKNIFE_BINS`` bins
    :type accumulator: ObservableAccumulator
    """
    _, errors = jackknife(accumulator.bins(), _report_estimator(accumulator.multiplicities, accumulator.n_links))
    return dict(zip(REPORT_FIELDS, (float(x) for x in errors)))


def build_report(accumulator: ObservableAccumulator, beta: float) -> EntanglementReport:
    """
    Evaluate all observables of an accumulator with their jackknife errors.

    :param accumulator: Accumulator of one (L, beta) point
    :type accumulator: ObservableAccumulator
    :param beta: Coupling of the chain(s)
    :type beta: float
    """
    errors = jackknife_errors(accumulator)
    totals = {name: values.sum(axis=0) for name, values in accumulator.bins().items()}
    estimate = _report_estimator(accumulator.multiplicities, accumulator.n_links)(totals)
    values = dict(zip(REPORT_FIELDS, (float(x) for x in estimate)))
    return EntanglementReport(L=accumulator.L, beta=float(beta), n_measure=accumulator.n_measure, **values,
                              **{f'{name}_err': errors[name] for name in REPORT_FIELDS})


def fEE_profile_with_errors(accumulator: ObservableAccumulator, classes: Sequence[tl.PairClass]) -> pd.DataFrame:
    """
    f_EE profile of an accumulator with jackknife errors per distance.

    :param accumulator: Accumulator of one (L, beta) point
    :type accumulator: ObservableAccumulator
    :param classes: Pair classes the accumulator was built for
    :type classes: sequence of PairClass
    :returns: DataFrame with columns r, f_EE, f_err, n_classes
    """
    L = accumulator.L
    n_links = accumulator.n_links

    def estimator(totals):
        e = totals['E'] / totals['n'] / n_links
        correlations = (totals['A'] + totals['B']) / (totals['nA'] + totals['nB'])
        return fEE_profile(correlations, e, classes, L)['f_EE'].to_numpy()

    values, errors = jackknife(accumulator.bins(), estimator)
    bins = accumulator.bins()
    e = bins['E'].sum() / bins['n'].sum() / n_links
    correlations = (bins['A'].sum(axis=0) + bins['B'].sum(axis=0)) / (bins['nA'].sum() + bins['nB'].sum())
    profile = fEE_profile(correlations, e, classes, L)
    profile['f_EE'] = values
    profile['f_err'] = errors
    return profile[['r', 'f_EE', 'f_err', 'n_classes']]
