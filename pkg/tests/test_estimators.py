"""
Test Suite for the entanglement estimators, using unittest.

Classes in the source file:
    * :func:`ClassProductTests`: Test class for link energies and translation-averaged products.
    * :func:`ProbabilityTests`: Test class for the inversion of the link moments.
    * :func:`EntanglementFormulaTests`: Test class for GE, GE_tilde, Q and their derivatives.
    * :func:`JackknifeTests`: Test class for binning, split-half products and error estimates.
"""

import math
import unittest

import numpy as np

from toric_ge import estimators as est
from toric_ge import exact_oracles as eo
from toric_ge import mc_engine as mc
from toric_ge import torus_lattice as tl
from toric_ge.constants import (
    BETA_CRITICAL,
    CRITICAL_ENERGY_PER_LINK
)


def state_from_spins(geom, spins):
    spins = np.asarray(spins, dtype=np.int8)
    return mc.SpinConfiguration(geom, spins, int(mc.total_energy(spins, geom.endpoints)))


def accumulator_for(L, bin_size):
    classes = tl.classify_pairs(tl.build_geometry(L))
    return est.ObservableAccumulator.for_classes(L, classes, bin_size), classes


class ClassProductTests(unittest.TestCase):
    """Test class for link energies and translation-averaged products."""

    def test_ordered_state(self):
        """In the ordered state every link energy is -1 and every product is +1."""
        geom = tl.build_geometry(4)
        state = mc.ordered_state(geom)
        codes, dx, dy, _ = tl.class_arrays(tl.classify_pairs(geom))
        fields = est.link_energy_fields(state)
        self.assertTrue(np.all(fields == -1))
        self.assertTrue(np.allclose(est.class_products(fields, codes, dx, dy), 1.0))

    def test_single_flip_energy(self):
        """One flipped spin on the 3 x 3 torus breaks four bonds: E = -18 + 8."""
        geom = tl.build_geometry(3)
        spins = np.ones(geom.n_spins)
        spins[4] = -1
        state = state_from_spins(geom, spins)
        self.assertEqual(state.energy, -10)
        self.assertEqual(int(est.link_energy_fields(state).sum()), -10)

    def test_fft_products_match_brute_force(self):
        """FFT class products equal the average of E_i E_j over the member pairs of each class."""
        for L in (2, 3, 4):
            # Arrange
            geom = tl.build_geometry(L)
            classes = tl.classify_pairs(geom)
            codes, dx, dy, _ = tl.class_arrays(classes)
            index = tl.pair_class_index(geom, classes)
            rng = np.random.default_rng(L)
            state = state_from_spins(geom, np.where(rng.random(geom.n_spins) < 0.5, -1, 1))

            # Act
            products = est.class_products(est.link_energy_fields(state), codes, dx, dy)

            # Assert
            spins = state.spins.astype(int)
            link_E = -spins[geom.endpoints[:, 0]] * spins[geom.endpoints[:, 1]]
            outer = np.outer(link_E, link_E)
            brute = np.array([outer[index == k].mean() for k in range(len(classes))])
            np.testing.assert_allclose(products, brute, atol=1e-12)

    def test_measure_configuration(self):
        """Measuring a state records its energy in the open bin."""
        accumulator, _ = accumulator_for(3, bin_size=2)
        state = mc.ordered_state(tl.build_geometry(3))
        est.measure_configuration(state, accumulator)
        est.measure_configuration(state, accumulator)
        est.measure_configuration(state, accumulator)
        self.assertEqual(accumulator.n_measure, 3)
        self.assertEqual(accumulator.n_bins, 2)
        bins = accumulator.bins()
        self.assertEqual(bins['E'].tolist(), [-36.0, -18.0])
        # Without a planned length whole bins alternate between the halves
        self.assertEqual(bins['nA'].tolist(), [2.0, 0.0])
        self.assertEqual(bins['nB'].tolist(), [0.0, 1.0])

    def test_halves_are_contiguous_for_a_planned_chain(self):
        """With a known chain length, half A holds the first half of the measurements and half B the rest."""
        geom = tl.build_geometry(2)
        classes = tl.classify_pairs(geom)
        state = mc.ordered_state(geom)
        expected = {(2, 12): ([2, 2, 2, 0, 0, 0], [0, 0, 0, 2, 2, 2]),
                    (5, 23): ([5, 5, 1, 0, 0], [0, 0, 4, 5, 3])}
        for (bin_size, n_measure), (nA, nB) in expected.items():
            accumulator = est.ObservableAccumulator.for_classes(2, classes, bin_size, n_measure)
            self.assertEqual(accumulator.split_at, n_measure // 2)
            for _ in range(n_measure):
                est.measure_configuration(state, accumulator)
            bins = accumulator.bins()
            self.assertEqual(bins['nA'].tolist(), nA)
            self.assertEqual(bins['nB'].tolist(), nB)
            self.assertLessEqual(abs(bins['nA'].sum() - bins['nB'].sum()), 1)


class ProbabilityTests(unittest.TestCase):
    """Test class for the inversion of the link moments."""

    def test_uncorrelated_links(self):
        """Zero moments give uniform probabilities."""
        probabilities = est.probabilities_from_moments(0.0, 0.0, 0.0)
        self.assertEqual((probabilities.P_s, probabilities.P_o), (0.5, 0.5))
        for value in (probabilities.P_ss, probabilities.P_so, probabilities.P_os, probabilities.P_oo):
            self.assertAlmostEqual(value, 0.25)
        self.assertAlmostEqual(probabilities.single_purity(), 0.5)
        self.assertAlmostEqual(probabilities.pair_purity(), 0.25)

    def test_ordered_links(self):
        """Ordered links are aligned with certainty."""
        probabilities = est.probabilities_from_moments(-1.0, -1.0, 1.0)
        self.assertEqual(probabilities.P_s, 1.0)
        self.assertEqual(probabilities.P_ss, 1.0)
        self.assertEqual(probabilities.pair_purity(), 1.0)

    def test_small_violation_is_clamped_with_a_warning(self):
        """Rounding-size excursions outside [0, 1] are clamped and logged."""
        with self.assertLogs('toric_ge.estimators', level='WARNING'):
            probabilities = est.probabilities_from_moments(-1.0 - 1e-8, -1.0, 1.0)
        self.assertEqual(probabilities.P_o, 0.0)
        self.assertEqual(probabilities.P_s, 1.0)

    def test_inconsistent_moments(self):
        """A correlation above 1 cannot come from a distribution."""
        with self.assertRaises(est.InconsistentMomentsError):
            est.probabilities_from_moments(0.0, 0.0, 1.5)


class EntanglementFormulaTests(unittest.TestCase):
    """Test class for GE, GE_tilde, Q and their derivatives."""

    def test_GE(self):
        """GE = 1 - e^2 on scalars and arrays; |e| > 1 is rejected."""
        self.assertEqual(est.compute_GE(0.0), 1.0)
        self.assertEqual(est.compute_GE(-1.0), 0.0)
        self.assertAlmostEqual(est.compute_GE(0.5), 0.75)
        np.testing.assert_allclose(est.compute_GE(np.array([0.0, -0.5])), [1.0, 0.75])
        with self.assertRaises(est.EnergyDomainError):
            est.compute_GE(-1.5)

    def test_GE_tilde_limits(self):
        """Free links give GE_tilde = 1; ordered links give 0."""
        classes = tl.classify_pairs(tl.build_geometry(3))
        multiplicities = np.array([c.multiplicity for c in classes])
        self.assertAlmostEqual(est.compute_GE_tilde(0.0, np.zeros(len(classes)), multiplicities, 18), 1.0)
        self.assertAlmostEqual(est.compute_GE_tilde(-1.0, np.ones(len(classes)), multiplicities, 18), 0.0)

    def test_independent_links_give_analytic_Q(self):
        """With <E_i E_j> = e^2 for every pair, Q equals (e^2 - e^4) / 3."""
        classes = tl.classify_pairs(tl.build_geometry(4))
        multiplicities = np.array([c.multiplicity for c in classes])
        e = -0.6
        GE_tilde = est.compute_GE_tilde(e, np.full(len(classes), e * e), multiplicities, 32)
        Q = est.compute_Q(GE_tilde, est.compute_GE(e))
        self.assertAlmostEqual(Q, est.analytic_Q(e), places=12)

    def test_missing_class(self):
        """Correlations that do not cover all pairs are rejected."""
        classes = tl.classify_pairs(tl.build_geometry(3))
        multiplicities = np.array([c.multiplicity for c in classes])
        with self.assertRaises(est.MissingClassError):
            est.compute_GE_tilde(0.0, np.zeros(len(classes) - 1), multiplicities[:-1], 18)
        correlations = np.zeros(len(classes))
        correlations[0] = np.nan
        with self.assertRaises(est.MissingClassError):
            est.compute_GE_tilde(0.0, correlations, multiplicities, 18)

    def test_fluctuation_derivative_matches_exact_difference(self):
        """2 e Var(E) / N equals the numerical derivative of the exact GE."""
        step = 1e-4
        for beta in (0.2, 0.44, 0.7):
            centre = eo.exact_ising(3, beta)
            upper = eo.exact_ising(3, beta + step)
            lower = eo.exact_ising(3, beta - step)
            numerical = (upper.GE - lower.GE) / (2 * step)
            self.assertAlmostEqual(centre.dGE_dbeta, numerical, delta=1e-6)
            self.assertLess(centre.dGE_dbeta, 0.0)

    def test_heat_capacity_matches_curvature_of_log_Z(self):
        """beta^2 d^2 log Z / dbeta^2 per spin equals the heat capacity from the energy variance."""
        step = 1e-3
        for beta in (0.2, 0.44, 0.7):
            # Arrange
            centre = eo.exact_ising(3, beta)
            upper = eo.exact_ising(3, beta + step)
            lower = eo.exact_ising(3, beta - step)

            # Act
            curvature = (upper.log_Z - 2 * centre.log_Z + lower.log_Z) / (step * step)
            capacity = est.heat_capacity(centre.var_E, beta, 9)

            # Assert
            self.assertAlmostEqual(centre.var_E, curvature, delta=1e-4 * max(1.0, centre.var_E))
            self.assertAlmostEqual(capacity, beta * beta * curvature / 9, delta=1e-4 * max(1.0, capacity))
            # With N = 2 n_spins links, dGE/dbeta = e C / beta^2
            self.assertAlmostEqual(est.dGE_dbeta_fluctuation(centre.e, centre.var_E, 18),
                                   centre.e * capacity / (beta * beta), places=10)

    def test_finite_difference_of_simple_series(self):
        """Constant series have zero slope; linear series are differentiated exactly, ends included."""
        betas = np.linspace(0.3, 0.5, 11)
        _, constant, _ = est.finite_difference_derivative(betas, np.full(11, 4.0))
        self.assertTrue(np.allclose(constant, 0.0))
        _, slope, slope_err = est.finite_difference_derivative(betas, 2 * betas + 1, np.full(11, 0.1))
        np.testing.assert_allclose(slope, 2.0)
        self.assertAlmostEqual(slope_err[5], math.hypot(0.1, 0.1) / 0.04)
        self.assertAlmostEqual(slope_err[0], math.hypot(0.1, 0.1) / 0.02)

    def test_finite_difference_errors(self):
        """Short or unordered grids are rejected."""
        with self.assertRaises(est.TooFewPointsError):
            est.finite_difference_derivative([0.1, 0.2], [1.0, 2.0])
        with self.assertRaises(ValueError):
            est.finite_difference_derivative([0.1, 0.3, 0.2], [1.0, 2.0, 3.0])

    def test_finite_difference_agrees_with_fluctuation_formula(self):
        """On a fine exact series the two derivative estimators agree inside the grid."""
        # Arrange
        betas = np.round(np.arange(0.30, 0.5005, 0.001), 6)
        results = [eo.exact_ising(3, beta) for beta in betas]

        # Act
        _, derivative, _ = est.finite_difference_derivative(betas, [r.GE for r in results])

        # Assert
        fluctuation = np.array([r.dGE_dbeta for r in results])
        np.testing.assert_allclose(derivative[1:-1], fluctuation[1:-1], atol=1e-4)

    def test_analytic_Q(self):
        """Q peaks at 1/12 for e^2 = 1/2 and vanishes at e = 0 and |e| = 1."""
        self.assertAlmostEqual(est.analytic_Q(-1 / math.sqrt(2)), 1 / 12)
        self.assertEqual(est.analytic_Q(0.0), 0.0)
        self.assertEqual(est.analytic_Q(-1.0), 0.0)

    def test_onsager_energy(self):
        """The infinite-lattice energy has the known limits and critical value."""
        self.assertEqual(est.onsager_energy_per_link(0.0), 0.0)
        self.assertAlmostEqual(est.onsager_energy_per_link(BETA_CRITICAL), -CRITICAL_ENERGY_PER_LINK, places=12)
        self.assertAlmostEqual(est.onsager_energy_per_link(BETA_CRITICAL + 1e-7), -CRITICAL_ENERGY_PER_LINK, delta=1e-3)
        self.assertAlmostEqual(est.onsager_energy_per_link(3.0), -1.0, places=8)
        # High-temperature series: <S S'> = t + 2 t^3 + ...
        self.assertAlmostEqual(est.onsager_energy_per_link(0.01), -math.tanh(0.01), delta=1e-5)
        curve = est.onsager_energy_per_link(np.array([0.2, 0.4, 0.6]))
        self.assertEqual(curve.shape, (3,))
        self.assertTrue(np.all(np.diff(curve) < 0))

    def test_fEE_profile_of_uncorrelated_links(self):
        """Correlations equal to e^2 give a vanishing connected correlator."""
        L = 4
        classes = tl.classify_pairs(tl.build_geometry(L))
        profile = est.fEE_profile(np.full(len(classes), 0.25), -0.5, classes, L)
        self.assertEqual(list(profile.columns), ['r', 'f_EE', 'n_classes'])
        self.assertTrue(np.allclose(profile['f_EE'], 0.0))
        self.assertEqual(int(profile['n_classes'].sum()), len(classes))
        self.assertTrue(profile['r'].is_monotonic_increasing)


class JackknifeTests(unittest.TestCase):
    """Test class for binning, split-half products and error estimates."""

    def test_constant_bins(self):
        """Identical bins have zero error."""
        bins = {'n': np.ones(30), 'v': np.full(30, 3.0)}
        value, error = est.jackknife(bins, lambda totals: totals['v'] / totals['n'])
        self.assertAlmostEqual(value, 3.0)
        self.assertAlmostEqual(error, 0.0)

    def test_too_few_bins(self):
        """Fewer than the minimum bin count is rejected."""
        bins = {'n': np.ones(10), 'v': np.ones(10)}
        with self.assertRaises(est.TooFewBinsError):
            est.jackknife(bins, lambda totals: totals['v'] / totals['n'])

    def test_error_of_a_mean(self):
        """For independent data the jackknife error of a mean is sigma / sqrt(n)."""
        rng = np.random.default_rng(17)
        samples = rng.normal(2.0, 1.0, size=(100, 50))
        bins = {'n': np.full(100, 50.0), 'v': samples.sum(axis=1)}
        value, error = est.jackknife(bins, lambda totals: totals['v'] / totals['n'])
        self.assertAlmostEqual(value, samples.mean())
        self.assertAlmostEqual(error, 1.0 / math.sqrt(5000), delta=0.2 / math.sqrt(5000))

    def test_ordered_report(self):
        """An always-ordered chain reports GE = GE_tilde = 0 with zero errors."""
        L = 2
        accumulator, _ = accumulator_for(L, bin_size=1)
        state = mc.ordered_state(tl.build_geometry(L))
        for _ in range(40):
            est.measure_configuration(state, accumulator)
        report = est.build_report(accumulator, 2.0)
        self.assertEqual(report.n_measure, 40)
        self.assertAlmostEqual(report.e, -1.0)
        self.assertAlmostEqual(report.GE, 0.0)
        self.assertAlmostEqual(report.GE_tilde, 0.0)
        self.assertAlmostEqual(report.dGE_dbeta, 0.0)
        self.assertAlmostEqual(report.GE_tilde_err, 0.0)
        self.assertTrue(math.isnan(report.dGEtilde_dbeta))

    def test_split_half_products_are_unbiased(self):
        """With zero true correlations the split-half GE_tilde averages to 1; the squared mean does not."""
        # Arrange
        L, n_measure, n_runs = 2, 400, 500
        rng = np.random.default_rng(2024)
        split_shift, naive_shift = list(), list()

        # Act
        for _ in range(n_runs):
            accumulator, _ = accumulator_for(L, bin_size=20)
            for products in rng.standard_normal((n_measure, accumulator.n_classes)):
                accumulator.add(0.0, products)
            report = est.build_report(accumulator, 0.0)
            bins = accumulator.bins()
            mean = (bins['A'].sum(axis=0) + bins['B'].sum(axis=0)) / n_measure
            naive = est.compute_GE_tilde(0.0, mean, accumulator.multiplicities, accumulator.n_links)
            split_shift.append(report.GE_tilde - 1.0)
            naive_shift.append(naive - 1.0)

        # Assert
        # Naive bias: -2 * 28 / n_measure / (3 * 8 * 7)
        expected_bias = -2.0 * 28 / n_measure / 168
        self.assertAlmostEqual(np.mean(naive_shift), expected_bias, delta=0.2 * abs(expected_bias))
        self.assertLess(abs(np.mean(split_shift)), 0.25 * abs(expected_bias))

    def test_split_half_GE_tilde_matches_exact_value_over_many_chains(self):
        """Short Monte Carlo chains on the 2 x 2 torus average to the exactly enumerated GE_tilde."""
        # Arrange
        L, beta, n_measure, n_chains = 2, 0.44, 200, 400
        geom = tl.build_geometry(L)
        classes = tl.classify_pairs(geom)
        exact = eo.exact_ising(L, beta)
        estimates = list()

        # Act
        for chain in range(n_chains):
            accumulator = est.ObservableAccumulator.for_classes(L, classes, bin_size=10, n_measure=n_measure)
            config = mc.ChainConfig(L=L, beta=beta, seed=mc.derive_chain_seed(7, L, 0, chain), n_therm=100,
                                    n_measure=n_measure, measure_interval=1, algorithm='mixed')
            mc.run_chain(config, lambda state: est.measure_configuration(state, accumulator), geom)
            estimates.append(est.build_report(accumulator, beta).GE_tilde)

        # Assert
        estimates = np.array(estimates)
        standard_error = estimates.std(ddof=1) / np.sqrt(n_chains)
        self.assertLess(abs(estimates.mean() - exact.GE_tilde), 4 * standard_error)

    def test_report_errors_come_from_jackknife_errors(self):
        """Every error of a report equals the matching jackknife error of its accumulator."""
        # Arrange
        accumulator, _ = accumulator_for(3, bin_size=5)
        rng = np.random.default_rng(31)
        for energy, products in zip(rng.integers(-18, 1, size=200), rng.uniform(-1, 1, (200, accumulator.n_classes))):
            accumulator.add(energy, products)

        # Act
        errors = est.jackknife_errors(accumulator)
        report = est.build_report(accumulator, 0.3)

        # Assert
        self.assertEqual(tuple(errors), est.REPORT_FIELDS)
        for name in est.REPORT_FIELDS:
            self.assertEqual(getattr(report, f'{name}_err'), errors[name], name)
            self.assertGreater(errors[name], 0.0, name)

    def test_merge(self):
        """Merging keeps the bins of both chains in order; other lattices are rejected."""
        first, _ = accumulator_for(2, bin_size=1)
        second, _ = accumulator_for(2, bin_size=1)
        first.add(-8.0, np.ones(first.n_classes))
        second.add(0.0, np.zeros(second.n_classes))
        second.add(-4.0, np.zeros(second.n_classes))
        merged = first.merge(second)
        self.assertEqual(merged.n_measure, 3)
        self.assertEqual(merged.bins()['E'].tolist(), [-8.0, 0.0, -4.0])
        self.assertEqual(first.n_measure, 1)
        other, _ = accumulator_for(3, bin_size=1)
        with self.assertRaises(ValueError):
            first.merge(other)

    def test_fEE_profile_with_errors(self):
        """The profile of an ordered chain is zero at every distance with zero errors."""
        L = 3
        accumulator, classes = accumulator_for(L, bin_size=1)
        state = mc.ordered_state(tl.build_geometry(L))
        for _ in range(25):
            est.measure_configuration(state, accumulator)
        profile = est.fEE_profile_with_errors(accumulator, classes)
        self.assertEqual(list(profile.columns), ['r', 'f_EE', 'f_err', 'n_classes'])
        self.assertTrue(np.allclose(profile['f_EE'], 0.0))
        self.assertTrue(np.allclose(profile['f_err'], 0.0))


if __name__ == '__main__':
    unittest.main()
