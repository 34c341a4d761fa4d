"""
Test Suite for the exact classical and quantum oracles, using unittest.

Classes in the source file:
    * :func:`ExactIsingTests`: Test class for the exhaustive Ising enumeration.
    * :func:`LoopGroupTests`: Test class for the star-operator group.
    * :func:`GroundStateTests`: Test class for the exact ground state and its reduced density matrices.
"""

import itertools
import math
import os
import tempfile
import unittest

import numpy as np

from toric_ge import estimators as est
from toric_ge import exact_oracles as eo
from toric_ge import torus_lattice as tl
from tests.test_cli_runner import LONG_TESTS_ENV_VAR


def transfer_matrix_moments(L, beta):
    """log Z (with the factor 1/2) and <E> of the L x L torus from the row transfer matrix."""
    rows = 1 - 2 * ((np.arange(1 << L)[:, None] >> np.arange(L)) & 1)
    row_bonds = (rows * np.roll(rows, -1, axis=1)).sum(axis=1)
    bonds = row_bonds[:, None] + rows @ rows.T
    T = np.exp(beta * bonds)
    trace = np.trace(np.linalg.matrix_power(T, L))
    negative_energy = L * np.trace((T * bonds) @ np.linalg.matrix_power(T, L - 1))
    return math.log(trace / 2.0), -negative_energy / trace


class ExactIsingTests(unittest.TestCase):
    """Test class for the exhaustive Ising enumeration."""

    def test_size_limits(self):
        """Sizes outside 2..4 need the opt-in, and L = 6 is never enumerated."""
        for L in (1, 5, 6):
            with self.assertRaises(eo.OracleSizeError):
                eo.exact_ising(L, 0.4)
        with self.assertRaises(eo.OracleSizeError):
            eo.exact_ising(6, 0.4, allow_large=True)

    def test_smallest_torus_closed_form(self):
        """On L = 2, Z = e^(8 beta) + 6 + e^(-8 beta) and <E> = -8 sinh(8 beta) / (cosh(8 beta) + 3)."""
        for beta in (0.0, 0.1, 0.4, 1.0):
            result = eo.exact_ising(2, beta)
            self.assertAlmostEqual(result.Z, math.exp(8 * beta) + 6 + math.exp(-8 * beta), delta=1e-9 * result.Z)
            expected_E = -8 * math.sinh(8 * beta) / (math.cosh(8 * beta) + 3)
            self.assertAlmostEqual(result.mean_E, expected_E, places=10)

    def test_free_and_frozen_limits(self):
        """beta = 0 gives free links; large beta gives the ordered state."""
        free = eo.exact_ising(3, 0.0)
        self.assertAlmostEqual(free.e, 0.0)
        self.assertAlmostEqual(free.GE, 1.0)
        self.assertAlmostEqual(free.GE_tilde, 1.0)
        self.assertAlmostEqual(free.Q, 0.0)
        self.assertAlmostEqual(free.log_Z, 8 * math.log(2.0))
        frozen = eo.exact_ising(3, 10.0)
        self.assertAlmostEqual(frozen.e, -1.0)
        self.assertAlmostEqual(frozen.GE, 0.0)
        self.assertAlmostEqual(frozen.GE_tilde, 0.0)
        self.assertAlmostEqual(frozen.dGE_dbeta, 0.0)

    def test_doubled_links_are_always_correlated(self):
        """On L = 2 the two links joining the same vertices carry equal energies, even at beta = 0."""
        free = eo.exact_ising(2, 0.0)
        self.assertAlmostEqual(free.pair_correlations[0, 2], 1.0)
        self.assertLess(free.GE_tilde, 1.0)

    def test_translation_invariance(self):
        """All links share one mean and all members of a class share one correlation."""
        result = eo.exact_ising(4, 0.44)
        self.assertTrue(np.allclose(result.link_means, result.e, atol=1e-12))
        self.assertLess(result.within_class_spread, 1e-12)

    def test_probabilities_are_normalized(self):
        """Every class gives probabilities that sum to one."""
        result = eo.exact_ising(3, 0.35)
        self.assertEqual(len(result.probabilities), len(result.classes))
        for probabilities in result.probabilities:
            self.assertAlmostEqual(probabilities.P_s + probabilities.P_o, 1.0)
            self.assertAlmostEqual(probabilities.P_ss + probabilities.P_so + probabilities.P_os
                                   + probabilities.P_oo, 1.0)

    def test_GE_tilde_from_full_pair_matrix(self):
        """Summing over classes with multiplicities equals summing over every link pair."""
        result = eo.exact_ising(3, 0.5)
        N = result.n_links
        upper = result.pair_correlations[np.triu_indices(N, k=1)]
        direct = 1 - (2 / 3) * result.e ** 2 - 2 * np.sum(upper ** 2) / (3 * N * (N - 1))
        self.assertAlmostEqual(result.GE_tilde, direct, places=12)

    def test_transfer_matrix_agreement(self):
        """Enumeration at L = 4 agrees with the row transfer matrix."""
        for L, beta in ((3, 0.3), (4, 0.44)):
            # Arrange
            log_Z, mean_E = transfer_matrix_moments(L, beta)

            # Act
            result = eo.exact_ising(L, beta)

            # Assert
            self.assertAlmostEqual(result.log_Z, log_Z, places=9)
            self.assertAlmostEqual(result.mean_E, mean_E, places=9)
            self.assertAlmostEqual(result.GE, est.compute_GE(mean_E / (2 * L * L)), places=10)

    def test_pinned_values_on_the_4x4_torus(self):
        """L = 4, beta = 0.44 reproduces reference values from an independent enumeration."""
        result = eo.exact_ising(4, 0.44)
        self.assertAlmostEqual(result.log_Z, 14.811579358158, delta=1e-9)
        self.assertAlmostEqual(result.var_E, 64.847235462564, delta=1e-8)
        self.assertAlmostEqual(result.e, -0.781423514052, delta=1e-10)
        self.assertAlmostEqual(result.GE, 0.389377291686, delta=1e-10)
        self.assertAlmostEqual(result.GE_tilde, 0.445702528643, delta=1e-10)
        self.assertAlmostEqual(result.Q, 0.056325236957, delta=1e-10)
        self.assertAlmostEqual(result.dGE_dbeta, -3.167072163233, delta=1e-9)

    @unittest.skipUnless(os.environ.get(LONG_TESTS_ENV_VAR) == '1', f"set {LONG_TESTS_ENV_VAR}=1 to run")
    def test_opt_in_enumeration_of_the_5x5_torus(self):
        """With the opt-in, L = 5 is enumerated and agrees with the row transfer matrix."""
        # Arrange
        log_Z, mean_E = transfer_matrix_moments(5, 0.44)

        # Act
        result = eo.exact_ising(5, 0.44, allow_large=True)

        # Assert
        self.assertTrue(all(math.isfinite(x) for x in (result.log_Z, result.e, result.GE, result.GE_tilde,
                                                       result.Q, result.dGE_dbeta)))
        self.assertAlmostEqual(result.log_Z, log_Z, places=8)
        self.assertAlmostEqual(result.mean_E, mean_E, places=8)
        self.assertTrue(-1.0 <= result.e <= 0.0)
        self.assertTrue(0.0 <= result.GE <= 1.0)
        self.assertTrue(0.0 <= result.GE_tilde <= 1.0)
        self.assertLess(result.within_class_spread, 1e-10)

    def test_fixture_round_trip(self):
        """An exported fixture holds the scalars and the class data of the result."""
        result = eo.exact_ising(4, 0.44)
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'exact_L4.json')
            eo.export_fixture(result, path)
            fixture = eo.load_fixture(path)
        self.assertEqual(fixture['L'], 4)
        self.assertAlmostEqual(fixture['GE_tilde'], result.GE_tilde)
        self.assertEqual(len(fixture['classes']), len(result.classes))
        self.assertEqual(sum(entry[2] for entry in fixture['classes']), 496)
        np.testing.assert_allclose(fixture['class_correlations'], result.class_correlations)


class LoopGroupTests(unittest.TestCase):
    """Test class for the star-operator group."""

    def test_group_sizes(self):
        """The group has 2^(L^2 - 1) elements; larger tori are refused."""
        self.assertEqual(len(eo.enumerate_loop_group(2)), 8)
        self.assertEqual(len(eo.enumerate_loop_group(3)), 256)
        with self.assertRaises(eo.OracleSizeError):
            eo.enumerate_loop_group(4)

    def test_identity_and_canonical_masks(self):
        """The empty mask is the identity and canonical masks leave vertex 0 out."""
        elements = eo.enumerate_loop_group(2)
        self.assertEqual(elements[0].mask, 0)
        self.assertTrue(np.all(elements[0].sigma_z == 1))
        self.assertEqual(elements[0].basis_index(), 0)
        self.assertEqual(eo.LoopGroupElement.canonical_mask(1, 4), 14)
        self.assertEqual(eo.LoopGroupElement.canonical_mask(6, 4), 6)
        self.assertTrue(all(element.mask % 2 == 0 for element in elements))

    def test_single_star(self):
        """A single star flips the four links touching its vertex."""
        geom = tl.build_geometry(3)
        elements = {element.mask: element for element in eo.enumerate_loop_group(3)}
        star = elements[1 << 4]
        flipped = set(np.flatnonzero(star.sigma_z < 0).tolist())
        self.assertEqual(flipped, set(geom.vertex_links[4].tolist()))

    def test_closure(self):
        """The product of two elements is the element of the symmetric difference of their masks."""
        elements = eo.enumerate_loop_group(3)
        by_mask = {element.mask: element for element in elements}
        rng = np.random.default_rng(5)
        for i, j in rng.integers(0, len(elements), size=(40, 2)):
            first, second = elements[i], elements[j]
            product = by_mask[eo.LoopGroupElement.canonical_mask(first.mask ^ second.mask, 9)]
            self.assertTrue(np.array_equal(first.sigma_z * second.sigma_z, product.sigma_z))


class GroundStateTests(unittest.TestCase):
    """Test class for the exact ground state and its reduced density matrices."""

    def test_limits(self):
        """beta = 0 is the equal superposition; large beta leaves only the reference state."""
        uniform = eo.build_ground_state(2, 0.0)
        np.testing.assert_allclose(uniform.amplitudes, 1 / math.sqrt(8))
        self.assertAlmostEqual(uniform.log_Z, math.log(8.0))
        frozen = eo.build_ground_state(2, 10.0)
        dense = frozen.to_dense()
        self.assertEqual(dense.size, 256)
        self.assertAlmostEqual(dense[0], 1.0)

    def test_normalization_and_partition_function(self):
        """The state is normalized and its Z matches the classical one."""
        for beta in (0.0, 0.3, 0.441, 1.0):
            state = eo.build_ground_state(2, beta)
            self.assertAlmostEqual(state.norm(), 1.0, places=12)
            self.assertAlmostEqual(state.log_Z, eo.exact_ising(2, beta).log_Z, places=10)

    def test_size_and_coupling_limits(self):
        """L = 3 needs the sparse opt-in; negative couplings are rejected."""
        with self.assertRaises(eo.OracleSizeError):
            eo.build_ground_state(3, 0.3)
        with self.assertRaises(eo.OracleSizeError):
            eo.build_ground_state(4, 0.3, allow_sparse=True)
        with self.assertRaises(ValueError):
            eo.build_ground_state(2, -0.1)
        state = eo.build_ground_state(3, 0.3, allow_sparse=True)
        self.assertEqual(state.basis.size, 256)
        self.assertEqual(state.n_qubits, 18)

    def test_basis_states_are_closed_loops(self):
        """Every basis state with nonzero amplitude has even parity around each plaquette."""
        self.assertEqual(eo.loop_parity_violations(eo.build_ground_state(2, 0.3)), 0)
        self.assertEqual(eo.loop_parity_violations(eo.build_ground_state(3, 0.3, allow_sparse=True)), 0)

    def test_invalid_qubit_selections(self):
        """Repeated or out-of-range qubits are rejected."""
        state = eo.build_ground_state(2, 0.3)
        with self.assertRaises(eo.DuplicateQubitError):
            eo.reduced_density_matrix(state, (3, 3))
        with self.assertRaises(IndexError):
            eo.reduced_density_matrix(state, 8)
        with self.assertRaises(IndexError):
            eo.reduced_density_matrix(state, (0, -1))

    def test_reduced_density_matrices(self):
        """Reduced matrices are diagonal density matrices holding the classical probabilities."""
        # Arrange
        beta = 0.441
        state = eo.build_ground_state(2, beta)
        exact = eo.exact_ising(2, beta)

        # Act
        single = eo.reduced_density_matrix(state, 3)
        pairs = {(a, b): eo.reduced_density_matrix(state, (a, b))
                 for a, b in itertools.combinations(range(8), 2)}

        # Assert
        for rho in [single] + list(pairs.values()):
            self.assertAlmostEqual(np.trace(rho), 1.0, places=12)
            self.assertTrue(np.allclose(rho, rho.T))
            self.assertGreater(np.linalg.eigvalsh(rho).min(), -1e-12)
            self.assertLess(np.max(np.abs(rho - np.diag(np.diag(rho)))), 1e-14)
        p = est.probabilities_from_moments(exact.link_means[3], exact.link_means[3], 1.0)
        np.testing.assert_allclose(np.diag(single), [p.P_s, p.P_o], atol=1e-12)
        for (a, b), rho in pairs.items():
            p = est.probabilities_from_moments(exact.link_means[a], exact.link_means[b],
                                               exact.pair_correlations[a, b])
            np.testing.assert_allclose(np.diag(rho), [p.P_ss, p.P_so, p.P_os, p.P_oo], atol=1e-12)

    def test_off_diagonal_residual(self):
        """No one- or two-qubit reduced matrix has off-diagonal weight."""
        self.assertLess(eo.off_diagonal_residual(eo.build_ground_state(2, 0.7)), 1e-14)

    def test_quantum_entanglement_matches_classical(self):
        """GE and GE_tilde from partial traces equal the values from Ising moments."""
        for L, beta in ((2, 0.0), (2, 0.2), (2, 0.3), (2, 0.441), (2, 0.8), (2, 2.0), (3, 0.441)):
            state = eo.build_ground_state(L, beta, allow_sparse=True)
            exact = eo.exact_ising(L, beta)
            GE, GE_tilde = eo.entanglement_from_state(state)
            self.assertAlmostEqual(GE, exact.GE, delta=1e-12)
            self.assertAlmostEqual(GE_tilde, exact.GE_tilde, delta=1e-12)


if __name__ == '__main__':
    unittest.main()
