"""
Test Suite for the torus geometry, using unittest.

Classes in the source file:
    * :func:`GeometryTests`: Test class for the index tables of the lattice.
    * :func:`PairClassTests`: Test class for the translation classes of link pairs.
"""

import unittest

import numpy as np

from toric_ge import torus_lattice as tl


class GeometryTests(unittest.TestCase):
    """Test class for the index tables of the lattice."""

    def test_sizes_below_two_are_rejected(self):
        """A torus needs at least two vertices per direction."""
        for L in (0, 1, 2.5):
            with self.assertRaises(tl.InvalidSizeError):
                tl.build_geometry(L)

    def test_counts(self):
        """n_spins = L^2 and n_links = 2 L^2."""
        self.assertEqual((tl.build_geometry(2).n_spins, tl.build_geometry(2).n_links), (4, 8))
        self.assertEqual(tl.build_geometry(40).n_links, 3200)

    def test_every_vertex_has_four_links(self):
        """Counting link ends per vertex gives the coordination number 4."""
        for L in (2, 3, 5):
            geom = tl.build_geometry(L)
            degree = np.bincount(geom.endpoints.ravel(), minlength=geom.n_spins)
            self.assertTrue(np.all(degree == 4))
            # The incidence table lists links that really touch the vertex
            for v in range(geom.n_spins):
                for link in geom.vertex_links[v]:
                    self.assertIn(v, geom.endpoints[link])

    def test_link_endpoints(self):
        """Link ids map to the expected vertex pairs, including wraparound."""
        geom = tl.build_geometry(3)
        self.assertEqual(tl.link_endpoints(geom, 0), (0, 1))
        self.assertEqual(tl.link_endpoints(geom, 1), (0, 3))
        self.assertEqual(tl.link_endpoints(geom, 4), (2, 0))
        self.assertEqual(tl.link_endpoints(geom, 2 * 7 + 1), (7, 1))

    def test_doubled_links_on_the_smallest_torus(self):
        """On L = 2 two distinct links join (0,0) and (1,0)."""
        geom = tl.build_geometry(2)
        joining = [link for link in range(geom.n_links)
                   if set(tl.link_endpoints(geom, link)) == {geom.vertex_id(0, 0), geom.vertex_id(1, 0)}]
        self.assertEqual(len(joining), 2)

    def test_out_of_range_link(self):
        """Link ids outside [0, n_links) raise an IndexError."""
        geom = tl.build_geometry(3)
        for link in (-1, 18):
            with self.assertRaises(IndexError):
                tl.link_endpoints(geom, link)

    def test_tables_are_read_only(self):
        """Geometry arrays cannot be modified in place."""
        geom = tl.build_geometry(3)
        with self.assertRaises(ValueError):
            geom.endpoints[0, 0] = 5

    def test_plaquettes_are_closed(self):
        """Every link borders exactly two plaquettes."""
        geom = tl.build_geometry(4)
        counts = np.bincount(tl.plaquette_links(geom).ravel(), minlength=geom.n_links)
        self.assertTrue(np.all(counts == 2))


class PairClassTests(unittest.TestCase):
    """Test class for the translation classes of link pairs."""

    def test_multiplicities_cover_all_pairs(self):
        """Class multiplicities sum to N (N - 1) / 2."""
        for L, expected in ((2, 28), (3, 153), (4, 496), (5, 1225)):
            classes = tl.classify_pairs(tl.build_geometry(L))
            self.assertEqual(sum(c.multiplicity for c in classes), expected)

    def test_class_structure(self):
        """Mixed pairs form L^2 classes of L^2 pairs; self-inverse displacements hold L^2 / 2 pairs."""
        # Arrange
        L = 4
        classes = tl.classify_pairs(tl.build_geometry(L))

        # Act
        mixed = [c for c in classes if c.orientation == 'hv']
        horizontal = [c for c in classes if c.orientation == 'hh']

        # Assert
        self.assertEqual(len(mixed), L * L)
        self.assertTrue(all(c.multiplicity == L * L for c in mixed))
        self.assertEqual(len(horizontal), 9)
        half = [c for c in horizontal if c.displacement in ((0, 2), (2, 0), (2, 2))]
        self.assertEqual(len(half), 3)
        self.assertTrue(all(c.multiplicity == L * L // 2 for c in half))

    def test_classes_are_sorted_and_unique(self):
        """Classes are unique and ordered by orientation and displacement."""
        classes = tl.classify_pairs(tl.build_geometry(3))
        keys = [(c.orientation_code, c.displacement) for c in classes]
        self.assertEqual(keys, sorted(set(keys)))

    def test_pair_index_matches_multiplicities(self):
        """The ordered pair table counts every unordered pair twice."""
        geom = tl.build_geometry(3)
        classes = tl.classify_pairs(geom)
        index = tl.pair_class_index(geom, classes)
        self.assertTrue(np.all(np.diag(index) == -1))
        self.assertTrue(np.array_equal(index, index.T))
        counts = np.bincount(index[index >= 0], minlength=len(classes))
        self.assertEqual(counts.tolist(), [2 * c.multiplicity for c in classes])

    def test_pair_index_is_translation_invariant(self):
        """Translating both links of a pair keeps its class."""
        geom = tl.build_geometry(4)
        index = tl.pair_class_index(geom, tl.classify_pairs(geom))
        shift = np.array([2 * geom.vertex_id(x + 1, y + 2) + o
                          for y in range(4) for x in range(4) for o in range(2)])
        self.assertTrue(np.array_equal(index, index[np.ix_(shift, shift)]))

    def test_anchor_distance(self):
        """Distances use the minimum image."""
        classes = [tl.PairClass('hh', (3, 0), 4), tl.PairClass('hv', (1, 1), 16), tl.PairClass('vv', (0, 0), 16)]
        distances = tl.anchor_distance(classes, 4)
        np.testing.assert_allclose(distances, [1.0, np.sqrt(2.0), 0.0])


if __name__ == '__main__':
    unittest.main()
