# Copyright 2023 by Ilias Charitos.
# All rights reserved.
# This file is part of the Toric GE package,
# and is released under the "MIT License Agreement". Please see the LICENSE
# file that should have been included as part of this package.

"""
Source file that holds the geometry of the L x L periodic square lattice. Classical Ising spins live
on the vertices and the toric code qubits live on the links.

Vertex ``(x, y)`` has id ``y * L + x``. Link ``2 * v`` is the horizontal link leaving vertex ``v``
towards ``+x`` and link ``2 * v + 1`` the vertical link leaving it towards ``+y``. Every link is
anchored at the vertex it leaves from, so a lattice translation moves anchors and links together.

Functions in the source file:
    * :class:`InvalidSizeError`: Exception for lattice sizes that cannot form a torus.
    * :class:`TorusGeometry`: Immutable index tables of one lattice.
    * :class:`PairClass`: Orbit of unordered link pairs under lattice translations.
    * :func:`build_geometry`: Build the index tables for a given linear size.
    * :func:`link_endpoints`: Return the two vertex ids of a link.
    * :func:`plaquette_links`: Return the four links bounding every plaquette.
    * :func:`classify_pairs`: Reduce all unordered link pairs to translation classes.
    * :func:`class_arrays`: Column arrays (orientation code, dx, dy, multiplicity) of a class list.
    * :func:`pair_class_index`: Class index of every ordered pair of distinct links.
    * :func:`anchor_distance`: Minimum-image distance between the anchors of each class.
"""

from dataclasses import dataclass
from typing import (
    Sequence,
    Tuple
)

import numpy as np

from toric_ge.constants import ORIENTATION_PAIRS


class InvalidSizeError(ValueError):
    """
    Exception for lattice sizes below 2. With ``L = 1`` every link would join a vertex to itself.
    """
    pass


@dataclass(frozen=True, eq=False)
class TorusGeometry:
    """
    Index tables of the L x L torus. All arrays are read-only, so one instance can be shared by
    any number of chains.
    """
    L: int
    n_spins: int
    n_links: int
    endpoints: np.ndarray       # (n_links, 2) vertex ids, anchor first
    orientation: np.ndarray     # (n_links,) 0 = horizontal, 1 = vertical
    anchors: np.ndarray         # (n_links, 2) anchor coordinates (x, y)
    vertex_links: np.ndarray    # (n_spins, 4) incident link ids

    def vertex_id(self, x, y):
        """Return the id of the vertex at (x, y), coordinates taken modulo L."""
        return (y % self.L) * self.L + (x % self.L)


@dataclass(frozen=True)
class PairClass:
    """
    All unordered pairs of distinct links related by a translation of the torus. Translation
    invariance gives every member the same expectation value of ``E_i * E_j``.
    """
    orientation: str
    displacement: Tuple[int, int]
    multiplicity: int

    @property
    def orientation_code(self):
        """Index of the orientation pair in ``ORIENTATION_PAIRS`` (hh = 0, hv = 1, vv = 2)."""
        return ORIENTATION_PAIRS.index(self.orientation)


def _read_only(array):
    array.flags.writeable = False
    return array


def build_geometry(L: int) -> TorusGeometry:
    """
    Build the index tables of the L x L torus.

    :param L: Linear size in vertices
    :type L: int
    :returns: The immutable geometry
    :raises InvalidSizeError: if ``L < 2``
    """
    if int(L) != L or L < 2:
        raise InvalidSizeError(f"Lattice size must be an integer >= 2, got {L}")
    L = int(L)
    n_spins = L * L
    n_links = 2 * n_spins

    ys, xs = np.divmod(np.arange(n_spins, dtype=np.int64), L)
    right = ys * L + (xs + 1) % L
    up = ((ys + 1) % L) * L + xs
    left = ys * L + (xs - 1) % L
    down = ((ys - 1) % L) * L + xs
    vertices = np.arange(n_spins, dtype=np.int64)

    endpoints = np.empty((n_links, 2), dtype=np.int64)
    endpoints[0::2, 0] = vertices
    endpoints[0::2, 1] = right
    endpoints[1::2, 0] = vertices
    endpoints[1::2, 1] = up

    orientation = np.tile(np.array([0, 1], dtype=np.int8), n_spins)
    anchors = np.repeat(np.column_stack([xs, ys]), 2, axis=0)

    # Outgoing h, incoming h, outgoing v, incoming v. On L = 2 the outgoing and incoming links of
    # one direction join the same two vertices but stay distinct links.
    vertex_links = np.column_stack([2 * vertices, 2 * left, 2 * vertices + 1, 2 * down + 1])

    return TorusGeometry(
        L=L,
        n_spins=n_spins,
        n_links=n_links,
        endpoints=_read_only(endpoints),
        orientation=_read_only(orientation),
        anchors=_read_only(anchors.astype(np.int64)),
        vertex_links=_read_only(vertex_links.astype(np.int64)),
    )


def link_endpoints(geom: TorusGeometry, link: int) -> Tuple[int, int]:
    """
    Return the two vertex ids joined by a link, anchor first.

    :param geom: Lattice geometry
    :type geom: TorusGeometry
    :param link: Link id
    :type link: int
    :raises IndexError: for ids outside ``[0, n_links)``
    """
    if not 0 <= link < geom.n_links:
        raise IndexError(f"Link id {link} out of range for {geom.n_links} links")
    first, second = geom.endpoints[link]
    return int(first), int(second)


def plaquette_links(geom: TorusGeometry) -> np.ndarray:
    """
    Return the (n_spins, 4) table of links bounding each plaquette, indexed by the plaquette's
    lower-left vertex: bottom, right, top, left.

    :param geom: Lattice geometry
    :type geom: TorusGeometry
    """
    L = geom.L
    vertices = np.arange(geom.n_spins, dtype=np.int64)
    ys, xs = np.divmod(vertices, L)
    right = ys * L + (xs + 1) % L
    up = ((ys + 1) % L) * L + xs
    return np.column_stack([2 * vertices, 2 * right + 1, 2 * up, 2 * vertices + 1])


def _pair_keys(geom, first, second):
    """Canonical class keys for the link pairs (first[k], second[k])."""
    L = geom.L
    o_first = geom.orientation[first].astype(np.int64)
    o_second = geom.orientation[second].astype(np.int64)
    # Mixed pairs are measured from the horizontal link
    swap = o_first > o_second
    a_first = np.where(swap[:, None], geom.anchors[second], geom.anchors[first])
    a_second = np.where(swap[:, None], geom.anchors[first], geom.anchors[second])
    dx = (a_second[:, 0] - a_first[:, 0]) % L
    dy = (a_second[:, 1] - a_first[:, 1]) % L

    # Same-orientation pairs are unordered, so d and -d name the same class
    neg_dx = (-dx) % L
    neg_dy = (-dy) % L
    flip = (o_first == o_second) & (neg_dx * L + neg_dy < dx * L + dy)
    dx = np.where(flip, neg_dx, dx)
    dy = np.where(flip, neg_dy, dy)

    return ((o_first + o_second) * L + dx) * L + dy


def classify_pairs(geom: TorusGeometry) -> Tuple[PairClass, ...]:
    """
    Reduce every unordered pair of distinct links to its translation class. Multiplicities come from
    an exhaustive scan over all pairs, and classes are returned sorted by (orientation, dx, dy).

    :param geom: Lattice geometry
    :type geom: TorusGeometry
    :returns: The classes; their multiplicities sum to ``n_links * (n_links - 1) / 2``
    """
    L = geom.L
    counts = np.zeros(3 * L * L, dtype=np.int64)
    for link in range(geom.n_links - 1):
        partners = np.arange(link + 1, geom.n_links)
        keys = _pair_keys(geom, np.full(partners.size, link), partners)
        counts += np.bincount(keys, minlength=counts.size)

    classes = list()
    for key in np.flatnonzero(counts):
        code, rest = divmod(int(key), L * L)
        dx, dy = divmod(rest, L)
        classes.append(PairClass(ORIENTATION_PAIRS[code], (dx, dy), int(counts[key])))
    return tuple(classes)


def class_arrays(classes: Sequence[PairClass]):
    """
    Column view of a class list.

    :param classes: Pair classes
    :type classes: sequence of PairClass
    :returns: orientation codes, dx, dy and multiplicities as int64 arrays
    """
    codes = np.array([c.orientation_code for c in classes], dtype=np.int64)
    dx = np.array([c.displacement[0] for c in classes], dtype=np.int64)
    dy = np.array([c.displacement[1] for c in classes], dtype=np.int64)
    multiplicities = np.array([c.multiplicity for c in classes], dtype=np.int64)
    return codes, dx, dy, multiplicities


def pair_class_index(geom: TorusGeometry, classes: Sequence[PairClass]) -> np.ndarray:
    """
    Class index of every ordered pair of distinct links, ``-1`` on the diagonal. Meant for small
    lattices: the table has ``n_links ** 2`` entries.

    :param geom: Lattice geometry
    :type geom: TorusGeometry
    :param classes: Classes returned by :func:`classify_pairs` for the same geometry
    :type classes: sequence of PairClass
    """
    L = geom.L
    codes, dx, dy, _ = class_arrays(classes)
    lookup = np.full(3 * L * L, -1, dtype=np.int64)
    lookup[(codes * L + dx) * L + dy] = np.arange(len(classes))

    first, second = np.meshgrid(np.arange(geom.n_links), np.arange(geom.n_links), indexing='ij')
    keys = _pair_keys(geom, first.ravel(), second.ravel())
    table = lookup[keys].reshape(geom.n_links, geom.n_links)
    np.fill_diagonal(table, -1)
    return table


def anchor_distance(classes: Sequence[PairClass], L: int) -> np.ndarray:
    """
    Euclidean minimum-image distance between the link anchors of each class. A link is anchored at
    its source vertex, the one it leaves in the +x or +y direction. For a link that does not wrap
    around the torus this is also its lexicographically smaller endpoint, and for L >= 3 every class
    has a member pair of such links, so the distances match that convention.

    :param classes: Pair classes
    :type classes: sequence of PairClass
    :param L: Linear lattice size
    :type L: int
    """
    _, dx, dy, _ = class_arrays(classes)
    dx = np.minimum(dx, L - dx)
    dy = np.minimum(dy, L - dy)
    return np.sqrt(dx * dx + dy * dy)
