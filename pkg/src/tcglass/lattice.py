"""Periodic square lattice used by every other module.

Sites are the vertices of an L x L torus, indexed row-major ``s = y * L + x``.
Each site owns two bonds: ``2 * s`` goes to its right neighbour and
``2 * s + 1`` to its upper neighbour.  Bonds carry the sigma spins of the
toric code, sites carry the dual theta spins and the star operators.

Diagram for L = 3 (site indices, bonds drawn as - and |)::

    6 - 7 - 8 -
    |   |   |
    3 - 4 - 5 -
    |   |   |
    0 - 1 - 2 -
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class LatticeError(ValueError):
    """Invalid lattice size or region geometry."""


@dataclass(frozen=True)
class TorusLattice:
    L: int
    bonds: np.ndarray  # (2L^2, 2) endpoint sites (s, s')
    star_bonds: np.ndarray  # (L^2, 4) bonds incident to each site
    plaquettes: np.ndarray  # (L^2, 4) bonds around each face

    @property
    def n_sites(self) -> int:
        return self.L * self.L

    @property
    def n_bonds(self) -> int:
        return 2 * self.L * self.L

    def site(self, x: int, y: int) -> int:
        return (y % self.L) * self.L + (x % self.L)

    def coords(self, s: int) -> tuple[int, int]:
        return s % self.L, s // self.L

    def hbond(self, x: int, y: int) -> int:
        """Bond from (x, y) to (x + 1, y)."""
        return 2 * self.site(x, y)

    def vbond(self, x: int, y: int) -> int:
        """Bond from (x, y) to (x, y + 1)."""
        return 2 * self.site(x, y) + 1

    def is_horizontal(self, b: int) -> bool:
        return b % 2 == 0

    def to_json(self) -> str:
        return json.dumps({"L": self.L, "bonds": self.bonds.tolist()})


def build_torus(L: int) -> TorusLattice:
    if int(L) != L or L < 2:
        raise LatticeError(f"lattice size must be an integer >= 2, got {L!r}")
    L = int(L)
    n = L * L
    bonds = np.empty((2 * n, 2), dtype=np.int64)
    for y in range(L):
        for x in range(L):
            s = y * L + x
            bonds[2 * s] = (s, y * L + (x + 1) % L)
            bonds[2 * s + 1] = (s, ((y + 1) % L) * L + x)
    star = np.empty((n, 4), dtype=np.int64)
    plaq = np.empty((n, 4), dtype=np.int64)
    for y in range(L):
        for x in range(L):
            s = y * L + x
            left = y * L + (x - 1) % L
            down = ((y - 1) % L) * L + x
            star[s] = (2 * s, 2 * left, 2 * s + 1, 2 * down + 1)
            # face with lower-left corner (x, y)
            right = y * L + (x + 1) % L
            up = ((y + 1) % L) * L + x
            plaq[s] = (2 * s, 2 * right + 1, 2 * up, 2 * s + 1)
    for arr in (bonds, star, plaq):
        arr.setflags(write=False)
    return TorusLattice(L, bonds, star, plaq)


def sigma_from_theta(lat: TorusLattice, theta) -> np.ndarray:
    """Bond spins sigma_j = theta_s * theta_s' for one or many site configurations.

    ``theta`` may be 1-D (one configuration) or 2-D with configurations along
    the first axis.
    """
    theta = np.asarray(theta)
    return theta[..., lat.bonds[:, 0]] * theta[..., lat.bonds[:, 1]]


def plaquette_values(lat: TorusLattice, sigma) -> np.ndarray:
    sigma = np.asarray(sigma)
    return np.prod(sigma[..., lat.plaquettes], axis=-1)


# --- winding loops ---------------------------------------------------------


@dataclass(frozen=True)
class WindingLoops:
    """Incontractible loops of the torus.

    ``w1_bonds`` is the vertical direct-lattice loop through column 0 and
    ``w2_bonds`` the horizontal one through row 0; the product of sigma^z
    along them is the winding parity of a configuration.  ``flip1_bonds`` and
    ``flip2_bonds`` are the conjugate dual loops: flipping those bonds
    toggles the parity of w1 (resp. w2) without creating plaquette defects.
    """

    w1_bonds: tuple[int, ...]
    w2_bonds: tuple[int, ...]
    flip1_bonds: tuple[int, ...]
    flip2_bonds: tuple[int, ...]


def winding_loops(lat: TorusLattice) -> WindingLoops:
    L = lat.L
    return WindingLoops(
        w1_bonds=tuple(lat.vbond(0, y) for y in range(L)),
        w2_bonds=tuple(lat.hbond(x, 0) for x in range(L)),
        flip1_bonds=tuple(lat.vbond(x, 0) for x in range(L)),
        flip2_bonds=tuple(lat.hbond(0, y) for y in range(L)),
    )


# --- bipartitions -----------------------------------------------------------


def _components(n_sites: int, edges) -> np.ndarray:
    """Label connected components of the site graph spanned by ``edges``.

    Sites not touched by any edge get label -1.
    """
    parent = list(range(n_sites))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    touched = np.zeros(n_sites, dtype=bool)
    for s, t in edges:
        touched[s] = touched[t] = True
        ra, rb = find(s), find(t)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    labels = np.full(n_sites, -1, dtype=np.int64)
    roots: dict[int, int] = {}
    for s in range(n_sites):
        if touched[s]:
            labels[s] = roots.setdefault(find(s), len(roots))
    return labels


@dataclass(frozen=True)
class BipartitionGeometry:
    """A region of bonds together with its boundary (cut) sites.

    ``components`` partitions ``boundary_sites`` into the pieces whose theta
    spins can be flipped independently of the rest of the boundary: sites
    are grouped by which connected piece of the region and which connected
    piece of the complement they touch.  ``flip_generators`` are the boundary
    masks obtained by flipping a whole connected piece on either side; they
    generate the gauge group acting on boundary spins.
    """

    name: str
    region_bonds: frozenset[int]
    boundary_sites: tuple[int, ...]
    components: dict[str, tuple[int, ...]] = field(default_factory=dict)
    flip_generators: tuple[tuple[int, ...], ...] = ()

    @property
    def n_components(self) -> int:
        return len(self.components)


def bipartition(lat: TorusLattice, region_bonds, name: str = "A",
                component_names: dict | None = None) -> BipartitionGeometry:
    """Build the boundary data of an arbitrary bond region."""
    region = frozenset(int(b) for b in region_bonds)
    if any(b < 0 or b >= lat.n_bonds for b in region):
        raise LatticeError("region contains bonds outside the lattice")
    inside = np.zeros(lat.n_bonds, dtype=bool)
    inside[list(region)] = True
    in_a = inside[lat.star_bonds].any(axis=1)
    in_b = (~inside[lat.star_bonds]).any(axis=1)
    boundary = tuple(int(s) for s in np.flatnonzero(in_a & in_b))

    lab_a = _components(lat.n_sites, lat.bonds[inside])
    lab_b = _components(lat.n_sites, lat.bonds[~inside])
    gens = []
    for labels in (lab_a, lab_b):
        for c in sorted({int(labels[s]) for s in boundary}):
            gens.append(tuple(s for s in boundary if labels[s] == c))
    atoms: dict[tuple[int, int], list[int]] = {}
    for s in boundary:
        atoms.setdefault((int(lab_a[s]), int(lab_b[s])), []).append(s)
    pieces = sorted((tuple(v) for v in atoms.values()), key=lambda t: t[0])
    names = component_names or {}
    components = {}
    for i, piece in enumerate(pieces):
        components[names.get(i, f"c{i}")] = piece
    return BipartitionGeometry(name, region, boundary, components, tuple(gens))


def _centered(lat: TorusLattice, s: int, center: tuple[int, int]) -> tuple[int, int]:
    L = lat.L
    x, y = lat.coords(s)
    dx = (x - center[0] + L // 2) % L - L // 2
    dy = (y - center[1] + L // 2) % L - L // 2
    return dx, dy


def levin_wen_regions(lat: TorusLattice, r: int, R: int,
                      center: tuple[int, int] | None = None) -> list[BipartitionGeometry]:
    """The four regions combined as -S(A1) + S(A2) + S(A3) - S(A4).

    Region 1 is the square annulus of bonds whose two endpoints both lie at
    Chebyshev distance ``r <= d <= R`` from the centre site (distances taken
    without wrapping around the torus).  ``r == R`` gives a one-site-thick
    ring, the only annulus that fits on L = 3.  Regions 2 and 3 remove the bonds
    touching the one-site-wide slit above (resp. below) the centre; region 4
    removes both slits and leaves a left and a right strip.
    """
    L = lat.L
    if not (1 <= r <= R) or 2 * R + 1 > L:
        raise LatticeError(f"annulus (r={r}, R={R}) does not fit on an L={L} torus")
    if center is None:
        center = (L // 2, L // 2)

    def dist(dx, dy):
        return max(abs(dx), abs(dy))

    ring, top, bottom = set(), set(), set()
    for b in range(lat.n_bonds):
        s = int(lat.bonds[b, 0])
        dx, dy = _centered(lat, s, center)
        ex, ey = (dx + 1, dy) if lat.is_horizontal(b) else (dx, dy + 1)
        if not (r <= dist(dx, dy) <= R and r <= dist(ex, ey) <= R):
            continue
        ring.add(b)
        if (dx == 0 and dy > 0) or (ex == 0 and ey > 0):
            top.add(b)
        if (dx == 0 and dy < 0) or (ex == 0 and ey < 0):
            bottom.add(b)

    regions = [
        bipartition(lat, ring, "A1", {0: "inner", 1: "outer"}),
        bipartition(lat, ring - top, "A2"),
        bipartition(lat, ring - bottom, "A3"),
        bipartition(lat, ring - top - bottom, "A4", {0: "left", 1: "right"}),
    ]
    if regions[0].n_components == 2:
        # name by distance so "inner" really is the hole boundary
        c0, c1 = regions[0].components.values()
        d0 = dist(*_centered(lat, c0[0], center))
        d1 = dist(*_centered(lat, c1[0], center))
        inner, outer = (c0, c1) if d0 <= d1 else (c1, c0)
        object.__setattr__(regions[0], "components", {"inner": inner, "outer": outer})
    expected = (2, 1, 1, 2)
    for reg, n in zip(regions, expected):
        if reg.n_components != n:
            raise LatticeError(
                f"region {reg.name} has {reg.n_components} boundary components, "
                f"expected {n}; geometry (L={L}, r={r}, R={R}) is degenerate")
    return regions
