"""Bond clusters on the torus with winding detection.

Union-find where every node stores its displacement to its parent.  When a
bond joins two sites that already share a root, a non-zero mismatch of the
accumulated displacements means the cluster wraps around the torus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import TorusLattice


class WindingUnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.offset = [(0, 0)] * n  # displacement from node to its parent
        self.wrap_x = [False] * n  # meaningful on roots only
        self.wrap_y = [False] * n

    def find(self, a: int) -> tuple[int, tuple[int, int]]:
        path = []
        while self.parent[a] != a:
            path.append(a)
            a = self.parent[a]
        root = a
        # compress, accumulating offsets from the far end of the path
        acc = (0, 0)
        for node in reversed(path):
            ox, oy = self.offset[node]
            acc = (acc[0] + ox, acc[1] + oy)
            self.offset[node] = acc
            self.parent[node] = root
        return root, (self.offset[path[0]] if path else (0, 0))

    def union(self, a: int, b: int, d: tuple[int, int]) -> None:
        """Join a and b where b sits at displacement ``d`` from a."""
        ra, oa = self.find(a)
        rb, ob = self.find(b)
        if ra == rb:
            wx = oa[0] + d[0] - ob[0]
            wy = oa[1] + d[1] - ob[1]
            self.wrap_x[ra] |= wx != 0
            self.wrap_y[ra] |= wy != 0
            return
        if self.size[ra] < self.size[rb]:
            ra, rb, oa, ob, d = rb, ra, ob, oa, (-d[0], -d[1])
        # position(rb) - position(ra) = oa + d - ob
        self.parent[rb] = ra
        self.offset[rb] = (oa[0] + d[0] - ob[0], oa[1] + d[1] - ob[1])
        self.size[ra] += self.size[rb]
        self.wrap_x[ra] |= self.wrap_x[rb]
        self.wrap_y[ra] |= self.wrap_y[rb]


@dataclass(frozen=True)
class PercolationReport:
    clusters: list[list[int]]
    largest_fraction: float
    wraps_dir1: bool  # vertical winding, the w1 direction
    wraps_dir2: bool  # horizontal winding
    spans_open: bool  # left-right crossing once the torus is cut open

    @property
    def wraps_any(self) -> bool:
        return self.wraps_dir1 or self.wraps_dir2

    def to_dict(self) -> dict:
        return {
            "n_clusters": len(self.clusters),
            "largest_fraction": self.largest_fraction,
            "wraps_dir1": self.wraps_dir1,
            "wraps_dir2": self.wraps_dir2,
            "spans_open": self.spans_open,
        }


def bond_displacement(lat: TorusLattice, b: int) -> tuple[int, int]:
    return (1, 0) if lat.is_horizontal(b) else (0, 1)


def bond_clusters(lat: TorusLattice, bonds) -> PercolationReport:
    """Site clusters joined by ``bonds`` (bonds sharing a site are adjacent)."""
    bonds = sorted(set(int(b) for b in bonds))
    uf = WindingUnionFind(lat.n_sites)
    touched = np.zeros(lat.n_sites, dtype=bool)
    for b in bonds:
        s, t = (int(v) for v in lat.bonds[b])
        touched[s] = touched[t] = True
        uf.union(s, t, bond_displacement(lat, b))
    groups: dict[int, list[int]] = {}
    for s in np.flatnonzero(touched):
        groups.setdefault(uf.find(int(s))[0], []).append(int(s))
    clusters = sorted(groups.values(), key=lambda c: (-len(c), c[0]))
    largest = len(clusters[0]) / lat.n_sites if clusters else 0.0
    roots = list(groups)
    return PercolationReport(
        clusters=clusters,
        largest_fraction=largest,
        wraps_dir1=any(uf.wrap_y[r] for r in roots),
        wraps_dir2=any(uf.wrap_x[r] for r in roots),
        spans_open=_spans_open(lat, bonds),
    )


def _spans_open(lat: TorusLattice, bonds) -> bool:
    L = lat.L
    uf = WindingUnionFind(lat.n_sites)
    for b in bonds:
        s, t = (int(v) for v in lat.bonds[b])
        if lat.is_horizontal(b) and lat.coords(s)[0] == L - 1:
            continue  # cut between column L-1 and column 0
        uf.union(s, t, bond_displacement(lat, b))
    left = {uf.find(lat.site(0, y))[0] for y in range(L)}
    right = {uf.find(lat.site(L - 1, y))[0] for y in range(L)}
    return bool(left & right)


def dual_bond_clusters(lat: TorusLattice, bonds) -> PercolationReport:
    """Clusters of bonds adjacent through a shared plaquette.

    Each bond is crossed by one dual edge joining its two plaquettes; the
    returned clusters are plaquette (face) indices and the winding flags
    refer to the dual lattice, with dir1 still meaning vertical.
    """
    L = lat.L
    uf = WindingUnionFind(lat.n_sites)
    touched = np.zeros(lat.n_sites, dtype=bool)
    cut_edges = []
    for b in sorted(set(int(b) for b in bonds)):
        x, y = lat.coords(int(lat.bonds[b, 0]))
        if lat.is_horizontal(b):
            # faces below (x, y-1) and above (x, y)
            f1, f2, d = lat.site(x, y - 1), lat.site(x, y), (0, 1)
        else:
            f1, f2, d = lat.site(x - 1, y), lat.site(x, y), (1, 0)
        touched[f1] = touched[f2] = True
        uf.union(f1, f2, d)
        cut_edges.append((f1, f2, d))
    groups: dict[int, list[int]] = {}
    for f in np.flatnonzero(touched):
        groups.setdefault(uf.find(int(f))[0], []).append(int(f))
    clusters = sorted(groups.values(), key=lambda c: (-len(c), c[0]))
    largest = len(clusters[0]) / lat.n_sites if clusters else 0.0
    roots = list(groups)
    open_uf = WindingUnionFind(lat.n_sites)
    for f1, f2, d in cut_edges:
        if d == (1, 0) and lat.coords(f2)[0] == 0:
            continue
        open_uf.union(f1, f2, d)
    left = {open_uf.find(lat.site(0, y))[0] for y in range(L)}
    right = {open_uf.find(lat.site(L - 1, y))[0] for y in range(L)}
    return PercolationReport(clusters, largest, any(uf.wrap_y[r] for r in roots),
                             any(uf.wrap_x[r] for r in roots), bool(left & right))
