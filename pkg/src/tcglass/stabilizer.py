"""GF(2) stabilizer algebra of the toric code with field-polarized (pinned) spins.

Pauli operators are symplectic pairs of Python ints ``(x, z)``, bit ``b``
standing for bond ``b``.  A pinned bond adds the single-qubit sigma^z row;
star operators that anticommute with a pin leave the group and only their
products that avoid every pinned bond survive (stars merged along pinned
bonds).  The logical qubit count is ``n - rank`` of the resulting group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import disorder
from .lattice import TorusLattice, build_torus
from .percolation import bond_clusters, dual_bond_clusters


class PinError(ValueError):
    pass


def commute(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return bin((a[0] & b[1]) ^ (a[1] & b[0])).count("1") % 2 == 0


def gf2_rank(rows: list[int]) -> int:
    """Rank of bit-packed rows; eliminates on the highest set bit."""
    pivots: dict[int, int] = {}
    rank = 0
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                r ^= pivots[top]
            else:
                pivots[top] = r
                rank += 1
                break
    return rank


def nullspace_combinations(rows: list[int]) -> list[int]:
    """Basis of subsets (bitmasks over row indices) whose rows XOR to zero."""
    pivots: dict[int, tuple[int, int]] = {}
    out = []
    for i, r in enumerate(rows):
        combo = 1 << i
        while r:
            top = r.bit_length() - 1
            if top in pivots:
                pr, pc = pivots[top]
                r ^= pr
                combo ^= pc
            else:
                pivots[top] = (r, combo)
                break
        if r == 0:
            out.append(combo)
    return out


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    stars: tuple[tuple[int, int], ...]
    plaquettes: tuple[tuple[int, int], ...]
    pins: dict = field(default_factory=dict)  # bond -> +1 / -1
    generators: tuple[tuple[int, int], ...] = ()

    def packed(self) -> list[int]:
        return [x | (z << self.n) for x, z in self.generators]

    @property
    def rank(self) -> int:
        return gf2_rank(self.packed())


def build_toric_stabilizers(lat: TorusLattice) -> StabilizerCode:
    def mask(bonds):
        m = 0
        for b in bonds:
            m |= 1 << int(b)
        return m

    stars = tuple((mask(sb), 0) for sb in lat.star_bonds)
    plaqs = tuple((0, mask(pb)) for pb in lat.plaquettes)
    return StabilizerCode(lat.n_bonds, stars, plaqs, {}, stars + plaqs)


def pin_spins(code: StabilizerCode, pins) -> StabilizerCode:
    """Add sigma^z constraints on ``pins`` (mapping or iterable of (bond, value))."""
    items = list(pins.items()) if isinstance(pins, dict) else [tuple(p) for p in pins]
    merged = dict(code.pins)
    seen: dict[int, int] = {}
    for b, v in items:
        b, v = int(b), int(v)
        if not 0 <= b < code.n:
            raise PinError(f"bond {b} outside the code")
        if v not in (1, -1):
            raise PinError(f"pin value must be +-1, got {v}")
        if seen.get(b, v) != v or merged.get(b, v) != v:
            raise PinError(f"contradictory pins on bond {b}")
        seen[b] = v
        merged[b] = v
    if not merged:
        return StabilizerCode(code.n, code.stars, code.plaquettes, {},
                              code.stars + code.plaquettes)
    pin_mask = 0
    for b in merged:
        pin_mask |= 1 << b
    # star products whose X support avoids every pinned bond
    restricted = [x & pin_mask for x, _ in code.stars]
    combos = nullspace_combinations(restricted)
    surviving = []
    for c in combos:
        x = 0
        for i, (sx, _) in enumerate(code.stars):
            if (c >> i) & 1:
                x ^= sx
        if x:
            surviving.append((x, 0))
    pin_rows = tuple((0, 1 << b) for b in sorted(merged))
    gens = tuple(surviving) + code.plaquettes + pin_rows
    return StabilizerCode(code.n, code.stars, code.plaquettes, merged, gens)


def logical_qubit_count(code: StabilizerCode) -> int:
    return code.n - code.rank


def all_commute(code: StabilizerCode) -> bool:
    g = code.generators
    return all(commute(a, b) for i, a in enumerate(g) for b in g[i + 1:])


PIN_COLUMNS = ["sample", "p", "pinned_fraction", "wraps_dir1", "wraps_dir2", "spans_open",
               "dual_wraps_dir1", "dual_wraps_dir2", "k"]


def pin_sample(lat: TorusLattice, p: float, seed: int, sample: int,
               base: StabilizerCode | None = None) -> dict:
    """One diluted-field realization in the large-h limit: pin every h_i != 0 bond."""
    base = base or build_toric_stabilizers(lat)
    field_ = disorder.sample_diluted(lat, p, 1.0, seed, sample)
    pinned = [int(b) for b in range(lat.n_bonds) if field_.values[b] != 0]
    code = pin_spins(base, {b: 1 for b in pinned})
    star_adj = bond_clusters(lat, pinned)
    plaq_adj = dual_bond_clusters(lat, pinned)
    return {
        "sample": sample,
        "p": p,
        "pinned_fraction": len(pinned) / lat.n_bonds,
        "wraps_dir1": star_adj.wraps_dir1,
        "wraps_dir2": star_adj.wraps_dir2,
        "spans_open": star_adj.spans_open,
        "dual_wraps_dir1": plaq_adj.wraps_dir1,
        "dual_wraps_dir2": plaq_adj.wraps_dir2,
        "k": logical_qubit_count(code),
    }


def pin_scan(L: int, p: float, n_samples: int, seed: int) -> list[dict]:
    lat = build_torus(L)
    base = build_toric_stabilizers(lat)
    return [pin_sample(lat, p, seed, i, base) for i in range(n_samples)]
