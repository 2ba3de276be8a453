import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tcglass.lattice import build_torus, winding_loops
from tcglass.percolation import bond_clusters, dual_bond_clusters


def test_empty():
    rep = bond_clusters(build_torus(4), [])
    assert rep.clusters == [] and not rep.wraps_any and not rep.spans_open


def test_straight_loops():
    lat = build_torus(5)
    loops = winding_loops(lat)
    v = bond_clusters(lat, loops.w1_bonds)
    assert v.wraps_dir1 and not v.wraps_dir2 and not v.spans_open
    h = bond_clusters(lat, loops.w2_bonds)
    assert h.wraps_dir2 and not h.wraps_dir1 and h.spans_open
    assert h.largest_fraction == 1 / 5


def test_open_path_not_wrapping():
    lat = build_torus(5)
    rep = bond_clusters(lat, [lat.hbond(x, 2) for x in range(4)])
    assert not rep.wraps_any and rep.spans_open


def test_contractible_loop():
    lat = build_torus(4)
    rep = bond_clusters(lat, list(lat.plaquettes[5]))
    assert not rep.wraps_any and len(rep.clusters) == 1


def test_diagonal_winding():
    lat = build_torus(3)
    bonds = []
    for i in range(3):
        bonds += [lat.hbond(i, i), lat.vbond((i + 1) % 3, i)]
    rep = bond_clusters(lat, bonds)
    assert rep.wraps_dir1 and rep.wraps_dir2


def test_dual_clusters():
    lat = build_torus(4)
    loops = winding_loops(lat)
    # a row of vertical bonds is a horizontal chain of faces
    rep = dual_bond_clusters(lat, loops.flip1_bonds)
    assert rep.wraps_dir2 and not rep.wraps_dir1
    assert not dual_bond_clusters(lat, loops.w1_bonds).wraps_dir1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_full_and_wrap_consistency(L, seed, p):
    lat = build_torus(L)
    bonds = np.flatnonzero(np.random.default_rng(seed).random(lat.n_bonds) < p)
    rep = bond_clusters(lat, bonds)
    assert sum(len(c) for c in rep.clusters) <= lat.n_sites
    # the same bonds in shuffled order give identical flags
    rev = bond_clusters(lat, bonds[::-1])
    assert (rep.wraps_dir1, rep.wraps_dir2, rep.spans_open) == (rev.wraps_dir1, rev.wraps_dir2,
                                                                rev.spans_open)
    if len(bonds) == lat.n_bonds:
        assert rep.wraps_dir1 and rep.wraps_dir2
