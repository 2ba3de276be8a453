import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcglass.lattice import (LatticeError, bipartition, build_torus, levin_wen_regions,
                             plaquette_values, sigma_from_theta, winding_loops)


@pytest.mark.parametrize("L", [2, 3, 5, 8])
def test_counts_and_incidence(L):
    lat = build_torus(L)
    assert lat.n_sites == L * L and lat.n_bonds == 2 * L * L
    assert lat.star_bonds.shape == (L * L, 4) and lat.plaquettes.shape == (L * L, 4)
    # every bond touches two stars and borders two plaquettes
    assert np.all(np.bincount(lat.star_bonds.ravel(), minlength=lat.n_bonds) == 2)
    assert np.all(np.bincount(lat.plaquettes.ravel(), minlength=lat.n_bonds) == 2)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_stars_and_plaquettes_overlap_evenly(L):
    lat = build_torus(L)
    for sb in lat.star_bonds:
        for pb in lat.plaquettes:
            assert np.sum(np.isin(sb, pb)) % 2 == 0


def test_indexing_roundtrip():
    lat = build_torus(5)
    for s in range(lat.n_sites):
        assert lat.site(*lat.coords(s)) == s
    assert lat.is_horizontal(lat.hbond(2, 3)) and not lat.is_horizontal(lat.vbond(2, 3))
    assert tuple(lat.bonds[lat.hbond(4, 1)]) == (lat.site(4, 1), lat.site(0, 1))


def test_bad_size():
    with pytest.raises(LatticeError):
        build_torus(1)


def test_arrays_read_only():
    lat = build_torus(3)
    with pytest.raises(ValueError):
        lat.bonds[0, 0] = 5


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**36 - 1))
def test_dual_map_is_flux_free(L, bits):
    lat = build_torus(L)
    theta = 1 - 2 * ((bits >> np.arange(lat.n_sites)) & 1)
    sigma = sigma_from_theta(lat, theta)
    assert np.all(plaquette_values(lat, sigma) == 1)
    assert np.array_equal(sigma, sigma_from_theta(lat, -theta))


@pytest.mark.parametrize("L", [2, 3, 4])
def test_winding_loops(L):
    lat = build_torus(L)
    loops = winding_loops(lat)
    assert len(set(loops.w1_bonds) & set(loops.flip1_bonds)) == 1
    assert len(set(loops.w2_bonds) & set(loops.flip2_bonds)) == 1
    assert len(set(loops.w1_bonds) & set(loops.flip2_bonds)) % 2 == 0
    for flips in (loops.flip1_bonds, loops.flip2_bonds):
        sigma = np.ones(lat.n_bonds, dtype=int)
        sigma[list(flips)] = -1
        assert np.all(plaquette_values(lat, sigma) == 1)


@pytest.mark.parametrize("L,r,R", [(3, 1, 1), (6, 1, 2), (8, 1, 2), (8, 1, 3), (8, 2, 3)])
def test_region_components(L, r, R):
    regions = levin_wen_regions(build_torus(L), r, R)
    assert [g.n_components for g in regions] == [2, 1, 1, 2]
    a1, a2, a3, a4 = (g.region_bonds for g in regions)
    assert a2 < a1 and a3 < a1 and a4 == a2 & a3


@pytest.mark.parametrize("L,r,R", [(4, 1, 1), (5, 1, 2), (7, 1, 3), (8, 0, 2), (8, 3, 2)])
def test_degenerate_regions_raise(L, r, R):
    with pytest.raises(LatticeError):
        levin_wen_regions(build_torus(L), r, R)


def test_boundary_sizes_l8():
    regions = levin_wen_regions(build_torus(8), 1, 2)
    assert [len(g.boundary_sites) for g in regions] == [20, 20, 20, 20]


def test_bipartition_whole_and_empty():
    lat = build_torus(3)
    assert bipartition(lat, []).boundary_sites == ()
    assert bipartition(lat, range(lat.n_bonds)).boundary_sites == ()
