import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcglass import disorder, rbim
from tcglass.eab import gauge_transform
from tcglass.lattice import build_torus, levin_wen_regions
from tcglass.stabilizer import gf2_rank

from oracles import brute_log_z, kaufman_log_z, spin_table


@pytest.mark.parametrize("L", [2, 3, 4])
@pytest.mark.parametrize("K", [0.2, 0.4406868, 1.5])
def test_clean_log_z_matches_kaufman(L, K):
    lat = build_torus(L)
    beta = np.full(lat.n_bonds, K)
    ref = kaufman_log_z(L, K)
    assert rbim.log_partition_brute(lat, beta).log_z == pytest.approx(ref, rel=1e-12)
    assert rbim.log_partition_transfer(lat, beta).log_z == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("L", [6, 8, 10, pytest.param(12, marks=pytest.mark.slow)])
def test_transfer_matches_kaufman_large(L):
    lat = build_torus(L)
    for K in (0.3, 0.4406868, 0.8):
        lz = rbim.log_partition_transfer(lat, np.full(lat.n_bonds, K)).log_z
        assert lz == pytest.approx(kaufman_log_z(L, K), rel=1e-11)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 1.0), st.floats(0.05, 2.0))
def test_transfer_matches_brute_random(seed, p, beta):
    lat = build_torus(4)
    c = disorder.sample_bipartite(lat, p, beta, seed)
    rng = np.random.default_rng(seed)
    sites = rng.choice(lat.n_sites, size=rng.integers(0, 6), replace=False)
    bc = rbim.BoundarySpec.from_arrays(sites, rng.choice([-1, 1], len(sites)))
    ref = brute_log_z(lat, c.values, bc.fixed)
    assert rbim.log_partition_transfer(lat, c, bc).log_z == pytest.approx(ref, rel=1e-12, abs=1e-12)
    assert rbim.log_partition_brute(lat, c, bc).log_z == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_gauge_covariance_of_log_z():
    lat = build_torus(4)
    c = disorder.sample_bipartite(lat, 0.5, 0.9, 4)
    flip = [0, 5, 6, 11]
    g = gauge_transform(lat, c, flip)
    bc = rbim.BoundarySpec({1: 1, 5: -1})
    bc_g = rbim.BoundarySpec({1: 1, 5: 1})  # site 5 is flipped by the gauge
    assert rbim.log_partition(lat, g, bc_g).log_z == pytest.approx(
        rbim.log_partition(lat, c, bc).log_z, rel=1e-13)


def test_partition_budget_and_boundary_errors():
    lat = build_torus(rbim.TRANSFER_MAX_L + 1)
    with pytest.raises(rbim.BudgetError):
        rbim.log_partition_transfer(lat, np.zeros(lat.n_bonds))
    small = build_torus(3)
    with pytest.raises(rbim.BoundaryError):
        rbim.log_partition(small, np.zeros(small.n_bonds), rbim.BoundarySpec({99: 1}))
    with pytest.raises(rbim.BoundaryError):
        rbim.log_partition(small, np.zeros(small.n_bonds), rbim.BoundarySpec({0: 2}))


@pytest.fixture(scope="module")
def l3():
    lat = build_torus(3)
    return lat, levin_wen_regions(lat, 1, 1)


@pytest.mark.parametrize("p", [0.0, 0.5])
def test_infinite_temperature_gives_two_bits(l3, p):
    lat, regions = l3
    res = rbim.topo_entropy_exact(lat, np.zeros(lat.n_bonds), regions)
    assert abs(res.s_topo - 2.0) < 1e-12


def test_low_temperature_vanishes(l3):
    lat, regions = l3
    res = rbim.topo_entropy_exact(lat, disorder.uniform(lat, 50.0), regions)
    assert abs(res.s_topo) < 1e-12


def test_region_entropy_at_zero_beta_is_rank_formula(l3):
    lat, regions = l3
    for g in regions:
        n = len(g.boundary_sites)
        # boundary configurations modulo the component flips; global flip is one of them
        pos = {site: i for i, site in enumerate(g.boundary_sites)}
        rank = gf2_rank([sum(1 << pos[x] for x in gen) for gen in g.flip_generators])
        s = rbim.region_entropy(lat, np.zeros(lat.n_bonds), g)
        assert s == pytest.approx(n - rank, abs=1e-12)


def test_ratio_average_equals_region_sum(l3):
    lat, regions = l3
    c = disorder.sample_bipartite(lat, 0.5, 0.4, 3)
    theta = spin_table(lat.n_sites)
    sigma = theta[:, lat.bonds[:, 0]] * theta[:, lat.bonds[:, 1]]
    w = np.exp(sigma @ c.values)
    w /= w.sum()
    avg = sum(wi * rbim.log2_ratio(lat, c, regions, th) for wi, th in zip(w, theta))
    exact = rbim.topo_entropy_exact(lat, c, regions).s_topo
    assert avg == pytest.approx(exact, abs=1e-10)


def test_ratio_twist_choice_irrelevant(l3):
    lat, regions = l3
    c = disorder.sample_bipartite(lat, 0.5, 0.7, 8)
    theta = np.array([1, -1, 1, 1, -1, -1, 1, 1, -1])
    a = rbim.log2_ratio(lat, c, regions, theta, twist=("inner", "left"))
    b = rbim.log2_ratio(lat, c, regions, theta, twist=("outer", "right"))
    assert a == pytest.approx(b, abs=1e-12)


def test_topo_entropy_gauge_invariant(l3):
    lat, regions = l3
    c = disorder.sample_bipartite(lat, 0.5, 0.6, 2)
    g = gauge_transform(lat, c, [0, 4, 7])
    assert rbim.topo_entropy_exact(lat, g, regions).s_topo == pytest.approx(
        rbim.topo_entropy_exact(lat, c, regions).s_topo, abs=1e-12)


def test_enumerate_budget():
    lat = build_torus(8)
    regions = levin_wen_regions(lat, 1, 2)
    with pytest.raises(rbim.BudgetError):
        rbim.topo_entropy_exact(lat, np.zeros(lat.n_bonds), regions, budget=1 << 10)


def test_sampled_route_agrees_with_enumeration(l3):
    lat, regions = l3
    c = disorder.uniform(lat, 0.3)
    exact = rbim.topo_entropy_exact(lat, c, regions).s_topo
    mc = rbim.topo_entropy_exact(lat, c, regions, sampler="boltzmann_mc", seed=1,
                                 n_sweeps=2000, n_burn=200)
    assert abs(mc.s_topo - exact) < 4 * mc.stderr + 1e-3
    assert mc.r_hat < 1.1


def test_gelman_rubin_flags_disagreeing_chains():
    chains = np.vstack([np.zeros(100) + np.random.default_rng(0).normal(0, 0.1, 100),
                        np.ones(100) + np.random.default_rng(1).normal(0, 0.1, 100)])
    assert rbim.gelman_rubin(chains) > 1.5
