import itertools

import numpy as np
import pytest

from tcglass import disorder, rbim, statevec
from tcglass.lattice import build_torus, levin_wen_regions, plaquette_values, winding_loops


@pytest.fixture(scope="module")
def lat3():
    return build_torus(3)


def _sigma_of_index(idx: np.ndarray, n: int) -> np.ndarray:
    return 1 - 2 * ((idx[:, None] >> np.arange(n)) & 1)


def test_state_is_normalized_and_flux_free(lat3):
    c = disorder.sample_bipartite(lat3, 0.5, 0.8, 1)
    for st in statevec.sector_states(lat3, c):
        assert st.normalized
        sigma = _sigma_of_index(st.support(), lat3.n_bonds)
        assert np.all(plaquette_values(lat3, sigma) == 1)


def test_star_eigenstate_at_zero_beta(lat3):
    st = statevec.build_ground_state(lat3, np.zeros(lat3.n_bonds))
    idx = np.arange(1 << lat3.n_bonds)
    for sb in lat3.star_bonds:
        mask = sum(1 << int(b) for b in sb)
        assert np.allclose(st.amplitudes[idx ^ mask], st.amplitudes)


def test_amplitudes_follow_boltzmann_weights():
    lat = build_torus(2)
    beta = disorder.sample_bipartite(lat, 0.5, 0.7, 3).values
    st = statevec.build_ground_state(lat, beta)
    sup = st.support()
    sigma = _sigma_of_index(sup, lat.n_bonds)
    ratio = st.amplitudes[sup] / np.exp(0.5 * sigma @ beta)
    assert np.allclose(ratio, ratio[0])


def test_sectors_orthogonal_with_distinct_windings(lat3):
    states = statevec.sector_states(lat3, disorder.uniform(lat3, 0.4))
    loops = winding_loops(lat3)
    for a, b in itertools.combinations(states, 2):
        assert abs(a.overlap(b)) < 1e-14
    for st in states:
        sigma = _sigma_of_index(st.support(), lat3.n_bonds)
        w1 = np.prod(sigma[:, list(loops.w1_bonds)], axis=1)
        w2 = np.prod(sigma[:, list(loops.w2_bonds)], axis=1)
        assert len(set(w1)) == 1 and len(set(w2)) == 1
        assert (w1[0] == -1) == bool(st.sector[0]) and (w2[0] == -1) == bool(st.sector[1])


def test_entropy_matches_region_formula(lat3):
    c = disorder.sample_bipartite(lat3, 0.5, 0.45, 6)
    st = statevec.build_ground_state(lat3, c)
    for g in levin_wen_regions(lat3, 1, 1):
        direct = statevec.entanglement_entropy(st, g.region_bonds)
        assert direct == pytest.approx(rbim.region_entropy(lat3, c, g), abs=1e-9)


def test_entropy_edge_cases(lat3):
    st = statevec.build_ground_state(lat3, np.zeros(lat3.n_bonds))
    assert statevec.entanglement_entropy(st, []) == 0.0
    assert statevec.entanglement_entropy(st, range(lat3.n_bonds)) == 0.0
    region = list(range(5))
    rest = list(range(5, lat3.n_bonds))
    assert statevec.entanglement_entropy(st, region) == pytest.approx(
        statevec.entanglement_entropy(st, rest), abs=1e-12)


def test_local_region_cannot_tell_sectors(lat3):
    states = statevec.sector_states(lat3, np.zeros(lat3.n_bonds))
    assert statevec.indistinguishability_gap(states, [0, 1, 3]) < 1e-12
    # a region containing a whole w1 loop sees the winding parity
    loops = winding_loops(lat3)
    assert statevec.indistinguishability_gap(states, loops.w1_bonds) > 0.5


def test_qubit_budget():
    with pytest.raises(rbim.BudgetError):
        statevec.build_ground_state(build_torus(4), np.zeros(32))


def test_bad_sector(lat3):
    with pytest.raises(ValueError):
        statevec.build_ground_state(lat3, np.zeros(lat3.n_bonds), (2, 0))
