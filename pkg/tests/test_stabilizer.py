import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcglass import disorder
from tcglass.lattice import build_torus, sigma_from_theta, winding_loops
from tcglass.stabilizer import (PinError, all_commute, build_toric_stabilizers, commute, gf2_rank,
                                logical_qubit_count, nullspace_combinations, pin_sample, pin_spins)


def test_gf2_rank_basics():
    assert gf2_rank([]) == 0
    assert gf2_rank([0b101, 0b011, 0b110]) == 2
    assert gf2_rank([1 << 70, 1 << 70 | 1, 1]) == 2


def test_nullspace_combinations():
    rows = [0b101, 0b011, 0b110, 0b000]
    combos = nullspace_combinations(rows)
    assert len(combos) == 2
    for c in combos:
        acc = 0
        for i, r in enumerate(rows):
            if (c >> i) & 1:
                acc ^= r
        assert acc == 0


def test_commutation():
    assert commute((0b1, 0), (0, 0b10))
    assert not commute((0b1, 0), (0, 0b1))
    assert commute((0b11, 0), (0, 0b11))


@pytest.mark.parametrize("L", [2, 3, 4, 6])
def test_clean_code_has_two_logical_qubits(L):
    code = build_toric_stabilizers(build_torus(L))
    assert code.rank == 2 * L * L - 2
    assert logical_qubit_count(code) == 2
    assert all_commute(code)


def test_l2_rank():
    assert build_toric_stabilizers(build_torus(2)).rank == 6


def test_single_pin_keeps_degeneracy():
    lat = build_torus(5)
    code = pin_spins(build_toric_stabilizers(lat), {7: 1})
    assert logical_qubit_count(code) == 2
    assert all_commute(code)


def test_winding_column_removes_logical():
    lat = build_torus(5)
    code = pin_spins(build_toric_stabilizers(lat), {b: 1 for b in winding_loops(lat).w1_bonds})
    assert logical_qubit_count(code) < 2


def test_full_pinning():
    lat = build_torus(3)
    theta = np.array([1, -1, 1, 1, 1, -1, -1, 1, 1])
    sigma = sigma_from_theta(lat, theta)
    code = pin_spins(build_toric_stabilizers(lat), list(zip(range(lat.n_bonds), sigma)))
    assert logical_qubit_count(code) == 0


def test_empty_pins_unchanged():
    base = build_toric_stabilizers(build_torus(3))
    code = pin_spins(base, {})
    assert code.generators == base.generators


def test_invalid_pins():
    base = build_toric_stabilizers(build_torus(3))
    with pytest.raises(PinError):
        pin_spins(base, [(2, 1), (2, -1)])
    with pytest.raises(PinError):
        pin_spins(pin_spins(base, {2: 1}), {2: -1})
    with pytest.raises(PinError):
        pin_spins(base, {99: 1})
    with pytest.raises(PinError):
        pin_spins(base, {1: 0})


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.lists(st.integers(0, 49), max_size=30), st.integers(0, 49))
def test_pinning_is_monotone(L, bonds, extra):
    lat = build_torus(L)
    bonds = {b % lat.n_bonds for b in bonds}
    base = build_toric_stabilizers(lat)
    a = pin_spins(base, {b: 1 for b in bonds})
    b = pin_spins(a, {extra % lat.n_bonds: 1})
    assert b.rank >= a.rank
    assert logical_qubit_count(b) <= logical_qubit_count(a)
    assert all_commute(b)


@pytest.mark.parametrize("L", [3, 4, 6])
def test_no_wrap_means_two_qubits(L):
    lat = build_torus(L)
    base = build_toric_stabilizers(lat)
    seed = disorder.derive_seed(5, "pin-test", L)
    for p in (0.2, 0.4, 0.5, 0.7):
        for i in range(60):
            row = pin_sample(lat, p, seed, i, base)
            if not (row["wraps_dir1"] or row["wraps_dir2"]):
                assert row["k"] == 2
