"""Dense ground states of the deformed toric code, for small tori only.

Amplitudes live on the 2^(2L^2) sigma^z basis states; bond ``b`` is bit
``b`` of the basis index.  A sector ``(i, j)`` state is built from the
reference configuration with the dual loops ``flip1``/``flip2`` flipped
``i``/``j`` times, so the four sectors have disjoint supports and differ in
the sigma^z winding parity along ``w1``/``w2``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .lattice import BipartitionGeometry, TorusLattice, plaquette_values, winding_loops
from .rbim import BudgetError, _coupling_values

MAX_QUBITS = 20
EIG_CLIP = 1e-14


class StateVector:
    def __init__(self, lat: TorusLattice, amplitudes: np.ndarray, sector=(0, 0)):
        self.lat = lat
        self.amplitudes = amplitudes
        self.sector = tuple(sector)

    @property
    def n_qubits(self) -> int:
        return self.lat.n_bonds

    @property
    def normalized(self) -> bool:
        return abs(float(np.dot(self.amplitudes, self.amplitudes)) - 1.0) < 1e-12

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.amplitudes)

    def overlap(self, other: "StateVector") -> float:
        return float(np.dot(self.amplitudes, other.amplitudes))


def _theta_table(n_sites: int) -> np.ndarray:
    idx = np.arange(1 << n_sites, dtype=np.int64)
    return 1 - 2 * ((idx[:, None] >> np.arange(n_sites)) & 1)


def config_bits(sigma: np.ndarray) -> np.ndarray:
    """Basis index of sigma^z configurations (rows of +-1)."""
    bits = (sigma < 0).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(sigma.shape[-1], dtype=np.int64))


def build_ground_state(lat: TorusLattice, couplings, sector=(0, 0)) -> StateVector:
    """Boltzmann-weighted superposition of the sector's flux-free configurations.

    Each configuration sigma = g(theta) * tau, with tau the sector's dual-loop
    flips, carries amplitude ``exp(sum_b beta_b sigma_b / 2)``; the theta and
    -theta images coincide and are added before normalising.
    """
    n = lat.n_bonds
    if n > MAX_QUBITS:
        raise BudgetError(f"{n} qubits exceed the dense state budget of {MAX_QUBITS}")
    i, j = sector
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError(f"sector must be in {{0,1}}^2, got {sector}")
    beta = _coupling_values(couplings)
    loops = winding_loops(lat)
    tau = np.ones(n, dtype=np.int64)
    if i:
        tau[list(loops.flip1_bonds)] *= -1
    if j:
        tau[list(loops.flip2_bonds)] *= -1

    theta = _theta_table(lat.n_sites)
    sigma = theta[:, lat.bonds[:, 0]] * theta[:, lat.bonds[:, 1]] * tau
    assert np.all(plaquette_values(lat, sigma) == 1)
    log_w = 0.5 * (sigma @ beta)
    log_w -= log_w.max()
    amp = np.zeros(1 << n)
    np.add.at(amp, config_bits(sigma), np.exp(log_w))
    amp /= math.sqrt(float(np.dot(amp, amp)))
    return StateVector(lat, amp, (i, j))


def sector_states(lat: TorusLattice, couplings) -> list[StateVector]:
    return [build_ground_state(lat, couplings, s) for s in itertools.product((0, 1), repeat=2)]


def _split(state: StateVector, region) -> np.ndarray:
    """Amplitudes as a (2^|A|, 2^|B|) matrix."""
    n = state.n_qubits
    region = sorted(set(int(b) for b in region))
    rest = [b for b in range(n) if b not in set(region)]
    # numpy axis k of the reshaped tensor is bit n-1-k
    tensor = state.amplitudes.reshape((2,) * n)
    order = [n - 1 - b for b in region] + [n - 1 - b for b in rest]
    return tensor.transpose(order).reshape(1 << len(region), 1 << len(rest))


def reduced_density_matrix(state: StateVector, region) -> np.ndarray:
    m = _split(state, region)
    return m @ m.T


def schmidt_probabilities(state: StateVector, region) -> np.ndarray:
    m = _split(state, region)
    small = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    p = np.linalg.eigvalsh(small)
    p = np.where(p > EIG_CLIP, p, 0.0)
    return p / p.sum()


def entanglement_entropy(state: StateVector, region_bonds) -> float:
    """von Neumann entropy in bits of the reduced state on ``region_bonds``."""
    region = set(int(b) for b in region_bonds)
    if not region or len(region) == state.n_qubits:
        return 0.0
    p = schmidt_probabilities(state, region)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def topo_entropy_direct(state: StateVector, regions: list[BipartitionGeometry]) -> float:
    s = [entanglement_entropy(state, g.region_bonds) for g in regions]
    return -s[0] + s[1] + s[2] - s[3]


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def indistinguishability_gap(states: list[StateVector], region_bonds) -> float:
    """Largest trace distance between the sectors' reduced states on a region."""
    rhos = [reduced_density_matrix(s, region_bonds) for s in states]
    return max((trace_distance(a, b) for a, b in itertools.combinations(rhos, 2)), default=0.0)
