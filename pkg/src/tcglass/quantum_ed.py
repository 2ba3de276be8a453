"""Exact low spectra of the random-field toric code and its transverse-field dual.

Both Hamiltonians have the form ``diag(c) - lam * sum_m X_m`` where every
off-diagonal term flips a fixed bitmask ``m`` of the basis index: single
sites for the transverse-field RBIM, stars for the toric code.  Small
problems are diagonalised densely; larger ones go to ``eigsh`` through a
matrix-free operator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .disorder import Realization
from .lattice import TorusLattice, winding_loops
from .rbim import BudgetError, ConvergenceError

TRBIM_MAX_SITES = 20
TORIC_MAX_QUBITS = 20
CLASSICAL_MAX_BONDS = 26
DENSE_MAX_DIM = 1 << 12
DEGENERACY_RTOL = 1e-8
RESIDUAL_RTOL = 1e-9
MODELS = ("trbim", "toric_field", "toric_clean")


class LeakageError(RuntimeError):
    pass


def _values(field_, n: int) -> np.ndarray:
    if field_ is None:
        return np.zeros(n)
    v = np.asarray(field_.values if isinstance(field_, Realization) else field_, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected {n} field values, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class HamiltonianSpec:
    """``field`` holds h_i per bond; for trbim it is read as h_ss' on the bond's two sites."""

    model: str
    lat: TorusLattice
    lam_a: float = 1.0
    lam_b: float = 0.0
    field: object = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.lam_a < 0 or self.lam_b < 0:
            raise ValueError("lam_a and lam_b must be non-negative")
        _values(self.field, self.lat.n_bonds)

    @property
    def h(self) -> np.ndarray:
        if self.model == "toric_clean":
            return np.zeros(self.lat.n_bonds)
        return _values(self.field, self.lat.n_bonds)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns
    residuals: np.ndarray
    scale: float
    method: str
    groups: list = field(default_factory=list)

    @property
    def degeneracies(self) -> list[int]:
        return [len(g) for g in self.groups]

    @property
    def gap(self) -> float:
        """Spacing between the first two distinct levels found."""
        if len(self.groups) < 2:
            return float("nan")
        return float(self.eigenvalues[self.groups[1][0]] - self.eigenvalues[self.groups[0][0]])

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "degeneracies": self.degeneracies,
            "max_residual": float(self.residuals.max()) if len(self.residuals) else 0.0,
            "method": self.method,
        }


def group_levels(eigenvalues, scale: float, rtol: float = DEGENERACY_RTOL) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, e in enumerate(eigenvalues):
        if groups and abs(e - eigenvalues[groups[-1][-1]]) <= rtol * max(scale, 1.0):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


class _FlipOperator:
    """``diag(c) - lam * sum_m (flip by m)`` on 2^nbits basis states."""

    def __init__(self, diag: np.ndarray, masks: list[int], lam: float):
        self.diag = diag
        self.masks = [int(m) for m in masks]
        self.lam = float(lam)
        self.dim = len(diag)
        idx = np.arange(self.dim, dtype=np.int64)
        self.targets = [idx ^ m for m in self.masks]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v if v.ndim == 1 else self.diag[:, None] * v
        for t in self.targets:
            out = out - self.lam * v[t]
        return out

    def dense(self) -> np.ndarray:
        h = np.diag(self.diag).astype(float)
        rows = np.arange(self.dim)
        for t in self.targets:
            h[rows, t] -= self.lam
        return h

    @property
    def scale(self) -> float:
        return float(np.abs(self.diag).max() + self.lam * len(self.masks))


def _solve(op: _FlipOperator, k: int, method: str = "auto") -> Spectrum:
    k = min(k, op.dim)
    if method == "auto":
        method = "dense" if op.dim <= DENSE_MAX_DIM or k >= op.dim - 1 else "lanczos"
    if method == "dense":
        w, v = scipy.linalg.eigh(op.dense(), subset_by_index=[0, k - 1])
    elif method == "lanczos":
        v0 = np.random.default_rng(0).standard_normal(op.dim)
        lin = LinearOperator((op.dim, op.dim), matvec=op.matvec, dtype=float)
        # padding keeps Lanczos from dropping copies of degenerate levels
        k_pad = min(op.dim - 2, max(2 * k, k + 6))
        try:
            w, v = eigsh(lin, k=k_pad, which="SA", v0=v0, tol=1e-12, maxiter=20 * op.dim)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"eigsh did not converge; {len(exc.eigenvalues)} of {k} "
                                   "eigenpairs found") from exc
        order = np.argsort(w)[:k]
        w, v = w[order], v[:, order]
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    res = np.linalg.norm(op.matvec(v) - v * w, axis=0)
    scale = op.scale
    if np.any(res > RESIDUAL_RTOL * max(scale, 1.0)):
        raise ConvergenceError(f"eigenpair residuals up to {res.max():.3e} exceed "
                               f"{RESIDUAL_RTOL:g} x spectral scale {scale:.3g}")
    return Spectrum(w, v, res, scale, method, group_levels(w, scale))


def _bit_signs(n_bits: int) -> np.ndarray:
    """(2^n, n) table of +-1 with bit b set meaning -1."""
    idx = np.arange(1 << n_bits, dtype=np.int64)
    return (1 - 2 * ((idx[:, None] >> np.arange(n_bits)) & 1)).astype(np.int8)


def trbim_operator(lat: TorusLattice, lam_a: float, couplings) -> _FlipOperator:
    n = lat.n_sites
    if n > TRBIM_MAX_SITES:
        raise BudgetError(f"{n} sites exceed the trbim budget of {TRBIM_MAX_SITES}")
    h = _values(couplings, lat.n_bonds)
    theta = _bit_signs(n)
    diag = np.zeros(1 << n)
    for b, (s, t) in enumerate(lat.bonds):
        if h[b]:
            diag -= h[b] * (theta[:, s] * theta[:, t])
    return _FlipOperator(diag, [1 << s for s in range(n)], lam_a)


def toric_operator(lat: TorusLattice, lam_a: float, lam_b: float, h) -> _FlipOperator:
    n = lat.n_bonds
    if n > TORIC_MAX_QUBITS:
        raise BudgetError(f"{n} qubits exceed the toric budget of {TORIC_MAX_QUBITS}")
    h = _values(h, n)
    sigma = _bit_signs(n)
    diag = -(sigma @ h)
    if lam_b:
        diag -= lam_b * plaquette_products(lat, sigma).sum(axis=1)
    masks = [sum(1 << int(b) for b in sb) for sb in lat.star_bonds]
    return _FlipOperator(diag, masks, lam_a)


def plaquette_products(lat: TorusLattice, sigma: np.ndarray) -> np.ndarray:
    return np.prod(sigma[:, lat.plaquettes], axis=2, dtype=np.int64)


def build_operator(spec: HamiltonianSpec) -> _FlipOperator:
    if spec.model == "trbim":
        return trbim_operator(spec.lat, spec.lam_a, spec.h)
    return toric_operator(spec.lat, spec.lam_a, spec.lam_b, spec.h)


def low_spectrum(spec: HamiltonianSpec, k: int, method: str = "auto") -> Spectrum:
    if k < 1:
        raise ValueError("k must be at least 1")
    return _solve(build_operator(spec), k, method)


def _even_trbim_levels(lat: TorusLattice, lam_a: float, couplings) -> np.ndarray:
    """Full spectrum of the transverse-field RBIM restricted to prod(theta^x) = +1.

    Basis: |c> + |~c> for the 2^(N-1) configurations with site 0 up.
    """
    op = trbim_operator(lat, lam_a, couplings)
    n = lat.n_sites
    half = 1 << (n - 1)
    reps = np.arange(half, dtype=np.int64) << 1
    full = (1 << n) - 1
    h = np.diag(op.diag[reps])
    rows = np.arange(half)
    for m in op.masks:
        t = reps ^ m
        t = np.where(t & 1, t ^ full, t) >> 1
        np.add.at(h, (rows, t), -op.lam)
    return np.linalg.eigvalsh(h)


def sector_weights(lat: TorusLattice, vectors: np.ndarray) -> np.ndarray:
    """Weight of each toric eigenvector inside the flux-free subspace."""
    sigma = _bit_signs(lat.n_bonds)
    free = np.all(plaquette_products(lat, sigma) == 1, axis=1)
    return np.sum(vectors[free] ** 2, axis=0)


def twisted_dual_levels(lat: TorusLattice, lam_a: float, h) -> np.ndarray:
    """Union over the four winding sectors of parity-even dual spectra, sorted."""
    h = _values(h, lat.n_bonds)
    loops = winding_loops(lat)
    levels = []
    for i, j in itertools.product((0, 1), repeat=2):
        tau = np.ones(lat.n_bonds)
        if i:
            tau[list(loops.flip1_bonds)] *= -1
        if j:
            tau[list(loops.flip2_bonds)] *= -1
        levels.append(_even_trbim_levels(lat, lam_a, h * tau))
    return np.sort(np.concatenate(levels))


def verify_dual_mapping(lat: TorusLattice, lam_a: float, lam_b, h, k: int = 4,
                        leakage_threshold: float = 1e-2, method: str = "auto") -> dict:
    """Compare the lowest toric levels, shifted by lam_b L^2, with the dual spectrum.

    ``lam_b`` may be a single value or a ladder; for a ladder the log-log
    slope of the deviation against lam_b is reported as well.  Since every
    B_p commutes with the field term, the flux-free block is the dual model
    exactly and the deviation drops to rounding level once the lowest k
    levels are flux-free.
    """
    ladder = [float(lam_b)] if np.isscalar(lam_b) else [float(x) for x in lam_b]
    ref = twisted_dual_levels(lat, lam_a, h)[:k]
    points = []
    for lb in ladder:
        spec = low_spectrum(HamiltonianSpec("toric_field", lat, lam_a, lb, h), k, method)
        shifted = spec.eigenvalues + lb * lat.n_sites
        dev = np.abs(shifted - ref) / np.maximum(np.abs(ref), 1e-12)
        weights = sector_weights(lat, spec.vectors)
        leak = float(1.0 - weights.min())
        points.append({"lam_b": lb, "toric_shifted": [float(x) for x in shifted],
                       "max_rel_deviation": float(dev.max()), "leakage": leak})
    last = points[-1]
    # flux sectors are conserved, so leakage only means something once lam_b dominates
    dominant = last["lam_b"] >= 10 * max(float(np.abs(_values(h, lat.n_bonds)).max()), lam_a)
    if dominant and last["leakage"] > leakage_threshold:
        raise LeakageError(f"flux-sector leakage {last['leakage']:.3e} at lam_b={last['lam_b']} "
                           f"exceeds {leakage_threshold:g}")
    report = {"dual_levels": [float(x) for x in ref], "points": points,
              "max_rel_deviation": last["max_rel_deviation"], "exponent": None}
    devs = np.array([p["max_rel_deviation"] for p in points])
    if len(points) >= 2 and np.all(devs > 0):
        slope = np.polyfit(np.log(ladder), np.log(devs), 1)[0]
        report["exponent"] = float(slope)
    return report


@dataclass(frozen=True)
class ClassicalGround:
    sigma: np.ndarray
    energy: float
    all_plaquettes_positive: bool
    negative_plaquettes: int


def _classical_table(lat: TorusLattice, h: np.ndarray):
    n = lat.n_bonds
    if n > CLASSICAL_MAX_BONDS:
        raise BudgetError(f"{n} bonds exceed the exhaustive budget of {CLASSICAL_MAX_BONDS}")
    field_e = np.zeros(1 << n)
    n_neg = np.zeros(1 << n, dtype=np.int64)
    chunk = 1 << min(n, 16)
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        sig = (1 - 2 * ((idx[:, None] >> np.arange(n)) & 1)).astype(np.int8)
        field_e[start:start + chunk] = -(sig @ h)
        n_neg[start:start + chunk] = np.count_nonzero(plaquette_products(lat, sig) < 0, axis=1)
    return field_e, n_neg


def classical_field_ground(lat: TorusLattice, lam_b: float, h) -> ClassicalGround:
    """Exact minimiser of -lam_b sum B_p - sum h_i sigma_i at lam_a = 0.

    Ties go to fewer negative plaquettes (when lam_b > 0), then to the
    lowest basis index, so spins without a field stay +1.
    """
    h = _values(h, lat.n_bonds)
    field_e, n_neg = _classical_table(lat, h)
    energy = -lam_b * (lat.n_sites - 2 * n_neg) + field_e
    e0 = energy.min()
    tol = 1e-12 * max(1.0, float(np.abs(h).sum()) + lam_b * lat.n_sites)
    cand = np.flatnonzero(energy <= e0 + tol)
    if lam_b > 0:
        cand = cand[n_neg[cand] == n_neg[cand].min()]
    best = int(cand[0])
    sigma = 1 - 2 * ((best >> np.arange(lat.n_bonds)) & 1)
    return ClassicalGround(sigma, float(energy[best]), bool(n_neg[best] == 0), int(n_neg[best]))


def field_crossover(lat: TorusLattice, h) -> dict:
    """Exact lam_b above which the flux-free configuration is the classical ground state.

    With G(n) the best field energy at n negative plaquettes, the flux-free
    sector wins for lam_b >= max_n (G(0) - G(n)) / 2n.  The field-aligned
    estimate hbar / (2 eta) is returned alongside for comparison.
    """
    h = _values(h, lat.n_bonds)
    field_e, n_neg = _classical_table(lat, h)
    g0 = field_e[n_neg == 0].min()
    crossing = 0.0
    for n in np.unique(n_neg):
        if n:
            crossing = max(crossing, float((g0 - field_e[n_neg == n].min()) / (2 * n)))
    aligned = np.where(h < 0, -1, 1)[None, :]
    eta = float(np.mean(plaquette_products(lat, aligned) < 0))
    hbar = float(np.mean(np.abs(h)))
    return {"lam_b_star": crossing, "hbar": hbar, "eta": eta,
            "estimate": hbar / (2 * eta) if eta else float("inf")}


@dataclass(frozen=True)
class OrderParameter:
    q: float
    multiplet_size: int
    maximized: bool  # True when q was maximised over a degenerate multiplet


def _q_of(v: np.ndarray, zdiag: np.ndarray) -> float:
    v = v / np.linalg.norm(v)
    m = (v * v) @ zdiag
    return float(np.mean(m ** 2))


def ea_order_parameter(spectrum: Spectrum, lat: TorusLattice) -> OrderParameter:
    """q = (1/N) sum_s <theta^z_s>^2 on the ground level of a trbim spectrum.

    For a degenerate ground level q is maximised over real unit vectors in
    the multiplet, starting from the most polarised basis candidates.
    """
    n = lat.n_sites
    zdiag = _bit_signs(n).astype(float)
    if spectrum.vectors.shape[0] != 1 << n:
        raise ValueError("spectrum does not belong to a trbim Hamiltonian on this lattice")
    ground = spectrum.groups[0]
    V = spectrum.vectors[:, ground]
    if len(ground) == 1:
        return OrderParameter(_q_of(V[:, 0], zdiag), 1, False)
    # candidates: multiplet basis and eigenvectors of projected theta^z operators
    cands = [np.eye(len(ground))[i] for i in range(len(ground))]
    for s in range(n):
        M = V.T @ (zdiag[:, s:s + 1] * V)
        cands.extend(np.linalg.eigh(M)[1].T)

    def neg_q(c):
        return -_q_of(V @ c, zdiag)

    start = max(cands, key=lambda c: -neg_q(c))
    res = scipy.optimize.minimize(neg_q, start, method="BFGS")
    q = max(-res.fun, -neg_q(start))
    return OrderParameter(float(q), len(ground), True)


def star_term_levels(h: float) -> np.ndarray:
    """Eigenvalues of exp(-h sum_{i in star} sigma^z_i) on four aligned spins."""
    sigma = _bit_signs(4).astype(float)
    op = scipy.linalg.expm(np.diag(-h * sigma.sum(axis=1)))
    return np.linalg.eigvalsh(op)


def single_star_gap(h: float) -> tuple[float, float, float]:
    """Gaps of the exponential star term to the levels e^{-2h}, e^{2h} and e^{4h}.

    The level at 1 (two spins against the field) is not part of the triple;
    ``star_term_levels`` exposes it.
    """
    if h < 0:
        raise ValueError("h must be non-negative")
    levels = star_term_levels(h)
    distinct = []
    for e in levels:
        if not distinct or abs(e - distinct[-1]) > 1e-12 * max(1.0, abs(e)):
            distinct.append(float(e))
    if len(distinct) == 1:
        return (0.0, 0.0, 0.0)
    e0 = distinct[0]
    # distinct levels: e^{-4h}, e^{-2h}, 1, e^{2h}, e^{4h}
    return (distinct[1] - e0, distinct[3] - e0, distinct[4] - e0)


def linear_field_gap(h: float) -> float:
    sigma = _bit_signs(4).astype(float)
    levels = np.unique(np.round(-h * sigma.sum(axis=1), 12))
    return float(levels[1] - levels[0]) if len(levels) > 1 else 0.0


def q_reference(lat: TorusLattice, lam_a: float, couplings) -> float:
    """q from a full dense diagonalisation, used to cross-check the solver path."""
    op = trbim_operator(lat, lam_a, couplings)
    w, v = np.linalg.eigh(op.dense())
    spec = Spectrum(w, v, np.zeros(len(w)), op.scale, "dense-full", group_levels(w, op.scale))
    return ea_order_parameter(spec, lat).q

