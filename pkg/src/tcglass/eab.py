"""Ground states of the bimodal Edwards-Anderson model on the torus.

Energies ``E = -sum_b J_b theta_s theta_s'`` are computed in exact integer
arithmetic (couplings divided by their common magnitude), so ground-state
ties and the rigid/mixed classification involve no tolerances.  Ground
states are stored modulo the global flip as uint64 bitmasks over sites
(bit s set means theta_s = -1, site 0 always +1).

Two complete enumerators are provided.  ``exhaustive`` scans every
configuration.  ``branch_bound`` fixes the first column, then assigns the
remaining sites in column-major order and prunes with an exact lower bound:
the optimal energy of the unassigned remainder given the current front,
tabulated by a backward min-plus transfer sweep.  Ties are never pruned and
the enumerated count is audited against an independent optimal-path count
from the same sweep.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import disorder
from .lattice import TorusLattice, build_torus
from .percolation import PercolationReport, bond_clusters
from .rbim import BudgetError, _coupling_values

EXHAUSTIVE_MAX_SITES = 25
BRANCH_BOUND_MAX_SITES = 64
MAX_STATES = 2_000_000

ALWAYS_SATISFIED = "always_satisfied"
ALWAYS_FRUSTRATED = "always_frustrated"
MIXED = "mixed"


class CertificateError(RuntimeError):
    """The enumerated ground-state set could not be certified complete."""


def integer_couplings(couplings) -> tuple[np.ndarray, float]:
    """Split couplings into integer multiples of their smallest magnitude."""
    values = _coupling_values(couplings)
    nonzero = np.abs(values[values != 0])
    unit = float(nonzero.min()) if len(nonzero) else 1.0
    J = np.rint(values / unit).astype(np.int64)
    if not np.allclose(J * unit, values, rtol=0, atol=1e-12 * unit):
        raise ValueError("couplings are not integer multiples of a common magnitude")
    return J, unit


def theta_from_masks(masks: np.ndarray, n_sites: int) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.uint64)
    bits = (masks[:, None] >> np.arange(n_sites, dtype=np.uint64)) & np.uint64(1)
    return (1 - 2 * bits.astype(np.int64)).astype(np.int8)


def energies(lat: TorusLattice, J: np.ndarray, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.int64)
    sigma = theta[..., lat.bonds[:, 0]] * theta[..., lat.bonds[:, 1]]
    return -(sigma @ J)


@dataclass
class GroundStateSet:
    lat: TorusLattice
    J: np.ndarray  # integer couplings
    unit: float
    energy_int: int
    states: np.ndarray  # uint64 masks, sorted, one per +-theta pair
    method: str
    complete: bool = True

    @property
    def energy(self) -> float:
        return self.energy_int * self.unit

    @property
    def count(self) -> int:
        return len(self.states)

    def thetas(self) -> np.ndarray:
        return theta_from_masks(self.states, self.lat.n_sites)

    def satisfied_counts(self) -> np.ndarray:
        """Per bond, the number of ground states in which the bond is satisfied."""
        th = self.thetas().astype(np.int64)
        sigma = th[:, self.lat.bonds[:, 0]] * th[:, self.lat.bonds[:, 1]]
        sat = sigma * np.sign(self.J) > 0
        return sat.sum(axis=0)

    def coalignment(self) -> np.ndarray:
        """E_GS[theta_s theta_s'] for every bond as exact fractions (floats)."""
        th = self.thetas().astype(np.int64)
        sigma = th[:, self.lat.bonds[:, 0]] * th[:, self.lat.bonds[:, 1]]
        return sigma.sum(axis=0) / self.count


def _exhaustive(lat: TorusLattice, J: np.ndarray):
    """Energy of every configuration, assembled row by row by broadcasting.

    The full table has one axis per lattice row (2^L entries each) with the
    first row restricted to site 0 = +1; every entry is an exact integer.
    """
    n, L = lat.n_sites, lat.L
    if n > EXHAUSTIVE_MAX_SITES:
        raise BudgetError(f"exhaustive scan limited to {EXHAUSTIVE_MAX_SITES} sites, got {n}")
    spins = _column_spins(L)  # row configurations, bit x is column x
    rows = [np.arange(1 << L)] * L
    rows[0] = np.arange(0, 1 << L, 2)
    dtype = np.int16 if 4 * np.abs(J).sum() < 2**15 else np.int64
    total = np.zeros((1,) * L, dtype=dtype)
    for y in range(L):
        r = spins[rows[y]]
        e_row = -np.sum(J[[lat.hbond(x, y) for x in range(L)]] * r * np.roll(r, -1, axis=1),
                        axis=1)
        shape = [1] * L
        shape[y] = len(rows[y])
        total = total + e_row.astype(dtype).reshape(shape)
        y2 = (y + 1) % L
        jv = J[[lat.vbond(x, y) for x in range(L)]]
        e_vert = -((spins[rows[y]] * jv) @ spins[rows[y2]].T)
        shape = [1] * L
        shape[y], shape[y2] = len(rows[y]), len(rows[y2])
        if y2 < y:
            e_vert = e_vert.T
        total = total + e_vert.astype(dtype).reshape(shape)
    e0 = int(total.min())
    hits = np.argwhere(total == e0)
    masks = np.zeros(len(hits), dtype=np.uint64)
    for y in range(L):
        masks |= rows[y][hits[:, y]].astype(np.uint64) << np.uint64(y * L)
    return e0, np.sort(masks)


def _column_spins(L: int) -> np.ndarray:
    idx = np.arange(1 << L)
    return 1 - 2 * ((idx[:, None] >> np.arange(L)) & 1)


def _branch_bound(lat: TorusLattice, J: np.ndarray, max_states: int = MAX_STATES):
    L = lat.L
    n = lat.n_sites
    if n > BRANCH_BOUND_MAX_SITES:
        raise BudgetError(f"branch and bound limited to {BRANCH_BOUND_MAX_SITES} sites")
    ns = 1 << L
    spins = _column_spins(L)
    c0 = np.arange(0, ns, 2)  # row 0 of column 0 fixed to +1 (mod global flip)
    steps = [(x, y) for x in range(1, L) for y in range(L)]
    T = len(steps)

    def local(t):
        """Energy table [f, b] of placing spin b (0:+1, 1:-1) at step t."""
        x, y = steps[t]
        s_new = np.array([1, -1])
        e = -J[lat.hbond(x - 1, y)] * np.outer(spins[:, y], s_new)
        if y >= 1:
            e = e - J[lat.vbond(x, y - 1)] * np.outer(spins[:, y - 1], s_new)
        if y == L - 1:
            e = e - J[lat.vbond(x, L - 1)] * np.outer(spins[:, 0], s_new)
        return e.astype(np.int64)

    def child(f, y, b):
        return (f & ~(1 << y)) | (b << y)

    close_J = np.array([J[lat.hbond(L - 1, y)] for y in range(L)])
    # closing[c, f]: wrap bonds between the last column front f and column 0 = c
    closing = -((spins[c0] * close_J) @ spins.T).astype(np.int64)
    col0 = -np.sum(J[[lat.vbond(0, y) for y in range(L)]]
                   * spins[c0] * np.roll(spins[c0], -1, axis=1), axis=1).astype(np.int64)

    # backward sweep: best[t][c, f] = optimal energy of steps t.. given front f
    fronts = np.arange(ns)
    best = [None] * (T + 1)
    count = [None] * (T + 1)
    best[T] = closing
    count[T] = np.ones_like(closing)
    locals_ = [local(t) for t in range(T)]
    for t in range(T - 1, -1, -1):
        y = steps[t][1]
        opts, cnts = [], []
        for b in (0, 1):
            nxt = child(fronts, y, b)
            opts.append(locals_[t][:, b][None, :] + best[t + 1][:, nxt])
            cnts.append(count[t + 1][:, nxt])
        m = np.minimum(opts[0], opts[1])
        best[t] = m
        count[t] = np.where(opts[0] == m, cnts[0], 0) + np.where(opts[1] == m, cnts[1], 0)

    # the initial front is column 0 itself
    root = col0 + best[0][np.arange(len(c0)), c0]
    e0 = int(root.min())
    n_expected = int(count[0][np.arange(len(c0)), c0][root == e0].sum())
    if n_expected > max_states:
        raise BudgetError(f"{n_expected} ground states exceed the storage budget {max_states}")

    # forward enumeration of every optimal path, level by level
    ci = np.flatnonzero(root == e0)
    front = c0[ci].astype(np.int64)
    energy = col0[ci]
    mask = np.zeros(len(ci), dtype=np.uint64)
    for y in range(L):
        bit = ((c0[ci] >> y) & 1).astype(np.uint64)
        mask |= bit << np.uint64(lat.site(0, y))
    for t in range(T):
        x, y = steps[t]
        new_c, new_f, new_e, new_m = [], [], [], []
        for b in (0, 1):
            e = energy + locals_[t][front, b]
            f = child(front, y, b)
            keep = e + best[t + 1][ci, f] == e0  # exact bound: ties kept, nothing else
            new_c.append(ci[keep])
            new_f.append(f[keep])
            new_e.append(e[keep])
            new_m.append(mask[keep] | (np.uint64(b) << np.uint64(lat.site(x, y))))
        ci, front, energy, mask = (np.concatenate(a) for a in (new_c, new_f, new_e, new_m))
    final = energy + closing[ci, front]
    if not np.all(final == e0) or len(mask) != n_expected:
        raise CertificateError(
            f"enumerated {len(mask)} states vs audited count {n_expected}")
    return e0, np.sort(mask)


def enumerate_ground_states(lat: TorusLattice, couplings, method: str = "auto",
                            max_states: int = MAX_STATES) -> GroundStateSet:
    J, unit = integer_couplings(couplings)
    if method == "auto":
        method = "exhaustive" if lat.n_sites <= 16 else "branch_bound"
    if method == "exhaustive":
        e0, states = _exhaustive(lat, J)
    elif method == "branch_bound":
        e0, states = _branch_bound(lat, J, max_states)
    else:
        raise ValueError(f"unknown method {method!r}")
    gs = GroundStateSet(lat, J, unit, e0, states, method)
    # independent recomputation of every stored energy
    if not np.all(energies(lat, J, gs.thetas()) == e0):
        raise CertificateError("stored ground state with wrong energy")
    return gs


@dataclass(frozen=True)
class RigidLattice:
    classification: tuple[str, ...]

    @property
    def rigid_bonds(self) -> list[int]:
        return [b for b, c in enumerate(self.classification) if c != MIXED]

    @property
    def rigid_fraction(self) -> float:
        return len(self.rigid_bonds) / len(self.classification)


def rigid_lattice(gs: GroundStateSet) -> RigidLattice:
    if not gs.complete:
        raise CertificateError("rigid lattice needs a complete ground-state set")
    sat = gs.satisfied_counts()
    out = []
    for b in range(gs.lat.n_bonds):
        if gs.J[b] == 0:
            out.append(MIXED)  # a vacant bond is neither satisfied nor frustrated
        elif sat[b] == gs.count:
            out.append(ALWAYS_SATISFIED)
        elif sat[b] == 0:
            out.append(ALWAYS_FRUSTRATED)
        else:
            out.append(MIXED)
    return RigidLattice(tuple(out))


def percolation_report(rigid: RigidLattice, lat: TorusLattice) -> PercolationReport:
    return bond_clusters(lat, rigid.rigid_bonds)


def gauge_transform(lat: TorusLattice, couplings, sites) -> np.ndarray:
    """Couplings after flipping theta on ``sites``: bonds on the cut change sign."""
    values = _coupling_values(couplings).copy()
    flip = np.zeros(lat.n_sites, dtype=bool)
    flip[list(sites)] = True
    cut = flip[lat.bonds[:, 0]] ^ flip[lat.bonds[:, 1]]
    values[cut] *= -1
    return values


def instance_summary(lat: TorusLattice, couplings, method: str = "auto") -> dict:
    gs = enumerate_ground_states(lat, couplings, method)
    rigid = rigid_lattice(gs)
    perc = percolation_report(rigid, lat)
    return {
        "L": lat.L,
        "energy": gs.energy,
        "gs_count": gs.count,
        "method": gs.method,
        "rigid_fraction": rigid.rigid_fraction,
        **perc.to_dict(),
    }


SCAN_COLUMNS = ["L", "n_samples", "n_failed", "mean_rigid_fraction", "rigid_fraction_err",
                "wrap_any", "wrap_any_err", "wrap_both", "wrap_both_err",
                "wrap_dir1", "wrap_dir2", "span_open", "span_open_err",
                "mean_largest_fraction"]


def _binom(k: int, n: int) -> tuple[float, float]:
    if n == 0:
        return float("nan"), float("nan")
    q = k / n
    return q, math.sqrt(q * (1 - q) / n)


def rigid_percolation_scan(p: float, sizes, n_samples: int, master_seed: int,
                           method: str = "auto", max_fail_fraction: float = 0.1) -> list[dict]:
    """Per-size rigid-bond fraction and wrapping statistics of EAB instances."""
    rows = []
    for L in sizes:
        lat = build_torus(L)
        seed = disorder.derive_seed(master_seed, "eab", L)
        results, failed = [], 0
        for i in range(n_samples):
            c = disorder.sample_bipartite(lat, p, 1.0, seed, realization=i)
            try:
                results.append(instance_summary(lat, c, method))
            except (BudgetError, CertificateError):
                failed += 1
        if failed > max_fail_fraction * n_samples:
            raise RuntimeError(f"L={L}: {failed}/{n_samples} instances failed")
        n = len(results)
        rf = np.array([r["rigid_fraction"] for r in results])
        any_w = sum(r["wraps_dir1"] or r["wraps_dir2"] for r in results)
        both_w = sum(r["wraps_dir1"] and r["wraps_dir2"] for r in results)
        span = sum(r["spans_open"] for r in results)
        wa, wa_e = _binom(any_w, n)
        wb, wb_e = _binom(both_w, n)
        sp, sp_e = _binom(span, n)
        rows.append({
            "L": L, "n_samples": n, "n_failed": failed,
            "mean_rigid_fraction": float(rf.mean()),
            "rigid_fraction_err": float(rf.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
            "wrap_any": wa, "wrap_any_err": wa_e, "wrap_both": wb, "wrap_both_err": wb_e,
            "wrap_dir1": _binom(sum(r["wraps_dir1"] for r in results), n)[0],
            "wrap_dir2": _binom(sum(r["wraps_dir2"] for r in results), n)[0],
            "span_open": sp, "span_open_err": sp_e,
            "mean_largest_fraction": float(np.mean([r["largest_fraction"] for r in results])),
        })
    return rows


def scan_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SCAN_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
