"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import logsumexp


def spin_table(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.int64)


def brute_log_z(lat, beta, fixed: dict | None = None) -> float:
    """log sum_theta exp(sum_b beta_b theta_i theta_j) by listing every configuration."""
    theta = spin_table(lat.n_sites)
    if fixed:
        keep = np.all([theta[:, s] == v for s, v in fixed.items()], axis=0)
        theta = theta[keep]
    sigma = theta[:, lat.bonds[:, 0]] * theta[:, lat.bonds[:, 1]]
    return float(logsumexp(sigma @ np.asarray(beta, dtype=float)))


def brute_energy(lat, J, T: float) -> float:
    """Thermal energy per site of H = -sum J s s at temperature T."""
    theta = spin_table(lat.n_sites)
    sigma = theta[:, lat.bonds[:, 0]] * theta[:, lat.bonds[:, 1]]
    E = -(sigma @ np.asarray(J, dtype=float))
    w = np.exp(-(E - E.min()) / T)
    return float(w @ E / w.sum() / lat.n_sites)


def kaufman_log_z(L: int, K: float) -> float:
    """Exact log Z of the clean Ising model on an L x L torus at coupling K."""
    n = L * L

    def gamma(l):
        if l == 0:
            return 2 * K + np.log(np.tanh(K))  # signed
        c = np.cosh(2 * K) / np.tanh(2 * K) - np.cos(np.pi * l / L)
        return np.arccosh(c)

    g_odd = np.array([gamma(2 * r + 1) for r in range(L)])
    g_even = np.array([gamma(2 * r) for r in range(L)])
    # each product is kept as (sign, log|.|)
    terms = []
    for g, fn in ((g_odd, np.cosh), (g_odd, np.sinh), (g_even, np.cosh), (g_even, np.sinh)):
        vals = 2 * fn(L * g / 2)
        terms.append((np.prod(np.sign(vals)), np.sum(np.log(np.abs(vals)))))
    m = max(t[1] for t in terms)
    s = sum(sign * np.exp(lg - m) for sign, lg in terms)
    return float(np.log(0.5) + n / 2 * np.log(2 * np.sinh(2 * K)) + m + np.log(s))


def kaufman_energy(L: int, T: float, h: float = 1e-5) -> float:
    """Energy per site -d log Z / d K / N for J = 1, by central differences."""
    K = 1.0 / T
    d = (kaufman_log_z(L, K + h) - kaufman_log_z(L, K - h)) / (2 * h)
    return float(-d / (L * L))


def dense_trbim(lat, lam_a: float, h) -> np.ndarray:
    """Transverse-field RBIM as an explicit Kronecker-product matrix."""
    n = lat.n_sites
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    Z = np.diag([1.0, -1.0])
    I = np.eye(2)

    def op(mats: dict):
        out = np.eye(1)
        for s in reversed(range(n)):  # site s is bit s, the least significant first
            out = np.kron(out, mats.get(s, I))
        return out

    H = np.zeros((1 << n, 1 << n))
    for s in range(n):
        H -= lam_a * op({s: X})
    for b, (s, t) in enumerate(lat.bonds):
        H -= h[b] * op({int(s): Z, int(t): Z})
    return H
