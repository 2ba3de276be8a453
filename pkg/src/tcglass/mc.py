"""Parallel-tempering Metropolis for the 2D +-J random-bond Ising model.

Energies are in units of |J| with H = -sum_b J_b s_i s_j, so temperatures
are T = 1/beta.  All replicas are updated together with checkerboard
Metropolis on an (R, L, L) array, which needs even L.  Replica exchange
alternates between even and odd neighbour pairs after every sweep.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import disorder
from .lattice import build_torus

MIN_BLOCKS = 20
EXCHANGE_TARGET = (0.2, 0.6)
EXCHANGE_COLLAPSE = 0.02


class McConfigError(ValueError):
    pass


@dataclass(frozen=True)
class McRunConfig:
    L: int
    temperatures: tuple
    p: float = 0.0
    seed: int = 0
    realization: int = 0
    couplings: object = None  # explicit Realization or array; overrides (p, seed)
    sweeps_equil: int = 2000
    sweeps_measure: int = 20000
    stride: int = 1
    n_blocks: int = MIN_BLOCKS

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        if self.L < 2 or self.L % 2:
            raise McConfigError("checkerboard updates need an even L >= 2")
        if len(t) < 1 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise McConfigError("temperatures must be positive and strictly ascending")
        if self.sweeps_equil < 0 or self.sweeps_measure <= 0 or self.stride <= 0:
            raise McConfigError("sweep counts and stride must be positive")
        if self.n_blocks < MIN_BLOCKS:
            raise McConfigError(f"at least {MIN_BLOCKS} jackknife blocks are required")
        if self.sweeps_measure // self.stride < self.n_blocks:
            raise McConfigError("fewer measurements than jackknife blocks")

    def coupling_values(self) -> np.ndarray:
        lat = build_torus(self.L)
        if self.couplings is not None:
            c = self.couplings
            return np.asarray(c.values if isinstance(c, disorder.Realization) else c, dtype=float)
        seed = disorder.derive_seed(self.seed, "mc-couplings", self.L)
        return disorder.sample_bipartite(lat, self.p, 1.0, seed, self.realization).values


def geometric_grid(t_min: float, t_max: float, n: int) -> tuple:
    return tuple(float(t) for t in np.geomspace(t_min, t_max, n))


@dataclass
class McObservables:
    temperatures: np.ndarray
    energy: np.ndarray  # per site, shape (T, 2): value, error
    abs_m: np.ndarray
    m2: np.ndarray
    m4: np.ndarray
    binder: np.ndarray
    accept_flip: np.ndarray
    accept_exchange: np.ndarray  # per neighbour pair
    tau_energy: np.ndarray  # integrated autocorrelation time in measurements
    blocks: np.ndarray  # (T, n_blocks, 4): block means of e, |m|, m^2, m^4
    warnings: list = field(default_factory=list)

    @property
    def exchange_collapse(self) -> bool:
        return bool(np.any(self.accept_exchange < EXCHANGE_COLLAPSE))

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.temperatures):
            out.append({
                "T": float(t),
                "energy": self.energy[i, 0], "energy_err": self.energy[i, 1],
                "abs_m": self.abs_m[i, 0], "abs_m_err": self.abs_m[i, 1],
                "m2": self.m2[i, 0], "m2_err": self.m2[i, 1],
                "m4": self.m4[i, 0], "m4_err": self.m4[i, 1],
                "binder": self.binder[i, 0], "binder_err": self.binder[i, 1],
                "accept_flip": float(self.accept_flip[i]),
                "tau_energy": float(self.tau_energy[i]),
            })
        return out

    def to_dict(self) -> dict:
        return {"rows": [{k: float(v) for k, v in r.items()} for r in self.rows()],
                "accept_exchange": [float(a) for a in self.accept_exchange],
                "exchange_collapse": self.exchange_collapse,
                "warnings": list(self.warnings)}


def jackknife(blocks: np.ndarray, fn) -> tuple[float, float]:
    """Estimate and error of ``fn(means)`` from block means along axis 0."""
    n = len(blocks)
    total = blocks.sum(axis=0)
    full = fn(total / n)
    loo = np.array([fn((total - blocks[i]) / (n - 1)) for i in range(n)])
    err = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    return float(full), err


def binder_of(m2: float, m4: float) -> float:
    return 1.0 - m4 / (3.0 * m2 * m2)


def integrated_autocorrelation(x: np.ndarray, c: float = 6.0) -> float:
    """Sokal's self-consistent window estimate, in units of measurements."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = len(x)
    var = float(np.dot(x, x)) / n
    if var == 0.0:
        return 0.5
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (var * np.arange(n, 0, -1))
    tau = 0.5
    for w in range(1, n):
        tau += acf[w]
        if w >= c * tau:
            break
    return float(max(tau, 0.5))


class _Replicas:
    def __init__(self, L: int, J: np.ndarray, n: int, rng: np.random.Generator):
        self.L = L
        self.jh = J[0::2].reshape(L, L)  # (x,y)-(x+1,y), indexed [y, x]
        self.jv = J[1::2].reshape(L, L)  # (x,y)-(x,y+1)
        self.spins = np.where(rng.random((n, L, L)) < 0.5, -1, 1).astype(np.int8)
        yy, xx = np.indices((L, L))
        self.colors = [((xx + yy) % 2) == c for c in (0, 1)]

    def local_field(self, s: np.ndarray) -> np.ndarray:
        jh, jv = self.jh, self.jv
        return (jh * np.roll(s, -1, axis=2) + np.roll(jh, 1, axis=1) * np.roll(s, 1, axis=2)
                + jv * np.roll(s, -1, axis=1) + np.roll(jv, 1, axis=0) * np.roll(s, 1, axis=1))

    def energy(self) -> np.ndarray:
        s = self.spins.astype(np.int64)
        bonds = self.jh * s * np.roll(s, -1, axis=2) + self.jv * s * np.roll(s, -1, axis=1)
        return -bonds.sum(axis=(1, 2))

    def sweep(self, beta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One checkerboard Metropolis sweep; returns the flip acceptance per replica.

        Zero-cost flips are accepted with probability 1/2 instead of 1.  Any
        a(0) keeps detailed balance, and without it a fully frustrated square
        flips exactly one spin per half-sweep, making the chain periodic.
        """
        accepted = np.zeros(len(beta))
        b = beta[:, None, None]
        for mask in self.colors:
            s = self.spins.astype(np.float64)
            de = 2.0 * s * self.local_field(s)
            prob = np.where(de == 0, 0.5, np.exp(-b * np.maximum(de, 0.0)))
            flip = mask & (rng.random(s.shape) < prob)
            self.spins[flip] *= -1
            accepted += flip.sum(axis=(1, 2))
        return accepted / (self.L * self.L)


def pt_stream(cfg: McRunConfig):
    """Yield ``(sweep, replicas, flip_acceptance, exchanges)`` after every round.

    ``replicas.spins`` is the live (R, L, L) array ordered by temperature;
    copy it to keep it.  ``exchanges`` maps an attempted pair index to
    whether the swap was accepted.
    """
    temps = np.asarray(cfg.temperatures, dtype=float)
    beta = 1.0 / temps
    R = len(temps)
    ss = np.random.SeedSequence([int(cfg.seed), int(cfg.realization), cfg.L, 0x6D63])
    rng = np.random.Generator(np.random.Philox(ss))
    reps = _Replicas(cfg.L, cfg.coupling_values(), R, rng)
    for sweep in range(cfg.sweeps_equil + cfg.sweeps_measure):
        acc = reps.sweep(beta, rng)
        exchanged = {}
        if R > 1:
            e = reps.energy()
            pairs = np.arange(sweep % 2, R - 1, 2)
            u = rng.random(len(pairs))
            for i, ui in zip(pairs, u):
                # min(1, exp(d_beta * d_E)) keeps the joint distribution stationary
                delta = (beta[i] - beta[i + 1]) * (e[i] - e[i + 1])
                ok = delta >= 0 or ui < math.exp(delta)
                if ok:
                    reps.spins[[i, i + 1]] = reps.spins[[i + 1, i]]
                    e[i], e[i + 1] = e[i + 1], e[i]
                exchanged[int(i)] = bool(ok)
        yield sweep, reps, acc, exchanged


def parallel_tempering_run(cfg: McRunConfig) -> McObservables:
    L = cfg.L
    n_sites = L * L
    temps = np.asarray(cfg.temperatures, dtype=float)
    R = len(temps)
    flip_acc = np.zeros(R)
    ex_acc = np.zeros(max(R - 1, 0))
    ex_try = np.zeros(max(R - 1, 0))
    n_meas = cfg.sweeps_measure // cfg.stride
    series = np.zeros((4, R, n_meas))
    k = 0
    for sweep, reps, acc, exchanged in pt_stream(cfg):
        if sweep < cfg.sweeps_equil:
            continue
        flip_acc += acc
        for i, ok in exchanged.items():
            ex_try[i] += 1
            ex_acc[i] += ok
        if (sweep - cfg.sweeps_equil) % cfg.stride == cfg.stride - 1:
            e = reps.energy()
            m = reps.spins.sum(axis=(1, 2), dtype=np.int64) / n_sites
            series[0, :, k] = e / n_sites
            series[1, :, k] = np.abs(m)
            series[2, :, k] = m * m
            series[3, :, k] = m ** 4
            k += 1

    nb = cfg.n_blocks
    usable = (n_meas // nb) * nb
    blocks = series[:, :, :usable].reshape(4, R, nb, -1).mean(axis=3).transpose(1, 2, 0)

    def est(i):
        return np.array([jackknife(blocks[t, :, i], lambda x: x) for t in range(R)])

    binder = np.array([jackknife(blocks[t, :, 2:4], lambda x: binder_of(x[0], x[1]))
                       for t in range(R)])
    accept_ex = np.divide(ex_acc, ex_try, out=np.zeros_like(ex_acc), where=ex_try > 0)
    notes = []
    for i, a in enumerate(accept_ex):
        if a < EXCHANGE_COLLAPSE:
            notes.append(f"exchange collapse between T={temps[i]:.4g} and T={temps[i + 1]:.4g}")
        elif not EXCHANGE_TARGET[0] <= a <= EXCHANGE_TARGET[1]:
            notes.append(f"exchange acceptance {a:.3f} outside {EXCHANGE_TARGET} "
                         f"between T={temps[i]:.4g} and T={temps[i + 1]:.4g}")
    for n in notes:
        warnings.warn(n, RuntimeWarning, stacklevel=2)
    tau = np.array([integrated_autocorrelation(series[0, t]) for t in range(R)])
    return McObservables(temps, est(0), est(1), est(2), est(3), binder,
                         flip_acc / cfg.sweeps_measure, accept_ex, tau, blocks, notes)


@dataclass(frozen=True)
class CrossingEstimate:
    p: float
    sizes: tuple
    T_c: float | None
    stderr: float | None
    diagnostic: str = ""
    curves: dict = field(default_factory=dict)  # L -> list of quenched U(T)


def _quenched_binder(m2: np.ndarray, m4: np.ndarray) -> np.ndarray:
    """[<m^4>] / (3 [<m^2>]^2) over axis 0 (realizations)."""
    return 1.0 - m4.mean(axis=0) / (3.0 * m2.mean(axis=0) ** 2)


def _crossing(temps: np.ndarray, u_small: np.ndarray, u_large: np.ndarray,
              n_fit: int = 4) -> float | None:
    """Crossing of two curves from local linear fits around the sign change.

    Below T_c the larger size has the larger U, so the first sign change of
    u_large - u_small from positive to non-positive is used.
    """
    d = u_large - u_small
    idx = [i for i in range(len(d) - 1) if d[i] > 0 >= d[i + 1]]
    if not idx:
        return None
    i = idx[0]
    lo = max(0, min(i - n_fit // 2 + 1, len(temps) - n_fit))
    sl = slice(lo, lo + n_fit)
    a1, b1 = np.polyfit(temps[sl], u_small[sl], 1)
    a2, b2 = np.polyfit(temps[sl], u_large[sl], 1)
    if a1 == a2:
        return None
    t = (b2 - b1) / (a1 - a2)
    if not temps[sl][0] <= t <= temps[sl][-1]:
        return None
    return float(t)


def binder_crossing(p: float, sizes, T_window, n_temps: int = 12, n_realizations: int = 1,
                    seed: int = 0, sweeps_equil: int = 2000, sweeps_measure: int = 20000,
                    n_boot: int = 200) -> CrossingEstimate:
    """Binder-cumulant crossing of the two extreme sizes within ``T_window``.

    Each realization is a separate PT run over a linear grid; the error is a
    bootstrap over realizations, or over jackknife blocks for a single one.
    """
    sizes = tuple(sorted(int(L) for L in sizes))
    if len(sizes) < 2:
        raise McConfigError("at least two sizes are needed")
    temps = np.linspace(float(T_window[0]), float(T_window[1]), n_temps)
    data = {}
    for L in sizes:
        per_real = []
        for r in range(n_realizations):
            cfg = McRunConfig(L, tuple(temps), p, seed, r, None, sweeps_equil, sweeps_measure)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                obs = parallel_tempering_run(cfg)
            per_real.append(obs.blocks[:, :, 2:4])  # (T, blocks, 2)
        data[L] = np.stack(per_real)  # (real, T, blocks, 2)

    def curves(sample):
        out = {}
        for L, arr in sample.items():
            means = arr.mean(axis=2)  # (real, T, 2)
            out[L] = _quenched_binder(means[..., 0], means[..., 1])
        return out

    central = curves(data)
    small, large = sizes[0], sizes[-1]
    t_c = _crossing(temps, central[small], central[large])
    curve_lists = {L: [float(u) for u in c] for L, c in central.items()}
    if t_c is None:
        return CrossingEstimate(p, sizes, None, None,
                                f"no crossing of U_{small} and U_{large} in window "
                                f"[{temps[0]:.4g}, {temps[-1]:.4g}]", curve_lists)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0x626F6F74])))
    boots = []
    for _ in range(n_boot):
        sample = {}
        for L, arr in data.items():
            if n_realizations > 1:
                sample[L] = arr[rng.integers(0, n_realizations, n_realizations)]
            else:
                nb = arr.shape[2]
                sample[L] = arr[:, :, rng.integers(0, nb, nb)]
        c = curves(sample)
        t = _crossing(temps, c[small], c[large])
        if t is not None:
            boots.append(t)
    err = float(np.std(boots, ddof=1)) if len(boots) > 1 else None
    diag = "" if len(boots) >= 0.9 * n_boot else f"{n_boot - len(boots)} bootstrap samples lacked a crossing"
    return CrossingEstimate(p, sizes, t_c, err, diag, curve_lists)
