"""Command-line entry point: single-shot subcommands and reproducible scans.

Exit codes: 0 success, 2 configuration error, 3 budget error, 4 too many
failed samples in a scan.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata

import numpy as np

from . import disorder, eab, mc, quantum_ed, rbim, stabilizer
from .lattice import LatticeError, build_torus, levin_wen_regions
from .percolation import bond_clusters, dual_bond_clusters

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_PARTIAL = 0, 2, 3, 4
SCAN_SCHEMA_VERSION = 1
BASE_COLUMNS = ["experiment", "grid_index", "sample", "seed", "status", "error"]


class ConfigError(ValueError):
    pass


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ---------------------------------------------------------------- sample kernels
# Each kernel maps (grid point, sample seed) to a flat dict of result columns.
# Validators run before any compute and raise ConfigError or BudgetError.

def _default_annulus(L: int) -> tuple[int, int]:
    return (1, 1) if L == 3 else (1, 2)


def _stopo_couplings(lat, p: float, beta: float, seed: int) -> disorder.Realization:
    # beta = 0 is the infinite-temperature limit, where every sign choice is zero
    if beta == 0:
        return disorder.uniform(lat, 0.0)
    return disorder.sample_bipartite(lat, p, beta, seed)


def _stopo_validate(pt: dict) -> None:
    L = int(pt["L"])
    lat = build_torus(L)
    r, R = pt.get("r"), pt.get("R")
    if r is None:
        r, R = _default_annulus(L)
    try:
        levin_wen_regions(lat, int(r), int(R))
    except LatticeError as exc:
        raise ConfigError(str(exc)) from exc
    if L > rbim.TRANSFER_MAX_L:
        raise rbim.BudgetError(f"L={L} exceeds the transfer-matrix limit {rbim.TRANSFER_MAX_L}")


def _stopo_kernel(pt: dict, seed: int) -> dict:
    L = int(pt["L"])
    lat = build_torus(L)
    r, R = (pt["r"], pt["R"]) if "r" in pt else _default_annulus(L)
    regions = levin_wen_regions(lat, int(r), int(R))
    c = _stopo_couplings(lat, float(pt.get("p", 0.0)), float(pt["beta"]), seed)
    res = rbim.topo_entropy_exact(lat, c, regions, sampler=pt.get("sampler", "enumerate"),
                                  seed=seed)
    return {"s_topo": res.s_topo, "s_topo_err": res.stderr, "method": res.method,
            "negative_fraction": c.meta["negative_fraction"]}


def _eab_validate(pt: dict) -> None:
    L = int(pt["L"])
    if L * L > eab.BRANCH_BOUND_MAX_SITES:
        raise rbim.BudgetError(f"L={L} exceeds the ground-state enumeration budget")


def _eab_kernel(pt: dict, seed: int) -> dict:
    lat = build_torus(int(pt["L"]))
    c = disorder.sample_bipartite(lat, float(pt["p"]), 1.0, seed)
    out = eab.instance_summary(lat, c, pt.get("method", "auto"))
    out.pop("L", None)
    out["wraps_any"] = out["wraps_dir1"] or out["wraps_dir2"]
    return out


def _pin_validate(pt: dict) -> None:
    if int(pt["L"]) < 2:
        raise ConfigError("L must be at least 2")


def _pin_kernel(pt: dict, seed: int) -> dict:
    lat = build_torus(int(pt["L"]))
    row = stabilizer.pin_sample(lat, float(pt["p"]), seed, 0)
    row.pop("sample")
    row.pop("p")
    row["wraps_any"] = row["wraps_dir1"] or row["wraps_dir2"]
    return row


def _perc_kernel(pt: dict, seed: int) -> dict:
    lat = build_torus(int(pt["L"]))
    u = disorder.uniforms(seed, 0, lat.n_bonds)
    bonds = np.flatnonzero(u < float(pt["p"]))
    star = bond_clusters(lat, bonds)
    dual = dual_bond_clusters(lat, bonds)
    return {"occupied_fraction": len(bonds) / lat.n_bonds,
            "largest_fraction": star.largest_fraction,
            "wraps_dir1": star.wraps_dir1, "wraps_dir2": star.wraps_dir2,
            "wraps_any": star.wraps_any, "spans_open": star.spans_open,
            "dual_wraps_dir1": dual.wraps_dir1, "dual_wraps_dir2": dual.wraps_dir2}


def _ed_validate(pt: dict) -> None:
    L = int(pt["L"])
    model = pt.get("model", "trbim")
    if model not in quantum_ed.MODELS:
        raise ConfigError(f"unknown model {model!r}")
    if model == "trbim" and L * L > quantum_ed.TRBIM_MAX_SITES:
        raise rbim.BudgetError(f"trbim with L={L} exceeds the site budget")
    if model != "trbim" and 2 * L * L > quantum_ed.TORIC_MAX_QUBITS:
        raise rbim.BudgetError(f"{model} with L={L} exceeds the qubit budget")


def _ed_kernel(pt: dict, seed: int) -> dict:
    lat = build_torus(int(pt["L"]))
    model = pt.get("model", "trbim")
    f = disorder.sample_bipartite(lat, float(pt.get("p", 0.0)), float(pt.get("r", 1.0)), seed,
                                  kind="field")
    spec = quantum_ed.HamiltonianSpec(model, lat, float(pt.get("lam_a", 1.0)),
                                      float(pt.get("lam_b", 0.0)), f)
    s = quantum_ed.low_spectrum(spec, int(pt.get("k", 4)))
    out = {"e0": float(s.eigenvalues[0]), "gap": s.gap, "ground_degeneracy": s.degeneracies[0]}
    if model == "trbim":
        out["q"] = quantum_ed.ea_order_parameter(s, lat).q
    return out


def _mc_validate(pt: dict) -> None:
    L = int(pt["L"])
    if L < 2 or L % 2:
        raise ConfigError("mc needs an even L >= 2")


def _mc_kernel(pt: dict, seed: int) -> dict:
    cfg = mc.McRunConfig(int(pt["L"]), (float(pt["T"]),), float(pt.get("p", 0.0)), seed, 0,
                         None, int(pt.get("sweeps_equil", 500)),
                         int(pt.get("sweeps_measure", 2000)))
    obs = mc.parallel_tempering_run(cfg)
    return {"energy": obs.energy[0, 0], "energy_err": obs.energy[0, 1],
            "abs_m": obs.abs_m[0, 0], "m2": obs.m2[0, 0], "m4": obs.m4[0, 0],
            "binder": obs.binder[0, 0]}


@dataclass(frozen=True)
class Target:
    validate: object
    kernel: object
    columns: tuple
    required: tuple


TARGETS = {
    "stopo": Target(_stopo_validate, _stopo_kernel,
                    ("s_topo", "s_topo_err", "method", "negative_fraction"), ("L", "beta")),
    "eab": Target(_eab_validate, _eab_kernel,
                  ("energy", "gs_count", "method", "rigid_fraction", "n_clusters",
                   "largest_fraction", "wraps_dir1", "wraps_dir2", "wraps_any", "spans_open"),
                  ("L", "p")),
    "pin": Target(_pin_validate, _pin_kernel,
                  ("pinned_fraction", "wraps_dir1", "wraps_dir2", "wraps_any", "spans_open",
                   "dual_wraps_dir1", "dual_wraps_dir2", "k"), ("L", "p")),
    "perc": Target(_pin_validate, _perc_kernel,
                   ("occupied_fraction", "largest_fraction", "wraps_dir1", "wraps_dir2",
                    "wraps_any", "spans_open", "dual_wraps_dir1", "dual_wraps_dir2"),
                   ("L", "p")),
    "ed": Target(_ed_validate, _ed_kernel, ("e0", "gap", "ground_degeneracy", "q"), ("L",)),
    "mc": Target(_mc_validate, _mc_kernel,
                 ("energy", "energy_err", "abs_m", "m2", "m4", "binder"), ("L", "T")),
}


# ---------------------------------------------------------------- scans

@dataclass(frozen=True)
class ScanConfig:
    experiment: str
    target: str
    grid: dict
    n_samples: int
    seed: int
    params: dict = field(default_factory=dict)
    max_fail_fraction: float = 0.1

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        try:
            cfg = cls(str(d["experiment"]), str(d["target"]), dict(d["grid"]),
                      int(d["n_samples"]), int(d["seed"]), dict(d.get("params", {})),
                      float(d.get("max_fail_fraction", 0.1)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scan config: {exc}") from exc
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "target": self.target, "grid": self.grid,
                "n_samples": self.n_samples, "seed": self.seed, "params": self.params,
                "max_fail_fraction": self.max_fail_fraction}

    def check(self) -> None:
        if self.target not in TARGETS:
            raise ConfigError(f"unknown scan target {self.target!r}")
        if not self.grid or any(not isinstance(v, list) or not v for v in self.grid.values()):
            raise ConfigError("every grid parameter needs a non-empty list of values")
        if not self.experiment or any(ch in self.experiment for ch in ',/\\"\n'):
            raise ConfigError("experiment id must be non-empty without separators or quotes")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")
        names = set(self.grid) | set(self.params)
        missing = [k for k in TARGETS[self.target].required if k not in names]
        if missing:
            raise ConfigError(f"target {self.target} needs parameters {missing}")

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def points(self) -> list[dict]:
        keys = sorted(self.grid)
        return [{**self.params, **dict(zip(keys, vals))}
                for vals in itertools.product(*(self.grid[k] for k in keys))]

    @property
    def columns(self) -> list[str]:
        return BASE_COLUMNS + sorted(self.grid) + list(TARGETS[self.target].columns)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _run_point(args) -> list[dict]:
    cfg, index, point = args
    target = TARGETS[cfg.target]
    rows = []
    for sample in range(cfg.n_samples):
        seed = disorder.derive_seed(cfg.seed, cfg.experiment, index, sample)
        row = {"experiment": cfg.experiment, "grid_index": index, "sample": sample,
               "seed": seed, "status": "ok", "error": ""}
        row.update({k: point[k] for k in cfg.grid})
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                row.update(target.kernel(point, seed))
        except (rbim.BudgetError, rbim.ConvergenceError, eab.CertificateError,
                quantum_ed.LeakageError, ArithmeticError) as exc:
            row["status"] = "failed"
            row["error"] = type(exc).__name__
        rows.append(row)
    return rows


def validate_scan(cfg: ScanConfig, budget: int | None) -> None:
    total = len(cfg.points()) * cfg.n_samples
    if budget is not None and total > budget:
        raise rbim.BudgetError(f"scan needs {total} samples, budget is {budget}")
    target = TARGETS[cfg.target]
    for pt in cfg.points():
        try:
            target.validate(pt)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"grid point {pt}: {exc}") from exc


def _completed_points(path: str, cfg: ScanConfig) -> tuple[list[str], set]:
    """Rows of fully written grid points in an existing CSV, for resuming."""
    if not os.path.exists(path):
        return [], set()
    with open(path, newline="") as fh:
        lines = fh.read().splitlines(keepends=True)
    if not lines or lines[0].rstrip("\r\n") != ",".join(cfg.columns):
        return [], set()
    # a crash can leave a torn last line; only newline-terminated full rows count
    width = len(cfg.columns)
    lines = [lines[0]] + [ln for ln in lines[1:]
                          if ln.endswith("\n") and len(next(csv.reader([ln]))) == width]
    counts: dict[int, int] = {}
    for rec in csv.DictReader(io.StringIO("".join(lines))):
        counts[int(rec["grid_index"])] = counts.get(int(rec["grid_index"]), 0) + 1
    done = {i for i, n in counts.items() if n == cfg.n_samples}
    kept = [lines[0]] + [ln for ln in lines[1:] if int(ln.split(",", 2)[1]) in done]
    return kept, done


def summarize(cfg: ScanConfig, rows: list[dict]) -> list[dict]:
    """Per grid point means and standard errors of every numeric column."""
    out = []
    numeric = [c for c in TARGETS[cfg.target].columns if c != "method"]
    by_point: dict[int, list[dict]] = {}
    for r in rows:
        by_point.setdefault(int(r["grid_index"]), []).append(r)
    for index, pt in enumerate(cfg.points()):
        good = [r for r in by_point.get(index, []) if r["status"] == "ok"]
        entry = {"grid_index": index, **{k: pt[k] for k in sorted(cfg.grid)},
                 "n_ok": len(good), "n_failed": cfg.n_samples - len(good)}
        for c in numeric:
            vals = [float(r[c]) for r in good if r.get(c) not in (None, "")]
            if vals:
                a = np.array(vals, dtype=float)
                entry[c] = float(a.mean())
                entry[c + "_err"] = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
        out.append(entry)
    return out


def run_scan(cfg: ScanConfig, out_dir: str, threads: int = 1, budget: int | None = None,
             resume: bool = False) -> dict:
    validate_scan(cfg, budget)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{cfg.experiment}.csv")
    kept, done = _completed_points(csv_path, cfg) if resume else ([], set())
    start = time.perf_counter()
    todo = [(cfg, i, pt) for i, pt in enumerate(cfg.points()) if i not in done]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if kept:
            fh.write("".join(kept))
        else:
            writer.writerow(cfg.columns)
        fh.flush()
        if threads > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = pool.map(_run_point, todo)
                for rows in results:  # map preserves grid order
                    _write_rows(writer, fh, cfg, rows)
        else:
            for job in todo:
                _write_rows(writer, fh, cfg, _run_point(job))
    wall = time.perf_counter() - start

    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n_failed = sum(r["status"] != "ok" for r in rows)
    summary_path = os.path.join(out_dir, f"{cfg.experiment}.summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summarize(cfg, rows), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    manifest = {
        "schema_version": SCAN_SCHEMA_VERSION,
        "software_version": version(),
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash,
        "csv": os.path.basename(csv_path),
        "csv_sha256": digest,
        "n_rows": len(rows),
        "n_failed": n_failed,
        "wall_time_s": wall,
    }
    with open(os.path.join(out_dir, f"{cfg.experiment}.manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _write_rows(writer, fh, cfg: ScanConfig, rows: list[dict]) -> None:
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in cfg.columns])
    fh.flush()


# ---------------------------------------------------------------- subcommands

def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _emit_rows(rows: list[dict], columns: list[str], out: str | None) -> None:
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    finally:
        if out:
            fh.close()


def cmd_lattice(args) -> int:
    lat = build_torus(args.L)
    d = json.loads(lat.to_json())
    if args.r is not None:
        regions = levin_wen_regions(lat, args.r, args.R if args.R is not None else args.r)
        d["regions"] = [{"name": g.name, "n_bonds": len(g.region_bonds),
                         "boundary_sites": list(g.boundary_sites),
                         "n_components": g.n_components} for g in regions]
    _emit(d, args.out)
    return EXIT_OK


def cmd_stopo(args) -> int:
    lat = build_torus(args.L)
    r, R = (args.r, args.R) if args.r is not None else _default_annulus(args.L)
    regions = levin_wen_regions(lat, r, R)
    if args.couplings:
        c = disorder.load(args.couplings)
    else:
        c = _stopo_couplings(lat, args.p, args.beta, args.seed)
    res = rbim.topo_entropy_exact(lat, c, regions, sampler=args.sampler, seed=args.seed,
                                  n_sweeps=args.sweeps)
    _emit({"L": args.L, "r": r, "R": R, "s_topo": res.s_topo, "stderr": res.stderr,
           "method": res.method, "region_entropies": list(res.region_entropies),
           "r_hat": res.r_hat, "seed": args.seed}, args.out)
    return EXIT_OK


def _sample_rows(target: str, args, point: dict) -> list[dict]:
    rows = []
    for i in range(args.samples):
        seed = disorder.derive_seed(args.seed, target, args.L, i)
        rows.append({"sample": i, "seed": seed, **point, **TARGETS[target].kernel(point, seed)})
    return rows


def cmd_eab(args) -> int:
    _eab_validate({"L": args.L})
    if args.summary:
        rows = eab.rigid_percolation_scan(args.p, [args.L], args.samples, args.seed, args.method)
        _emit_rows(rows, eab.SCAN_COLUMNS, args.out)
        return EXIT_OK
    pt = {"L": args.L, "p": args.p, "method": args.method}
    rows = _sample_rows("eab", args, pt)
    _emit_rows(rows, ["sample", "seed", "p"] + list(TARGETS["eab"].columns), args.out)
    return EXIT_OK


def cmd_perc(args) -> int:
    rows = _sample_rows("perc", args, {"L": args.L, "p": args.p})
    _emit_rows(rows, ["sample", "seed", "p"] + list(TARGETS["perc"].columns), args.out)
    return EXIT_OK


def cmd_pin(args) -> int:
    seed = disorder.derive_seed(args.seed, "pin", args.L)
    rows = stabilizer.pin_scan(args.L, args.p, args.samples, seed)
    _emit_rows(rows, stabilizer.PIN_COLUMNS, args.out)
    return EXIT_OK


def cmd_ed(args) -> int:
    _ed_validate({"L": args.L, "model": args.model})
    lat = build_torus(args.L)
    if args.field:
        f = disorder.load(args.field)
    elif args.model == "toric_clean":
        f = None
    else:
        f = disorder.sample(lat, args.distribution, args.p, args.r, args.seed, kind="field")
    spec = quantum_ed.HamiltonianSpec(args.model, lat, args.lam_a, args.lam_b, f)
    s = quantum_ed.low_spectrum(spec, args.k)
    out = {"model": args.model, "L": args.L, "lam_a": args.lam_a, "lam_b": args.lam_b,
           **s.to_dict(), "q": None, "sector_weights": None}
    if args.model == "trbim":
        out["q"] = quantum_ed.ea_order_parameter(s, lat).q
    else:
        out["sector_weights"] = [float(w) for w in quantum_ed.sector_weights(lat, s.vectors)]
    _emit(out, args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    temps = mc.geometric_grid(args.tmin, args.tmax, args.ntemps)
    couplings = disorder.load(args.couplings) if args.couplings else None
    cfg = mc.McRunConfig(args.L, temps, args.p, args.seed, args.realization, couplings,
                         args.equil, args.measure, args.stride)
    obs = mc.parallel_tempering_run(cfg)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        rows = obs.rows()
        _emit_rows(rows, list(rows[0]), os.path.join(args.out, "mc_temperatures.csv"))
        _emit({"L": args.L, "p": args.p, "seed": args.seed, **obs.to_dict()},
              os.path.join(args.out, "mc_run.json"))
    else:
        _emit({"L": args.L, "p": args.p, "seed": args.seed, **obs.to_dict()}, None)
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.replay:
        with open(args.replay) as fh:
            manifest = json.load(fh)
        cfg = ScanConfig.from_dict(manifest["config"])
    elif args.config:
        with open(args.config) as fh:
            cfg = ScanConfig.from_dict(json.load(fh))
    else:
        raise ConfigError("scan needs --config or --replay")
    out_dir = args.out or "."
    result = run_scan(cfg, out_dir, args.threads, args.budget, args.resume)
    info = {"csv": os.path.join(out_dir, result["csv"]), "n_rows": result["n_rows"],
            "n_failed": result["n_failed"], "csv_sha256": result["csv_sha256"]}
    if args.replay:
        info["identical"] = result["csv_sha256"] == manifest["csv_sha256"]
    _emit(info, None)
    if args.replay and not info["identical"]:
        return EXIT_PARTIAL
    total = result["n_rows"]
    if total and result["n_failed"] > cfg.max_fail_fraction * total:
        return EXIT_PARTIAL
    return EXIT_OK


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the flags with suppressed defaults so that values
    # given before the subcommand name are not overwritten
    def d(v):
        return argparse.SUPPRESS if suppress else v

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(0), help="master seed")
    common.add_argument("--out", default=d(None), help="output file or directory")
    common.add_argument("--threads", type=int, default=d(1), help="worker processes for scans")
    common.add_argument("--budget", type=int, default=d(None),
                        help="refuse scans needing more than this many samples")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(True)
    p = argparse.ArgumentParser(prog="tcglass", parents=[_global_flags(False)],
                                description="Toric code with disorder: exact and Monte Carlo tools")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lattice", parents=[common], help="lattice and region geometry as JSON")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--r", type=int)
    s.add_argument("--R", type=int)
    s.set_defaults(func=cmd_lattice)

    s = sub.add_parser("stopo", parents=[common], help="topological entropy of one realization")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--p", type=float, default=0.0)
    s.add_argument("--r", type=int)
    s.add_argument("--R", type=int)
    s.add_argument("--couplings", help="realization JSON file instead of sampling")
    s.add_argument("--sampler", choices=["enumerate", "boltzmann_mc"], default="enumerate")
    s.add_argument("--sweeps", type=int, default=400)
    s.set_defaults(func=cmd_stopo)

    s = sub.add_parser("eab", parents=[common], help="ground states and rigid lattice")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--method", choices=["auto", "exhaustive", "branch_bound"], default="auto")
    s.add_argument("--summary", action="store_true", help="aggregate wrap statistics")
    s.set_defaults(func=cmd_eab)

    s = sub.add_parser("perc", parents=[common], help="random bond percolation on the torus")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_perc)

    s = sub.add_parser("pin", parents=[common], help="logical qubits under diluted pinning")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_pin)

    s = sub.add_parser("ed", parents=[common], help="exact low spectrum")
    s.add_argument("--model", choices=list(quantum_ed.MODELS), default="trbim")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--lam-a", type=float, default=1.0)
    s.add_argument("--lam-b", type=float, default=0.0)
    s.add_argument("--distribution", choices=["bipartite", "diluted", "uniform"],
                   default="bipartite")
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--r", type=float, default=1.0, help="field strength")
    s.add_argument("--field", help="field realization JSON file")
    s.add_argument("--k", type=int, default=4)
    s.set_defaults(func=cmd_ed)

    s = sub.add_parser("mc", parents=[common], help="parallel tempering run")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--p", type=float, default=0.0)
    s.add_argument("--tmin", type=float, default=1.8)
    s.add_argument("--tmax", type=float, default=3.0)
    s.add_argument("--ntemps", type=int, default=8)
    s.add_argument("--equil", type=int, default=1000)
    s.add_argument("--measure", type=int, default=10000)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--realization", type=int, default=0)
    s.add_argument("--couplings", help="coupling realization JSON file")
    s.set_defaults(func=cmd_mc)

    s = sub.add_parser("scan", parents=[common], help="grid scan from a JSON config")
    s.add_argument("--config")
    s.add_argument("--replay", help="manifest of an earlier scan")
    s.add_argument("--resume", action="store_true", help="keep finished grid points")
    s.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except rbim.BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, LatticeError, disorder.DisorderError, mc.McConfigError,
            ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
