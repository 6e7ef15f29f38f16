"""Experiment recipes, result persistence, and the parallel cell runner.

Every recipe expands a JSON config into an ordered list of independent cells,
computes the missing ones (optionally in a process pool), and writes a CSV
table with one fully keyed row per cell plus a manifest recording the config
hash, seed and code version. Reruns with the same config and seed produce
byte-identical tables; with ``resume`` the completed rows are reused.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__, readout
from .classic_rc import ClassicRCConfig, build_classic, fractional_library
from .dynamics import (Diverged, FractionalHalvorsen, IntegratorConfig, Lorenz,
                       SystemSpec, Thomas, default_initial_condition, integrate)
from .fractional import FracExponent
from .metrics import (CorrDimConfig, RosensteinConfig, correlation_dimension,
                      forecast_horizon, lyapunov_rosenstein)
from .minimal_rc import MinRCConfig, build
from .probe import ProbeConfig, default_eta_grid, probe_smallest_nonlinearity
from .trajectory import Trajectory

__all__ = [
    "system_to_json", "system_from_json",
    "LyapGridConfig", "EtaSweepConfig", "MultiExponentConfig",
    "LibraryCompareConfig", "GenerateConfig", "ProbeRecipeConfig",
    "RecipeResult",
    "run_generate", "run_lyap_grid", "run_eta_sweep",
    "run_two_exponent", "run_three_exponent",
    "run_library_compare", "run_probe", "fwhm_width", "run_fwhm",
]


# ---------------------------------------------------------------------------
# system (de)serialization

def system_to_json(spec: SystemSpec) -> dict:
    if isinstance(spec, Lorenz):
        return {"name": "lorenz", "sigma": spec.sigma, "rho": spec.rho,
                "beta": spec.beta}
    if isinstance(spec, FractionalHalvorsen):
        return {"name": "halvorsen", "a": spec.a,
                "xi_numerators": [x.numerator for x in spec.exponents],
                "denominator": spec.xi1.denominator}
    if isinstance(spec, Thomas):
        return {"name": "thomas", "b": spec.b}
    raise TypeError(f"unknown system {spec!r}")


def system_from_json(d: dict) -> SystemSpec:
    name = d.get("name")
    if name == "lorenz":
        return Lorenz(sigma=d.get("sigma", 10.0), rho=d.get("rho", 28.0),
                      beta=d.get("beta", 8.0 / 3.0))
    if name == "halvorsen":
        den = d.get("denominator", 50)
        nums = d.get("xi_numerators", [100, 100, 100])
        if len(nums) != 3:
            raise ValueError("halvorsen needs exactly 3 exponent numerators")
        return FractionalHalvorsen(a=d.get("a", 1.3),
                                   xi1=FracExponent(nums[0], den),
                                   xi2=FracExponent(nums[1], den),
                                   xi3=FracExponent(nums[2], den))
    if name == "thomas":
        return Thomas(b=d.get("b", 0.21))
    raise ValueError(f"unknown system name {name!r}")


# ---------------------------------------------------------------------------
# tables, manifests, runner

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader if row]


def config_hash(config_dict: dict) -> str:
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_manifest(out_dir, recipe: str, config_dict: dict, seed: int) -> None:
    manifest = {
        "recipe": recipe,
        "seed": seed,
        "config_sha256": config_hash(config_dict),
        "version": __version__,
        "config": config_dict,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _load_completed(path, key_width: int) -> dict[tuple, list[str]]:
    """Rows of an existing table keyed by their first ``key_width`` columns."""
    if not os.path.exists(path):
        return {}
    _, rows = read_table(path)
    return {tuple(row[:key_width]): row for row in rows}


_WORKER = {}


def _init_worker(payload):
    _WORKER.clear()
    _WORKER.update(payload)


def run_cells(fn, tasks: list, jobs: int, payload: dict) -> list:
    """Evaluate ``fn(task)`` for every task, in order, sharing ``payload``
    through a module global (sent once per worker process)."""
    if jobs <= 1 or len(tasks) <= 1:
        _init_worker(payload)
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(payload,)) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (jobs * 8))))


@dataclass(frozen=True)
class RecipeResult:
    status: str  # "complete" | "partial"
    tables: tuple[str, ...]
    computed_cells: int = 0
    reused_cells: int = 0


def _prepare_out(out_dir, recipe, config_dict, seed, table_name, key_width, resume):
    os.makedirs(out_dir, exist_ok=True)
    table_path = os.path.join(out_dir, table_name)
    manifest_path = os.path.join(out_dir, "manifest.json")
    completed = {}
    if resume and os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            old = json.load(fh)
        if old.get("config_sha256") != config_hash(config_dict) or old.get("seed") != seed:
            raise ValueError("resume refused: existing manifest does not match config/seed")
        completed = _load_completed(table_path, key_width)
    write_manifest(out_dir, recipe, config_dict, seed)
    return table_path, completed


# ---------------------------------------------------------------------------
# sweep plumbing shared by the eta and multi-exponent recipes

SWEEP_HEADER = [
    "xi1_num", "xi2_num", "xi3_num", "xi_den", "eta_num", "eta_den", "seed",
    "p_rel", "diverged", "fh_steps", "fh_lyap", "lyap_true", "lyap_pred",
    "cdim_true", "cdim_pred", "success",
]


@dataclass(frozen=True)
class _TrainSpec:
    """Lengths, in samples, of the train/predict layout inside a window."""
    sync_len: int
    train_len: int
    predict_len: int

    @property
    def window_len(self) -> int:
        return self.sync_len + self.train_len + 1 + self.predict_len


def _sweep_cell(traj: Trajectory, offset: int, eta: FracExponent,
                spec: _TrainSpec, minrc: dict, lyap_true: float,
                cdim_true: float, lyap_cfg: RosensteinConfig,
                cdim_cfg: CorrDimConfig) -> dict:
    """Train at one exponent on one window, predict, and measure."""
    train_part = traj.window(offset, spec.sync_len + spec.train_len + 1)
    truth = traj.window(offset + spec.sync_len + spec.train_len + 1,
                        spec.predict_len)
    machine = build(MinRCConfig(
        input_dim=traj.dim,
        block_size=minrc["block_size"],
        spectral_radius=minrc["spectral_radius"],
        ridge=minrc["ridge"],
        exponents=(eta,),
    ))
    out = {"diverged": False, "fh_steps": math.nan, "fh_lyap": math.nan,
           "lyap_pred": math.nan, "cdim_pred": math.nan, "success": False}
    try:
        fitted = readout.train(machine, train_part, spec.sync_len)
    except (ValueError, np.linalg.LinAlgError):
        out["diverged"] = True
        return out
    warm_start = len(train_part) - max(spec.sync_len, 1)
    warmup = train_part.window(warm_start, len(train_part) - warm_start)
    pred = readout.predict(machine, fitted, warmup, spec.predict_len)
    if pred.diverged or len(pred) < spec.predict_len:
        out["diverged"] = True
        if len(pred) > 0:
            fh = forecast_horizon(truth.window(0, len(pred)),
                                  pred.to_trajectory(), lyap_true)
            out["fh_steps"], out["fh_lyap"] = fh.steps, fh.lyapunov_times
        else:
            out["fh_steps"], out["fh_lyap"] = 0, 0.0
        return out
    pred_traj = pred.to_trajectory()
    fh = forecast_horizon(truth, pred_traj, lyap_true)
    out["fh_steps"], out["fh_lyap"] = fh.steps, fh.lyapunov_times
    try:
        out["cdim_pred"] = correlation_dimension(pred_traj, cdim_cfg)
        out["lyap_pred"] = lyapunov_rosenstein(pred_traj, lyap_cfg)
    except ValueError:
        return out
    if math.isfinite(out["cdim_pred"]) and math.isfinite(out["lyap_pred"]):
        out["success"] = (abs(out["cdim_pred"] - cdim_true) <= 0.1
                          and abs(out["lyap_pred"] - lyap_true) <= 0.1)
    return out


def _sweep_task(task):
    traj_key, eta_num, seed_idx = task
    w = _WORKER
    traj = w["trajectories"][traj_key]
    lyap_true, cdim_true = w["stats"][traj_key]
    offset = w["offsets"][(traj_key, seed_idx)]
    eta = FracExponent(eta_num, w["eta_den"])
    cell = _sweep_cell(traj, offset, eta, w["train_spec"], w["minrc"],
                       lyap_true, cdim_true, w["lyap_cfg"], w["cdim_cfg"])
    xi_nums, xi_den = w["xi_by_traj"][traj_key]
    xs, xl = min(xi_nums) / xi_den, max(xi_nums) / xi_den
    eta_val = eta_num / w["eta_den"]
    p_rel = (eta_val - xs) / (xl - xs) if xl > xs else math.nan
    return [
        xi_nums[0], xi_nums[1], xi_nums[2], xi_den, eta_num, w["eta_den"],
        seed_idx, p_rel, cell["diverged"], cell["fh_steps"], cell["fh_lyap"],
        lyap_true, cell["lyap_pred"], cdim_true, cell["cdim_pred"],
        cell["success"],
    ]


def _trajectory_stats(traj: Trajectory, lyap_cfg: RosensteinConfig,
                      cdim_cfg: CorrDimConfig) -> tuple[float, float]:
    return (lyapunov_rosenstein(traj, lyap_cfg),
            correlation_dimension(traj, cdim_cfg))


def _generate_post_transient(system: SystemSpec, n_keep: int, transient: int,
                             dt: float, ic_seed: int,
                             integrator: IntegratorConfig) -> Trajectory:
    cfg = replace(integrator, dt_sample=dt)
    x0 = default_initial_condition(system, ic_seed)
    traj = integrate(system, x0, transient + n_keep, cfg)
    return traj.discard_transient(transient)


# ---------------------------------------------------------------------------
# generate

@dataclass(frozen=True)
class GenerateConfig:
    system: dict
    n_steps: int = 20000
    transient: int = 10000
    dt: float = 0.01
    seed: int = 0

    @classmethod
    def from_json_dict(cls, d: dict) -> "GenerateConfig":
        return cls(system=d["system"], n_steps=d.get("n_steps", 20000),
                   transient=d.get("transient", 10000), dt=d.get("dt", 0.01),
                   seed=d.get("seed", 0))

    def to_json_dict(self) -> dict:
        return {"system": self.system, "n_steps": self.n_steps,
                "transient": self.transient, "dt": self.dt, "seed": self.seed}


def run_generate(cfg: GenerateConfig, out_dir, jobs: int = 1,
                 resume: bool = False) -> RecipeResult:
    os.makedirs(out_dir, exist_ok=True)
    spec = system_from_json(cfg.system)
    traj = _generate_post_transient(spec, cfg.n_steps, cfg.transient, cfg.dt,
                                    cfg.seed, IntegratorConfig())
    path = os.path.join(out_dir, "trajectory.csv")
    traj.to_csv(path)
    write_manifest(out_dir, "generate", cfg.to_json_dict(), cfg.seed)
    return RecipeResult("complete", (path,), computed_cells=1)


# ---------------------------------------------------------------------------
# lyap-grid (chaotic-region map)

@dataclass(frozen=True)
class LyapGridConfig:
    a_values: tuple[float, ...]
    xi_numerators: tuple[int, ...]
    denominator: int = 50
    n_steps: int = 50000
    transient: int = 10000
    dt: float = 0.01
    seed: int = 0

    @classmethod
    def from_json_dict(cls, d: dict) -> "LyapGridConfig":
        return cls(a_values=tuple(d["a_values"]),
                   xi_numerators=tuple(d["xi_numerators"]),
                   denominator=d.get("denominator", 50),
                   n_steps=d.get("n_steps", 50000),
                   transient=d.get("transient", 10000),
                   dt=d.get("dt", 0.01), seed=d.get("seed", 0))

    def to_json_dict(self) -> dict:
        return {"a_values": list(self.a_values),
                "xi_numerators": list(self.xi_numerators),
                "denominator": self.denominator, "n_steps": self.n_steps,
                "transient": self.transient, "dt": self.dt, "seed": self.seed}


def _lyap_grid_task(task):
    a, xi_num = task
    w = _WORKER
    cfg: LyapGridConfig = w["config"]
    xi = FracExponent(xi_num, cfg.denominator)
    system = FractionalHalvorsen(a=a, xi1=xi, xi2=xi, xi3=xi)
    try:
        traj = _generate_post_transient(system, cfg.n_steps - cfg.transient,
                                        cfg.transient, cfg.dt, cfg.seed,
                                        IntegratorConfig())
        lyap = lyapunov_rosenstein(traj, w["lyap_cfg"])
        return [a, xi_num, cfg.denominator, False, lyap]
    except (Diverged, ValueError):
        return [a, xi_num, cfg.denominator, True, math.nan]


def run_lyap_grid(cfg: LyapGridConfig, out_dir, jobs: int = 1,
                  resume: bool = False) -> RecipeResult:
    table_path, completed = _prepare_out(out_dir, "lyap-grid",
                                         cfg.to_json_dict(), cfg.seed,
                                         "lyap_grid.csv", 2, resume)
    header = ["a", "xi_num", "xi_den", "diverged", "lyap"]
    tasks = [(a, n) for a in cfg.a_values for n in cfg.xi_numerators]
    todo = [t for t in tasks if (_fmt(t[0]), _fmt(t[1])) not in completed]
    payload = {"config": cfg, "lyap_cfg": RosensteinConfig()}
    fresh = run_cells(_lyap_grid_task, todo, jobs, payload)
    fresh_by_key = {(_fmt(r[0]), _fmt(r[1])): r for r in fresh}
    rows = []
    for t in tasks:
        key = (_fmt(t[0]), _fmt(t[1]))
        rows.append(completed.get(key) or fresh_by_key[key])
    write_table(table_path, header, rows)
    return RecipeResult("complete", (table_path,), computed_cells=len(fresh),
                        reused_cells=len(tasks) - len(todo))


# ---------------------------------------------------------------------------
# eta-sweep (nonlinearity matching, single data exponent)

@dataclass(frozen=True)
class EtaSweepConfig:
    """Sweep the model exponent against data with one nonlinearity.

    ``xi_numerators`` lists the Halvorsen data exponents (all three equal);
    an entry of 0 means the Lorenz system instead (recorded with its
    quadratic nonlinearity, numerator 100).
    """

    xi_numerators: tuple[int, ...]
    eta_numerators: tuple[int, ...]
    denominator: int = 50
    a: float = 3.98
    seeds: int = 5
    block_size: int = 3
    spectral_radius: float = 1e-3
    ridge: float = 1e-6
    sync_len: int = 1000
    train_len: int = 5000
    predict_len: int = 2000
    offset_span: int = 2000
    transient: int = 10000
    dt: float = 0.01
    seed: int = 0

    @classmethod
    def from_json_dict(cls, d: dict) -> "EtaSweepConfig":
        kwargs = {k: d[k] for k in d}
        kwargs["xi_numerators"] = tuple(d["xi_numerators"])
        kwargs["eta_numerators"] = tuple(d["eta_numerators"])
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        d = self.__dict__.copy()
        d["xi_numerators"] = list(self.xi_numerators)
        d["eta_numerators"] = list(self.eta_numerators)
        return d


def _sweep_payload_and_rows(cfg, traj_specs, table_name, out_dir,
                            jobs, resume, recipe_name, seeds_per_cell):
    """Common path for all minimal-RC sweeps: integrate the data trajectories,
    compute per-trajectory truth stats, run the (traj, eta, seed) grid."""
    table_path, completed = _prepare_out(out_dir, recipe_name,
                                         cfg.to_json_dict(), cfg.seed,
                                         table_name, 7, resume)
    train_spec = _TrainSpec(cfg.sync_len, cfg.train_len, cfg.predict_len)
    n_keep = train_spec.window_len + cfg.offset_span
    lyap_cfg = RosensteinConfig()
    cdim_cfg = CorrDimConfig()

    trajectories = {}
    stats = {}
    xi_by_traj = {}
    offsets = {}
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    for key, system, xi_nums in traj_specs:
        traj = _generate_post_transient(system, n_keep, cfg.transient, cfg.dt,
                                        cfg.seed, IntegratorConfig())
        trajectories[key] = traj
        stats[key] = _trajectory_stats(traj, lyap_cfg, cdim_cfg)
        xi_by_traj[key] = (xi_nums, cfg.denominator)
        for s in range(seeds_per_cell):
            offsets[(key, s)] = int(rng.integers(0, cfg.offset_span + 1))

    payload = {
        "trajectories": trajectories, "stats": stats, "xi_by_traj": xi_by_traj,
        "offsets": offsets, "eta_den": cfg.denominator,
        "train_spec": train_spec, "lyap_cfg": lyap_cfg, "cdim_cfg": cdim_cfg,
        "minrc": {"block_size": cfg.block_size,
                  "spectral_radius": cfg.spectral_radius, "ridge": cfg.ridge},
    }
    tasks = [(key, eta_num, s)
             for key, _, _ in traj_specs
             for eta_num in cfg.eta_numerators
             for s in range(seeds_per_cell)]

    def row_key(task):
        key, eta_num, s = task
        xi_nums, xi_den = xi_by_traj[key]
        return tuple(_fmt(v) for v in
                     (xi_nums[0], xi_nums[1], xi_nums[2], xi_den,
                      eta_num, cfg.denominator, s))

    todo = [t for t in tasks if row_key(t) not in completed]
    fresh = run_cells(_sweep_task, todo, jobs, payload)
    fresh_by_key = {}
    for t, row in zip(todo, fresh):
        fresh_by_key[row_key(t)] = row
    rows = [completed.get(row_key(t)) or fresh_by_key[row_key(t)] for t in tasks]
    write_table(table_path, SWEEP_HEADER, rows)
    return table_path, rows, len(fresh), len(tasks) - len(todo)


def run_eta_sweep(cfg: EtaSweepConfig, out_dir, jobs: int = 1,
                  resume: bool = False) -> RecipeResult:
    traj_specs = []
    for xi_num in cfg.xi_numerators:
        if xi_num == 0:
            traj_specs.append(("lorenz", Lorenz(), (100, 100, 100)))
        else:
            xi = FracExponent(xi_num, cfg.denominator)
            traj_specs.append((f"xi{xi_num}",
                               FractionalHalvorsen(a=cfg.a, xi1=xi, xi2=xi, xi3=xi),
                               (xi_num, xi_num, xi_num)))
    table_path, rows, computed, reused = _sweep_payload_and_rows(
        cfg, traj_specs, "eta_sweep.csv", out_dir, jobs, resume,
        "eta-sweep", cfg.seeds)
    norm_path = os.path.join(out_dir, "eta_sweep_normalized.csv")
    write_table(norm_path, *normalize_sweep(rows))
    return RecipeResult("complete", (table_path, norm_path),
                        computed_cells=computed, reused_cells=reused)


def normalize_sweep(rows: list[list]) -> tuple[list[str], list[list]]:
    """Per-exponent-tuple mean forecast horizon over seeds, normalized
    against its peak across the eta grid (the relative-performance curve)."""
    groups: dict[tuple, dict[int, list[float]]] = {}
    for row in rows:
        xi_key = tuple(_fmt(v) for v in row[:4])  # rows may be cached strings
        eta_num = int(row[4])
        fh = float(row[9])
        groups.setdefault(xi_key, {}).setdefault(eta_num, []).append(fh)
    header = ["xi1_num", "xi2_num", "xi3_num", "xi_den", "eta_num",
              "mean_fh_steps", "relative_fh"]
    out = []
    for xi_key in groups:
        means = {eta: float(np.mean(v)) for eta, v in groups[xi_key].items()}
        peak = max(means.values())
        for eta in sorted(means):
            rel = means[eta] / peak if peak > 0 else math.nan
            out.append(list(xi_key) + [eta, means[eta], rel])
    return header, out


# ---------------------------------------------------------------------------
# two- and three-exponent sweeps

@dataclass(frozen=True)
class MultiExponentConfig:
    n_trajectories: int = 10
    eta_numerators: tuple[int, ...] = tuple(range(52, 281, 2))
    numerator_min: int = 54
    numerator_max: int = 280
    denominator: int = 50
    a: float = 3.98
    seeds: int = 1
    block_size: int = 3
    spectral_radius: float = 1e-3
    ridge: float = 1e-6
    sync_len: int = 1000
    train_len: int = 5000
    predict_len: int = 2000
    offset_span: int = 2000
    transient: int = 10000
    dt: float = 0.01
    lyap_threshold: float = 0.01
    resample_budget_factor: int = 10
    seed: int = 0

    @classmethod
    def from_json_dict(cls, d: dict) -> "MultiExponentConfig":
        kwargs = {k: d[k] for k in d}
        if "eta_numerators" in kwargs:
            kwargs["eta_numerators"] = tuple(d["eta_numerators"])
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        d = self.__dict__.copy()
        d["eta_numerators"] = list(self.eta_numerators)
        return d


def _candidate_task(task):
    """Integrate one candidate exponent tuple and judge its validity."""
    idx, xi_nums = task
    w = _WORKER
    cfg: MultiExponentConfig = w["config"]
    den = cfg.denominator
    system = FractionalHalvorsen(a=cfg.a,
                                 xi1=FracExponent(xi_nums[0], den),
                                 xi2=FracExponent(xi_nums[1], den),
                                 xi3=FracExponent(xi_nums[2], den))
    try:
        traj = _generate_post_transient(system, w["n_keep"], cfg.transient,
                                        cfg.dt, cfg.seed, IntegratorConfig())
        lyap, cdim = _trajectory_stats(traj, w["lyap_cfg"], w["cdim_cfg"])
    except (Diverged, ValueError):
        return idx, None, math.nan, math.nan
    if lyap < cfg.lyap_threshold:
        return idx, None, lyap, cdim
    return idx, traj, lyap, cdim


def _sample_exponent_tuples(cfg: MultiExponentConfig, n_distinct: int,
                            count: int) -> list[tuple[int, int, int]]:
    """Candidate (xi1, xi2, xi3) numerator tuples; two-exponent sampling sets
    xi1 = xi2 != xi3, three-exponent all distinct."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2,)))
    valid = np.arange(cfg.numerator_min, cfg.numerator_max + 1, 2)
    tuples = []
    while len(tuples) < count:
        if n_distinct == 2:
            pair = rng.choice(valid, size=2, replace=False)
            tuples.append((int(pair[0]), int(pair[0]), int(pair[1])))
        else:
            triple = rng.choice(valid, size=3, replace=False)
            tuples.append((int(triple[0]), int(triple[1]), int(triple[2])))
    return tuples


def _run_multi_exponent(cfg: MultiExponentConfig, out_dir, jobs, resume,
                        n_distinct: int, recipe_name: str) -> RecipeResult:
    # validate any resume target before the expensive trajectory search
    table_path, completed = _prepare_out(out_dir, recipe_name,
                                         cfg.to_json_dict(), cfg.seed,
                                         f"{recipe_name.replace('-', '_')}.csv",
                                         7, resume)
    train_spec = _TrainSpec(cfg.sync_len, cfg.train_len, cfg.predict_len)
    n_keep = train_spec.window_len + cfg.offset_span
    lyap_cfg = RosensteinConfig()
    cdim_cfg = CorrDimConfig()

    budget = cfg.resample_budget_factor * cfg.n_trajectories
    candidates = _sample_exponent_tuples(cfg, n_distinct, budget)
    payload = {"config": cfg, "n_keep": n_keep,
               "lyap_cfg": lyap_cfg, "cdim_cfg": cdim_cfg}

    accepted = []  # (xi_nums, traj, lyap, cdim) in candidate order
    chunk = max(cfg.n_trajectories, jobs * 2)
    pos = 0
    while len(accepted) < cfg.n_trajectories and pos < budget:
        batch = [(i, candidates[i]) for i in range(pos, min(pos + chunk, budget))]
        pos += len(batch)
        for idx, traj, lyap, cdim in run_cells(_candidate_task, batch, jobs, payload):
            if traj is not None and len(accepted) < cfg.n_trajectories:
                accepted.append((candidates[idx], traj, lyap, cdim))
    status = "complete" if len(accepted) == cfg.n_trajectories else "partial"

    traj_specs = []
    trajectories, stats, xi_by_traj, offsets = {}, {}, {}, {}
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    for i, (xi_nums, traj, lyap, cdim) in enumerate(accepted):
        key = f"traj{i}_{xi_nums[0]}_{xi_nums[1]}_{xi_nums[2]}"
        traj_specs.append((key, None, xi_nums))
        trajectories[key] = traj
        stats[key] = (lyap, cdim)
        xi_by_traj[key] = (xi_nums, cfg.denominator)
        for s in range(cfg.seeds):
            offsets[(key, s)] = int(rng.integers(0, cfg.offset_span + 1))

    payload = {
        "trajectories": trajectories, "stats": stats, "xi_by_traj": xi_by_traj,
        "offsets": offsets, "eta_den": cfg.denominator,
        "train_spec": train_spec, "lyap_cfg": lyap_cfg, "cdim_cfg": cdim_cfg,
        "minrc": {"block_size": cfg.block_size,
                  "spectral_radius": cfg.spectral_radius, "ridge": cfg.ridge},
    }
    tasks = [(key, eta_num, s)
             for key, _, _ in traj_specs
             for eta_num in cfg.eta_numerators
             for s in range(cfg.seeds)]

    def row_key(task):
        key, eta_num, s = task
        xi_nums, xi_den = xi_by_traj[key]
        return tuple(_fmt(v) for v in
                     (xi_nums[0], xi_nums[1], xi_nums[2], xi_den,
                      eta_num, cfg.denominator, s))

    todo = [t for t in tasks if row_key(t) not in completed]
    fresh = run_cells(_sweep_task, todo, jobs, payload)
    fresh_by_key = {row_key(t): row for t, row in zip(todo, fresh)}
    rows = [completed.get(row_key(t)) or fresh_by_key[row_key(t)] for t in tasks]
    write_table(table_path, SWEEP_HEADER, rows)
    return RecipeResult(status, (table_path,), computed_cells=len(fresh),
                        reused_cells=len(tasks) - len(todo))


def run_two_exponent(cfg: MultiExponentConfig, out_dir, jobs: int = 1,
                     resume: bool = False) -> RecipeResult:
    return _run_multi_exponent(cfg, out_dir, jobs, resume, 2, "two-exp")


def run_three_exponent(cfg: MultiExponentConfig, out_dir, jobs: int = 1,
                       resume: bool = False) -> RecipeResult:
    return _run_multi_exponent(cfg, out_dir, jobs, resume, 3, "three-exp")


# ---------------------------------------------------------------------------
# library-compare (classic RC, three arms)

@dataclass(frozen=True)
class LibraryCompareConfig:
    repetitions: int = 100
    d_small: int = 100
    d_large: int = 1100
    library_max_power: int = 3
    spectral_radius: float = 0.2
    ridge: float = 1e-4
    edge_probability: float = 0.1
    input_scale: float = 0.5
    sync_len: int = 1000
    train_len: int = 4000
    predict_len: int = 1500
    offset_span: int = 2000
    transient: int = 10000
    dt: float = 0.01
    seed: int = 0

    @classmethod
    def from_json_dict(cls, d: dict) -> "LibraryCompareConfig":
        return cls(**d)

    def to_json_dict(self) -> dict:
        return self.__dict__.copy()


ARMS = ("plain_small", "fractional_small", "plain_large")


def _library_task(task):
    arm, rep = task
    w = _WORKER
    cfg: LibraryCompareConfig = w["config"]
    traj: Trajectory = w["trajectory"]
    lyap_true = w["lyap_true"]
    offset = w["offsets"][rep]
    machine_seed = w["machine_seeds"][(arm, rep)]

    if arm == "plain_small":
        dim, library = cfg.d_small, ()
    elif arm == "fractional_small":
        dim, library = cfg.d_small, fractional_library(cfg.library_max_power)
    else:
        dim, library = cfg.d_large, ()
    machine = build_classic(ClassicRCConfig(
        input_dim=traj.dim, reservoir_dim=dim,
        spectral_radius=cfg.spectral_radius, ridge=cfg.ridge,
        edge_probability=cfg.edge_probability, input_scale=cfg.input_scale,
        library=library, seed=machine_seed))

    train_part = traj.window(offset, cfg.sync_len + cfg.train_len + 1)
    truth = traj.window(offset + cfg.sync_len + cfg.train_len + 1,
                        cfg.predict_len)
    try:
        fitted = readout.train(machine, train_part, cfg.sync_len)
    except (ValueError, np.linalg.LinAlgError):
        return [arm, rep, machine_seed, offset, True, 0, 0.0]
    warm_start = len(train_part) - cfg.sync_len
    warmup = train_part.window(warm_start, cfg.sync_len)
    pred = readout.predict(machine, fitted, warmup, cfg.predict_len)
    if len(pred) == 0:
        return [arm, rep, machine_seed, offset, True, 0, 0.0]
    fh = forecast_horizon(truth.window(0, len(pred)), pred.to_trajectory(),
                          lyap_true)
    return [arm, rep, machine_seed, offset, pred.diverged,
            fh.steps, fh.lyapunov_times]


def run_library_compare(cfg: LibraryCompareConfig, out_dir, jobs: int = 1,
                        resume: bool = False) -> RecipeResult:
    table_path, completed = _prepare_out(out_dir, "library-compare",
                                         cfg.to_json_dict(), cfg.seed,
                                         "library_compare.csv", 2, resume)
    header = ["arm", "rep", "machine_seed", "offset", "diverged",
              "fh_steps", "fh_lyap"]
    n_keep = cfg.sync_len + cfg.train_len + 1 + cfg.predict_len + cfg.offset_span
    traj = _generate_post_transient(Lorenz(), n_keep, cfg.transient, cfg.dt,
                                    cfg.seed, IntegratorConfig())
    lyap_true = lyapunov_rosenstein(traj)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    offsets = {rep: int(rng.integers(0, cfg.offset_span + 1))
               for rep in range(cfg.repetitions)}
    seed_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(3,)))
    machine_seeds = {}
    for rep in range(cfg.repetitions):
        for arm in ARMS:
            machine_seeds[(arm, rep)] = int(seed_rng.integers(0, 2**63 - 1))

    payload = {"config": cfg, "trajectory": traj, "lyap_true": lyap_true,
               "offsets": offsets, "machine_seeds": machine_seeds}
    tasks = [(arm, rep) for arm in ARMS for rep in range(cfg.repetitions)]
    todo = [t for t in tasks if (_fmt(t[0]), _fmt(t[1])) not in completed]
    fresh = run_cells(_library_task, todo, jobs, payload)
    fresh_by_key = {(_fmt(r[0]), _fmt(r[1])): r for r in fresh}
    rows = []
    for t in tasks:
        key = (_fmt(t[0]), _fmt(t[1]))
        rows.append(completed.get(key) or fresh_by_key[key])
    write_table(table_path, header, rows)

    summary_path = os.path.join(out_dir, "library_compare_summary.csv")
    summary_rows = []
    for arm in ARMS:
        vals = np.array([float(r[6]) for r in rows if r[0] == arm])
        vals = vals[np.isfinite(vals)]
        summary_rows.append([arm, len(vals), float(vals.mean()),
                             float(vals.std(ddof=1)),
                             float(vals.std(ddof=1) / math.sqrt(len(vals)))])
    write_table(summary_path, ["arm", "n", "mean_fh_lyap", "std", "sem"],
                summary_rows)
    return RecipeResult("complete", (table_path, summary_path),
                        computed_cells=len(fresh),
                        reused_cells=len(tasks) - len(todo))


# ---------------------------------------------------------------------------
# probe recipe

@dataclass(frozen=True)
class ProbeRecipeConfig:
    source: dict  # {"system": {...}} or {"csv": path, "column": name-or-index}
    n_steps: int = 20000
    transient: int = 10000
    dt: float = 0.01
    eta_start: int = 52
    eta_stop: int = 280
    eta_step: int = 2
    denominator: int = 50
    block_size: int = 3
    spectral_radius: float = 0.1
    ridge: float = 1e-6
    sync_len: int = 100
    train_len: int = 1000
    predict_len: int = 2000
    surrogate_count: int = 20
    match_tol: float = 0.15
    seed: int = 0

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProbeRecipeConfig":
        return cls(**d)

    def to_json_dict(self) -> dict:
        return self.__dict__.copy()

    def probe_config(self) -> ProbeConfig:
        return ProbeConfig(
            eta_grid=default_eta_grid(self.eta_start, self.eta_stop,
                                      self.eta_step, self.denominator),
            block_size=self.block_size,
            spectral_radius=self.spectral_radius,
            ridge=self.ridge, sync_len=self.sync_len,
            train_len=self.train_len, predict_len=self.predict_len,
            surrogate_count=self.surrogate_count,
            match_tol=self.match_tol, seed=self.seed)


def _probe_eta_task(task):
    """One probe grid point: original pipeline plus its surrogate band."""
    from .probe import _pipeline_cdim
    eta_num = task
    w = _WORKER
    cfg: ProbeConfig = w["probe_cfg"]
    eta = FracExponent(eta_num, w["eta_den"])
    cdim_pred = _pipeline_cdim(w["series"], eta, cfg)
    sur = np.array([_pipeline_cdim(s, eta, cfg) for s in w["surrogates"]])
    sur = sur[np.isfinite(sur)]
    if sur.size >= 2:
        sur_mean, sur_std = float(sur.mean()), float(sur.std(ddof=1))
    else:
        sur_mean, sur_std = math.nan, math.nan
    return [eta_num, w["eta_den"], cdim_pred, sur_mean, sur_std]


def run_probe(cfg: ProbeRecipeConfig, out_dir, jobs: int = 1,
              resume: bool = False) -> RecipeResult:
    from .probe import ingest_returns
    from .surrogates import surrogate_trajectory

    table_path, completed = _prepare_out(out_dir, "probe", cfg.to_json_dict(),
                                         cfg.seed, "probe.csv", 2, resume)
    if "system" in cfg.source:
        system = system_from_json(cfg.source["system"])
        series = _generate_post_transient(system, cfg.n_steps, cfg.transient,
                                          cfg.dt, cfg.seed, IntegratorConfig())
    else:
        series = ingest_returns(cfg.source["csv"], cfg.source.get("column", 1))

    probe_cfg = cfg.probe_config()
    cdim_true = correlation_dimension(series, probe_cfg.cdim)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.surrogate_count)
    surrogates = [surrogate_trajectory(series, np.random.default_rng(c))
                  for c in children]
    payload = {"probe_cfg": probe_cfg, "series": series,
               "surrogates": surrogates, "eta_den": cfg.denominator}
    tasks = [e.numerator for e in probe_cfg.eta_grid]
    todo = [t for t in tasks
            if (_fmt(t), _fmt(cfg.denominator)) not in completed]
    fresh = run_cells(_probe_eta_task, todo, jobs, payload)
    fresh_by_key = {(_fmt(r[0]), _fmt(r[1])): r for r in fresh}

    rows = []
    mu_recon = None
    for t in tasks:
        key = (_fmt(t), _fmt(cfg.denominator))
        row = completed.get(key) or fresh_by_key[key]
        cdim_pred, sur_mean, sur_std = (float(row[2]), float(row[3]),
                                        float(row[4]))
        match = (math.isfinite(cdim_pred)
                 and abs(cdim_pred - cdim_true) <= cfg.match_tol)
        outside = (math.isfinite(cdim_pred) and math.isfinite(sur_mean)
                   and abs(cdim_pred - sur_mean) > sur_std)
        rows.append(list(row[:5]) + [int(outside), int(match)])
        if mu_recon is None and match and outside:
            mu_recon = FracExponent(int(row[0]), int(row[1]))
    write_table(table_path, ["eta_num", "eta_den", "cdim_pred", "sur_mean",
                             "sur_std", "outside", "match"], rows)

    report = {
        "cdim_true": cdim_true,
        "verdict": "found" if mu_recon is not None else "failed",
        "mu_recon": None if mu_recon is None else
            {"numerator": mu_recon.numerator,
             "denominator": mu_recon.denominator,
             "value": mu_recon.value},
    }
    report_path = os.path.join(out_dir, "probe_report.json")
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return RecipeResult("complete", (table_path, report_path),
                        computed_cells=len(fresh),
                        reused_cells=len(tasks) - len(todo))


# ---------------------------------------------------------------------------
# full width at a fraction of peak performance

def fwhm_width(eta_values: np.ndarray, relative: np.ndarray,
               level: float) -> tuple[float, float] | None:
    """Interval of eta where the relative performance stays at or above
    ``level`` around the peak, with linear interpolation at the crossings.
    Returns None when the curve never reaches the level."""
    if not (0 < level <= 1):
        raise ValueError("level must be in (0, 1]")
    eta = np.asarray(eta_values, dtype=float)
    rel = np.asarray(relative, dtype=float)
    order = np.argsort(eta)
    eta, rel = eta[order], rel[order]
    finite = np.isfinite(rel)
    if not finite.any() or np.nanmax(rel) < level:
        return None
    peak = int(np.nanargmax(rel))

    lo = eta[peak]
    for i in range(peak - 1, -1, -1):
        if not np.isfinite(rel[i]):
            break
        if rel[i] < level:
            frac = (level - rel[i]) / (rel[i + 1] - rel[i])
            lo = eta[i] + frac * (eta[i + 1] - eta[i])
            break
        lo = eta[i]
    hi = eta[peak]
    for i in range(peak + 1, len(eta)):
        if not np.isfinite(rel[i]):
            break
        if rel[i] < level:
            frac = (level - rel[i - 1]) / (rel[i] - rel[i - 1])
            hi = eta[i - 1] + frac * (eta[i] - eta[i - 1])
            break
        hi = eta[i]
    return float(lo), float(hi)


def run_fwhm(normalized_csv, out_dir, level: float = 0.75) -> RecipeResult:
    """Per-exponent-tuple width table from an eta-sweep normalized table."""
    os.makedirs(out_dir, exist_ok=True)
    header, rows = read_table(normalized_csv)
    idx = {name: i for i, name in enumerate(header)}
    groups: dict[tuple, list[tuple[float, float]]] = {}
    for row in rows:
        key = (row[idx["xi1_num"]], row[idx["xi2_num"]],
               row[idx["xi3_num"]], row[idx["xi_den"]])
        eta = float(row[idx["eta_num"]]) / float(row[idx["xi_den"]])
        rel = float(row[idx["relative_fh"]])
        groups.setdefault(key, []).append((eta, rel))
    out_rows = []
    for key, pairs in groups.items():
        eta = np.array([p[0] for p in pairs])
        rel = np.array([p[1] for p in pairs])
        interval = fwhm_width(eta, rel, level)
        if interval is None:
            out_rows.append(list(key) + [level, math.nan, math.nan, 0])
        else:
            out_rows.append(list(key) + [level, interval[0], interval[1], 1])
    path = os.path.join(out_dir, "fwhm.csv")
    write_table(path, ["xi1_num", "xi2_num", "xi3_num", "xi_den", "level",
                       "eta_lo", "eta_hi", "reached"], out_rows)
    return RecipeResult("complete", (path,), computed_cells=len(out_rows))
