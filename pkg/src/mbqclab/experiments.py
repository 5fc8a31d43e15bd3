"""Experiment runners: parameter sweeps behind the paper-style figures and
theorem-scale checks, with ground-state caching and CSV/JSON emission.

Every runner takes an :class:`ExperimentConfig` and returns a pair of
:class:`ResultTable` (data, errors). Data tables never contain NaN; sweep
points that fail are routed to the errors table and the run continues.
"""

from __future__ import annotations

import configparser
import csv
import datetime
import hashlib
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import RotationSchedule, channel_matrix, two_site_closed_form, purity_loss
from .errors import ConvergenceError
from .groundstate import (
    GroundState,
    SolverParams,
    expectation,
    load_state,
    save_state,
    solve_dmrg,
    solve_exact,
)
from .pauli import ChainSpec
from .stringorder import (
    F_of_delta,
    StringOrderProfile,
    convexity_check,
    kappa,
    moon_edge_areas,
    profile,
)

EXPERIMENTS = (
    "fig1_packing_density",
    "fig2_kappa_scan",
    "fig3_split_vs_delta",
    "thm1_scaling",
    "thm2_optimality",
    "custom",
)

BOUNDARY_ALPHA = 0.98 * math.pi / 4


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, file-round-trippable description of one experiment run."""

    experiment: str = "custom"
    desk: bool = True
    n_sites: int = 0                     # 0 = experiment default
    alphas: tuple[float, ...] = ()       # empty = experiment default
    chi_max: int = 0                     # 0 = per-spec default
    n_sweeps: int = 30
    energy_tol: float = 1e-10
    lanczos_tol: float = 1e-10
    lanczos_max_iter: int = 20000
    m_values: tuple[int, ...] = tuple(range(2, 17))
    deltas: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    beta_log: float = 0.2
    beta_small: float = 0.05
    region_n: int = 120
    kappa_m: int = 16
    output_dir: str = "out"
    cache_dir: str = ""
    workers: int = 2

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    # ------------------------------------------------------------- file form
    _SECTIONS = {
        "experiment": ("experiment", "desk"),
        "chain": ("n_sites", "alphas"),
        "solver": ("chi_max", "n_sweeps", "energy_tol", "lanczos_tol", "lanczos_max_iter"),
        "schedule": ("m_values", "deltas", "beta_log", "beta_small", "region_n", "kappa_m"),
        "output": ("output_dir", "cache_dir", "workers"),
    }

    def to_ini(self, path: str | Path) -> Path:
        parser = configparser.ConfigParser()
        data = asdict(self)
        for section, keys in self._SECTIONS.items():
            parser[section] = {}
            for key in keys:
                value = data[key]
                if isinstance(value, tuple):
                    parser[section][key] = " ".join(repr(v) for v in value)
                else:
                    parser[section][key] = repr(value)
        path = Path(path)
        with path.open("w") as fh:
            parser.write(fh)
        return path

    @classmethod
    def from_ini(cls, path: str | Path) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ValueError(f"cannot read config file {path}")
        kwargs = {}
        types = {f.name: f.type for f in cls.__dataclass_fields__.values()}  # noqa: F841
        for section, keys in cls._SECTIONS.items():
            if section not in parser:
                continue
            for key in keys:
                if key not in parser[section]:
                    continue
                raw = parser[section][key].strip()
                default = getattr(cls, key)
                if isinstance(default, tuple) or key in ("alphas", "m_values", "deltas"):
                    items = raw.split()
                    conv = float if key == "alphas" else int
                    kwargs[key] = tuple(conv(eval_literal(t)) for t in items)
                elif isinstance(default, bool):
                    kwargs[key] = raw.lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    kwargs[key] = int(eval_literal(raw))
                elif isinstance(default, float):
                    kwargs[key] = float(eval_literal(raw))
                else:
                    kwargs[key] = raw.strip("'\"")
        return cls(**kwargs)

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def solver_params(self, spec: ChainSpec) -> SolverParams:
        overrides = dict(
            n_sweeps=self.n_sweeps,
            energy_tol=self.energy_tol,
            lanczos_tol=self.lanczos_tol,
            lanczos_max_iter=self.lanczos_max_iter,
        )
        if self.chi_max:
            overrides["chi_max"] = self.chi_max
        return SolverParams.for_spec(spec, **overrides)


def eval_literal(text: str):
    import ast

    return ast.literal_eval(text)


# ------------------------------------------------------------------- tables
class ResultTable:
    """Equal-length named columns plus run metadata; NaN is rejected."""

    def __init__(self, column_names: list[str], metadata: dict | None = None):
        self.columns: dict[str, list] = {name: [] for name in column_names}
        self.metadata = metadata or {}

    def append(self, **row):
        if set(row) != set(self.columns):
            raise ValueError(f"row keys {sorted(row)} != columns {sorted(self.columns)}")
        for value in row.values():
            if isinstance(value, float) and math.isnan(value):
                raise ValueError("NaN is not allowed in result tables")
        for key, value in row.items():
            self.columns[key].append(value)

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, name: str) -> list:
        return self.columns[name]

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        names = list(self.columns)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(names)
            for i in range(len(self)):
                writer.writerow([_format_cell(self.columns[n][i]) for n in names])
        return path


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_manifest(path: str | Path, config: ExperimentConfig, tables: dict[str, ResultTable]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": asdict(config),
        "config_hash": config.config_hash(),
        "code_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "tables": {name: {"rows": len(t), "metadata": t.metadata} for name, t in tables.items()},
    }
    path.write_text(json.dumps(manifest, indent=2, default=list))
    return path


# -------------------------------------------------------------------- cache
class GroundStateCache:
    """Disk-backed ground-state store keyed by (alpha, N, solver params)."""

    def __init__(self, directory: str | Path | None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._guard = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self._memory: dict[str, GroundState] = {}

    @staticmethod
    def key(spec: ChainSpec, params: SolverParams) -> str:
        blob = json.dumps(
            {"alpha": repr(spec.alpha), "n": spec.n_sites, "params": asdict(params)},
            sort_keys=True,
        )
        return hashlib.sha1(blob.encode()).hexdigest()[:20]

    def _lock_for(self, key: str) -> threading.Lock:
        with self._guard:
            return self._key_locks.setdefault(key, threading.Lock())

    def get(self, spec: ChainSpec, params: SolverParams) -> GroundState:
        key = self.key(spec, params)
        with self._lock_for(key):
            if key in self._memory:
                return self._memory[key]
            if self.directory:
                path = self.directory / f"gs_{key}.npz"
                if path.exists():
                    state = load_state(path)
                    self._memory[key] = state
                    return state
            state = _solve_auto(spec, params)
            self._memory[key] = state
            if self.directory:
                save_state(state, self.directory / f"gs_{key}.npz")
            return state


def _solve_auto(spec: ChainSpec, params: SolverParams) -> GroundState:
    if spec.n_sites <= 15:
        return solve_exact(spec, params)
    return solve_dmrg(spec, params)


# ------------------------------------------------------------------ helpers
def _default_alphas_fig2(desk: bool) -> tuple[float, ...]:
    fractions = np.linspace(-0.9, 0.9, 13 if desk else 25)
    return tuple(float(f * math.pi / 4) for f in fractions)


def _centered_buffer(n_sites: int, region: int) -> int:
    buffer_d = max(3, (n_sites - region) // 2)
    if buffer_d % 2 == 0:
        buffer_d -= 1
    return buffer_d


def _packing_schedule(prof: StringOrderProfile, n_sites: int, region: int, delta: int, beta_log: float) -> RotationSchedule:
    m = region // delta
    return RotationSchedule.auto_scaled(
        "z", m, delta, _centered_buffer(n_sites, region), beta_log, prof.bulk_value
    )


# ------------------------------------------------------------------ runners
def run_fig2(config: ExperimentConfig, cache: GroundStateCache | None = None):
    """kappa across the phase at the densest spacing."""
    cache = cache or GroundStateCache(config.cache_dir or None)
    n = config.n_sites or (201 if config.desk else 501)
    alphas = config.alphas or _default_alphas_fig2(config.desk)
    table = ResultTable(["alpha", "kappa"])
    errors = ResultTable(["alpha", "error"])
    diag = []

    def point(alpha: float):
        spec = ChainSpec(n, alpha)
        state = cache.get(spec, config.solver_params(spec))
        prof = profile(state, "odd")
        return kappa(prof, config.kappa_m, 2), state

    results = {}
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = {alpha: pool.submit(point, alpha) for alpha in alphas}
    for alpha in alphas:
        try:
            value, state = futures[alpha].result()
            results[alpha] = value
            diag.append({"alpha": alpha, "residual": state.convergence.residual})
        except ConvergenceError as exc:
            errors.append(alpha=alpha, error=str(exc))
    for alpha in alphas:
        if alpha in results:
            table.append(alpha=alpha, kappa=results[alpha])
    table.metadata = {"n_sites": n, "kappa_m": config.kappa_m, "delta": 2, "solver": diag}
    return table, errors


def run_fig3(config: ExperimentConfig, cache: GroundStateCache | None = None):
    """Normalized two-site purity loss vs separation near the phase boundary."""
    cache = cache or GroundStateCache(config.cache_dir or None)
    n = config.n_sites or 201
    alpha = config.alphas[0] if config.alphas else BOUNDARY_ALPHA
    spec = ChainSpec(n, alpha)
    state = cache.get(spec, config.solver_params(spec))
    deltas = config.deltas if config.deltas != ExperimentConfig.deltas else tuple(range(2, 61, 2))
    prof = profile(state, "odd", deltas=list(deltas))
    beta = config.beta_small

    k_center = max(k for k in prof.k_geq if k <= (n + 1) // 2)
    d1 = purity_loss(
        two_site_closed_form(prof.k_geq[k_center], 0.0, 0.0, beta, 0.0)
    )
    table = ResultTable(["delta", "f", "normalized_loss"])
    errors = ResultTable(["delta", "error"])
    from .stringorder import _pair_sites

    for delta in deltas:
        k, l = _pair_sites(n, "odd", delta)
        triple = two_site_closed_form(
            prof.k_geq[k], prof.k_geq[l], prof.k_pair[float(delta)], beta / 2, beta / 2
        )
        d2 = purity_loss(triple)
        table.append(delta=delta, f=prof.f_values[float(delta)], normalized_loss=d2 / d1)
    table.metadata = {
        "alpha": alpha,
        "n_sites": n,
        "beta": beta,
        "bulk_value": prof.bulk_value,
        "xi_estimate": prof.xi_estimate,
    }
    return table, errors


def run_fig1_packing(config: ExperimentConfig, cache: GroundStateCache | None = None):
    """Loss of purity vs packing density at fixed region size."""
    cache = cache or GroundStateCache(config.cache_dir or None)
    n = config.n_sites or 201
    alpha = config.alphas[0] if config.alphas else BOUNDARY_ALPHA
    spec = ChainSpec(n, alpha)
    state = cache.get(spec, config.solver_params(spec))
    prof = profile(state, "odd")
    table = ResultTable(["delta", "m", "d_m", "f_delta"])
    errors = ResultTable(["delta", "error"])
    for delta in config.deltas:
        if config.region_n % delta:
            errors.append(delta=delta, error=f"delta {delta} does not divide region {config.region_n}")
            continue
        sched = _packing_schedule(prof, n, config.region_n, delta, config.beta_log)
        channel = channel_matrix(state, sched, method="network")
        table.append(
            delta=delta,
            m=sched.m,
            d_m=channel.d_m,
            f_delta=F_of_delta(prof, config.region_n, delta),
        )
    table.metadata = {
        "alpha": alpha,
        "n_sites": n,
        "region_n": config.region_n,
        "beta_log": config.beta_log,
        "bulk_value": prof.bulk_value,
    }
    return table, errors


def run_thm1_scaling(config: ExperimentConfig, cache: GroundStateCache | None = None):
    """m * D_m -> kappa beta^2 with a 1/m residual."""
    cache = cache or GroundStateCache(config.cache_dir or None)
    n = config.n_sites or 101
    alpha = config.alphas[0] if config.alphas else 0.3
    delta = config.deltas[0]
    spec = ChainSpec(n, alpha)
    state = cache.get(spec, config.solver_params(spec))
    prof = profile(state, "odd")
    beta = config.beta_log
    table = ResultTable(["m", "d_m", "m_d_m", "kappa", "residual"])
    errors = ResultTable(["m", "error"])
    buffer_d = _centered_buffer(n, max(config.m_values) * delta)
    for m in config.m_values:
        sched = RotationSchedule.auto_scaled("z", m, delta, buffer_d, beta, prof.bulk_value)
        channel = channel_matrix(state, sched, method="network")
        kap = kappa(prof, m, delta)
        residual = abs(m * channel.d_m - kap * beta * beta)
        table.append(m=m, d_m=channel.d_m, m_d_m=m * channel.d_m, kappa=kap, residual=residual)

    ms = np.array(table.column("m"), dtype=float)
    res = np.array(table.column("residual"), dtype=float)
    mask = res > 0
    slope, intercept = np.polyfit(np.log(ms[mask]), np.log(res[mask]), 1)
    table.metadata = {
        "alpha": alpha,
        "n_sites": n,
        "delta": delta,
        "beta_log": beta,
        "loglog_slope": float(slope),
        "fitted_c": float(math.exp(intercept)),
        "bulk_value": prof.bulk_value,
    }
    return table, errors


def run_thm2_optimality(config: ExperimentConfig, cache: GroundStateCache | None = None):
    """Densest-packing optimality: F, d_m and moon-edge sums over spacings."""
    cache = cache or GroundStateCache(config.cache_dir or None)
    n = config.n_sites or 201
    alpha = config.alphas[0] if config.alphas else BOUNDARY_ALPHA
    spec = ChainSpec(n, alpha)
    state = cache.get(spec, config.solver_params(spec))
    prof = profile(state, "odd")
    report = convexity_check(prof, 1e-6)
    table = ResultTable(["delta", "m_f", "f_delta", "d_m"])
    errors = ResultTable(["delta", "error"])
    for delta in config.deltas:
        if config.region_n % delta:
            errors.append(delta=delta, error=f"delta {delta} does not divide region {config.region_n}")
            continue
        sched = _packing_schedule(prof, n, config.region_n, delta, config.beta_log)
        channel = channel_matrix(state, sched, method="network")
        table.append(
            delta=delta,
            m_f=moon_edge_areas(prof, float(delta)).total,
            f_delta=F_of_delta(prof, config.region_n, delta),
            d_m=channel.d_m,
        )
    table.metadata = {
        "alpha": alpha,
        "n_sites": n,
        "region_n": config.region_n,
        "convexity": {
            "is_convex": report.is_convex,
            "worst_violation": report.worst_violation,
            "violating_distances": list(report.violating_distances),
            "monotone_decreasing": report.monotone_decreasing,
        },
    }
    return table, errors


RUNNERS = {
    "fig1_packing_density": run_fig1_packing,
    "fig2_kappa_scan": run_fig2,
    "fig3_split_vs_delta": run_fig3,
    "thm1_scaling": run_thm1_scaling,
    "thm2_optimality": run_thm2_optimality,
}


def run_experiment(config: ExperimentConfig, cache: GroundStateCache | None = None):
    """Dispatch, write CSV tables and the JSON manifest, return the tables."""
    if config.experiment not in RUNNERS:
        raise ValueError(f"no runner for experiment {config.experiment!r}")
    runner = RUNNERS[config.experiment]
    table, errors = runner(config, cache)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    table.write_csv(out / f"{config.experiment}.csv")
    if len(errors):
        errors.write_csv(out / f"{config.experiment}_errors.csv")
    write_manifest(out / f"{config.experiment}_manifest.json", config, {"data": table, "errors": errors})
    return table, errors
