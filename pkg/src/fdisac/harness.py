"""Seeded Monte-Carlo sweeps over SI level and priority, plus table output.

Configuration is a flat YAML (or JSON) mapping.  Every key is optional:

* ``SystemConfig`` fields (``n_t``, ``p_d_dbm``, ``kappa_si`` ...).  Bearings
  are mappings ``{theta: .., r: .., v: ..}`` and ``alphas`` a list of four.
  ``rng_seed`` is the master seed of the sweep.
* Sweep keys: ``si_levels_db``, ``rho_values``, ``trials``, ``methods``,
  ``outputs``, ``emit``, ``workers``, ``radar_map``, ``theta_step_deg``.
* Frame keys for the range-Doppler output: ``frame_symbols``,
  ``frame_blocks``, ``doppler_convention``, ``n_lags``.

Priority ``ϱ`` maps to the weights ``α₁ = α₂ = ϱ`` and ``α₃ = α₄ = 1``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import numpy as np
import yaml

from . import __version__
from .baselines import BaselineKind, baseline_state
from .metrics import MetricsRecord, beampattern, compute_metrics, default_theta_grid
from .radar_dsp import (
    AngleSpectrum,
    FrameSpec,
    RangeDopplerMap,
    angle_spectrum,
    matched_filter,
    range_doppler_map,
    synthesize_rx_stream,
)
from .scenario import (
    Bearing,
    ChannelSet,
    ConfigError,
    RadarGroundTruth,
    SystemConfig,
    float_key,
    make_rng,
    steering_rx,
    steering_tx,
    synthesize,
)
from .solver import BeamformerState, SolverReport, solve

__all__ = [
    "PROPOSED",
    "METHODS",
    "ExperimentSpec",
    "TrialRecord",
    "CellSummary",
    "SweepResult",
    "parse_config",
    "parse_config_dict",
    "spec_to_dict",
    "trial_rngs",
    "solve_once",
    "baseline_once",
    "radar_map_once",
    "run_trial",
    "run_sweep",
    "render_tables",
    "emit_tables",
    "sweep_outputs",
    "build_manifest",
    "write_outputs",
    "git_describe",
]

PROPOSED = "proposed"
METHODS = (PROPOSED,) + tuple(k.value for k in BaselineKind)

# stream purposes of the per-trial random generators
_CHANNELS, _INIT, _RADAR = 0, 1, 2

_SWEEP_DEFAULTS: dict[str, Any] = {
    "si_levels_db": (10.0, 20.0, 30.0, 40.0, 50.0, 60.0),
    "rho_values": (1.0, 10.0, 100.0, 1000.0),
    "trials": 100,
    "methods": METHODS,
    "outputs": "results",
    "emit": ("csv", "json"),
    "workers": 1,
    "radar_map": True,
    "theta_step_deg": 0.5,
}
_FRAME_KEYS = {"frame_symbols": "n_symbols", "frame_blocks": "n_blocks",
               "doppler_convention": "doppler_convention", "n_lags": "n_lags"}
_BEARING_KEYS = ("target", "uplink", "downlink")
_INT_FIELDS = {"n_t", "n_r", "n_u", "n_d", "max_iters", "rng_seed"}
_BOOL_FIELDS = {"departure_conjugate", "nsp_null_downlink"}


@dataclass(frozen=True)
class ExperimentSpec:
    """A full sweep description.

    Attributes
    ----------
    base : SystemConfig
        Scenario template; ``si_level_db`` and ``alphas`` are overridden per cell.
    si_levels_db, rho_values : tuple of float
        Sweep lattice.
    trials : int
        Monte-Carlo trials per cell.
    methods : tuple of str
        Subset of ``METHODS``.
    outputs : str
        Output directory.
    emit : tuple of str
        Subset of ``("csv", "json")``.
    workers : int
        Worker processes (1 runs in-process).
    radar_map : bool
        Also produce range-Doppler maps for the reference cell.
    frame : FrameSpec
    theta_step_deg : float
        Grid step of beampatterns and angle spectra.
    """

    base: SystemConfig = field(default_factory=SystemConfig)
    si_levels_db: tuple[float, ...] = _SWEEP_DEFAULTS["si_levels_db"]
    rho_values: tuple[float, ...] = _SWEEP_DEFAULTS["rho_values"]
    trials: int = _SWEEP_DEFAULTS["trials"]
    methods: tuple[str, ...] = _SWEEP_DEFAULTS["methods"]
    outputs: str = _SWEEP_DEFAULTS["outputs"]
    emit: tuple[str, ...] = _SWEEP_DEFAULTS["emit"]
    workers: int = _SWEEP_DEFAULTS["workers"]
    radar_map: bool = _SWEEP_DEFAULTS["radar_map"]
    frame: FrameSpec = field(default_factory=FrameSpec)
    theta_step_deg: float = _SWEEP_DEFAULTS["theta_step_deg"]

    def __post_init__(self):
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials", f"must be a positive integer, got {self.trials!r}")
        if not self.si_levels_db:
            raise ConfigError("si_levels_db", "needs at least one level")
        if not self.rho_values:
            raise ConfigError("rho_values", "needs at least one value")
        for rho in self.rho_values:
            if not (math.isfinite(rho) and rho > 0):
                raise ConfigError("rho_values", f"priorities must be positive, got {rho!r}")
        for si in self.si_levels_db:
            if not math.isfinite(si):
                raise ConfigError("si_levels_db", f"levels must be finite, got {si!r}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ConfigError("methods", f"choose from {list(METHODS)}, got {list(self.methods)}")
        bad = [e for e in self.emit if e not in ("csv", "json")]
        if bad:
            raise ConfigError("emit", f"formats must be 'csv' or 'json', got {bad}")
        if isinstance(self.workers, bool) or not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", f"must be a positive integer, got {self.workers!r}")
        if not (self.theta_step_deg > 0 and 180.0 / self.theta_step_deg == round(180.0 / self.theta_step_deg)):
            raise ConfigError("theta_step_deg", "must divide 180 evenly")

    @property
    def master_seed(self) -> int:
        return self.base.rng_seed

    def cell_config(self, si_level_db: float, rho: float) -> SystemConfig:
        return dataclasses.replace(self.base, si_level_db=float(si_level_db)).with_priority(rho)

    def reference_cell(self) -> tuple[float, float]:
        """Cell used for the range-Doppler output: highest SI level, ϱ = 1 when swept."""
        rho = 1.0 if 1.0 in self.rho_values else self.rho_values[0]
        return max(self.si_levels_db), rho


# ---------------------------------------------------------------------------
# Configuration parsing
# ---------------------------------------------------------------------------

def _as_float(key: str, value) -> float:
    # YAML 1.1 reads "1e-25" (no decimal point) as a string, so accept numeric text
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    return float(value)


def _as_int(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _as_bool(key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(key, f"expected true/false, got {value!r}")
    return value


def _as_float_list(key: str, value) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(key, f"expected a list of numbers, got {value!r}")
    return tuple(_as_float(key, v) for v in value)


def _as_str_list(key: str, value) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ConfigError(key, f"expected a list of strings, got {value!r}")
    return tuple(value)


def _parse_bearing(key: str, value) -> Bearing:
    if not isinstance(value, Mapping):
        raise ConfigError(key, f"expected a mapping with theta, r, v; got {value!r}")
    unknown = set(value) - {"theta", "r", "v"}
    if unknown:
        raise ConfigError(f"{key}.{sorted(unknown)[0]}", "unknown key")
    try:
        bearing = Bearing(theta=_as_float(f"{key}.theta", value["theta"]),
                          r=_as_float(f"{key}.r", value["r"]),
                          v=_as_float(f"{key}.v", value.get("v", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"{key}.{exc.args[0]}", "missing") from None
    bearing.validate(key)
    return bearing


def parse_config_dict(data: Mapping[str, Any] | None) -> ExperimentSpec:
    """Build a validated :class:`ExperimentSpec` from a plain mapping.

    Raises
    ------
    ConfigError
        On unknown keys, wrong types or violated invariants; ``key`` names
        the offending entry.
    """
    data = dict(data or {})
    system_fields = set(SystemConfig.field_names())
    sys_kwargs: dict[str, Any] = {}
    sweep_kwargs: dict[str, Any] = {}
    frame_kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in system_fields:
            if key in _BEARING_KEYS:
                sys_kwargs[key] = _parse_bearing(key, value)
            elif key == "alphas":
                sys_kwargs[key] = _as_float_list(key, value)
            elif key in _INT_FIELDS:
                sys_kwargs[key] = _as_int(key, value)
            elif key in _BOOL_FIELDS:
                sys_kwargs[key] = _as_bool(key, value)
            else:
                sys_kwargs[key] = _as_float(key, value)
        elif key in _SWEEP_DEFAULTS:
            if key in ("si_levels_db", "rho_values"):
                sweep_kwargs[key] = _as_float_list(key, value)
            elif key in ("trials", "workers"):
                sweep_kwargs[key] = _as_int(key, value)
            elif key in ("methods", "emit"):
                sweep_kwargs[key] = _as_str_list(key, value)
            elif key == "radar_map":
                sweep_kwargs[key] = _as_bool(key, value)
            elif key == "outputs":
                if not isinstance(value, str):
                    raise ConfigError(key, f"expected a path string, got {value!r}")
                sweep_kwargs[key] = value
            else:
                sweep_kwargs[key] = _as_float(key, value)
        elif key in _FRAME_KEYS:
            if key == "doppler_convention":
                if not isinstance(value, str):
                    raise ConfigError(key, f"expected a string, got {value!r}")
                frame_kwargs[_FRAME_KEYS[key]] = value
            else:
                frame_kwargs[_FRAME_KEYS[key]] = _as_int(key, value)
        else:
            raise ConfigError(key, "unknown key")
    base = SystemConfig(**sys_kwargs)
    config_key = {attr: key for key, attr in _FRAME_KEYS.items()}
    applied: dict[str, Any] = {}
    for attr, value in frame_kwargs.items():
        applied[attr] = value
        try:
            # adding keys one at a time pins the error on the first offending one
            FrameSpec(sample_period=base.sample_period, **applied)
        except ValueError as exc:
            raise ConfigError(config_key[attr], str(exc)) from None
    frame = FrameSpec(sample_period=base.sample_period, **frame_kwargs)
    return ExperimentSpec(base=base, frame=frame, **sweep_kwargs)


def parse_config(path: str | os.PathLike | None) -> ExperimentSpec:
    """Read a YAML/JSON configuration file.  ``None`` or an empty file gives the defaults."""
    if path is None:
        return parse_config_dict({})
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"malformed configuration: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError("<file>", "top level must be a key-value mapping")
    return parse_config_dict(data)


def spec_to_dict(spec: ExperimentSpec) -> dict[str, Any]:
    """Inverse of :func:`parse_config_dict` (plain JSON-compatible types)."""
    out: dict[str, Any] = {}
    for name in SystemConfig.field_names():
        value = getattr(spec.base, name)
        if isinstance(value, Bearing):
            value = {"theta": value.theta, "r": value.r, "v": value.v}
        elif isinstance(value, tuple):
            value = list(value)
        out[name] = value
    for name in _SWEEP_DEFAULTS:
        value = getattr(spec, name)
        out[name] = list(value) if isinstance(value, tuple) else value
    for key, attr in _FRAME_KEYS.items():
        out[key] = getattr(spec.frame, attr)
    return out


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------

def trial_rngs(master_seed: int, si_level_db: float, rho: float, trial: int):
    """Generators for channels, solver initialization and radar symbols of one trial.

    The stream key is ``(bits(si_level_db), bits(ϱ), trial, purpose)`` so every
    lattice point and trial owns distinct streams, independent of the order
    or extent of the sweep.
    """
    key = (float_key(si_level_db), float_key(rho), int(trial))
    return tuple(make_rng(master_seed, *key, purpose) for purpose in (_CHANNELS, _INIT, _RADAR))


def solve_once(cfg: SystemConfig, seed: int | None = None, trial: int = 0):
    """Synthesize one realization and run the proposed solver.

    Returns ``(state, report, channels, ground_truth)``.  ``cfg.alphas`` is
    used as given; ``cfg.alphas[0]`` acts as the priority for seeding.
    """
    seed = cfg.rng_seed if seed is None else seed
    rng_ch, rng_init, _ = trial_rngs(seed, cfg.si_level_db, cfg.alphas[0], trial)
    channels, gt = synthesize(cfg, rng=rng_ch)
    state, report = solve(channels, cfg, init_rng=rng_init)
    return state, report, channels, gt


def baseline_once(kind: str, cfg: SystemConfig, seed: int | None = None, trial: int = 0):
    """Baseline state on the same realization :func:`solve_once` would use."""
    seed = cfg.rng_seed if seed is None else seed
    rng_ch, _, _ = trial_rngs(seed, cfg.si_level_db, cfg.alphas[0], trial)
    channels, gt = synthesize(cfg, rng=rng_ch)
    return baseline_state(kind, channels, cfg), channels, gt


def radar_map_once(state: BeamformerState, channels: ChannelSet, gt: RadarGroundTruth,
                   cfg: SystemConfig, frame: FrameSpec, rng: np.random.Generator, *,
                   include_si: bool = False, noise: bool = False) -> RangeDopplerMap:
    """Synthesize a frame for ``state`` and return its range-Doppler map."""
    rx = synthesize_rx_stream(state, channels, gt, frame, cfg.noise_mw, rng,
                              noise=noise, include_si=include_si)
    return range_doppler_map(matched_filter(rx.stream, rx.s_d, frame.n_lags), frame)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one method on one trial of one cell."""

    si_level_db: float
    rho: float
    method: str
    trial: int
    metrics: MetricsRecord | None
    iterations: int = 0
    converged: bool = True
    final_objective: float = float("nan")
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.metrics is not None


@dataclass(frozen=True)
class Exemplar:
    """Curves of the first trial of a cell, for the figure-style tables."""

    tx_pattern: np.ndarray
    rx_pattern: np.ndarray
    angle: AngleSpectrum
    objective_trace: tuple[float, ...] = ()
    zeta_trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class CellSummary:
    """Aggregates of one ``(si_level_db, ϱ, method)`` cell over its successful trials."""

    si_level_db: float
    rho: float
    method: str
    trials: int
    failed: int
    converged: int
    iterations_mean: float
    mean: dict[str, float]
    stderr: dict[str, float]

    @property
    def ok(self) -> int:
        return self.trials - self.failed


@dataclass
class SweepResult:
    spec: ExperimentSpec
    records: list[TrialRecord]
    cells: list[CellSummary]
    exemplars: dict[tuple[float, float, str], Exemplar]
    radar_maps: dict[str, RangeDopplerMap]

    def cell(self, si_level_db: float, rho: float, method: str) -> CellSummary:
        for c in self.cells:
            if c.si_level_db == si_level_db and c.rho == rho and c.method == method:
                return c
        raise KeyError((si_level_db, rho, method))

    def trial_values(self, si_level_db: float, rho: float, method: str, name: str) -> np.ndarray:
        return np.array([getattr(r.metrics, name) for r in self.records
                         if r.ok and r.si_level_db == si_level_db and r.rho == rho
                         and r.method == method])


def _exemplar(state: BeamformerState, channels: ChannelSet, grid: np.ndarray,
              report: SolverReport | None) -> Exemplar:
    return Exemplar(
        tx_pattern=beampattern(state.p, steering_tx, grid),
        rx_pattern=beampattern(state.w, steering_rx, grid),
        angle=angle_spectrum(state, channels, grid),
        objective_trace=report.objective_trace if report else (),
        zeta_trace=report.zeta_trace if report else (),
    )


def run_trial(spec: ExperimentSpec, si_level_db: float, rho: float, trial: int,
              want_exemplar: bool = False):
    """Run every configured method on one realization.

    Returns ``(records, exemplars)`` where ``exemplars`` maps method to
    :class:`Exemplar` (empty unless ``want_exemplar``).  Failures of a
    method are captured in its record, never raised.
    """
    cfg = spec.cell_config(si_level_db, rho)
    rng_ch, rng_init, _ = trial_rngs(spec.master_seed, si_level_db, rho, trial)
    records: list[TrialRecord] = []
    exemplars: dict[str, Exemplar] = {}
    grid = default_theta_grid(spec.theta_step_deg)
    try:
        channels, _ = synthesize(cfg, rng=rng_ch)
    except Exception as exc:  # noqa: BLE001 - recorded, not fatal
        msg = f"{type(exc).__name__}: {exc}"
        return [TrialRecord(si_level_db, rho, m, trial, None, error=msg) for m in spec.methods], {}
    for method in spec.methods:
        try:
            report = None
            if method == PROPOSED:
                state, report = solve(channels, cfg, init_rng=rng_init)
            else:
                state = baseline_state(method, channels, cfg)
            metrics = compute_metrics(state, channels, cfg)
            if not all(math.isfinite(v) for v in metrics.values()):
                raise FloatingPointError("non-finite metric")
            records.append(TrialRecord(
                si_level_db, rho, method, trial, metrics,
                iterations=report.iterations if report else 0,
                converged=report.converged if report else True,
                final_objective=report.final_objective if report else float("nan"),
            ))
            if want_exemplar:
                exemplars[method] = _exemplar(state, channels, grid, report)
        except Exception as exc:  # noqa: BLE001 - per-trial failure policy
            records.append(TrialRecord(si_level_db, rho, method, trial, None,
                                       error=f"{type(exc).__name__}: {exc}"))
    return records, exemplars


def _run_task(args):
    spec, si, rho, trial = args
    return run_trial(spec, si, rho, trial, want_exemplar=(trial == 0))


def _summarize(spec: ExperimentSpec, records: list[TrialRecord]) -> list[CellSummary]:
    cells = []
    names = MetricsRecord.columns()
    for si in spec.si_levels_db:
        for rho in spec.rho_values:
            for method in spec.methods:
                rows = [r for r in records
                        if r.si_level_db == si and r.rho == rho and r.method == method]
                ok = [r for r in rows if r.ok]
                mean: dict[str, float] = {}
                stderr: dict[str, float] = {}
                for name in names:
                    vals = np.array([getattr(r.metrics, name) for r in ok], dtype=float)
                    mean[name] = float(vals.mean()) if vals.size else float("nan")
                    stderr[name] = (float(vals.std(ddof=1) / math.sqrt(vals.size))
                                    if vals.size > 1 else float("nan"))
                iters = [r.iterations for r in ok]
                cells.append(CellSummary(
                    si_level_db=si, rho=rho, method=method, trials=len(rows),
                    failed=len(rows) - len(ok), converged=sum(r.converged for r in ok),
                    iterations_mean=float(np.mean(iters)) if iters else float("nan"),
                    mean=mean, stderr=stderr,
                ))
    return cells


def _reference_maps(spec: ExperimentSpec) -> dict[str, RangeDopplerMap]:
    si, rho = spec.reference_cell()
    cfg = spec.cell_config(si, rho)
    rng_ch, rng_init, rng_radar = trial_rngs(spec.master_seed, si, rho, 0)
    channels, gt = synthesize(cfg, rng=rng_ch)
    state, _ = solve(channels, cfg, init_rng=rng_init)
    maps = {"proposed": radar_map_once(state, channels, gt, cfg, spec.frame, rng_radar)}
    ro = baseline_state(BaselineKind.RADAR_ONLY, channels, cfg)
    _, _, rng_same = trial_rngs(spec.master_seed, si, rho, 0)  # same symbols for both maps
    maps["radar_only_si"] = radar_map_once(ro, channels, gt, cfg, spec.frame, rng_same,
                                           include_si=True)
    return maps


def run_sweep(spec: ExperimentSpec, progress: Callable[[int, int], None] | None = None) -> SweepResult:
    """Run every ``(si_level, ϱ, trial)`` of the lattice for every method.

    Deterministic for a fixed spec: streams are derived per trial and
    results are assembled in lattice order regardless of ``workers``.
    """
    tasks = [(spec, si, rho, t) for si in spec.si_levels_db for rho in spec.rho_values
             for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * spec.workers))))
    else:
        outcomes = []
        for i, task in enumerate(tasks):
            outcomes.append(_run_task(task))
            if progress:
                progress(i + 1, len(tasks))
    records: list[TrialRecord] = []
    exemplars: dict[tuple[float, float, str], Exemplar] = {}
    for (_, si, rho, trial), (recs, ex) in zip(tasks, outcomes):
        records.extend(recs)
        for method, value in ex.items():
            exemplars[(si, rho, method)] = value
    maps = _reference_maps(spec) if spec.radar_map else {}
    return SweepResult(spec=spec, records=records, cells=_summarize(spec, records),
                       exemplars=exemplars, radar_maps=maps)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _csv(rows: Iterable[Iterable[Any]], header: list[str], comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _label(si: float, rho: float, method: str) -> str:
    return f"si{si:g}_rho{rho:g}_{method}"


SUMMARY_COLUMNS = (["si_level_db", "rho", "method", "trials", "failed", "converged",
                    "iterations_mean"]
                   + [f"{kind}_{name}" for name in MetricsRecord.columns()
                      for kind in ("mean", "se")])
TRIAL_COLUMNS = (["si_level_db", "rho", "method", "trial", "ok", "iterations", "converged",
                  "final_objective"] + MetricsRecord.columns() + ["error"])


def _summary_rows(cells: Iterable[CellSummary]):
    for c in cells:
        row = [c.si_level_db, c.rho, c.method, c.trials, c.failed, c.converged, c.iterations_mean]
        for name in MetricsRecord.columns():
            row += [c.mean[name], c.stderr[name]]
        yield row


def render_tables(result: SweepResult) -> dict[str, str]:
    """CSV text of every output table, keyed by file name.

    ``si_sweep.csv`` and ``rho_sweep.csv`` hold the same cell aggregates,
    ordered for SI-level and priority plots respectively.
    ``trials.csv`` has one row per method and trial; ``convergence.csv`` the
    objective trace of the first trial of each cell; ``beampatterns.csv`` and
    ``angle_spectra.csv`` one column per cell and method on the angle grid;
    ``range_doppler_<name>.csv`` the reference maps.
    """
    spec = result.spec
    tables: dict[str, str] = {}
    order = {m: i for i, m in enumerate(spec.methods)}
    by_si = sorted(result.cells, key=lambda c: (order[c.method], c.rho, c.si_level_db))
    by_rho = sorted(result.cells, key=lambda c: (order[c.method], c.si_level_db, c.rho))
    tables["si_sweep.csv"] = _csv(_summary_rows(by_si), SUMMARY_COLUMNS)
    tables["rho_sweep.csv"] = _csv(_summary_rows(by_rho), SUMMARY_COLUMNS)

    def trial_rows():
        blank = [float("nan")] * len(MetricsRecord.columns())
        for r in result.records:
            values = list(r.metrics.values()) if r.metrics else blank
            yield [r.si_level_db, r.rho, r.method, r.trial, r.ok, r.iterations, r.converged,
                   r.final_objective, *values, r.error]
    tables["trials.csv"] = _csv(trial_rows(), TRIAL_COLUMNS)

    def convergence_rows():
        for (si, rho, method), ex in sorted(result.exemplars.items()):
            for it, value in enumerate(ex.objective_trace):
                zeta = ex.zeta_trace[it - 1] if it > 0 else float("nan")
                yield [si, rho, method, it, value, zeta]
    tables["convergence.csv"] = _csv(convergence_rows(),
                                     ["si_level_db", "rho", "method", "iteration", "objective", "zeta"])

    grid = default_theta_grid(spec.theta_step_deg)
    keys = [(si, rho, m) for si in spec.si_levels_db for rho in spec.rho_values
            for m in spec.methods if (si, rho, m) in result.exemplars]
    header = ["theta_deg"]
    for key in keys:
        header += [f"tx_{_label(*key)}", f"rx_{_label(*key)}"]
    pattern_rows = []
    for i, theta in enumerate(grid):
        row = [float(theta)]
        for key in keys:
            ex = result.exemplars[key]
            row += [ex.tx_pattern[i], ex.rx_pattern[i]]
        pattern_rows.append(row)
    tables["beampatterns.csv"] = _csv(pattern_rows, header)

    angle_rows = [[float(theta)] + [result.exemplars[key].angle.power[i] for key in keys]
                  for i, theta in enumerate(grid)]
    estimates = ", ".join(f"{_label(*key)}={result.exemplars[key].angle.estimate!r}" for key in keys)
    tables["angle_spectra.csv"] = _csv(
        angle_rows, ["theta_deg"] + [f"P_{_label(*key)}" for key in keys],
        comments=[f"theta_step_deg: {spec.theta_step_deg!r}",
                  "P(theta) = |w^H (a(theta) + H_si p)|^2, first trial of each cell",
                  f"aoa_estimate_deg: {estimates}"])
    for name, rd in result.radar_maps.items():
        tables[f"range_doppler_{name}.csv"] = rd.to_csv(spec.base.carrier_hz)
    return tables


def git_describe() -> str:
    """``git describe --always --dirty`` of the source tree, or ``"unknown"``."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=10, cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def summary_json(result: SweepResult) -> dict[str, Any]:
    return {
        "cells": [
            {"si_level_db": c.si_level_db, "rho": c.rho, "method": c.method, "trials": c.trials,
             "failed": c.failed, "converged": c.converged, "iterations_mean": c.iterations_mean,
             "mean": c.mean, "stderr": c.stderr}
            for c in result.cells
        ]
    }


def build_manifest(spec: ExperimentSpec, tables: Iterable[str]) -> dict[str, Any]:
    """Manifest with the config echo, master seed, source version and table names."""
    return {
        "config": spec_to_dict(spec),
        "master_seed": spec.master_seed,
        "git_describe": git_describe(),
        "package_version": __version__,
        "tables": list(tables),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def write_outputs(out_dir: str | os.PathLike, tables: Mapping[str, str],
                  manifest: Mapping[str, Any] | None = None) -> list[Path]:
    """Write named text tables (and optionally ``manifest.json``) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in tables.items():
        path = out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)
    if manifest is not None:
        path = out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
        written.append(path)
    return written


def sweep_outputs(result: SweepResult, formats: Iterable[str] | None = None) -> dict[str, str]:
    """Every output file of a sweep except the manifest, as name to text."""
    formats = tuple(formats if formats is not None else result.spec.emit)
    files: dict[str, str] = {}
    if "csv" in formats:
        files.update(render_tables(result))
    if "json" in formats:
        files["summary.json"] = json.dumps(summary_json(result), indent=2, sort_keys=True)
    return files


def emit_tables(result: SweepResult, out_dir: str | os.PathLike | None = None,
                formats: Iterable[str] | None = None) -> list[Path]:
    """Write the tables and ``manifest.json`` into ``out_dir`` (default ``spec.outputs``).

    Returns the written paths.  Raises ``OSError`` if the directory cannot
    be created or written.
    """
    files = sweep_outputs(result, formats)
    manifest = build_manifest(result.spec, files)
    return write_outputs(out_dir if out_dir is not None else result.spec.outputs, files, manifest)
