"""HTTP service around the library.

Endpoints are synchronous (FastAPI runs them in its worker thread pool), so
a long sweep does not block health checks.  Run with ``fdisac serve`` or
``uvicorn fdisac.service:app``.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .baselines import baseline_state
from .harness import (
    PROPOSED,
    ExperimentSpec,
    build_manifest,
    parse_config_dict,
    radar_map_once,
    run_sweep,
    spec_to_dict,
    sweep_outputs,
    trial_rngs,
)
from .metrics import compute_metrics
from .radar_dsp import angle_spectrum, delay_bin
from .scenario import ConfigError, SystemConfig, synthesize
from .schemas import (
    AngleEntry,
    AngleRequest,
    AngleResponse,
    BaselineRequest,
    BaselineResponse,
    CellModel,
    RadarMapRequest,
    RadarMapResponse,
    ReportModel,
    RunRequest,
    SolveResponse,
    StateModel,
    SweepRequest,
    SweepResponse,
    pairs,
)
from .solver import BeamformerState, solve

app = FastAPI(title="fdisac", version=__version__,
              description="Full-duplex ISAC joint transmit/receive beamforming")


@app.exception_handler(ConfigError)
async def _config_error(_: Request, exc: ConfigError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"key": exc.key, "message": exc.message})


@app.exception_handler(ValueError)
async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"key": None, "message": str(exc)})


def _spec(config: dict[str, Any], seed: int | None) -> ExperimentSpec:
    data = dict(config)
    if seed is not None:
        data["rng_seed"] = seed
    return parse_config_dict(data)


def _cell(req: RunRequest) -> tuple[ExperimentSpec, SystemConfig, float]:
    spec = _spec(req.config, req.seed)
    base = spec.base
    si = base.si_level_db if req.si_level_db is None else req.si_level_db
    cfg = dataclasses.replace(base, si_level_db=float(si))
    rho = req.rho if req.rho is not None else cfg.alphas[0]
    if req.rho is not None:
        cfg = cfg.with_priority(req.rho)
    return spec, cfg, rho


def _state_model(state: BeamformerState) -> StateModel:
    return StateModel(p=pairs(state.p), w=pairs(state.w), omega_u=pairs(state.omega_u),
                      u_d=pairs(state.u_d), rho_u=state.rho_u, rho_d=state.rho_d)


def _design(method: str, cfg: SystemConfig, spec: ExperimentSpec, rho: float, trial: int):
    rng_ch, rng_init, rng_radar = trial_rngs(spec.master_seed, cfg.si_level_db, rho, trial)
    channels, gt = synthesize(cfg, rng=rng_ch)
    report = None
    if method == PROPOSED:
        state, report = solve(channels, cfg, init_rng=rng_init)
    else:
        state = baseline_state(method, channels, cfg)
    return state, report, channels, gt, rng_radar


def _none_if_nan(values: dict[str, float]) -> dict[str, float | None]:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in values.items()}


@app.get("/health")
def health() -> dict[str, str]:
    return {"status": "ok", "version": __version__}


@app.get("/defaults")
def defaults() -> dict[str, Any]:
    """Configuration with every default filled in."""
    return spec_to_dict(parse_config_dict({}))


@app.post("/solve", response_model=SolveResponse)
def solve_endpoint(req: RunRequest) -> SolveResponse:
    spec, cfg, rho = _cell(req)
    state, report, channels, _, _ = _design(PROPOSED, cfg, spec, rho, req.trial)
    metrics = compute_metrics(state, channels, cfg)
    return SolveResponse(
        state=_state_model(state),
        report=ReportModel(iterations=report.iterations, converged=report.converged,
                           objective_trace=list(report.objective_trace),
                           zeta_trace=list(report.zeta_trace),
                           residual_si_linear=report.residual_si_linear,
                           fallbacks=report.fallbacks, beta_retries=report.beta_retries,
                           elapsed_s=report.elapsed_s),
        metrics=dataclasses.asdict(metrics),
    )


@app.post("/baseline", response_model=BaselineResponse)
def baseline_endpoint(req: BaselineRequest) -> BaselineResponse:
    spec, cfg, rho = _cell(req)
    state, _, channels, _, _ = _design(req.kind, cfg, spec, rho, req.trial)
    return BaselineResponse(kind=req.kind, state=_state_model(state),
                            metrics=dataclasses.asdict(compute_metrics(state, channels, cfg)))


@app.post("/radar-map", response_model=RadarMapResponse)
def radar_map_endpoint(req: RadarMapRequest) -> RadarMapResponse:
    spec, cfg, rho = _cell(req)
    state, _, channels, gt, rng_radar = _design(req.method, cfg, spec, rho, req.trial)
    frame = spec.frame
    rd = radar_map_once(state, channels, gt, cfg, frame, rng_radar,
                        include_si=req.include_si, noise=req.noise)
    peak_r, peak_d = rd.peak()
    return RadarMapResponse(
        method=req.method, peak_range_bin=peak_r, peak_doppler_bin=peak_d,
        expected_range_bin=delay_bin(gt.r, frame.sample_period),
        expected_doppler_bin=frame.doppler_bin(gt.f_d),
        range_resolution_m=rd.range_resolution, doppler_resolution_hz=rd.doppler_resolution,
        doppler_convention=rd.doppler_convention, csv=rd.to_csv(cfg.carrier_hz),
    )


@app.post("/angle", response_model=AngleResponse)
def angle_endpoint(req: AngleRequest) -> AngleResponse:
    import csv
    import io

    from .metrics import default_theta_grid

    spec, cfg, rho = _cell(req)
    grid = default_theta_grid(spec.theta_step_deg)
    entries, columns = [], []
    for method in req.methods:
        state, _, channels, _, _ = _design(method, cfg, spec, rho, req.trial)
        spectrum = angle_spectrum(state, channels, grid)
        entries.append(AngleEntry(method=method, estimate_deg=spectrum.estimate,
                                  power_at_0deg=spectrum.at(0.0)))
        columns.append(spectrum.power)
    buf = io.StringIO()
    buf.write(f"# theta_step_deg: {spec.theta_step_deg!r}\n")
    buf.write("# P(theta) = |w^H (a(theta) + H_si p)|^2\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["theta_deg"] + [f"P_{m}" for m in req.methods])
    for i, theta in enumerate(grid):
        writer.writerow([repr(float(theta))] + [repr(float(col[i])) for col in columns])
    return AngleResponse(spectra=entries, csv=buf.getvalue())


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(req: SweepRequest) -> SweepResponse:
    spec = _spec(req.config, req.seed)
    if req.trials is not None:
        spec = dataclasses.replace(spec, trials=req.trials)
    result = run_sweep(spec)
    files = sweep_outputs(result, req.formats)
    cells = [CellModel(si_level_db=c.si_level_db, rho=c.rho, method=c.method, trials=c.trials,
                       failed=c.failed, converged=c.converged,
                       iterations_mean=None if math.isnan(c.iterations_mean) else c.iterations_mean,
                       mean=_none_if_nan(c.mean), stderr=_none_if_nan(c.stderr))
             for c in result.cells]
    return SweepResponse(cells=cells, files=files, manifest=build_manifest(spec, files))
