"""Request and response models of the HTTP service.

Complex vectors travel as lists of ``[re, im]`` pairs.  ``config`` fields
accept the same keys as a configuration file (see :mod:`fdisac.harness`).
"""

from __future__ import annotations

from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from .harness import METHODS

ComplexPairs = list[tuple[float, float]]
Method = Literal["proposed", "nsp", "radar_only", "comm_only"]
assert set(METHODS) == {"proposed", "nsp", "radar_only", "comm_only"}


def pairs(vec) -> ComplexPairs:
    return [(float(z.real), float(z.imag)) for z in np.asarray(vec, dtype=complex)]


def from_pairs(data: ComplexPairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in data], dtype=complex)


class RunRequest(BaseModel):
    """Common fields of single-realization requests."""

    config: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = Field(default=None, ge=0, description="overrides rng_seed")
    trial: int = Field(default=0, ge=0)
    si_level_db: Optional[float] = None
    rho: Optional[float] = Field(default=None, gt=0, description="sets alpha = (rho, rho, 1, 1)")


class StateModel(BaseModel):
    p: ComplexPairs
    w: ComplexPairs
    omega_u: ComplexPairs
    u_d: ComplexPairs
    rho_u: float
    rho_d: float


class ReportModel(BaseModel):
    iterations: int
    converged: bool
    objective_trace: list[float]
    zeta_trace: list[float]
    residual_si_linear: float
    fallbacks: int
    beta_retries: int
    elapsed_s: float


class SolveResponse(BaseModel):
    state: StateModel
    report: ReportModel
    metrics: dict[str, float]


class BaselineRequest(RunRequest):
    kind: Literal["nsp", "radar_only", "comm_only"] = "nsp"


class BaselineResponse(BaseModel):
    kind: str
    state: StateModel
    metrics: dict[str, float]


class RadarMapRequest(RunRequest):
    method: Method = "proposed"
    include_si: bool = False
    noise: bool = False


class RadarMapResponse(BaseModel):
    method: str
    peak_range_bin: int
    peak_doppler_bin: int
    expected_range_bin: int
    expected_doppler_bin: int
    range_resolution_m: float
    doppler_resolution_hz: float
    doppler_convention: str
    csv: str


class AngleRequest(RunRequest):
    methods: list[Method] = Field(default_factory=lambda: ["proposed", "nsp"])


class AngleEntry(BaseModel):
    method: str
    estimate_deg: float
    power_at_0deg: float


class AngleResponse(BaseModel):
    spectra: list[AngleEntry]
    csv: str


class SweepRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = Field(default=None, ge=0)
    trials: Optional[int] = Field(default=None, ge=1)
    formats: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])


class CellModel(BaseModel):
    si_level_db: float
    rho: float
    method: str
    trials: int
    failed: int
    converged: int
    iterations_mean: Optional[float]
    mean: dict[str, Optional[float]]
    stderr: dict[str, Optional[float]]


class SweepResponse(BaseModel):
    cells: list[CellModel]
    files: dict[str, str]
    manifest: dict[str, Any]


class ErrorModel(BaseModel):
    key: Optional[str] = None
    message: str
