"""Link and sensing figures of merit computed from a beamformer state."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields
from typing import Callable

import numpy as np

from .baselines import half_duplex_rate
from .scenario import ChannelSet, SystemConfig, steering_rx, steering_tx
from .solver import BeamformerState

__all__ = [
    "DB_FLOOR",
    "DB_CEIL",
    "default_theta_grid",
    "MetricsRecord",
    "to_db",
    "rate",
    "sinr_uplink",
    "sinr_downlink",
    "beampattern",
    "residual_si_db",
    "soi_over_si_db",
    "sum_rates",
    "compute_metrics",
]

#: dB values are clamped to ``[DB_FLOOR, DB_CEIL]`` so exact zeros stay plottable.
DB_FLOOR = -300.0
DB_CEIL = 300.0


def default_theta_grid(step: float = 0.5) -> np.ndarray:
    """Angles from −90° to 90° inclusive (361 points for the 0.5° default)."""
    count = int(round(180.0 / step)) + 1
    return np.linspace(-90.0, 90.0, count)


def to_db(ratio: float) -> float:
    """``10·log₁₀(ratio)`` clamped to ``[DB_FLOOR, DB_CEIL]``."""
    if math.isnan(ratio):
        raise ValueError("cannot convert NaN to dB")
    if ratio <= 0.0:
        return DB_FLOOR
    if math.isinf(ratio):
        return DB_CEIL
    return min(DB_CEIL, max(DB_FLOOR, 10.0 * math.log10(ratio)))


def rate(sinr: float) -> float:
    """Spectral efficiency ``log₂(1 + SINR)`` in bit/s/Hz."""
    return math.log2(1.0 + sinr)


def sinr_uplink(state: BeamformerState, channels: ChannelSet, sigma2_u: float) -> float:
    """``|wᴴH_uω_u|² / (|wᴴHp|² + ‖w‖²σ²)``; the radar return counts as interference."""
    w = state.w
    signal = abs(np.vdot(w, channels.h_u @ state.omega_u)) ** 2
    interference = abs(np.vdot(w, channels.h @ state.p)) ** 2
    return float(signal / (interference + np.vdot(w, w).real * sigma2_u))


def sinr_downlink(state: BeamformerState, channels: ChannelSet, sigma2_d: float) -> float:
    """``|u_dᴴH_d p|² / (‖u_d‖²σ²)``; zero when ``u_d = 0``."""
    u = state.u_d
    noise = np.vdot(u, u).real * sigma2_d
    if noise == 0.0:
        return 0.0
    return float(abs(np.vdot(u, channels.h_d @ state.p)) ** 2 / noise)


def beampattern(vec: np.ndarray, steering_fn: Callable[[float, int], np.ndarray],
                theta_grid) -> np.ndarray:
    """Beampattern power ``|s(θ)ᴴ·vec|²`` on a grid of angles (degrees).

    Use ``steering_tx`` with ``p`` for the transmit pattern and
    ``steering_rx`` with ``w`` for the receive pattern (``|wᴴa|² = |aᴴw|²``).
    """
    grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("theta grid is empty")
    vec = np.asarray(vec, dtype=np.complex128)
    steer = np.stack([steering_fn(t, vec.shape[0]) for t in grid])
    return np.abs(steer.conj() @ vec) ** 2


def residual_si_db(state: BeamformerState, channels: ChannelSet, noise_dbm: float) -> float:
    """Residual SI power ``|wᴴH_si p|²`` in dB relative to the noise floor."""
    power_mw = abs(np.vdot(state.w, channels.h_si @ state.p)) ** 2
    if power_mw == 0.0:
        return DB_FLOOR
    return min(DB_CEIL, max(DB_FLOOR, 10.0 * math.log10(power_mw) - noise_dbm))


def soi_over_si_db(state: BeamformerState, channels: ChannelSet) -> float:
    """Signal of interest (echo plus uplink) over residual SI, in dB."""
    w = state.w
    echo = abs(np.vdot(w, channels.h_r @ state.p)) ** 2
    uplink = abs(np.vdot(w, channels.h_u @ state.omega_u)) ** 2
    si = abs(np.vdot(w, channels.h_si @ state.p)) ** 2
    soi = echo + uplink
    if si == 0.0:
        return DB_CEIL if soi > 0.0 else 0.0
    return to_db(soi / si)


def sum_rates(r_u: float, r_d: float, delta: float = 0.5) -> tuple[float, float]:
    """Full-duplex ``R_u + R_d`` and half-duplex time-shared rate."""
    if r_u < 0 or r_d < 0:
        raise ValueError("rates must be nonnegative")
    return r_u + r_d, half_duplex_rate(r_u, r_d, delta)


@dataclass(frozen=True)
class MetricsRecord:
    """Per-trial scalars.  Field order is the CSV column order."""

    sinr_u: float
    sinr_d: float
    rate_u: float
    rate_d: float
    g_t: float
    g_r: float
    p_res_db: float
    soi_over_si_db: float
    sumrate_fd: float
    sumrate_hd: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> tuple[float, ...]:
        return astuple(self)


def compute_metrics(state: BeamformerState, channels: ChannelSet, cfg: SystemConfig) -> MetricsRecord:
    """All figures of merit for one state, at the target angle in ``cfg``."""
    sigma2 = cfg.noise_mw
    gamma_u = sinr_uplink(state, channels, sigma2)
    gamma_d = sinr_downlink(state, channels, sigma2)
    r_u, r_d = rate(gamma_u), rate(gamma_d)
    fd, hd = sum_rates(r_u, r_d, cfg.hd_fraction)
    theta = cfg.target.theta
    return MetricsRecord(
        sinr_u=gamma_u,
        sinr_d=gamma_d,
        rate_u=r_u,
        rate_d=r_d,
        g_t=float(beampattern(state.p, steering_tx, [theta])[0]),
        g_r=float(beampattern(state.w, steering_rx, [theta])[0]),
        p_res_db=residual_si_db(state, channels, cfg.noise_dbm),
        soi_over_si_db=soi_over_si_db(state, channels),
        sumrate_fd=fd,
        sumrate_hd=hd,
    )
