"""Radar receive-stream synthesis and range-Doppler / angle processing.

The ISAC receiver observes, per fast-time sample ``n`` and block ``m``,

    y[n, m] = wᴴH_uω_u·s_u[n, m]
              + wᴴH_r p · e^{j2π f_d·m·T_step} · s_d[n − i_τ, m]
              (+ wᴴH_si p · s_d[n, m]      when SI injection is enabled)
              + wᴴn[n, m]

where ``s_d`` is the transmitted downlink QPSK stream and ``i_τ`` the
round-trip delay in samples.  The delayed stream wraps cyclically across the
whole frame.  ``T_step`` is set by the Doppler convention:

* ``"block"`` (default): ``T_step = N·T_s``, the physical block duration.
* ``"literal"``: ``T_step = T_s``, one sample per block index.

Matched filtering against ``s_d`` along fast time gives a range profile per
block, and an ``M``-point DFT along slow time gives the range-Doppler map.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .metrics import default_theta_grid
from .numerics import dft
from .scenario import SPEED_OF_LIGHT, ChannelSet, RadarGroundTruth, steering_rx
from .solver import BeamformerState

__all__ = [
    "DOPPLER_CONVENTIONS",
    "FrameSpec",
    "RadarFrame",
    "RangeDopplerMap",
    "AngleSpectrum",
    "gen_qpsk",
    "delay_bin",
    "synthesize_rx_stream",
    "matched_filter",
    "range_profile",
    "range_doppler_map",
    "angle_spectrum",
]

DOPPLER_CONVENTIONS = ("block", "literal")


@dataclass(frozen=True)
class FrameSpec:
    """Frame layout: ``n_symbols`` fast-time samples in each of ``n_blocks`` blocks."""

    n_symbols: int = 1024
    n_blocks: int = 512
    sample_period: float = 5e-8
    doppler_convention: str = "block"
    n_lags: int = 64

    def __post_init__(self):
        if self.n_symbols < 1 or self.n_blocks < 1:
            raise ValueError("frame needs at least one symbol and one block")
        if not self.sample_period > 0:
            raise ValueError("sample period must be positive")
        if self.doppler_convention not in DOPPLER_CONVENTIONS:
            raise ValueError(f"doppler_convention must be one of {DOPPLER_CONVENTIONS}")
        if not 1 <= self.n_lags <= self.n_symbols:
            raise ValueError("n_lags must lie in [1, n_symbols]")

    @property
    def slow_time_step(self) -> float:
        """Time attributed to one block index by the Doppler convention."""
        if self.doppler_convention == "block":
            return self.n_symbols * self.sample_period
        return self.sample_period

    @property
    def range_resolution(self) -> float:
        return SPEED_OF_LIGHT * self.sample_period / 2.0

    @property
    def doppler_resolution(self) -> float:
        return 1.0 / (self.n_blocks * self.slow_time_step)

    def doppler_bin(self, f_d: float) -> int:
        """Slow-time DFT bin nearest to ``f_d`` (aliased into ``[0, M)``)."""
        return int(round(f_d * self.n_blocks * self.slow_time_step)) % self.n_blocks


def delay_bin(r: float, sample_period: float) -> int:
    """Round-trip delay of a target at range ``r``, in samples."""
    return int(round(2.0 * r / (SPEED_OF_LIGHT * sample_period)))


def gen_qpsk(count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-energy QPSK symbols ``(±1 ± j)/√2``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    bits = rng.integers(0, 2, size=(2, count))
    return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / math.sqrt(2.0)


@dataclass(frozen=True)
class RadarFrame:
    """One synthesized frame.  Arrays are ``N × M`` (fast time × block)."""

    stream: np.ndarray
    s_d: np.ndarray
    s_u: np.ndarray
    delay_bins: int
    frame: FrameSpec


def _to_blocks(flat: np.ndarray, frame: FrameSpec) -> np.ndarray:
    # flat index k = n + m·N, i.e. column-major N×M
    return flat.reshape(frame.n_symbols, frame.n_blocks, order="F")


def synthesize_rx_stream(state: BeamformerState, channels: ChannelSet, gt: RadarGroundTruth,
                         frame: FrameSpec, sigma2_u: float, rng: np.random.Generator, *,
                         noise: bool = False, include_si: bool = False,
                         include_uplink: bool = True) -> RadarFrame:
    """Synthesize the combined receive stream of one frame.

    Random draws happen in the fixed order ``s_d``, ``s_u``, noise.

    Raises
    ------
    ValueError
        If the target delay does not fit into one block.
    """
    n, m = frame.n_symbols, frame.n_blocks
    i_tau = delay_bin(gt.r, frame.sample_period)
    if i_tau >= n:
        raise ValueError(f"target delay of {i_tau} samples does not fit in {n}-sample blocks")
    s_d_flat = gen_qpsk(n * m, rng)
    s_u_flat = gen_qpsk(n * m, rng)
    s_d = _to_blocks(s_d_flat, frame)
    s_u = _to_blocks(s_u_flat, frame)

    w, p = state.w, state.p
    echo_gain = np.vdot(w, channels.h_r @ p)
    phase = np.exp(2j * np.pi * gt.f_d * frame.slow_time_step * np.arange(m))
    stream = echo_gain * phase[None, :] * _to_blocks(np.roll(s_d_flat, i_tau), frame)
    if include_uplink:
        stream = stream + np.vdot(w, channels.h_u @ state.omega_u) * s_u
    if include_si:
        stream = stream + np.vdot(w, channels.h_si @ p) * s_d
    if noise:
        scale = math.sqrt(sigma2_u * float(np.vdot(w, w).real) / 2.0)
        stream = stream + scale * (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)))
    return RadarFrame(stream=stream, s_d=s_d, s_u=s_u, delay_bins=i_tau, frame=frame)


def matched_filter(stream: np.ndarray, s_d: np.ndarray, n_lags: int = 64) -> np.ndarray:
    """Per-block correlation with the transmitted stream.

    ``R[l, m] = (1/N)·Σₙ y[n, m]·conj(s_d[n − l, m])`` where ``s_d[n − l, m]``
    wraps into the previous block (cyclic over the frame).  Returns an
    ``n_lags × M`` complex matrix.
    """
    stream = np.asarray(stream, dtype=np.complex128)
    s_d = np.asarray(s_d, dtype=np.complex128)
    if stream.shape != s_d.shape:
        raise ValueError(f"stream {stream.shape} and reference {s_d.shape} differ in shape")
    n, m = stream.shape
    if not 1 <= n_lags <= n:
        raise ValueError("n_lags must lie in [1, N]")
    flat = s_d.reshape(-1, order="F")
    out = np.empty((n_lags, m), dtype=np.complex128)
    for lag in range(n_lags):
        ref = np.roll(flat, lag).reshape(n, m, order="F")
        out[lag] = np.einsum("nm,nm->m", stream, ref.conj()) / n
    return out


def range_profile(stream: np.ndarray, s_d: np.ndarray, n_lags: int = 64) -> np.ndarray:
    """Magnitude of :func:`matched_filter`."""
    return np.abs(matched_filter(stream, s_d, n_lags))


@dataclass(frozen=True)
class RangeDopplerMap:
    """Magnitude map, range bins × Doppler bins.

    Doppler bin ``k`` corresponds to ``k·doppler_resolution`` (bins above
    ``M/2`` alias to negative frequencies, see :meth:`doppler_axis_hz`).
    """

    grid: np.ndarray
    range_resolution: float
    doppler_resolution: float
    doppler_convention: str = "block"

    def peak(self) -> tuple[int, int]:
        """``(range_bin, doppler_bin)`` of the largest entry."""
        idx = np.unravel_index(int(np.argmax(self.grid)), self.grid.shape)
        return int(idx[0]), int(idx[1])

    def range_axis_m(self) -> np.ndarray:
        return np.arange(self.grid.shape[0]) * self.range_resolution

    def doppler_axis_hz(self) -> np.ndarray:
        m = self.grid.shape[1]
        return np.fft.fftfreq(m, d=1.0 / (m * self.doppler_resolution))

    def velocity_axis_mps(self, carrier_hz: float) -> np.ndarray:
        return self.doppler_axis_hz() * SPEED_OF_LIGHT / (2.0 * carrier_hz)

    def to_csv(self, carrier_hz: float | None = None) -> str:
        """Long-format CSV with the axis definitions as ``#`` comment lines."""
        buf = io.StringIO()
        buf.write(f"# range_resolution_m: {self.range_resolution!r}\n")
        buf.write(f"# doppler_resolution_hz: {self.doppler_resolution!r}\n")
        buf.write(f"# doppler_convention: {self.doppler_convention}\n")
        buf.write("# doppler_hz: signed DFT frequency of each bin (fftfreq ordering)\n")
        writer = csv.writer(buf, lineterminator="\r\n")
        header = ["range_bin", "doppler_bin", "range_m", "doppler_hz"]
        if carrier_hz:
            header.append("velocity_mps")
        header.append("magnitude")
        writer.writerow(header)
        ranges = self.range_axis_m()
        freqs = self.doppler_axis_hz()
        vels = self.velocity_axis_mps(carrier_hz) if carrier_hz else None
        for i in range(self.grid.shape[0]):
            for k in range(self.grid.shape[1]):
                row = [i, k, repr(float(ranges[i])), repr(float(freqs[k]))]
                if vels is not None:
                    row.append(repr(float(vels[k])))
                row.append(repr(float(self.grid[i, k])))
                writer.writerow(row)
        return buf.getvalue()


def range_doppler_map(profile: np.ndarray, frame: FrameSpec) -> RangeDopplerMap:
    """Slow-time ``M``-point DFT magnitude of a complex range profile."""
    profile = np.asarray(profile, dtype=np.complex128)
    if profile.shape[1] != frame.n_blocks:
        raise ValueError(f"profile has {profile.shape[1]} blocks, frame expects {frame.n_blocks}")
    grid = np.abs(dft(profile, frame.n_blocks))
    return RangeDopplerMap(grid=grid, range_resolution=frame.range_resolution,
                           doppler_resolution=frame.doppler_resolution,
                           doppler_convention=frame.doppler_convention)


@dataclass(frozen=True)
class AngleSpectrum:
    """Angle power spectrum ``P(θ)`` on a grid of degrees."""

    thetas: np.ndarray
    power: np.ndarray

    @property
    def estimate(self) -> float:
        """Angle of arrival estimate, the grid point of maximum power."""
        return float(self.thetas[int(np.argmax(self.power))])

    def at(self, theta: float) -> float:
        """Power at the grid point closest to ``theta``."""
        return float(self.power[int(np.argmin(np.abs(self.thetas - theta)))])


def angle_spectrum(state: BeamformerState, channels: ChannelSet, theta_grid=None) -> AngleSpectrum:
    """``P(θ) = |wᴴ(a(θ) + H_si p)|²``, the target response plus residual SI."""
    grid = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("theta grid is empty")
    w = state.w
    steer = np.stack([steering_rx(t, w.shape[0]) for t in grid])
    leak = np.vdot(w, channels.h_si @ state.p)
    power = np.abs(steer @ w.conj() + leak) ** 2
    return AngleSpectrum(thetas=grid, power=power)
