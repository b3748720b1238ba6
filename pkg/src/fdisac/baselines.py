"""Reference beamformers: null-space projection, radar-only and comm-only."""

from __future__ import annotations

import enum
import math
import warnings

import numpy as np

from .scenario import ChannelSet, SystemConfig, steering_rx, steering_tx
from .solver import (
    BeamformerState,
    DegenerateUpdateError,
    update_omega_u,
    update_rho,
    update_u_d,
)

__all__ = [
    "BaselineKind",
    "radar_only",
    "comm_only",
    "nsp_beamformers",
    "null_space_projector",
    "half_duplex_rate",
    "baseline_state",
]

_RANK_TOL = 1e-10


class BaselineKind(str, enum.Enum):
    """Baseline designs.  Values double as method tags in output tables."""

    NSP = "nsp"
    RADAR_ONLY = "radar_only"
    COMM_ONLY = "comm_only"


def _matched_pair(theta: float, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    p = steering_tx(theta, cfg.n_t) * math.sqrt(cfg.p_d_mw / cfg.n_t)
    w = steering_rx(theta, cfg.n_r) / math.sqrt(cfg.n_r)
    return p, w


def radar_only(theta_r: float, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Beams matched to the target: ``p ∝ b(θ_r)`` at full power, ``w = a(θ_r)/‖a‖``."""
    return _matched_pair(theta_r, cfg)


def comm_only(theta_u: float, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Beams matched to the uplink user's direction."""
    return _matched_pair(theta_u, cfg)


def null_space_projector(columns: np.ndarray) -> tuple[np.ndarray, int]:
    """Orthogonal projector onto the complement of ``span(columns)``.

    Columns that are numerically dependent on earlier ones are dropped with
    a ``RuntimeWarning``.

    Returns
    -------
    projector : numpy.ndarray
        ``I − A(AᴴA)⁻¹Aᴴ`` built from an orthonormal basis of the kept columns.
    rank : int
        Number of columns kept.
    """
    columns = np.asarray(columns, dtype=np.complex128)
    n = columns.shape[0]
    basis: list[np.ndarray] = []
    dropped = 0
    for k in range(columns.shape[1]):
        v = columns[:, k].copy()
        norm0 = np.linalg.norm(v)
        for _ in range(2):  # Gram-Schmidt with one reorthogonalization pass
            for q in basis:
                v -= q * np.vdot(q, v)
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= _RANK_TOL * norm0:
            dropped += 1
            continue
        basis.append(v / norm)
    if dropped:
        warnings.warn(f"null-space projection: dropped {dropped} dependent column(s)",
                      RuntimeWarning, stacklevel=2)
    if len(basis) >= n:
        raise ValueError(f"nulled subspace has dimension {len(basis)} >= {n}; nothing left")
    projector = np.eye(n, dtype=np.complex128)
    if basis:
        q = np.column_stack(basis)
        projector -= q @ q.conj().T
    return projector, len(basis)


def nsp_beamformers(channels: ChannelSet, theta_r: float, theta_d: float,
                    cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Null-space projection design.

    The transmit vector is ``√ξ·b(θ_r) + √(1−ξ)·b(θ_d)`` scaled to full power,
    with ``ξ = cfg.nsp_weight``.  The receive vector is ``a(θ_r)`` projected
    onto the orthogonal complement of ``H_si p`` (plus ``a(θ_d)`` when
    ``cfg.nsp_null_downlink`` is set) and normalized.
    """
    xi = cfg.nsp_weight
    p = math.sqrt(xi) * steering_tx(theta_r, cfg.n_t) + math.sqrt(1.0 - xi) * steering_tx(theta_d, cfg.n_t)
    p *= math.sqrt(cfg.p_d_mw) / np.linalg.norm(p)
    nulls = [channels.h_si @ p]
    if cfg.nsp_null_downlink:
        nulls.append(steering_rx(theta_d, cfg.n_r))
    projector, _ = null_space_projector(np.column_stack(nulls))
    w = projector @ steering_rx(theta_r, cfg.n_r)
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValueError("target steering vector lies inside the nulled subspace")
    return p, w / norm


def half_duplex_rate(r_ul: float, r_dl: float, delta: float) -> float:
    """Time-shared rate ``δ·R_dl + (1−δ)·R_ul``."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    return delta * r_dl + (1.0 - delta) * r_ul


def baseline_state(kind: BaselineKind | str, channels: ChannelSet, cfg: SystemConfig) -> BeamformerState:
    """Complete state for a baseline design.

    The transceiver beams come from the baseline.  The uplink user transmits
    at full power along ``H_uᴴw`` (the ω_u block update with ``α₁ = 1``), and
    the downlink user applies the MMSE combiner.  ``ρ`` follows from the
    resulting MSEs.
    """
    kind = BaselineKind(kind)
    if kind is BaselineKind.RADAR_ONLY:
        p, w = radar_only(cfg.target.theta, cfg)
    elif kind is BaselineKind.COMM_ONLY:
        p, w = comm_only(cfg.uplink.theta, cfg)
    else:
        p, w = nsp_beamformers(channels, cfg.target.theta, cfg.downlink.theta, cfg)
    omega = np.full(channels.h_u.shape[1], math.sqrt(cfg.p_u_mw / channels.h_u.shape[1]),
                    dtype=np.complex128)
    state = BeamformerState(p=p, w=w, omega_u=omega, u_d=np.zeros(channels.h_d.shape[0], complex))
    try:
        state = state.replace(omega_u=update_omega_u(state, channels, 1.0, cfg.p_u_mw,
                                                     cfg.bisection_tol))
    except DegenerateUpdateError:
        pass
    state = state.replace(u_d=update_u_d(state, channels, cfg.noise_mw))
    rho_u, rho_d = update_rho(state, channels, cfg.noise_mw)
    return state.replace(rho_u=rho_u, rho_d=rho_d)
