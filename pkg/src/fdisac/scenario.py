"""Scenario construction: configuration, geometry, path loss and channels.

Angles are degrees at the public surface and radians internally.  Powers in
the configuration are dBm; linear powers are expressed in milliwatts so that
``noise_mw`` for ``-94 dBm`` is ``10**-9.4``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT",
    "LOS_ONLY_KAPPA",
    "ConfigError",
    "Bearing",
    "SystemConfig",
    "ChannelSet",
    "RadarGroundTruth",
    "steering_rx",
    "steering_tx",
    "pathloss_db",
    "db_to_linear",
    "dbm_to_mw",
    "rician_channel",
    "radar_attenuation",
    "radar_channel",
    "si_channel",
    "synthesize",
    "make_rng",
    "float_key",
]

SPEED_OF_LIGHT = 3e8
#: Rician factors at or above this value are treated as pure line of sight.
LOS_ONLY_KAPPA = 1e12
_ELEMENT_SPACING = 0.5  # in wavelengths


class ConfigError(ValueError):
    """Invalid configuration value.  ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        self.key = key
        self.message = message
        super().__init__(f"{key}: {message}")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class Bearing:
    """Position and radial velocity of a target or user.

    Attributes
    ----------
    theta : float
        Angle in degrees, strictly inside (-90, 90).
    r : float
        Range in metres, positive.
    v : float
        Radial velocity in m/s.
    """

    theta: float
    r: float
    v: float = 0.0

    def validate(self, key: str = "bearing") -> None:
        if not (math.isfinite(self.theta) and -90.0 < self.theta < 90.0):
            raise ConfigError(f"{key}.theta", f"angle must lie in (-90, 90), got {self.theta}")
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise ConfigError(f"{key}.r", f"range must be positive, got {self.r}")
        if not math.isfinite(self.v):
            raise ConfigError(f"{key}.v", f"velocity must be finite, got {self.v}")


@dataclass(frozen=True)
class SystemConfig:
    """Every scenario constant.  Defaults reproduce the reference setup.

    Attributes
    ----------
    n_t, n_r, n_u, n_d : int
        Antenna counts of the transceiver (transmit/receive) and of the
        uplink and downlink users.
    carrier_hz, bandwidth_hz : float
        Carrier frequency and signal bandwidth; the sample period is
        ``1/bandwidth_hz``.
    p_d_dbm, p_u_dbm, noise_dbm : float
        Transceiver and uplink-user transmit powers and the common receiver
        noise floor.
    pathloss_exponent, d0_m : float
        Log-distance path-loss parameters.
    kappa, kappa_si : float
        Rician factors of the user channels and of the SI channel.
    si_level_db : float
        SI power above the noise floor.
    si_angle_deg : float
        Angle of the line-of-sight SI coupling on both arrays.
    rcs_m2 : float
        Radar cross section of the target.
    alphas : tuple of 4 floats
        Objective weights (uplink rate, downlink rate, transmit beampattern,
        receive beampattern).
    beta : float
        Penalty parameter; the SI term is weighted by ``1/(2β)``.
    epsilon, max_iters, bisection_tol
        Solver stopping controls.
    rng_seed : int
        Master seed.
    target, uplink, downlink : Bearing
    departure_conjugate : bool
        Use ``a·bᴴ`` instead of ``a·bᵀ`` for line-of-sight and radar
        channels (see README, "channel convention").
    hd_fraction : float
        Downlink time share ``δ`` of the half-duplex comparison.
    nsp_weight : float
        Power share of the target beam in the NSP transmit vector.
    nsp_null_downlink : bool
        Also null ``a(θ_d)`` in the NSP receive combiner.
    """

    n_t: int = 16
    n_r: int = 16
    n_u: int = 2
    n_d: int = 2
    carrier_hz: float = 2.4e9
    bandwidth_hz: float = 20e6
    p_d_dbm: float = 20.0
    p_u_dbm: float = 10.0
    noise_dbm: float = -94.0
    pathloss_exponent: float = 2.2
    d0_m: float = 1.0
    kappa: float = 1.0
    kappa_si: float = 10.0
    si_level_db: float = 60.0
    si_angle_deg: float = 0.0
    rcs_m2: float = 1.0
    alphas: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    beta: float = 1e-25
    epsilon: float = 1e-5
    max_iters: int = 200
    bisection_tol: float = 1e-10
    rng_seed: int = 0
    target: Bearing = field(default_factory=lambda: Bearing(45.0, 7.5, 20.0))
    uplink: Bearing = field(default_factory=lambda: Bearing(-50.0, 10.0, 0.0))
    downlink: Bearing = field(default_factory=lambda: Bearing(-30.0, 100.0, 0.0))
    departure_conjugate: bool = False
    hd_fraction: float = 0.5
    nsp_weight: float = 0.5
    nsp_null_downlink: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        self.validate()

    # -- derived quantities -------------------------------------------------
    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def sample_period(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def p_d_mw(self) -> float:
        return dbm_to_mw(self.p_d_dbm)

    @property
    def p_u_mw(self) -> float:
        return dbm_to_mw(self.p_u_dbm)

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)

    def with_priority(self, rho: float) -> "SystemConfig":
        """Copy with ``α₁ = α₂ = ρ`` (communication) and ``α₃ = α₄ = 1`` (radar)."""
        return replace(self, alphas=(rho, rho, 1.0, 1.0))

    # -- validation ---------------------------------------------------------
    def validate(self) -> None:
        for key in ("n_t", "n_r", "n_u", "n_d", "max_iters"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(key, f"must be a positive integer, got {value!r}")
        if not (self.n_u < self.n_t <= self.n_r):
            raise ConfigError("n_u", f"need n_u < n_t <= n_r, got {self.n_u}, {self.n_t}, {self.n_r}")
        if not (self.n_d < self.n_t):
            raise ConfigError("n_d", f"need n_d < n_t, got {self.n_d} and {self.n_t}")
        for key in ("carrier_hz", "bandwidth_hz", "d0_m", "rcs_m2", "beta", "epsilon",
                    "bisection_tol", "pathloss_exponent"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(key, f"must be a positive finite number, got {value!r}")
        for key in ("p_d_dbm", "p_u_dbm", "noise_dbm", "si_level_db", "si_angle_deg"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ConfigError(key, f"must be finite, got {value!r}")
        if not -90.0 < self.si_angle_deg < 90.0:
            raise ConfigError("si_angle_deg", f"must lie in (-90, 90), got {self.si_angle_deg}")
        for key in ("kappa", "kappa_si"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and value >= 0 and not math.isnan(value)):
                raise ConfigError(key, f"must be >= 0, got {value!r}")
        if len(self.alphas) != 4:
            raise ConfigError("alphas", f"need exactly 4 weights, got {len(self.alphas)}")
        if any(not math.isfinite(a) or a < 0 for a in self.alphas):
            raise ConfigError("alphas", f"weights must be finite and >= 0, got {self.alphas}")
        for key in ("hd_fraction", "nsp_weight"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                raise ConfigError(key, f"must lie in [0, 1], got {value!r}")
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, (int, np.integer)) \
                or self.rng_seed < 0:
            raise ConfigError("rng_seed", f"must be a non-negative integer, got {self.rng_seed!r}")
        for key in ("target", "uplink", "downlink"):
            bearing = getattr(self, key)
            if not isinstance(bearing, Bearing):
                raise ConfigError(key, "must be a Bearing")
            bearing.validate(key)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class RadarGroundTruth:
    """Point-target parameters seen by the radar receiver."""

    theta_r: float
    r: float
    v: float
    eta_r: float
    f_d: float
    rcs: float


@dataclass(frozen=True)
class ChannelSet:
    """Realized channels.  ``h`` is the aggregate ``h_r + h_si``.

    Shapes: ``h_u`` is N_r×N_u, ``h_d`` is N_d×N_t and ``h_r``, ``h_si``, ``h``
    are N_r×N_t.
    """

    h_u: np.ndarray
    h_d: np.ndarray
    h_r: np.ndarray
    h_si: np.ndarray
    h: np.ndarray

    @classmethod
    def build(cls, h_u, h_d, h_r, h_si) -> "ChannelSet":
        h_u, h_d, h_r, h_si = (np.asarray(m, dtype=np.complex128) for m in (h_u, h_d, h_r, h_si))
        if h_r.shape != h_si.shape:
            raise ValueError(f"radar and SI channels differ in shape: {h_r.shape} vs {h_si.shape}")
        if h_u.shape[0] != h_r.shape[0] or h_d.shape[1] != h_r.shape[1]:
            raise ValueError("user channel shapes do not match the array sizes")
        return cls(h_u, h_d, h_r, h_si, h_r + h_si)

    def without_si(self) -> "ChannelSet":
        return ChannelSet.build(self.h_u, self.h_d, self.h_r, np.zeros_like(self.h_si))

    @property
    def n_r(self) -> int:
        return self.h.shape[0]

    @property
    def n_t(self) -> int:
        return self.h.shape[1]


def _steering(theta_deg: float, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"array size must be >= 1, got {n}")
    phase = 2.0 * np.pi * _ELEMENT_SPACING * math.sin(math.radians(theta_deg))
    return np.exp(1j * phase * np.arange(n))


def steering_rx(theta_deg: float, n: int) -> np.ndarray:
    """Receive steering vector ``a(θ)[k] = exp(j·π·k·sin θ)``, half-wavelength ULA."""
    return _steering(theta_deg, n)


def steering_tx(theta_deg: float, n: int) -> np.ndarray:
    """Transmit steering vector ``b(θ)``; same structure as :func:`steering_rx`."""
    return _steering(theta_deg, n)


def pathloss_db(d: float, cfg: SystemConfig) -> float:
    """Log-distance path loss ``−20log₁₀(λ/(4πd₀)) + 10·n·log₁₀(d/d₀)`` in dB."""
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    lam = cfg.wavelength
    return (-20.0 * math.log10(lam / (4.0 * math.pi * cfg.d0_m))
            + 10.0 * cfg.pathloss_exponent * math.log10(d / cfg.d0_m))


def _los(theta_arrive: float, theta_depart: float, rows: int, cols: int,
         conjugate: bool) -> np.ndarray:
    a = steering_rx(theta_arrive, rows)
    b = steering_tx(theta_depart, cols)
    return np.outer(a, b.conj() if conjugate else b)


def rician_channel(theta_arrive: float, theta_depart: float, rows: int, cols: int,
                   kappa: float, eta_linear: float, rng: np.random.Generator,
                   *, conjugate: bool = False) -> np.ndarray:
    """Rician MIMO channel ``√η·(√(κ/(κ+1))·a·bᵀ + √(1/(κ+1))·G̃)``.

    ``G̃`` has i.i.d. unit-variance circular complex Gaussian entries.  For
    ``κ >= LOS_ONLY_KAPPA`` the output is the scaled line-of-sight matrix
    exactly and no random numbers are consumed.
    """
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if not eta_linear > 0:
        raise ValueError(f"large-scale gain must be positive, got {eta_linear}")
    scale = math.sqrt(eta_linear)
    los = _los(theta_arrive, theta_depart, rows, cols, conjugate)
    if kappa >= LOS_ONLY_KAPPA:
        return scale * los
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2.0)
    return scale * (math.sqrt(kappa / (kappa + 1.0)) * los + math.sqrt(1.0 / (kappa + 1.0)) * nlos)


def radar_attenuation(r: float, rcs: float, wavelength: float) -> float:
    """Two-way amplitude attenuation ``√(λ²σ/((4π)³r⁴))`` from the radar range equation."""
    return math.sqrt(wavelength ** 2 * rcs / ((4.0 * math.pi) ** 3 * r ** 4))


def radar_channel(gt: RadarGroundTruth, t: float, n_r: int, n_t: int,
                  *, conjugate: bool = False) -> np.ndarray:
    """Rank-one target channel ``η_r·exp(j2πf_d t)·a(θ_r)·bᵀ(θ_r)``."""
    phase = np.exp(2j * np.pi * gt.f_d * t)
    return gt.eta_r * phase * _los(gt.theta_r, gt.theta_r, n_r, n_t, conjugate)


def si_channel(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """SI channel ``√η_si·G_si``.

    ``η_si = P_si/P_d`` with ``P_si = noise + si_level_db`` (dBm), so the
    mean per-entry received SI power at full transmit power equals the
    configured level above the noise floor.
    """
    eta_si = dbm_to_mw(cfg.noise_dbm + cfg.si_level_db) / cfg.p_d_mw
    return rician_channel(cfg.si_angle_deg, cfg.si_angle_deg, cfg.n_r, cfg.n_t,
                          cfg.kappa_si, eta_si, rng, conjugate=cfg.departure_conjugate)


def ground_truth(cfg: SystemConfig, target: Bearing) -> RadarGroundTruth:
    return RadarGroundTruth(
        theta_r=target.theta,
        r=target.r,
        v=target.v,
        eta_r=radar_attenuation(target.r, cfg.rcs_m2, cfg.wavelength),
        f_d=2.0 * target.v * cfg.carrier_hz / SPEED_OF_LIGHT,
        rcs=cfg.rcs_m2,
    )


def synthesize(cfg: SystemConfig, target: Bearing | None = None, uplink: Bearing | None = None,
               downlink: Bearing | None = None, rng: np.random.Generator | None = None,
               ) -> tuple[ChannelSet, RadarGroundTruth]:
    """Build every channel of one scenario realization.

    Random draws happen in a fixed order (uplink, downlink, SI), so the
    result is a pure function of the configuration, bearings and generator
    state.  Omitted bearings come from ``cfg``; an omitted generator is
    seeded from ``cfg.rng_seed``.
    """
    target = target or cfg.target
    uplink = uplink or cfg.uplink
    downlink = downlink or cfg.downlink
    for key, bearing in (("target", target), ("uplink", uplink), ("downlink", downlink)):
        bearing.validate(key)
    if rng is None:
        rng = make_rng(cfg.rng_seed)
    conj = cfg.departure_conjugate
    eta_u = db_to_linear(-pathloss_db(uplink.r, cfg))
    eta_d = db_to_linear(-pathloss_db(downlink.r, cfg))
    h_u = rician_channel(uplink.theta, uplink.theta, cfg.n_r, cfg.n_u, cfg.kappa, eta_u, rng,
                         conjugate=conj)
    h_d = rician_channel(downlink.theta, downlink.theta, cfg.n_d, cfg.n_t, cfg.kappa, eta_d, rng,
                         conjugate=conj)
    h_si = si_channel(cfg, rng)
    gt = ground_truth(cfg, target)
    h_r = radar_channel(gt, 0.0, cfg.n_r, cfg.n_t, conjugate=conj)
    return ChannelSet.build(h_u, h_d, h_r, h_si), gt


def float_key(x: float) -> int:
    """Map a float to a distinct non-negative integer (its IEEE-754 bit pattern)."""
    return int.from_bytes(struct.pack("<d", float(x)), "little")


def make_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``stream``.

    Uses ``Philox`` seeded from ``SeedSequence(master_seed, spawn_key=stream)``.
    Distinct ``stream`` tuples give statistically independent generators.
    """
    keys: Sequence[int] = tuple(int(s) for s in stream)
    if any(k < 0 for k in keys):
        raise ValueError("stream identifiers must be non-negative")
    seq = np.random.SeedSequence(int(master_seed), spawn_key=keys)
    return np.random.Generator(np.random.Philox(seq))
