"""Penalty-based joint transmit/receive beamformer design.

The design problem maximizes a weighted sum of uplink and downlink rates
(in WMMSE form) plus transmit and receive beampattern gains toward the
target.  SI suppression enters as the penalty ``−|wᴴH_si p|²/(2β)``.
Block coordinate ascent cycles through

    ρ_u, ρ_d  →  ω_u  →  w  →  u_d  →  p

with a closed-form maximizer for every block.  Each block update solves its
subproblem globally, so the objective never decreases between sweeps.

Natural logarithms are used in the rate terms ``log ρ − ρE``.  With that
choice ``ρ = 1/E`` is the exact maximizer of its block (see
:func:`update_rho`).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .numerics import (
    BracketError,
    SingularMatrixError,
    bisect,
    householder_basis,
    solve_linear,
    solve_rank1_penalized,
)
from .scenario import ChannelSet, SystemConfig, steering_tx

__all__ = [
    "DegenerateUpdateError",
    "SolverError",
    "BeamformerState",
    "SolverOptions",
    "SolverReport",
    "build_z",
    "mse_bs",
    "mse_dl",
    "update_rho",
    "update_omega_u",
    "update_w",
    "update_u_d",
    "update_p",
    "objective_value",
    "evaluate_objective",
    "initial_state",
    "solve",
]

log = logging.getLogger(__name__)

#: Upper limit on the geometric growth of bisection brackets.
_MAX_BRACKET_DOUBLINGS = 60
#: Points per pass of the batched Γ bisection (one pass = six halvings).
_BATCH = 64


class DegenerateUpdateError(RuntimeError):
    """A block update has no well-defined solution (zero driving vector)."""


class SolverError(RuntimeError):
    """The solver could not complete an iteration."""


@dataclass(frozen=True)
class BeamformerState:
    """The six optimization variables.

    Attributes
    ----------
    p : numpy.ndarray
        Transmit beamformer, length ``N_t``.
    w : numpy.ndarray
        Receive combiner at the transceiver, length ``N_r``.
    omega_u : numpy.ndarray
        Uplink user precoder, length ``N_u``.
    u_d : numpy.ndarray
        Downlink user combiner, length ``N_d``.
    rho_u, rho_d : float
        WMMSE weights of the uplink and downlink MSEs.
    """

    p: np.ndarray
    w: np.ndarray
    omega_u: np.ndarray
    u_d: np.ndarray
    rho_u: float = 1.0
    rho_d: float = 1.0

    def replace(self, **changes) -> "BeamformerState":
        return replace(self, **changes)


@dataclass(frozen=True)
class SolverOptions:
    """Stopping and penalty controls.

    ``bisection_tol`` bounds the relative constraint residual of the two
    multiplier searches; bisections are run to ``bisection_tol/1000``
    before an exact rescale onto the power sphere.  ``gamma_search`` picks
    the root finder for the transmit multiplier (``"brent"`` or
    ``"bisect"``).
    """

    max_iters: int = 200
    epsilon: float = 1e-5
    beta: float = 1e-25
    bisection_tol: float = 1e-10
    alphas: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    track_blocks: bool = False
    gamma_search: str = "brent"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.gamma_search not in ("brent", "bisect"):
            raise ValueError(f"gamma_search must be 'brent' or 'bisect', got {self.gamma_search!r}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @classmethod
    def from_config(cls, cfg: SystemConfig, **overrides) -> "SolverOptions":
        base = dict(max_iters=cfg.max_iters, epsilon=cfg.epsilon, beta=cfg.beta,
                    bisection_tol=cfg.bisection_tol, alphas=cfg.alphas)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one :func:`solve` call.

    ``objective_trace[0]`` is the objective at the initial point and
    ``objective_trace[n]`` the value after sweep ``n``.  ``zeta_trace[n-1]``
    is the relative change of sweep ``n``.  ``block_trace`` is filled only
    when ``SolverOptions.track_blocks`` is set; each row holds the objective
    after the ρ, ω_u, w, u_d and p updates of one sweep.
    """

    iterations: int
    objective_trace: tuple[float, ...]
    zeta_trace: tuple[float, ...]
    converged: bool
    residual_si_linear: float
    fallbacks: int = 0
    beta_retries: int = 0
    block_trace: tuple[tuple[float, ...], ...] = ()
    elapsed_s: float = field(default=0.0, compare=False)

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1]


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def build_z(theta_deg: float, n: int) -> np.ndarray:
    """Beampattern surrogate matrix ``Z(θ) = s(θ)s(θ)ᴴ − N·I``.

    Negative semidefinite with ``Z·s(θ) = 0``.  Transmit and receive
    steering vectors share one form, so the same function builds both.
    """
    s = steering_tx(theta_deg, n)
    return np.outer(s, s.conj()) - n * np.eye(n)


def mse_bs(state: BeamformerState, channels: ChannelSet, sigma2_u: float) -> float:
    """Uplink MSE at the transceiver with radar return treated as noise."""
    w = state.w
    t = np.vdot(w, channels.h_u @ state.omega_u)
    hp = np.vdot(w, channels.h @ state.p)
    return float(abs(t) ** 2 - 2.0 * t.real + abs(hp) ** 2
                 + sigma2_u * np.vdot(w, w).real + 1.0)


def mse_dl(state: BeamformerState, channels: ChannelSet, sigma2_d: float) -> float:
    """Downlink MSE at the user."""
    u = state.u_d
    t = np.vdot(u, channels.h_d @ state.p)
    return float(abs(t) ** 2 - 2.0 * t.real + sigma2_d * np.vdot(u, u).real + 1.0)


def update_rho(state: BeamformerState, channels: ChannelSet, sigma2_u: float,
               sigma2_d: float | None = None) -> tuple[float, float]:
    """Return ``(1/E_BS, 1/E_d)``, the maximizers of ``log ρ − ρE``.

    Raises
    ------
    SolverError
        If either MSE is not positive, which would mean a broken state.
    """
    if sigma2_d is None:
        sigma2_d = sigma2_u
    e_bs = mse_bs(state, channels, sigma2_u)
    e_d = mse_dl(state, channels, sigma2_d)
    if not (e_bs > 0 and e_d > 0):
        raise SolverError(f"nonpositive MSE (E_BS={e_bs:.3e}, E_d={e_d:.3e})")
    return 1.0 / e_bs, 1.0 / e_d


def _grow_until(f, start: float, step: float) -> float:
    """Move ``start + step·2^k`` upward until ``f`` becomes nonpositive."""
    for k in range(_MAX_BRACKET_DOUBLINGS + 1):
        x = start + step * 2.0 ** k
        if f(x) <= 0:
            return x
    raise BracketError(start, start + step * 2.0 ** _MAX_BRACKET_DOUBLINGS, np.nan, f(x))


def update_omega_u(state: BeamformerState, channels: ChannelSet, alpha1: float, p_u: float,
                   tol: float = 1e-10, *, full_output: bool = False):
    """Uplink precoder ``ω_u = α₁(α₁‖v‖² + μ)⁻¹·v`` with ``v = H_uᴴw``.

    ``μ >= 0`` is found by bisection so that ``‖ω_u‖² = P_u``.  When the
    unconstrained optimum (``μ = 0``) already lies inside the power ball,
    the constraint is inactive and that point is returned.  The channel
    gains of realistic scenarios keep the constraint active.

    Raises
    ------
    DegenerateUpdateError
        If ``H_uᴴw = 0`` or ``α₁ = 0``: the uplink does not enter the objective.
    """
    v = channels.h_u.conj().T @ state.w
    nv2 = float(np.vdot(v, v).real)
    if nv2 == 0.0 or alpha1 == 0.0:
        raise DegenerateUpdateError("uplink direction H_u^H w is zero")
    lead = alpha1 * nv2

    def excess(mu: float) -> float:
        # ‖ω(μ)‖²/P_u − 1, monotone decreasing in μ
        return (alpha1 / (lead + mu)) ** 2 * nv2 / p_u - 1.0

    if excess(0.0) <= 0.0:
        mu = 0.0
    else:
        scale = max(lead, alpha1 * math.sqrt(nv2 / p_u))
        hi = _grow_until(excess, 0.0, scale)
        mu = bisect(excess, 0.0, hi, tol * 1e-3, xtol=0.0)
    omega = (alpha1 / (lead + mu)) * v
    if mu > 0.0:
        omega *= math.sqrt(p_u / float(np.vdot(omega, omega).real))
    return (omega, mu) if full_output else omega


def _w_system(state: BeamformerState, channels: ChannelSet, alpha1: float, alpha4: float,
              sigma2_u: float, z_r: np.ndarray):
    hu = channels.h_u @ state.omega_u
    hp = channels.h @ state.p
    n = hu.shape[0]
    x_u = alpha1 * state.rho_u * (np.outer(hu, hu.conj()) + np.outer(hp, hp.conj())
                                  + sigma2_u * np.eye(n)) - alpha4 * z_r
    rhs = 2.0 * alpha1 * state.rho_u * hu
    return 2.0 * x_u, channels.h_si @ state.p, rhs


def update_w(state: BeamformerState, channels: ChannelSet, alpha1: float, alpha4: float,
             beta: float, sigma2_u: float, z_r: np.ndarray) -> np.ndarray:
    """Receive combiner solving ``(2X_u + β⁻¹·H_si p pᴴH_siᴴ)·w = 2α₁ρ_u·H_uω_u``.

    ``X_u = α₁ρ_u(H_uω_uω_uᴴH_uᴴ + Hppᴴ Hᴴ + σ²I) − α₄Z_r``.  The huge
    penalty weight is handled by :func:`~fdisac.numerics.solve_rank1_penalized`.
    The result is not normalized.

    Raises
    ------
    SingularMatrixError
        If the system is singular to working precision.
    """
    c, u, rhs = _w_system(state, channels, alpha1, alpha4, sigma2_u, z_r)
    if not rhs.any():
        return np.zeros_like(state.w)
    return solve_rank1_penalized(c, u, 1.0 / beta, rhs)


def update_u_d(state: BeamformerState, channels: ChannelSet, sigma2_d: float) -> np.ndarray:
    """MMSE combiner ``(H_d p pᴴH_dᴴ + σ²I)⁻¹·H_d p`` of the downlink user."""
    hd = channels.h_d @ state.p
    if not hd.any():
        return np.zeros_like(state.u_d)
    system = np.outer(hd, hd.conj()) + sigma2_d * np.eye(hd.shape[0])
    return solve_linear(system, hd)


class _SphereQP:
    """Solutions ``x(Γ) = (C + κ·uuᴴ + 2ΓI)⁻¹ r`` and their norms, cheaply in ``Γ``.

    The matrix is rotated into a Householder basis ``[û, Q]`` so that the
    penalty touches one entry.  The trailing block ``QᴴCQ`` is
    eigendecomposed once, after which every evaluation is ``O(n)``.
    """

    def __init__(self, c: np.ndarray, u: np.ndarray, weight: float, r: np.ndarray):
        n = r.shape[0]
        self.c, self.u, self.weight, self.r = c, u, weight, r
        unorm2 = float(np.vdot(u, u).real)
        self.penalized = weight > 0.0 and unorm2 > 0.0 and n > 1
        if self.penalized:
            basis = householder_basis(u)
            rot = basis.conj().T @ c @ basis
            rot = 0.5 * (rot + rot.conj().T)
            rb = basis.conj().T @ r
            self.basis = basis
            self.a11 = rot[0, 0].real + weight * unorm2
            lam, vec = scipy.linalg.eigh(rot[1:, 1:], check_finite=False)
            self.lam, self.vec = lam, vec
            self.y = vec.conj().T @ rot[1:, 0]
            self.b0 = rb[0]
            self.yb = vec.conj().T @ rb[1:]
            ny2 = float(np.vdot(self.y, self.y).real)
            if self.a11 > lam[-1] + math.sqrt(ny2):
                self.lam_min, coords = self._arrowhead_min(ny2)
                self.v_min = basis[:, 0] * coords[0] + basis[:, 1:] @ (vec @ coords[1:])
            else:
                full_l, full_v = scipy.linalg.eigh(rot + np.diag([weight * unorm2] + [0.0] * (n - 1)),
                                                   check_finite=False)
                self.lam_min = full_l[0]
                self.v_min = basis @ full_v[:, 0]
        else:
            herm = c + weight * np.outer(u, u.conj())
            herm = 0.5 * (herm + herm.conj().T)
            lam, vec = scipy.linalg.eigh(herm, check_finite=False)
            self.lam, self.vec = lam, vec
            self.yb = vec.conj().T @ r
            self.lam_min = lam[0]
            self.v_min = vec[:, 0]
        spread = max(1.0, float(np.max(np.abs(self.lam))), abs(self.lam_min))
        self.gamma_lo = -self.lam_min / 2.0 + 1e-9 * spread

    def _arrowhead_min(self, ny2: float) -> tuple[float, np.ndarray]:
        """Smallest eigenpair of the rotated matrix ``[[a11, yᴴ], [y, diag(λ)]]``.

        The eigenvalue is the root below ``λ₀`` of the decreasing secular
        function ``a11 − μ − Σ|yᵢ|²/(λᵢ − μ)``.  The Schur-complement bound
        ``λ₀ − ‖y‖²/(a11 − λ₀)`` lies below the root and ``λ₀`` above it.
        Returns the eigenvalue and the unit eigenvector in ``[û, Q·V]``
        coordinates.
        """
        lam, y, a11 = self.lam, self.y, self.a11
        w2 = y.real ** 2 + y.imag ** 2
        n1 = lam.shape[0]
        lower = lam[0] - ny2 / (a11 - lam[0])

        def secular(mu):
            return a11 - mu - float(np.sum(w2 / (lam - mu)))

        coords = np.zeros(n1 + 1, dtype=np.complex128)
        top = float(np.nextafter(lam[0], -np.inf))
        if lower < top and secular(top) < 0.0:
            if secular(lower) <= 0.0:
                # huge a11: the bound already equals the root to working precision
                mu = lower
            else:
                mu = scipy.optimize.brentq(secular, lower, top, xtol=1e-300,
                                           rtol=4.0 * np.finfo(float).eps, maxiter=500)
            coords[0] = 1.0
            coords[1:] = -y / (lam - mu)
            coords /= np.linalg.norm(coords)
            return float(mu), coords
        # no root resolvable below λ₀: the minimum is λ₀ to working precision
        coords[1] = 1.0
        return float(min(lower, lam[0])), coords

    def _coords(self, gamma):
        """Rotated coordinates of ``x(Γ)``; ``gamma`` may be a scalar or 1-D array."""
        g2 = 2.0 * np.asarray(gamma, dtype=float)[..., None]
        if not self.penalized:
            return None, self.yb / (self.lam + g2)
        a11 = self.a11 + g2[..., 0]
        d = self.lam + g2
        rhs = self.yb - self.y * (self.b0 / a11)[..., None]
        di = rhs / d
        dy = self.y / d
        yc = self.y.conj()
        corr = (di @ yc) / (a11 - (dy @ yc).real)
        zt = di + dy * corr[..., None]
        t = (self.b0 - zt @ yc) / a11
        return t, zt

    def norm2(self, gamma):
        t, zt = self._coords(gamma)
        total = np.sum(zt.real ** 2 + zt.imag ** 2, axis=-1)
        return total if t is None else total + t.real ** 2 + t.imag ** 2

    def vector(self, gamma: float) -> np.ndarray:
        t, zt = self._coords(float(gamma))
        if t is None:
            return self.vec @ zt
        return self.basis[:, 0] * t + self.basis[:, 1:] @ (self.vec @ zt)


def _p_system(state: BeamformerState, channels: ChannelSet, alphas: Sequence[float],
              z_t: np.ndarray):
    a1, a2, a3, _ = alphas
    hw = channels.h.conj().T @ state.w
    q = channels.h_d.conj().T @ state.u_d
    x_d = (a1 * state.rho_u * np.outer(hw, hw.conj())
           + a2 * state.rho_d * np.outer(q, q.conj()) - a3 * z_t)
    g = channels.h_si.conj().T @ state.w
    return 2.0 * x_d, g, 2.0 * a2 * state.rho_d * q


def update_p(state: BeamformerState, channels: ChannelSet, alphas: Sequence[float], beta: float,
             p_d: float, z_t: np.ndarray, tol: float = 1e-10, *, full_output: bool = False,
             method: str = "brent"):
    """Transmit beamformer ``p = (2X_d + β⁻¹·ggᴴ + 2ΓI)⁻¹·2α₂ρ_d·H_dᴴu_d``.

    Here ``g = H_siᴴw`` and
    ``X_d = α₁ρ_u·Hᴴwwᴴ H + α₂ρ_d·H_dᴴu_du_dᴴH_d − α₃Z_t``.  The multiplier
    ``Γ`` is searched by bisection above the value making the system matrix
    positive definite, so that ``‖p‖² = P_d``.  If even the smallest
    admissible ``Γ`` leaves ``‖p‖² < P_d`` (the degenerate "hard case" of
    sphere-constrained quadratics) the missing power is put along the
    eigenvector of the smallest eigenvalue.

    ``method`` selects the multiplier search inside the bracket:
    ``"brent"`` (default, bracketed and superlinear) or ``"bisect"``.  Both
    return the same root to rounding.

    Raises
    ------
    DegenerateUpdateError
        If the right-hand side ``2α₂ρ_d·H_dᴴu_d`` vanishes.
    """
    c, g, rhs = _p_system(state, channels, alphas, z_t)
    if not rhs.any():
        raise DegenerateUpdateError("downlink right-hand side H_d^H u_d is zero")
    qp = _SphereQP(c, g, 1.0 / beta, rhs)

    def excess(gamma):
        return qp.norm2(gamma) / p_d - 1.0

    lo = qp.gamma_lo
    if excess(lo) <= 0.0:
        gamma = lo
        base = qp.vector(lo)
        proj = float(np.vdot(qp.v_min, base).real)
        slack = p_d - float(np.vdot(base, base).real)
        tau = -proj + math.sqrt(max(proj * proj + slack, 0.0))
        p = base + tau * qp.v_min
        log.debug("update_p: hard case, Gamma=%.6g", gamma)
    else:
        # ‖x(Γ)‖ <= ‖r‖/(λ_min + 2Γ), so this Γ already satisfies the constraint
        bound = 0.5 * (float(np.linalg.norm(rhs)) / math.sqrt(p_d) - qp.lam_min)
        hi = max(bound, lo) * (1.0 + 1e-12) + 1e-300
        if excess(hi) > 0.0:
            hi = _grow_until(excess, hi, max(1.0, abs(hi)))
        if method == "bisect":
            gamma = bisect(excess, lo, hi, tol * 1e-3, xtol=0.0, batch=_BATCH)
        elif method == "brent":
            # secular form 1/‖x‖ − 1/√P is close to linear in Γ
            inv_root = 1.0 / math.sqrt(p_d)
            secular = lambda g: 1.0 / math.sqrt(qp.norm2(g)) - inv_root  # noqa: E731
            gamma = scipy.optimize.brentq(secular, lo, hi, xtol=1e-300,
                                          rtol=4.0 * np.finfo(float).eps, maxiter=500)
        else:
            raise ValueError(f"unknown multiplier search {method!r}")
        p = qp.vector(gamma)
    p = p * math.sqrt(p_d / float(np.vdot(p, p).real))
    return (p, gamma) if full_output else p


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def objective_value(state: BeamformerState, channels: ChannelSet, alphas: Sequence[float],
                    beta: float, sigma2: float, z_t: np.ndarray, z_r: np.ndarray) -> float:
    """Penalized WMMSE objective for explicit weights and beampattern matrices."""
    a1, a2, a3, a4 = alphas
    e_bs = mse_bs(state, channels, sigma2)
    e_d = mse_dl(state, channels, sigma2)
    p, w = state.p, state.w
    si = abs(np.vdot(w, channels.h_si @ p)) ** 2
    value = 0.0
    if a1:
        value += a1 * (math.log(state.rho_u) - state.rho_u * e_bs)
    if a2:
        value += a2 * (math.log(state.rho_d) - state.rho_d * e_d)
    if a3:
        value += a3 * np.vdot(p, z_t @ p).real
    if a4:
        value += a4 * np.vdot(w, z_r @ w).real
    return float(value - si / (2.0 * beta))


def evaluate_objective(state: BeamformerState, channels: ChannelSet, cfg: SystemConfig) -> float:
    """Objective value for the weights, penalty and target angle in ``cfg``."""
    theta = cfg.target.theta
    return objective_value(state, channels, cfg.alphas, cfg.beta, cfg.noise_mw,
                           build_z(theta, channels.n_t), build_z(theta, channels.n_r))


# ---------------------------------------------------------------------------
# Algorithm
# ---------------------------------------------------------------------------

def _complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)


def initial_state(channels: ChannelSet, cfg: SystemConfig, rng: np.random.Generator) -> BeamformerState:
    """Random feasible start: Gaussian draws scaled to the power constraints.

    ``u_d`` is left unscaled; ``ρ_u, ρ_d`` come from one :func:`update_rho`.
    """
    p = _complex_gaussian(rng, channels.n_t)
    w = _complex_gaussian(rng, channels.n_r)
    omega = _complex_gaussian(rng, channels.h_u.shape[1])
    u_d = _complex_gaussian(rng, channels.h_d.shape[0])
    p *= math.sqrt(cfg.p_d_mw) / np.linalg.norm(p)
    w /= np.linalg.norm(w)
    omega *= math.sqrt(cfg.p_u_mw) / np.linalg.norm(omega)
    state = BeamformerState(p, w, omega, u_d)
    rho_u, rho_d = update_rho(state, channels, cfg.noise_mw)
    return state.replace(rho_u=rho_u, rho_d=rho_d)


def _converged(f_new: float, f_old: float, eps: float) -> tuple[bool, float]:
    zeta = (f_new - f_old) / abs(f_old) if f_old != 0.0 else math.inf
    return (zeta <= eps and abs(f_new - f_old) <= eps * max(1.0, abs(f_new))), zeta


def solve(channels: ChannelSet, cfg: SystemConfig, options: SolverOptions | None = None,
          init_rng: np.random.Generator | None = None, *,
          init_state: BeamformerState | None = None) -> tuple[BeamformerState, SolverReport]:
    """Run block coordinate ascent until the relative change is below ``epsilon``.

    Parameters
    ----------
    channels : ChannelSet
    cfg : SystemConfig
        Supplies powers, noise and the target angle.
    options : SolverOptions, optional
        Defaults to ``SolverOptions.from_config(cfg)``.
    init_rng : numpy.random.Generator, optional
        Source of the random initial point (ignored with ``init_state``).
    init_state : BeamformerState, optional
        Explicit starting point.

    Returns
    -------
    state : BeamformerState
        Final variables with ``w`` normalized to unit norm.
    report : SolverReport
        Objective trace (before normalization), relative changes and the
        residual SI ``|ŵᴴH_si p|²`` of the normalized combiner.

    Notes
    -----
    Stopping requires both ``ζ = (f_n − f_{n−1})/|f_{n−1}| <= ε`` and
    ``|f_n − f_{n−1}| <= ε·max(1, |f_n|)``.  A degenerate ω_u or p update
    keeps the previous block value.  A singular w system is retried once
    with ``β`` increased tenfold.
    """
    opts = options or SolverOptions.from_config(cfg)
    started = time.perf_counter()
    alphas = opts.alphas
    a1, _, _, a4 = alphas
    sigma2 = cfg.noise_mw
    theta = cfg.target.theta
    z_t = build_z(theta, channels.n_t)
    z_r = build_z(theta, channels.n_r)

    def f(s: BeamformerState) -> float:
        return objective_value(s, channels, alphas, opts.beta, sigma2, z_t, z_r)

    if init_state is None:
        if init_rng is None:
            init_rng = np.random.default_rng(cfg.rng_seed)
        state = initial_state(channels, cfg, init_rng)
    else:
        state = init_state

    f_prev = f(state)
    trace = [f_prev]
    zetas: list[float] = []
    blocks: list[tuple[float, ...]] = []
    fallbacks = 0
    retries = 0
    converged = False
    iterations = 0

    for iterations in range(1, opts.max_iters + 1):
        row: list[float] = []
        rho_u, rho_d = update_rho(state, channels, sigma2)
        state = state.replace(rho_u=rho_u, rho_d=rho_d)
        if opts.track_blocks:
            row.append(f(state))

        try:
            state = state.replace(omega_u=update_omega_u(state, channels, a1, cfg.p_u_mw,
                                                         opts.bisection_tol))
        except DegenerateUpdateError:
            fallbacks += 1
        if opts.track_blocks:
            row.append(f(state))

        try:
            w = update_w(state, channels, a1, a4, opts.beta, sigma2, z_r)
        except SingularMatrixError:
            retries += 1
            try:
                w = update_w(state, channels, a1, a4, opts.beta * 10.0, sigma2, z_r)
            except SingularMatrixError as exc:
                raise SolverError(f"receive combiner system singular after retry: {exc}") from exc
        state = state.replace(w=w)
        if opts.track_blocks:
            row.append(f(state))

        state = state.replace(u_d=update_u_d(state, channels, sigma2))
        if opts.track_blocks:
            row.append(f(state))

        try:
            state = state.replace(p=update_p(state, channels, alphas, opts.beta, cfg.p_d_mw,
                                             z_t, opts.bisection_tol,
                                             method=opts.gamma_search))
        except DegenerateUpdateError:
            fallbacks += 1
        f_new = f(state)
        if opts.track_blocks:
            row.append(f_new)
            blocks.append(tuple(row))

        trace.append(f_new)
        done, zeta = _converged(f_new, f_prev, opts.epsilon)
        zetas.append(zeta)
        f_prev = f_new
        if done:
            converged = True
            break

    w_norm = np.linalg.norm(state.w)
    if w_norm > 0:
        state = state.replace(w=state.w / w_norm)
    residual = float(abs(np.vdot(state.w, channels.h_si @ state.p)) ** 2)
    report = SolverReport(
        iterations=iterations,
        objective_trace=tuple(trace),
        zeta_trace=tuple(zetas),
        converged=converged,
        residual_si_linear=residual,
        fallbacks=fallbacks,
        beta_retries=retries,
        block_trace=tuple(blocks),
        elapsed_s=time.perf_counter() - started,
    )
    return state, report
