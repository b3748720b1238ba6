"""Independent oracles for the closed-form block updates.

Each check fixes all blocks but one, applies the closed-form update and
measures

* stationarity: the finite-difference gradient of the objective at the
  update, projected onto the tangent space of the power sphere when the
  power constraint is active, relative to the gradient before the update;
* optimality: the relative gap to a generic numerical maximization of the
  same subproblem (SLSQP from several starts, or a bounded scalar search).

Instances are random, well scaled and use a moderate penalty weight so that
finite differences are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from fdisac.solver import (
    BeamformerState,
    build_z,
    objective_value,
    update_omega_u,
    update_p,
    update_rho,
    update_u_d,
    update_w,
)

from .conftest import random_instance

FD_STEP = 1e-6
UPDATES = ("rho_u", "rho_d", "omega_u", "w", "u_d", "p")


@dataclass
class Problem:
    channels: object
    state: BeamformerState
    alphas: tuple
    beta: float
    sigma2: float
    z_t: np.ndarray
    z_r: np.ndarray
    p_d: float
    p_u: float

    def f(self, state: BeamformerState) -> float:
        return objective_value(state, self.channels, self.alphas, self.beta, self.sigma2,
                               self.z_t, self.z_r)


@dataclass
class OracleResult:
    update: str
    stationarity: float
    gap: float
    active: bool


def make_problem(seed: int, n: int = 2) -> Problem:
    rng = np.random.default_rng(seed)
    channels, state = random_instance(rng, n_t=n, n_r=n)
    theta = float(rng.uniform(-60.0, 60.0))
    return Problem(
        channels=channels,
        state=state,
        alphas=tuple(float(a) for a in rng.uniform(0.2, 2.0, 4)),
        beta=float(rng.uniform(0.2, 2.0)),
        sigma2=float(rng.uniform(0.05, 0.5)),
        z_t=build_z(theta, n),
        z_r=build_z(theta, n),
        p_d=float(rng.uniform(0.5, 4.0)),
        p_u=float(rng.uniform(0.05, 1.0)),
    )


def complex_gradient(fun, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Central-difference ``∂f/∂Re x + j·∂f/∂Im x`` (the steepest-ascent direction)."""
    x = np.asarray(x, dtype=complex)
    grad = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        d_re = (fun(x + e) - fun(x - e)) / (2 * h)
        d_im = (fun(x + 1j * e) - fun(x - 1j * e)) / (2 * h)
        grad[k] = d_re + 1j * d_im
    return grad


def tangent_part(grad: np.ndarray, x: np.ndarray) -> np.ndarray:
    return grad - x * (np.vdot(x, grad).real / np.vdot(x, x).real)


def _to_real(x):
    return np.concatenate([x.real, x.imag])


def _to_complex(v):
    half = v.size // 2
    return v[:half] + 1j * v[half:]


def _numeric_max(fun, x0s, *, power=None, equality=False):
    """Maximize ``fun`` over complex vectors, optionally with a power constraint."""
    best = -math.inf
    for x0 in x0s:
        cons = ()
        if power is not None:
            kind = "eq" if equality else "ineq"
            cons = ({"type": kind, "fun": lambda v: power - float(v @ v)},)
        res = scipy.optimize.minimize(lambda v: -fun(_to_complex(v)), _to_real(x0),
                                      method="SLSQP", constraints=cons,
                                      options={"ftol": 1e-14, "maxiter": 1000})
        x = _to_complex(res.x)
        if power is not None:
            norm2 = float(np.vdot(x, x).real)
            if equality or norm2 > power:
                x = x * math.sqrt(power / norm2)
        best = max(best, fun(x))
    return best


def _gap(f_closed: float, f_numeric: float) -> float:
    return abs(f_numeric - f_closed) / max(abs(f_numeric), 1e-12)


def _starts(rng, n, power, count=6):
    out = []
    for _ in range(count):
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        out.append(x * math.sqrt(power) / np.linalg.norm(x) if power else x)
    return out


def check_rho(prob: Problem, which: str) -> OracleResult:
    rho_u, rho_d = update_rho(prob.state, prob.channels, prob.sigma2)
    value = rho_u if which == "rho_u" else rho_d

    def fun(r):
        return prob.f(prob.state.replace(**{which: r}))

    h = FD_STEP * value
    deriv = (fun(value + h) - fun(value - h)) / (2 * h)
    old = getattr(prob.state, which)
    deriv_old = (fun(old + FD_STEP * old) - fun(old - FD_STEP * old)) / (2 * FD_STEP * old)
    station = abs(deriv) * value / max(1.0, abs(deriv_old) * old)
    res = scipy.optimize.minimize_scalar(lambda t: -fun(math.exp(t)), bounds=(-20.0, 20.0),
                                         method="bounded", options={"xatol": 1e-12})
    return OracleResult(which, station, _gap(fun(value), -res.fun), False)


def check_omega(prob: Problem, rng) -> OracleResult:
    a1 = prob.alphas[0]
    omega, mu = update_omega_u(prob.state, prob.channels, a1, prob.p_u, 1e-12, full_output=True)

    def fun(x):
        return prob.f(prob.state.replace(omega_u=x))

    grad = complex_gradient(fun, omega)
    grad_old = complex_gradient(fun, prob.state.omega_u)
    active = mu > 0
    resid = tangent_part(grad, omega) if active else grad
    station = np.linalg.norm(resid) / max(1.0, np.linalg.norm(grad_old))
    best = _numeric_max(fun, _starts(rng, omega.size, prob.p_u), power=prob.p_u)
    return OracleResult("omega_u", float(station), _gap(fun(omega), best), active)


def check_w(prob: Problem, rng) -> OracleResult:
    w = update_w(prob.state, prob.channels, prob.alphas[0], prob.alphas[3], prob.beta,
                 prob.sigma2, prob.z_r)

    def fun(x):
        return prob.f(prob.state.replace(w=x))

    station = np.linalg.norm(complex_gradient(fun, w)) / max(
        1.0, np.linalg.norm(complex_gradient(fun, prob.state.w)))
    best = _numeric_max(fun, _starts(rng, w.size, None))
    return OracleResult("w", float(station), _gap(fun(w), best), False)


def check_u_d(prob: Problem, rng) -> OracleResult:
    u = update_u_d(prob.state, prob.channels, prob.sigma2)

    def fun(x):
        return prob.f(prob.state.replace(u_d=x))

    station = np.linalg.norm(complex_gradient(fun, u)) / max(
        1.0, np.linalg.norm(complex_gradient(fun, prob.state.u_d)))
    best = _numeric_max(fun, _starts(rng, u.size, None))
    return OracleResult("u_d", float(station), _gap(fun(u), best), False)


def check_p(prob: Problem, rng) -> OracleResult:
    p = update_p(prob.state, prob.channels, prob.alphas, prob.beta, prob.p_d, prob.z_t, 1e-12)

    def fun(x):
        return prob.f(prob.state.replace(p=x))

    grad = complex_gradient(fun, p)
    grad_old = complex_gradient(fun, prob.state.p)
    station = np.linalg.norm(tangent_part(grad, p)) / max(1.0, np.linalg.norm(grad_old))
    best = _numeric_max(fun, _starts(rng, p.size, prob.p_d), power=prob.p_d, equality=True)
    return OracleResult("p", float(station), _gap(fun(p), best), True)


def run_oracle(update: str, seed: int) -> OracleResult:
    prob = make_problem(seed)
    rng = np.random.default_rng(seed + 10_000)
    if update in ("rho_u", "rho_d"):
        return check_rho(prob, update)
    return {"omega_u": check_omega, "w": check_w, "u_d": check_u_d, "p": check_p}[update](prob, rng)
