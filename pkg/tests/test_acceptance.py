"""End-to-end acceptance checks at full Monte-Carlo scale.

Each test records its outcome in ``conftest.ACCEPTANCE`` before asserting,
so the terminal summary prints one PASS/FAIL line per criterion even when
an assertion fails.  The two full sweeps dominate the runtime.
"""

import math
import time

import numpy as np
import pytest

from fdisac.baselines import BaselineKind, baseline_state
from fdisac.harness import ExperimentSpec, radar_map_once, render_tables, run_sweep, solve_once, trial_rngs
from fdisac.metrics import default_theta_grid
from fdisac.numerics import max_eigenvalue_hermitian
from fdisac.radar_dsp import angle_spectrum
from fdisac.scenario import SystemConfig, synthesize
from fdisac.solver import build_z, solve

from .conftest import ACCEPTANCE
from .oracles import UPDATES, run_oracle

pytestmark = pytest.mark.slow

SWEEP_BUDGET_S = 600.0
RD_BUDGET_S = 120.0
REF_SI, REF_RHO = 60.0, 1.0


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    assert passed, detail


@pytest.fixture(scope="module")
def sweep():
    start = time.perf_counter()
    result = run_sweep(ExperimentSpec())
    return result, time.perf_counter() - start


@pytest.fixture(scope="module")
def reference_runs():
    cfg = SystemConfig(si_level_db=REF_SI).with_priority(REF_RHO)
    return cfg, [solve_once(cfg, trial=t) for t in range(100)]


def _separated(values, errors, decreasing: bool):
    """Consecutive means differ in the stated direction by more than their combined stderr."""
    out = []
    for (m0, s0), (m1, s1) in zip(zip(values, errors), zip(values[1:], errors[1:])):
        gap = (m0 - m1) if decreasing else (m1 - m0)
        out.append(gap > math.hypot(s0, s1))
    return all(out)


class TestAcceptance:
    def test_01_si_suppression(self, sweep):
        result, elapsed = sweep
        spec = result.spec
        worst = max(result.cell(si, rho, "proposed").mean["p_res_db"]
                    for si in spec.si_levels_db for rho in spec.rho_values)
        ok = worst < 0.0 and elapsed <= SWEEP_BUDGET_S
        record(1, ok, f"worst cell mean P_res {worst:.1f} dB, sweep {elapsed:.0f} s")

    def test_02_priority_monotone(self, sweep):
        result, _ = sweep
        rhos = result.spec.rho_values
        cells = [result.cell(REF_SI, rho, "proposed") for rho in rhos]
        p_res = [c.mean["p_res_db"] for c in cells]
        soi = [c.mean["soi_over_si_db"] for c in cells]
        ok_p = _separated(p_res, [c.stderr["p_res_db"] for c in cells], decreasing=True)
        ok_s = _separated(soi, [c.stderr["soi_over_si_db"] for c in cells], decreasing=False)
        detail = ("P_res " + "/".join(f"{v:.1f}" for v in p_res)
                  + " dB, SoI/SI " + "/".join(f"{v:.1f}" for v in soi) + " dB")
        record(2, ok_p and ok_s, detail)

    def test_03_convergence(self, reference_runs):
        _, runs = reference_runs
        monotone = all(np.all(np.diff(rep.objective_trace) >= -1e-9) for _, rep, _, _ in runs)
        converged = sum(rep.converged and rep.iterations <= 200 for _, rep, _, _ in runs)
        worst_iters = max(rep.iterations for _, rep, _, _ in runs)
        record(3, monotone and converged >= 99,
               f"monotone={monotone}, converged {converged}/100, max iterations {worst_iters}")

    def test_04_block_oracles(self):
        worst_station, worst_gap = 0.0, 0.0
        for update in UPDATES:
            for seed in range(50):
                res = run_oracle(update, seed)
                worst_station = max(worst_station, res.stationarity)
                worst_gap = max(worst_gap, res.gap)
        record(4, worst_station <= 1e-5 and worst_gap <= 1e-3,
               f"stationarity {worst_station:.1e}, gap {worst_gap:.1e}")

    def test_05_constraints_active(self, reference_runs):
        cfg, runs = reference_runs
        extra = [solve_once(cfg.with_priority(rho), trial=t) for rho in (10.0, 1000.0) for t in range(5)]
        worst_p = worst_u = worst_w = 0.0
        for state, _, _, _ in runs + extra:
            worst_p = max(worst_p, abs(np.vdot(state.p, state.p).real / cfg.p_d_mw - 1))
            worst_u = max(worst_u, abs(np.vdot(state.omega_u, state.omega_u).real / cfg.p_u_mw - 1))
            worst_w = max(worst_w, abs(np.linalg.norm(state.w) - 1))
        ok = worst_p <= 1e-6 and worst_u <= 1e-6 and worst_w <= 1e-12
        record(5, ok, f"|p| {worst_p:.1e}, |omega_u| {worst_u:.1e}, |w| {worst_w:.1e}")

    def test_06_z_negative_semidefinite(self):
        cfg = SystemConfig()
        grid = np.arange(-90.0, 90.5, 1.0)
        worst = max(max_eigenvalue_hermitian(build_z(t, n)) for t in grid for n in (cfg.n_t, cfg.n_r))
        record(6, worst <= 1e-8, f"max eigenvalue {worst:.1e}")

    def test_07_full_duplex_gain(self, sweep):
        result, _ = sweep
        cell = result.cell(10.0, 1000.0, "proposed")
        fd, hd = cell.mean["sumrate_fd"], cell.mean["sumrate_hd"]
        record(7, fd > hd, f"R_fd {fd:.2f} vs R_hd {hd:.2f} bit/s/Hz")

    def test_08_range_doppler(self):
        spec = ExperimentSpec()
        cfg = spec.cell_config(REF_SI, REF_RHO)
        start = time.perf_counter()
        rng_ch, rng_init, rng_radar = trial_rngs(spec.master_seed, REF_SI, REF_RHO, 0)
        channels, gt = synthesize(cfg, rng=rng_ch)
        state, _ = solve(channels, cfg, init_rng=rng_init)
        ours = radar_map_once(state, channels, gt, cfg, spec.frame, rng_radar).peak()
        ro = baseline_state(BaselineKind.RADAR_ONLY, channels, cfg)
        _, _, rng_radar = trial_rngs(spec.master_seed, REF_SI, REF_RHO, 0)
        theirs = radar_map_once(ro, channels, gt, cfg, spec.frame, rng_radar, include_si=True).peak()
        elapsed = time.perf_counter() - start
        expected = (1, spec.frame.doppler_bin(gt.f_d))
        ok = ours == expected and theirs == (0, 0) and elapsed <= RD_BUDGET_S
        record(8, ok, f"proposed peak {ours} (want {expected}), radar-only+SI peak {theirs}, "
                      f"{elapsed:.0f} s")

    def test_09_angle_estimation(self):
        cfg = SystemConfig(si_level_db=REF_SI).with_priority(REF_RHO)
        grid = default_theta_grid()
        near, below = 0, 0
        for t in range(20):
            state, _, channels, _ = solve_once(cfg, trial=t)
            ours = angle_spectrum(state, channels, grid)
            nsp = angle_spectrum(baseline_state(BaselineKind.NSP, channels, cfg), channels, grid)
            near += abs(ours.estimate - cfg.target.theta) <= 1.0
            below += ours.at(0.0) < nsp.at(0.0)
        record(9, near == 20 and below >= 15,
               f"AoA within 1 deg on {near}/20, P(0) below NSP on {below}/20")

    def test_10_determinism(self, sweep):
        first, _ = sweep
        second = run_sweep(ExperimentSpec())
        a, b = render_tables(first), render_tables(second)
        same = a.keys() == b.keys() and all(a[k].encode() == b[k].encode() for k in a)
        record(10, same, f"{len(a)} tables compared")
