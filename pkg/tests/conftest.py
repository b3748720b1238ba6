import numpy as np
import pytest

from fdisac.harness import trial_rngs
from fdisac.scenario import ChannelSet, SystemConfig, synthesize
from fdisac.solver import BeamformerState


def random_complex(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_instance(rng, n_t=2, n_r=2, n_u=2, n_d=2):
    """Well-scaled random channels and state, used by the block-update oracles."""
    channels = ChannelSet.build(
        random_complex(rng, n_r, n_u),
        random_complex(rng, n_d, n_t),
        random_complex(rng, n_r, n_t),
        random_complex(rng, n_r, n_t),
    )
    state = BeamformerState(
        p=random_complex(rng, n_t),
        w=random_complex(rng, n_r),
        omega_u=random_complex(rng, n_u),
        u_d=random_complex(rng, n_d),
        rho_u=float(rng.uniform(0.5, 2.0)),
        rho_d=float(rng.uniform(0.5, 2.0)),
    )
    return channels, state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def reference_cfg():
    return SystemConfig()


@pytest.fixture(scope="session")
def reference_channels(reference_cfg):
    rng_ch, _, _ = trial_rngs(reference_cfg.rng_seed, reference_cfg.si_level_db,
                              reference_cfg.alphas[0], 0)
    return synthesize(reference_cfg, rng=rng_ch)


# Acceptance outcomes, keyed by criterion number, filled by test_acceptance.py.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
