"""Joint transmit/receive beamforming for full-duplex ISAC transceivers.

Subpackages by concern:

* :mod:`fdisac.numerics` -- dense complex linear algebra and root finding
* :mod:`fdisac.scenario` -- configuration, geometry and channel synthesis
* :mod:`fdisac.solver` -- the penalty-based block coordinate ascent design
* :mod:`fdisac.baselines` -- NSP, radar-only and comm-only references
* :mod:`fdisac.metrics` -- SINR, rates, beampatterns, residual SI
* :mod:`fdisac.radar_dsp` -- receive-stream synthesis, range-Doppler and angle maps
* :mod:`fdisac.harness` -- seeded Monte-Carlo sweeps and CSV/JSON output
* :mod:`fdisac.service` / :mod:`fdisac.cli` -- HTTP service and its command-line client
"""

__version__ = "0.1.0"
