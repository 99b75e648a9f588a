"""
Photon and phonon numbers across detunings
==========================================

Four runs that differ only in the cavity detuning. The membrane stays
close to its ground state while the photon number depends strongly on how
far the drive sits from the sideband.
"""

import numpy as np

from quadopt.correlations import observables_series
from quadopt.scenarios import run_preset

cache = {}
for name in ("fig1a", "fig1b", "fig1c", "fig1d"):
    run = run_preset(name, cache=cache)
    table = run.table
    k = int(np.argmax(table["n_a"]))
    print(f"{name}: delta_c={run.preset.params.delta_c:>4}  max n_a={table['n_a'][k]:.4f} at t={table['t'][k]:5.2f}"
          f"  max n_b={table['n_b'].max():.2e}  steps={run.trajectory.stats['steps']}")

###############################################################################
# The far-detuned panel carries a claim that can be checked from the tables.

for claim in run_preset("fig1d", cache=cache).claims:
    print(claim)

###############################################################################
# A coarse text trace of n_a(t) for the near-sideband case.

table = observables_series(cache[("fig1b", "closed")].trajectory)
for t, n in zip(table["t"][::100], table["n_a"][::100]):
    print(f"{t:5.1f} {'#' * int(200 * n)}")
