"""
Thermal phonons and saturation
==============================

With a hot membrane bath the phonon number climbs towards the bath
occupation and levels off. Without coupling and drive the relaxation is
exactly exponential, which makes a good sanity check for both the moment
equations and the master equation.
"""

import numpy as np

from quadopt.correlations import observables_series
from quadopt.moments import SLOT_INDEX
from quadopt.oracle import oracle_columns, run_oracle
from quadopt.params import SimConfig, SystemParams
from quadopt.scenarios import run_preset
from quadopt.simulation import run_moments

p = SystemParams(gamma_b=0.1, nbar_b=2.0)
cfg = SimConfig(t_end=30.0, n_samples=7)
t = cfg.t_grid()
closure = observables_series(run_moments(p, cfg))
exact = oracle_columns(run_oracle(p, t, cutoffs=(2, 40)))
print(" t     analytic   closure    master eq.  g2_b")
for k in range(len(t)):
    print(f"{t[k]:4.0f}  {2 * (1 - np.exp(-0.1 * t[k])):.7f}  {closure['n_b'][k]:.7f}  "
          f"{exact['moments'][k, SLOT_INDEX['n_b']].real:.7f}  {exact['g2_b'][k]:.5f}")

###############################################################################
# The coupled, driven case from the thermal figure: cold vs hot membrane.

for name in ("fig3a", "fig3b"):
    run = run_preset(name)
    print(f"{name}: n_b(50)={run.table['n_b'][-1]:.4f}")
    for c in run.claims:
        print(f"  {c.claim}: passed={c.passed} (|dn_b/dt|={c.statistic:.2e}, limit {c.threshold})")
