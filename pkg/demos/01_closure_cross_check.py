"""
Cross-checking the closed moment equations
==========================================

The shipped right-hand side is a hand transcription of fourteen closed
equations. A second right-hand side is assembled mechanically from the
unclosed equations plus the pair/triple decorrelation rules. If both agree
on random states, a typo in either one would have to be duplicated in the
other to go unnoticed.
"""

import numpy as np

from quadopt.moments import SLOT_INDEX, MomentState, closed_rhs, composed_rhs, format_report, rhs_discrepancy_report
from quadopt.scenarios import preset

params = preset("fig1b").params
print(params)

###############################################################################
# From vacuum only the drive and the thermal feed survive.

d = closed_rhs(MomentState.vacuum(), params.replace(nbar_b=2.0))
print(MomentState(d))

###############################################################################
# Now a thousand random states, slot by slot.

rows = rhs_discrepancy_report(params, n_random=1000, seed=1)
print(format_report(rows))

###############################################################################
# The same harness catches a deliberate slip: a stray term in one equation.

def sloppy(y, p):
    out = closed_rhs(y, p)
    i = SLOT_INDEX
    out[i["m_ab"]] += 1j * p.g_opt * y[i["m_abd"]] * y[i["n_b"]]
    return out

print(format_report(rhs_discrepancy_report(params, 200, seed=2, closed=sloppy)))
assert np.all([r.matches for r in rows])
