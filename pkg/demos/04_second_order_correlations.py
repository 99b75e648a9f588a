"""
Second-order correlations
=========================

g2 values from the decorrelated moments, sampled over time, and the
fraction of time each mode spends in each statistics class. Early samples
are undefined until the populations rise above the guard.
"""

import math

import numpy as np

from quadopt.correlations import Statistics, classify
from quadopt.scenarios import run_preset


def fractions(values):
    defined = [v for v in values if not math.isnan(v)]
    counts = {s: 0 for s in Statistics}
    for v in defined:
        counts[classify(v)] += 1
    return {s.value: round(c / len(defined), 3) for s, c in counts.items()}, len(values) - len(defined)


# Right after the guard the phonon value can spike: the numerator and the
# squared population are both tiny.

for name in ("fig4a", "fig4d", "fig5a", "fig5d"):
    table = run_preset(name).table
    print(name)
    for col in ("g2_a", "g2_b", "g2_ab"):
        frac, undefined = fractions(table[col])
        finite = table[col][np.isfinite(table[col])]
        print(f"  {col:6s} range [{finite.min():.3f}, {finite.max():.3f}]  undefined samples {undefined:4d}  {frac}")

###############################################################################
# The cavity value is bounded below by two whenever the anomalous moments are
# conjugates of each other, so the strong-decay blockade panel cannot dip
# under one in this approximation.

for c in run_preset("fig6b").claims:
    print(f"{c.claim}: passed={c.passed}, min g2_a={c.statistic:.4f}, needs < {c.threshold}")
