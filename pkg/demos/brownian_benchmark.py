"""
A benchmark with an exact answer: alpha = beta = 1
==================================================

With both dimensions equal to 1 the processes are squares of independent
Brownian motions, and ``X < Y`` up to time t means the planar point
``(sqrt x, sqrt y)`` has not reached either diagonal.  From ``(0, y)``
the survival function is ``erf(sqrt(y) / (2 sqrt t))**2``, whose leading
term is ``y / (pi t)``.  The simulation resolves the difference.
"""

import math

from scipy.special import erf

from besqpursuit import ProcessParams
from besqpursuit.besq import GridPolicy, StartState, simulate_crossing_ensemble
from besqpursuit.estimate import survival_curve

y, n = 1.0, 200_000
ens = simulate_crossing_ensemble(ProcessParams(1.0, 1.0), StartState(0.0, y), GridPolicy(t_max=50.0), n, seed=5)
curve = survival_curve(ens, [1.0, 5.0, 10.0, 20.0, 50.0])

print("    t     S_mc        se      exact    y/(pi t)   (S_mc - y/(pi t))/se")
for t, s, se in zip(curve.times, curve.s_hat, curve.se):
    exact = erf(math.sqrt(y) / (2 * math.sqrt(t))) ** 2
    lead = y / (math.pi * t)
    print(f"{t:5.0f} {s:9.6f} {se:9.6f} {exact:9.6f} {lead:9.6f} {(s - lead) / se:10.2f}")

# %%
# The relative gap between the exact law and its leading term is about
# ``y / (6 t)``, so at t = 5 it is near 3% of S, which is several standard
# errors at 10**6 replicates.
