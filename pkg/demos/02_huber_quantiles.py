"""Quantiles, Huber quantiles and expectiles of a showery rainfall forecast.

The forecast has a 70% chance of no rain and an exponential tail with mean
20 mm. The discounting distance ``a`` interpolates between the quantile
(a = 0) and the expectile (a = infinity).
"""

import math

from firm import FirmSpec, PointMassExponentialTail, directive_category, expectile, huber_quantile, quantile

F = PointMassExponentialTail(p0=0.7, scale=20.0)
alpha = 0.75

print(f"quantile   {quantile(F, alpha):8.4f}")
for a in (0.1, 1.0, 2.0, 10.0, 50.0, math.inf):
    print(f"a = {a:<6} {huber_quantile(F, alpha, a):8.4f}")
print(f"expectile  {expectile(F, alpha):8.4f}")

# %% The directive depends on a: near-threshold outcomes count for less
# when a is small, so the Huber quantile can fall below a threshold the
# quantile exceeds.
for a in (0.0, 2.0, math.inf):
    spec = FirmSpec((3.5,), (1.0,), alpha, a)
    print(f"a = {a}: forecast category {directive_category(F, spec)}")
