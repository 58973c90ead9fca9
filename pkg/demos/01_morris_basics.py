"""Morris counting in a few cells: exact distributions, then simulation."""

# %% The exact distribution of the register after a handful of increments
from fractions import Fraction

from approxcount import MorrisCounter, MorrisParams, RandStream
from approxcount.morris import estimate_of
from approxcount.oracle import morris_dp

a = Fraction(1, 2)
d = morris_dp(a, 10)
for x, m in sorted(d.probs.items()):
    print(f"X={x:2d}  P={float(m):.5f}  estimate={float(estimate_of(a, x)):8.3f}")

# %% The estimator is unbiased, and its variance is a*n*(n-1)/2
mean = d.expect(lambda x: estimate_of(a, x))
var = d.expect(lambda x: estimate_of(a, x) ** 2) - mean**2
print("mean", mean, "variance", var, "a*n*(n-1)/2 =", a * 10 * 9 / 2)

# %% Skip-ahead: a million increments cost a few thousand random draws
p = MorrisParams.from_eps_delta(0.1, 0.01)
c = MorrisCounter(p)
c.increment_many(10**6, RandStream(0))
print(f"a={p.a:.3g}  X={c.x}  estimate={c.estimate():.0f}  bits={c.bits_used()}")

# %% Spread over many seeds
import numpy as np

ests = []
for i in range(500):
    c = MorrisCounter(p)
    c.increment_many(10**6, RandStream(0, [i]))
    ests.append(c.estimate())
rel = np.abs(np.array(ests) - 1e6) / 1e6
print("median rel err", np.median(rel), "90th pct", np.percentile(rel, 90))
