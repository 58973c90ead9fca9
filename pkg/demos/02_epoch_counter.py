"""The epoch-sampled counter: schedule, exact state distribution, accuracy."""

# %% The epoch table is a pure function of (eps, delta, C)
from fractions import Fraction

from approxcount import CounterParams, RandStream, init, schedule_for
from approxcount.oracle import approx_dp

params = CounterParams.from_fraction(Fraction(1, 2), 10, 4)
sched = schedule_for(params)
print("first epoch", sched.x0)
print(" X      T  t  Y_start  Y_end")
for e in sched.table(sched.x0 + 8):
    print(f"{e.x:2d} {e.T:6d} {e.t:2d} {e.y_start:8d} {e.y_end:6d}")

# %% Below T(X0) the counter is exact; beyond it Y is sampled at rate 2^-t
c = init(params)
c.increment_many(200, RandStream(1))
print(c.query())
c.increment_many(5000, RandStream(1))
print(c.query(), "bits", c.bits_used())

# %% Exact distribution of (X, Y) after n increments
d = approx_dp(CounterParams(1, 1, 6), 300, "float")
by_x = d.marginal(lambda s: s[0])
print({x: round(m, 4) for x, m in sorted(by_x.items())})

# %% Error at a finer eps
import numpy as np

p = CounterParams.from_fraction(Fraction(1, 16), 10)
errs = []
for i in range(500):
    c = init(p)
    c.increment_many(10**6, RandStream(2, [i]))
    errs.append(abs(c.query().estimate - 10**6) / 10**6)
print("eps=1/16: max rel err", max(errs), "bits", schedule_for(p).bound_bits(10**6))
