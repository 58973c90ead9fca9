"""Merging two counters matches counting the combined stream directly."""

# %% Two shards count separately, then merge
from collections import Counter

from approxcount import CounterParams, RandStream, init, merge
from approxcount.oracle import approx_dp, merge_dp

params = CounterParams(1, 1, 6)
a, b = init(params), init(params)
a.increment_many(3000, RandStream(3, [1]))
b.increment_many(1200, RandStream(3, [2]))
m = merge(a, b, RandStream(3, [3]))
print(a.query(), b.query(), "->", m.query())

# %% Exact check: merging after n1 and n2 increments equals n1+n2 increments
print(merge_dp(params, 3, 3).probs == approx_dp(params, 6).probs)

# %% Monte-Carlo view, past the point where sampling starts
merged, direct = Counter(), Counter()
for i in range(5000):
    ts = RandStream(4, [i])
    x, y = init(params), init(params)
    x.increment_many(200, ts.derive(1))
    y.increment_many(200, ts.derive(2))
    merged[merge(x, y, ts.derive(3)).x] += 1
    z = init(params)
    z.increment_many(400, ts.derive(4))
    direct[z.x] += 1
for k in sorted(set(merged) | set(direct)):
    print(k, merged[k], direct[k])
