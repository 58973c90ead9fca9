"""Exact state distributions by forward evaluation of each counter's Markov chain.

Nothing here draws random numbers.  Distributions are held either as
``Fraction`` masses (rational mode) or doubles (float mode).
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .approxcounter import ApproxCounter, CounterParams, schedule_for
from .morris import estimate_of

MORRIS_RATIONAL_MAX_N = 100
MORRIS_FLOAT_MAX_N = 10_000
APPROX_MAX_STATES = 1_000_000
MERGE_MAX_N = 6
MERGE_MAX_DEPTH = 2
RENORM_TOL = 1e-9


class OracleSizeError(ValueError):
    pass


@dataclass
class StateDistribution:
    """Probability mass over counter states after ``n`` increments."""

    n: int
    probs: dict = field(default_factory=dict)
    rational: bool = True

    @property
    def support(self) -> list:
        return sorted(self.probs)

    def total(self):
        return sum(self.probs.values(), Fraction(0) if self.rational else 0.0)

    def expect(self, f):
        zero = Fraction(0) if self.rational else 0.0
        return sum((m * f(s) for s, m in self.probs.items()), zero)

    def prob(self, pred):
        zero = Fraction(0) if self.rational else 0.0
        return sum((m for s, m in self.probs.items() if pred(s)), zero)

    def marginal(self, key):
        out = defaultdict(Fraction if self.rational else float)
        for s, m in self.probs.items():
            out[key(s)] += m
        return dict(out)

    def to_csv(self, columns: tuple[str, ...]) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.rational:
            w.writerow([*columns, "num", "den"])
        else:
            w.writerow([*columns, "mass"])
        for s in self.support:
            state = s if isinstance(s, tuple) else (s,)
            m = self.probs[s]
            if self.rational:
                w.writerow([*state, m.numerator, m.denominator])
            else:
                w.writerow([*state, np.format_float_positional(m, trim="-")])
        return buf.getvalue()


def _check_mode(mode: str) -> bool:
    if mode not in ("rational", "float"):
        raise ValueError("mode must be 'rational' or 'float'")
    return mode == "rational"


def morris_dp(a, n: int, mode: str = "rational") -> StateDistribution:
    """Distribution of the Morris register after ``n`` increments.

    In rational mode ``a`` is taken as the exact binary value of the given
    number, so ``a=0.5`` means exactly 1/2.
    """
    rational = _check_mode(mode)
    if n < 0:
        raise ValueError("n must be non-negative")
    limit = MORRIS_RATIONAL_MAX_N if rational else MORRIS_FLOAT_MAX_N
    if n > limit:
        raise OracleSizeError(f"morris_dp in {mode} mode supports n <= {limit}")
    if rational:
        a = Fraction(a)
        stay = [1 - (1 + a) ** -i for i in range(n + 1)]
        P = [Fraction(1)] + [Fraction(0)] * n
        for step in range(n):
            # X <= step before this increment
            for x in range(step + 1, 0, -1):
                P[x] = P[x] * stay[x] + P[x - 1] * (1 - stay[x - 1])
            P[0] = P[0] * stay[0]
        probs = {x: m for x, m in enumerate(P) if m}
        return StateDistribution(n, probs, True)
    a = float(a)
    up = np.exp(-np.arange(n + 1) * math.log1p(a))
    P = np.zeros(n + 1)
    P[0] = 1.0
    for _ in range(n):
        moved = P * up
        P = P - moved
        P[1:] += moved[:-1]
    total = P.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise ArithmeticError(f"morris_dp mass drifted to {total}")
    probs = {x: float(m) for x, m in enumerate(P) if m > 0.0}
    return StateDistribution(n, probs, False)


def _line_states(params: CounterParams, start: int, length: int) -> list[tuple[int, int, int]]:
    """States ``(x, y, t)`` at positions ``start .. start+length-1`` of the chain.

    A surviving increment always moves the counter one position along this
    line: the shifted ``Y`` after an epoch advance is the next epoch's first
    state.
    """
    sched = schedule_for(params)
    out = []
    pos, x = 0, sched.x0
    while len(out) < length:
        e = sched[x]
        span = e.y_end - e.y_start
        if pos + span > start:
            lo = max(start - pos, 0)
            hi = min(span, start + length - pos)
            out.extend((x, e.y_start + i, e.t) for i in range(lo, hi))
        pos += span
        x += 1
    return out


def _deterministic_prefix(params: CounterParams, n: int) -> int:
    """Number of leading positions visited with certainty (those with t = 0), capped at ``n``."""
    sched = schedule_for(params)
    pos, x = 0, sched.x0
    while pos < n:
        e = sched[x]
        if e.t > 0:
            return pos
        pos += e.y_end - e.y_start
        x += 1
    return n


def approx_dp(params: CounterParams, n: int, mode: str = "rational") -> StateDistribution:
    """Distribution of ``(X, Y)`` for the epoch-sampled counter after ``n`` increments."""
    rational = _check_mode(mode)
    if n < 0:
        raise ValueError("n must be non-negative")
    start = _deterministic_prefix(params, n)
    steps = n - start
    if steps + 1 > APPROX_MAX_STATES:
        raise OracleSizeError("approx_dp state space too large")
    line = _line_states(params, start, steps + 1)
    if steps == 0:
        x, y, _ = line[0]
        return StateDistribution(n, {(x, y): Fraction(1) if rational else 1.0}, rational)
    ts = [t for _, _, t in line]
    if rational:
        # integer numerators over the common denominator 2^(tmax * steps)
        tmax = max(ts)
        keep = [((1 << t) - 1) << (tmax - t) for t in ts]
        move = [1 << (tmax - t) for t in ts]
        P = [1] + [0] * steps
        for k in range(steps):
            for i in range(k + 1, 0, -1):
                P[i] = P[i] * keep[i] + P[i - 1] * move[i - 1]
            P[0] *= keep[0]
        den = 1 << (tmax * steps)
        probs = {(x, y): Fraction(m, den) for (x, y, _), m in zip(line, P) if m}
        return StateDistribution(n, probs, True)
    up = np.ldexp(1.0, -np.asarray(ts))
    P = np.zeros(steps + 1)
    P[0] = 1.0
    for k in range(steps):
        w = k + 2
        moved = P[:w] * up[:w]
        P[:w] -= moved
        P[1:w] += moved[:w - 1]
    total = P.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise ArithmeticError(f"approx_dp mass drifted to {total}")
    probs = {(x, y): float(m) for (x, y, _), m in zip(line, P) if m > 0.0}
    return StateDistribution(n, probs, False)


def _merge_outcomes(lo: ApproxCounter, hi: ApproxCounter, rational: bool = True) -> dict:
    """Exact distribution of ``merge(lo, hi)`` over the merge's own coin flips."""
    sched = hi.schedule
    one = Fraction(1) if rational else 1.0
    dist = {(hi.x, hi.y): one}
    for x, count in lo.survivors_per_epoch():
        t_i = sched[x].t
        for _ in range(count):
            new = defaultdict(Fraction if rational else float)
            for (hx, hy), m in dist.items():
                c = ApproxCounter(hi.params, hx, hy)
                d = c.t - t_i
                p = Fraction(1, 1 << d) if rational else math.ldexp(1.0, -d)
                if d:
                    new[(hx, hy)] += m * (1 - p)
                c._bump()
                new[(c.x, c.y)] += m * p
            dist = new
    return dist


def merge_dp(params: CounterParams, n1: int, n2: int, mode: str = "rational",
             max_n: int = MERGE_MAX_N, max_depth: int = MERGE_MAX_DEPTH) -> StateDistribution:
    """Exact distribution of merging a counter after ``n1`` increments with one after ``n2``.

    Enumerates both input distributions and every outcome of the merge's coin
    flips; argument order follows :func:`approxcounter.merge`.  The size
    guards can be raised for one-off checks.
    """
    rational = _check_mode(mode)
    if not (0 <= n1 <= max_n and 0 <= n2 <= max_n):
        raise OracleSizeError(f"merge_dp supports n1, n2 <= {max_n}")
    d1, d2 = approx_dp(params, n1, mode), approx_dp(params, n2, mode)
    x0 = schedule_for(params).x0
    if max(x for x, _ in (*d1.probs, *d2.probs)) - x0 > max_depth:
        raise OracleSizeError(f"merge_dp supports epoch depth <= {max_depth}")
    out = defaultdict(Fraction if rational else float)
    for (xa, ya), ma in d1.probs.items():
        for (xb, yb), mb in d2.probs.items():
            a = ApproxCounter(params, xa, ya)
            b = ApproxCounter(params, xb, yb)
            lo, hi = (a, b) if a.x <= b.x else (b, a)
            for s, m in _merge_outcomes(lo, hi, rational).items():
                out[s] += ma * mb * m
    return StateDistribution(n1 + n2, dict(out), rational)


# -- Morris underestimation in the small-count regime --------------------

@dataclass(frozen=True)
class AppendixPoint:
    a: float
    n: int
    constraint_ok: bool
    delta_bound: float


def appendix_params(eps: float, c: float, delta: float) -> AppendixPoint:
    """Parameters of the regime where plain Morris(a) underestimates too often.

    ``a = eps^2 / (8 ln(1/delta))`` and the count is ``round(c eps^(4/3) / a)``;
    the regime requires ``delta < eps^(8/3) c^2 / 16`` and a count of at least 2.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    if not 0.0 < c <= 2.0 ** -8:
        raise ValueError("c must lie in (0, 2^-8]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    a = eps * eps / (8 * math.log(1 / delta))
    n = round(c * eps ** (4 / 3) / a)
    bound = eps ** (8 / 3) * c * c / 16
    return AppendixPoint(a, n, delta < bound and n >= 2, bound)


def morris_underestimate_prob(a, eps, n: int, mode: str = "rational"):
    """P(((1+a)^X - 1)/a < (1 - eps) n) for Morris(a) after ``n`` increments."""
    rational = _check_mode(mode)
    dist = morris_dp(a, n, mode)
    if rational:
        a, cut = Fraction(a), (1 - Fraction(eps)) * n
    else:
        a, cut = float(a), (1 - eps) * n
    return dist.prob(lambda x: estimate_of(a, x) < cut)


# -- calibration of the Chernoff constant --------------------------------

CALIBRATION_POINT = (Fraction(1, 4), 6, 500)
C_GRID = (1, 2, 4, 8)


def failure_prob(params: CounterParams, n: int, rel: Fraction, mode: str = "rational"):
    """P(|estimate - n| > rel * n) from :func:`approx_dp`."""
    dist = approx_dp(params, n, mode)
    x0 = schedule_for(params).x0
    sched = schedule_for(params)
    bound = rel * n

    def fails(s):
        x, y = s
        est = y if x == x0 else sched[x].T
        return abs(est - n) > bound

    return dist.prob(fails)


def calibrate_c(point=CALIBRATION_POINT, grid=C_GRID):
    """Smallest C in ``grid`` whose exact failure probability at 2*eps is at most delta.

    Returns ``(C, {C: failure probability})`` for every C tried.
    """
    eps, delta_exp, n = point
    tried = {}
    for c in grid:
        params = CounterParams.from_fraction(eps, delta_exp, c)
        pf = failure_prob(params, n, 2 * eps)
        tried[c] = pf
        if pf <= Fraction(1, 1 << delta_exp):
            return c, tried
    raise RuntimeError(f"no C in {grid} meets the target at {point}")
