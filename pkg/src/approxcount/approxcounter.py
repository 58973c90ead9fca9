"""Epoch-sampled approximate counter.

State is ``(X, Y, t)``.  ``X`` names the epoch; in epoch ``X`` each increment
reaches ``Y`` with probability ``2**-t`` and the epoch ends once
``Y * 2**t > T(X)`` with ``T(X) = ceil((1+eps)**X)``.  On advance ``Y`` is
rescaled by a right shift to the next epoch's rate.  The query answer is
``Y`` in the first epoch and ``T(X)`` afterwards.

``eps`` is a dyadic rational ``m / 2**s`` so every threshold is an exact
integer, and ``delta = 2**-delta_exp``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .morris import bits
from .randkit import RandStream

RECORD_VERSION = 1
ALGO_ID = "nycount"

# Chernoff constant chosen by ``oracle.calibrate_c``; see README.
DEFAULT_C = 1


class ParameterMismatch(ValueError):
    pass


class RecordError(ValueError):
    """Malformed serialized state."""


class RecordVersionError(RecordError):
    pass


@dataclass(frozen=True)
class CounterParams:
    eps_num: int
    eps_shift: int
    delta_exp: int
    c: float = DEFAULT_C

    def __post_init__(self):
        m, s = self.eps_num, self.eps_shift
        if not (isinstance(m, int) and isinstance(s, int)) or s < 1 or not 0 < m <= 1 << (s - 1):
            raise ValueError(f"eps must be a dyadic rational m/2^s in (0, 1/2], got {m}/2^{s}")
        if not isinstance(self.delta_exp, int) or self.delta_exp < 1:
            raise ValueError("delta_exp must be a positive integer")
        if not self.c >= 1:
            raise ValueError("C must be at least 1")

    @classmethod
    def from_fraction(cls, eps, delta_exp: int, c: float = DEFAULT_C) -> "CounterParams":
        """Build from an eps whose denominator is a power of two, e.g. ``Fraction(1, 4)``."""
        eps = Fraction(eps)
        s = eps.denominator.bit_length() - 1
        if eps.denominator != 1 << s:
            raise ValueError(f"eps={eps} is not dyadic")
        if s == 0:
            raise ValueError("eps must lie in (0, 1/2]")
        return cls(eps.numerator, s, delta_exp, c)

    @property
    def eps(self) -> Fraction:
        return Fraction(self.eps_num, 1 << self.eps_shift)

    @property
    def delta(self) -> float:
        return math.ldexp(1.0, -self.delta_exp)

    @property
    def x0(self) -> int:
        return schedule_for(self).x0


@dataclass(frozen=True)
class EpochEntry:
    x: int
    T: int
    t: int
    y_start: int
    y_end: int
    # True when the raw sampling rate exceeded 1 and was clamped
    clamped: bool = False

    @property
    def survivors(self) -> int:
        """Y-increments needed to close the epoch."""
        return self.y_end - self.y_start


def threshold(params: CounterParams, x: int) -> int:
    """ceil((1+eps)^x), exactly."""
    m, s = params.eps_num, params.eps_shift
    num = ((1 << s) + m) ** x
    return -((-num) >> (s * x))


class Schedule:
    """Lazily extended table of :class:`EpochEntry` rows, one per epoch."""

    def __init__(self, params: CounterParams):
        self.params = params
        eps = params.eps_num / (1 << params.eps_shift)
        self._eps3 = eps ** 3
        self._ln2_delta = params.delta_exp * math.log(2)
        target = params.c * self._ln2_delta / self._eps3
        self.x0 = math.ceil(math.log(target) / math.log1p(eps))
        T0 = threshold(params, self.x0)
        self._rows = [EpochEntry(self.x0, T0, 0, 0, T0 + 1)]

    def raw_rate(self, x: int, T: int) -> float:
        return self.params.c * (self._ln2_delta + 2 * math.log(x)) / (self._eps3 * T)

    def _extend(self):
        prev = self._rows[-1]
        x = prev.x + 1
        T = threshold(self.params, x)
        alpha = self.raw_rate(x, T)
        clamped = alpha > 1.0
        t = max(prev.t, 0 if clamped else math.floor(-math.log2(alpha)))
        y_start = prev.y_end >> (t - prev.t)
        y_end = (T >> t) + 1
        assert y_end >= y_start + 1, (x, y_start, y_end)
        self._rows.append(EpochEntry(x, T, t, y_start, y_end, clamped))

    def __getitem__(self, x: int) -> EpochEntry:
        k = x - self.x0
        if k < 0:
            raise IndexError(f"epoch X={x} precedes X0={self.x0}")
        while len(self._rows) <= k:
            self._extend()
        return self._rows[k]

    def table(self, max_x: int) -> list[EpochEntry]:
        return [self[x] for x in range(self.x0, max_x + 1)]

    def x_hat(self, n: int) -> int:
        """Smallest epoch whose threshold reaches ``n``."""
        x = self.x0
        while self[x].T < n:
            x += 1
        return x

    def bound_bits(self, n_max: int, slack: int = 3) -> int:
        """Worst-case bits(X) + bits(Y) + bits(t) over the epochs reachable for counts up to ``n_max``."""
        x_bar = self.x_hat(n_max) + slack
        rows = self.table(x_bar)
        return bits(x_bar) + bits(max(r.y_end for r in rows)) + bits(max(r.t for r in rows))


@lru_cache(maxsize=64)
def schedule_for(params: CounterParams) -> Schedule:
    return Schedule(params)


def schedule_entry(params: CounterParams, x: int) -> EpochEntry:
    return schedule_for(params)[x]


@dataclass(frozen=True)
class Query:
    x: int
    estimate: int


class ApproxCounter:
    """The counter state ``(x, y, t)`` plus its parameters."""

    algo = ALGO_ID

    def __init__(self, params: CounterParams, x: int | None = None, y: int = 0, t: int | None = None):
        self.params = params
        self.schedule = schedule_for(params)
        self.x = self.schedule.x0 if x is None else x
        entry = self.schedule[self.x]
        self.t = entry.t if t is None else t
        self.y = y
        if self.t != entry.t:
            raise ValueError(f"t={self.t} disagrees with the schedule (t={entry.t}) at X={self.x}")
        if not entry.y_start <= self.y < entry.y_end:
            raise ValueError(f"Y={self.y} outside epoch X={self.x} range "
                             f"[{entry.y_start}, {entry.y_end})")

    def __repr__(self):
        return f"ApproxCounter(x={self.x}, y={self.y}, t={self.t})"

    def __eq__(self, other):
        if not isinstance(other, ApproxCounter):
            return NotImplemented
        return (self.params, self.x, self.y, self.t) == (other.params, other.x, other.y, other.t)

    def copy(self) -> "ApproxCounter":
        return ApproxCounter(self.params, self.x, self.y, self.t)

    @property
    def entry(self) -> EpochEntry:
        return self.schedule[self.x]

    def _bump(self) -> None:
        # one surviving increment; advance the epoch on crossing the threshold
        self.y += 1
        if self.y << self.t > self.entry.T:
            self._advance()

    def _advance(self) -> None:
        old_t = self.t
        self.x += 1
        new = self.schedule[self.x]
        self.y >>= new.t - old_t
        self.t = new.t
        assert self.y << self.t <= new.T, "double epoch advance"

    def increment(self, rng: RandStream) -> None:
        if rng.bernoulli_pow2(self.t):
            self._bump()

    def increment_many(self, n: int, rng: RandStream) -> None:
        """Apply ``n`` increments, jumping between surviving increments with geometric gaps."""
        if n < 0:
            raise ValueError("n must be non-negative")
        remaining = n
        while remaining > 0:
            need = self.entry.y_end - self.y
            if self.t == 0:
                step = min(need, remaining)
                self.y += step
                remaining -= step
                if step == need:
                    self._advance()
                continue
            p = math.ldexp(1.0, -self.t)
            draw = min(need, int(remaining * p * 1.2) + 32)
            waits = np.cumsum(rng.geometric_array(p, draw))
            got = int(np.searchsorted(waits, remaining, side="right"))
            self.y += got
            if got == need:
                remaining -= int(waits[got - 1])
                self._advance()
            elif got < draw:
                break
            else:
                remaining -= int(waits[-1])

    def query(self) -> Query:
        if self.x == self.schedule.x0:
            return Query(self.x, self.y)
        return Query(self.x, self.entry.T)

    def estimate(self) -> int:
        return self.query().estimate

    def bits_used(self) -> int:
        return bits(self.x) + bits(self.y) + bits(self.t)

    def survivors_per_epoch(self) -> list[tuple[int, int]]:
        out = [(x, self.schedule[x].survivors) for x in range(self.schedule.x0, self.x)]
        out.append((self.x, self.y - self.entry.y_start))
        return out

    def merge(self, other: "ApproxCounter", rng: RandStream) -> "ApproxCounter":
        return merge(self, other, rng)

    def to_record(self) -> dict:
        p = self.params
        c = float(p.c)
        if not c.is_integer():
            raise RecordError("only integral C can be serialized")
        return {"v": RECORD_VERSION, "algo": ALGO_ID, "eps_num": p.eps_num,
                "eps_shift": p.eps_shift, "delta_exp": p.delta_exp, "c": int(c),
                "x": self.x, "y": self.y, "t": self.t}

    def dumps(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


def init(params: CounterParams) -> ApproxCounter:
    return ApproxCounter(params)


def merge(a: ApproxCounter, b: ApproxCounter, rng: RandStream) -> ApproxCounter:
    """Merge two counters built with identical parameters.

    Each survivor of the lower-epoch counter is offered to the higher one and
    kept with probability ``2**(t_i - t)``, where ``t_i`` is the rate of the
    epoch it survived in and ``t`` is the receiver's current rate.
    """
    if a.params != b.params:
        raise ParameterMismatch(f"cannot merge counters with {a.params} and {b.params}")
    lo, hi = (a, b) if a.x <= b.x else (b, a)
    out = hi.copy()
    sched = out.schedule
    for x, count in lo.survivors_per_epoch():
        t_i = sched[x].t
        while count > 0:
            d = out.t - t_i
            if d == 0:
                # all kept; move straight to the threshold or the end of the batch
                step = min(count, out.entry.y_end - out.y - 1)
                out.y += step
                count -= step
                if count:
                    out._bump()
                    count -= 1
                continue
            if rng.bernoulli_pow2(d):
                out._bump()
            count -= 1
    return out


_FIELDS = ("v", "algo", "eps_num", "eps_shift", "delta_exp", "c", "x", "y", "t")


def serialize(st: ApproxCounter) -> str:
    return st.dumps()


def deserialize(text: str) -> ApproxCounter:
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordError(f"cannot parse state record: {exc}") from None
    if not isinstance(rec, dict):
        raise RecordError("state record must be a JSON object")
    if "v" in rec and rec["v"] != RECORD_VERSION:
        raise RecordVersionError(f"unsupported record version {rec['v']!r}")
    if list(rec) != list(_FIELDS):
        raise RecordError(f"record fields must be exactly {', '.join(_FIELDS)} in that order")
    for k in _FIELDS[2:]:
        v = rec[k]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise RecordError(f"field {k!r} must be a non-negative integer")
    if rec["algo"] != ALGO_ID:
        raise RecordError(f"unexpected algo {rec['algo']!r}")
    try:
        params = CounterParams(rec["eps_num"], rec["eps_shift"], rec["delta_exp"], rec["c"])
        return ApproxCounter(params, rec["x"], rec["y"], rec["t"])
    except (ValueError, IndexError) as exc:
        raise RecordError(str(exc)) from None
