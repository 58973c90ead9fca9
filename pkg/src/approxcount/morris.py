"""Morris(a) counter and the Morris+ wrapper.

Morris(a) keeps one register ``X`` and increments it with probability
``(1+a)**-X``; ``((1+a)**X - 1) / a`` is an unbiased estimate of the count.
Morris+ additionally runs an exact counter that saturates at ``N_a + 1`` and
answers from it while the count is at most ``N_a = ceil(8/a)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .randkit import RandStream


def bits(v: int) -> int:
    """ceil(log2(v + 1)); zero for v == 0."""
    if v < 0:
        raise ValueError("bits() of a negative value")
    return int(v).bit_length()


@dataclass(frozen=True)
class MorrisParams:
    a: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"Morris base offset a must lie in (0, 1), got {self.a!r}")

    @property
    def n_a(self) -> int:
        """Switch-over point of Morris+."""
        return math.ceil(8 / self.a)

    def p(self, x: int) -> float:
        return math.exp(-x * math.log1p(self.a))

    @classmethod
    def from_eps_delta_exp(cls, eps: float, delta_exp: int) -> "MorrisParams":
        """a = eps^2 / (8 ln(1/delta)) with delta = 2**-delta_exp."""
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if int(delta_exp) != delta_exp or delta_exp < 1:
            raise ValueError("delta_exp must be a positive integer")
        return cls(eps * eps / (8 * delta_exp * math.log(2)))

    @classmethod
    def from_eps_delta(cls, eps: float, delta: float) -> "MorrisParams":
        """Same rule as :meth:`from_eps_delta_exp` for an arbitrary delta in (0, 1)."""
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        return cls(eps * eps / (8 * math.log(1 / delta)))

    @classmethod
    def chebyshev(cls, eps: float, delta: float) -> "MorrisParams":
        """The weaker a = 2 eps^2 delta setting, kept for comparison runs."""
        if not 0.0 < eps < 0.5 or not 0.0 < delta < 1.0:
            raise ValueError("eps must lie in (0, 1/2) and delta in (0, 1)")
        return cls(2 * eps * eps * delta)


def morris_params_from(eps: float, delta_exp: int) -> MorrisParams:
    return MorrisParams.from_eps_delta_exp(eps, delta_exp)


def estimate_of(a, x: int):
    """((1+a)^x - 1)/a.  Exact when ``a`` is a Fraction, double otherwise."""
    if isinstance(a, Fraction):
        return ((1 + a) ** x - 1) / a
    return math.expm1(x * math.log1p(a)) / a


class MorrisCounter:
    """Morris(a): the register ``x`` is the only stored state."""

    algo = "morris"

    def __init__(self, params: MorrisParams, x: int = 0, n: int = 0):
        if isinstance(params, (int, float)):
            params = MorrisParams(float(params))
        self.params = params
        self.x = x
        # harness bookkeeping only, never counted as memory
        self.n = n

    def __repr__(self):
        return f"MorrisCounter(a={self.params.a!r}, x={self.x})"

    @property
    def a(self) -> float:
        return self.params.a

    def increment(self, rng: RandStream) -> None:
        if self.x == 0 or rng.uniform() < self.params.p(self.x):
            self.x += 1
        self.n += 1

    def increment_many(self, n: int, rng: RandStream) -> None:
        """Apply ``n`` increments by sampling the geometric waiting time at each level.

        Gaps for a block of consecutive levels are drawn at once; the block is
        sized from the expected number of level-ups left in the budget.  A gap
        cut short by the end of the budget is dropped, which is exact because
        the geometric distribution is memoryless.
        """
        if n < 0:
            raise ValueError("n must be non-negative")
        remaining = n
        log1pa = math.log1p(self.a)
        while remaining > 0:
            ahead = math.log1p(self.a * remaining * math.exp(-self.x * log1pa)) / log1pa
            block = int(ahead * 1.1) + 32
            levels = self.x + np.arange(block, dtype=np.float64)
            gaps = rng.geometric_array(np.exp(-levels * log1pa), block)
            waits = np.cumsum(gaps)
            done = int(np.searchsorted(waits, remaining, side="right"))
            self.x += done
            if done < block:
                break
            remaining -= int(waits[-1])
        self.n += n

    def estimate(self) -> float:
        return estimate_of(self.a, self.x)

    def bits_used(self) -> int:
        return bits(self.x)

    def to_record(self) -> dict:
        return {"algo": self.algo, "a": self.a, "X": self.x}

    def dumps(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


class MorrisPlus:
    """Morris(a) run beside an exact counter that saturates at ``N_a + 1``."""

    algo = "morrisplus"

    def __init__(self, params: MorrisParams, morris: MorrisCounter | None = None, xprime: int = 0):
        if isinstance(params, (int, float)):
            params = MorrisParams(float(params))
        self.params = params
        self.morris = morris if morris is not None else MorrisCounter(params)
        self.n_a = params.n_a
        if not 0 <= xprime <= self.n_a + 1:
            raise ValueError("exact prefix counter out of range")
        self.xprime = xprime

    def __repr__(self):
        return f"MorrisPlus(a={self.params.a!r}, x={self.morris.x}, xprime={self.xprime})"

    @property
    def x(self) -> int:
        return self.morris.x

    @property
    def n(self) -> int:
        return self.morris.n

    def increment(self, rng: RandStream) -> None:
        self.morris.increment(rng)
        self.xprime = min(self.xprime + 1, self.n_a + 1)

    def increment_many(self, n: int, rng: RandStream) -> None:
        self.morris.increment_many(n, rng)
        self.xprime = min(self.xprime + n, self.n_a + 1)

    def query(self):
        if self.xprime <= self.n_a:
            return self.xprime
        return self.morris.estimate()

    estimate = query

    def bits_used(self) -> int:
        return self.morris.bits_used() + bits(self.n_a + 1)

    def to_record(self) -> dict:
        return {"algo": self.algo, "a": self.params.a, "X": self.x,
                "Xprime": self.xprime, "Na": self.n_a}

    def dumps(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


def loads(text: str):
    """Rebuild a Morris or Morris+ counter from its JSON record."""
    try:
        rec = json.loads(text)
        algo, a, x = rec["algo"], float(rec["a"]), int(rec["X"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ValueError(f"malformed Morris record: {text!r}") from exc
    params = MorrisParams(a)
    if algo == "morris":
        return MorrisCounter(params, x)
    if algo == "morrisplus":
        if int(rec.get("Na", -1)) != params.n_a:
            raise ValueError("Na does not match a")
        return MorrisPlus(params, MorrisCounter(params, x), int(rec["Xprime"]))
    raise ValueError(f"unknown algo {algo!r}")
