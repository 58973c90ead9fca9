"""Seedable random streams with reproducible per-trial substreams.

Every stream wraps numpy's PCG64 bit generator seeded through
``SeedSequence(entropy=seed, spawn_key=path)``.  The spawn-key mechanism is
numpy's own hierarchical seeding scheme, so a stream is a pure function of
``(seed, path)`` and deriving a child never touches the parent's state.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1


class RandStream:
    """A single-owner random stream identified by ``(seed, path)``."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path=()):
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        path = tuple(int(i) for i in path)
        if any(not 0 <= i <= _MASK64 for i in path):
            raise ValueError("path indices must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.path = path
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RandStream(seed={self.seed}, path={list(self.path)})"

    def derive(self, index: int) -> "RandStream":
        return RandStream(self.seed, self.path + (index,))

    def path_str(self) -> str:
        return "/".join(str(i) for i in self.path)

    # -- raw draws -------------------------------------------------------

    def raw64(self) -> int:
        return int(self._gen.bit_generator.random_raw())

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return float(self._gen.random())

    def integers(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return int(self._gen.integers(lo, hi, endpoint=True))

    # -- variates used by the counters -----------------------------------

    def bernoulli_pow2(self, t: int) -> bool:
        """Return True with probability exactly ``2**-t``.

        Reads ``ceil(t / 64)`` raw words and succeeds iff the leading ``t``
        bits are all zero, i.e. ``t`` fair coins all came up heads.  The
        entropy consumed depends only on ``t``.
        """
        if t < 0:
            raise ValueError("t must be non-negative")
        ok = True
        while t > 0:
            k = min(t, 64)
            word = self.raw64()
            ok = ok and (word >> (64 - k)) == 0
            t -= k
        return ok

    def geometric(self, p: float) -> int:
        """Number of trials up to and including the first success.

        Inverse-CDF draw ``ceil(log(U) / log(1 - p))`` with ``U`` uniform on
        (0, 1); exact zeros are redrawn.
        """
        if not 0.0 < p <= 1.0:
            raise ValueError(f"geometric parameter must lie in (0, 1], got {p!r}")
        if p == 1.0:
            return 1
        u = self.uniform()
        while u == 0.0:
            u = self.uniform()
        return max(1, math.ceil(math.log(u) / math.log1p(-p)))

    def geometric_array(self, p, size: int) -> np.ndarray:
        """Vectorised :meth:`geometric`; ``p`` is a scalar or an array of length ``size``.

        Returned as float64 so cumulative sums stay exact up to 2**53.
        """
        p = np.broadcast_to(np.asarray(p, dtype=np.float64), (size,))
        if np.any(p <= 0.0) or np.any(p > 1.0):
            raise ValueError("geometric parameters must lie in (0, 1]")
        u = self._gen.random(size)
        zero = u == 0.0
        while zero.any():
            u[zero] = self._gen.random(int(zero.sum()))
            zero = u == 0.0
        with np.errstate(divide="ignore"):
            g = np.ceil(np.log(u) / np.log1p(-p))
        g[p == 1.0] = 1.0
        np.maximum(g, 1.0, out=g)
        return g


def derive_stream(master: RandStream, index: int) -> RandStream:
    return master.derive(index)


def bernoulli_pow2(s: RandStream, t: int) -> bool:
    return s.bernoulli_pow2(t)


def geometric(s: RandStream, p: float) -> int:
    return s.geometric(p)
