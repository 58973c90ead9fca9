"""Approximate counters with exact oracles and a seeded experiment harness."""

from .approxcounter import (
    ApproxCounter,
    CounterParams,
    EpochEntry,
    ParameterMismatch,
    RecordError,
    RecordVersionError,
    deserialize,
    init,
    merge,
    schedule_entry,
    schedule_for,
    serialize,
)
from .morris import MorrisCounter, MorrisParams, MorrisPlus, bits, morris_params_from
from .randkit import RandStream, derive_stream

__all__ = [
    "ApproxCounter", "CounterParams", "EpochEntry", "MorrisCounter", "MorrisParams",
    "MorrisPlus", "ParameterMismatch", "RandStream", "RecordError", "RecordVersionError",
    "bits", "derive_stream", "deserialize", "init", "merge", "morris_params_from", "schedule_entry",
    "schedule_for", "serialize",
]
