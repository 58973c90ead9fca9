"""Seeded trial batches, bit-budget fitting and the error-CDF comparison.

Seed layout: trial ``i`` owns ``master.derive(i)``.  Inside a trial, child 0
draws the true count, child 1 drives Morris / Morris+ and child 2 drives the
epoch-sampled counter, so paired runs see the same count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .approxcounter import DEFAULT_C, ApproxCounter, CounterParams, schedule_for
from .morris import MorrisCounter, MorrisParams, MorrisPlus, bits
from .randkit import RandStream

ALGOS = ("morris", "morrisplus", "nycount")
_SLOT = {"morris": 1, "morrisplus": 1, "nycount": 2}
N_SLOT = 0

# candidate eps values for the epoch counter, coarse to fine
EPS_GRID = tuple(Fraction(k) for k in ("1/2", "7/16", "3/8", "5/16", "1/4", "3/16", "1/8",
                                       "3/32", "1/16", "3/64", "1/32", "1/64"))
MORRIS_SLACK_LEVELS = 64
MAX_MORRIS_EXP = 60

TRIAL_HEADER = ("trial", "algo", "params", "n", "estimate", "rel_err", "bits", "seed_path")
FIGURE1_HEADER = ("percentile", "morris_err", "nycount_err")


class InfeasibleBudget(ValueError):
    pass


def fmt(v) -> str:
    """Plain decimal text for CSV cells."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return np.format_float_positional(float(v), trim="-")


def describe(params) -> str:
    if isinstance(params, MorrisParams):
        return f"a={fmt(params.a)}"
    c = fmt(params.c) if not float(params.c).is_integer() else str(int(params.c))
    return f"eps={params.eps_num}/2^{params.eps_shift};delta_exp={params.delta_exp};c={c}"


@dataclass(frozen=True)
class TrialReport:
    trial: int
    algo: str
    params: str
    n: int
    estimate: float | int
    rel_err: float
    bits: int
    seed_path: str

    def row(self) -> list[str]:
        return [str(self.trial), self.algo, self.params, str(self.n), fmt(self.estimate),
                fmt(self.rel_err), str(self.bits), self.seed_path]


def make_counter(algo: str, params):
    if algo == "morris":
        return MorrisCounter(params)
    if algo == "morrisplus":
        return MorrisPlus(params)
    if algo == "nycount":
        return ApproxCounter(params)
    raise ValueError(f"unknown algo {algo!r}; expected one of {ALGOS}")


def draw_n(trial_stream: RandStream, n_spec) -> int:
    if isinstance(n_spec, (int, np.integer)):
        return int(n_spec)
    lo, hi = n_spec
    return trial_stream.derive(N_SLOT).integers(lo, hi)


def run_trial(algo: str, params, n_spec, seed: int, i: int) -> TrialReport:
    ts = RandStream(seed).derive(i)
    n = draw_n(ts, n_spec)
    rng = ts.derive(_SLOT[algo])
    ctr = make_counter(algo, params)
    ctr.increment_many(n, rng)
    est = ctr.estimate()
    err = abs(est - n) / n if n else 0.0
    return TrialReport(i, algo, describe(params), n, est, float(err), ctr.bits_used(), rng.path_str())


def _run_trial_args(args):
    return run_trial(*args)


def _check_n_spec(n_spec):
    if isinstance(n_spec, (int, np.integer)):
        if n_spec < 0:
            raise ValueError("n must be non-negative")
        return
    lo, hi = n_spec
    if not 0 <= lo <= hi:
        raise ValueError("n range must satisfy 0 <= nmin <= nmax")


def run_trials(algo: str, params, n_spec, trials: int, seed: int, workers: int = 1) -> list[TrialReport]:
    """Run ``trials`` independent counters; rows come back in trial order."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if algo not in ALGOS:
        raise ValueError(f"unknown algo {algo!r}; expected one of {ALGOS}")
    _check_n_spec(n_spec)
    jobs = [(algo, params, n_spec, seed, i) for i in range(trials)]
    if workers <= 1:
        return [run_trial(*j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(_run_trial_args, jobs, chunksize=max(1, trials // (8 * workers))))


def trials_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


# -- bit budgets ---------------------------------------------------------

@dataclass(frozen=True)
class BudgetParams:
    algo: str
    bits: int
    n_max: int
    params: object
    bound: int
    rule: str


def morris_level_bound(a: float, n_max: int) -> int:
    return math.ceil(math.log1p(a * n_max) / math.log1p(a)) + MORRIS_SLACK_LEVELS


def fit_budget(algo: str, budget: int, n_max: int, delta_exp: int = 10, c: float = DEFAULT_C) -> BudgetParams:
    """Finest parameters whose worst-case state fits in ``budget`` bits for counts up to ``n_max``."""
    if budget < 8:
        raise ValueError("bit budget must be at least 8")
    if algo in ("morris", "morrisplus"):
        best = None
        for j in range(1, MAX_MORRIS_EXP + 1):
            p = MorrisParams(math.ldexp(1.0, -j))
            need = bits(morris_level_bound(p.a, n_max))
            if algo == "morrisplus":
                need += bits(p.n_a + 1)
            if need > budget:
                break
            best = (p, need)
        if best is None:
            raise InfeasibleBudget(f"{algo}: no a = 2^-j fits {budget} bits for n_max={n_max}")
        rule = (f"smallest a=2^-j with bits(ceil(log_(1+a)(1+a*n_max))+{MORRIS_SLACK_LEVELS})"
                + (" + bits(N_a+1)" if algo == "morrisplus" else "") + f" <= {budget}")
        return BudgetParams(algo, budget, n_max, best[0], best[1], rule)
    if algo == "nycount":
        best = None
        for eps in EPS_GRID:
            p = CounterParams.from_fraction(eps, delta_exp, c)
            need = schedule_for(p).bound_bits(n_max)
            if need <= budget:
                best = (p, need)
        if best is None:
            raise InfeasibleBudget(f"nycount: no eps in the grid fits {budget} bits "
                                   f"for n_max={n_max}, delta_exp={delta_exp}")
        rule = ("smallest grid eps with bits(Xhat+3) + bits(max Y_end) + bits(max t) "
                f"<= {budget}, Xhat = min X with T(X) >= n_max")
        return BudgetParams(algo, budget, n_max, best[0], best[1], rule)
    raise ValueError(f"unknown algo {algo!r}")


# -- error CDF comparison ------------------------------------------------

def percentile_curve(errors, percentiles=range(1, 101)) -> list[float]:
    """Nearest-rank empirical quantiles."""
    s = np.sort(np.asarray(errors, dtype=float))
    n = len(s)
    return [float(s[max(0, math.ceil(p / 100 * n) - 1)]) for p in percentiles]


@dataclass
class Figure1Result:
    morris: BudgetParams
    nycount: BudgetParams
    morris_reports: list
    nycount_reports: list
    rows: list

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIGURE1_HEADER)
        for pct, m, y in self.rows:
            w.writerow([pct, fmt(m), fmt(y)])
        return buf.getvalue()

    def header(self) -> str:
        return "\n".join([
            f"# morris: {describe(self.morris.params)} bound={self.morris.bound} rule: {self.morris.rule}",
            f"# nycount: {describe(self.nycount.params)} bound={self.nycount.bound} rule: {self.nycount.rule}",
        ])

    def max_errors(self) -> tuple[float, float]:
        return (max(r.rel_err for r in self.morris_reports),
                max(r.rel_err for r in self.nycount_reports))

    def decile_gaps(self) -> list[float]:
        return [abs(m - y) for pct, m, y in self.rows if pct % 10 == 0]


def figure1(trials: int = 5000, nmin: int = 500_000, nmax: int = 999_999, budget: int = 17,
            seed: int = 0, delta_exp: int = 10, c: float = DEFAULT_C, workers: int = 1,
            nycount_budget: int | None = None) -> Figure1Result:
    """Paired error-CDF comparison of Morris and the epoch counter under a bit budget."""
    mb = fit_budget("morris", budget, nmax)
    yb = fit_budget("nycount", budget if nycount_budget is None else nycount_budget, nmax, delta_exp, c)
    mr = run_trials("morris", mb.params, (nmin, nmax), trials, seed, workers)
    yr = run_trials("nycount", yb.params, (nmin, nmax), trials, seed, workers)
    mc = percentile_curve([r.rel_err for r in mr])
    yc = percentile_curve([r.rel_err for r in yr])
    rows = [(p, m, y) for p, m, y in zip(range(1, 101), mc, yc)]
    return Figure1Result(mb, yb, mr, yr, rows)
